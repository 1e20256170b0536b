#include "cosmocore/serialization.hpp"

namespace cosmocore::miniworld {

namespace {

nlohmann::json cell_to_json(const Cell& c) {
  if (std::holds_alternative<std::int64_t>(c)) return std::get<std::int64_t>(c);
  return std::get<std::string>(c);
}

Cell cell_from_json(const nlohmann::json& j) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_string()) return j.get<std::string>();
  throw validation_error("cell must be an integer or a string");
}

}  // namespace

void to_json(nlohmann::json& j, const Table& t) {
  j = nlohmann::json{{"name", t.name}, {"columns", t.columns}};
  auto rows = nlohmann::json::array();
  for (const auto& row : t.rows) {
    auto r = nlohmann::json::array();
    for (const auto& cell : row) r.push_back(cell_to_json(cell));
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
}

void from_json(const nlohmann::json& j, Table& t) {
  t.name = j.at("name").get<std::string>();
  t.columns = j.at("columns").get<std::vector<std::string>>();
  t.rows.clear();
  for (const auto& r : j.at("rows")) {
    std::vector<Cell> row;
    for (const auto& c : r) row.push_back(cell_from_json(c));
    t.rows.push_back(std::move(row));
  }
}

void to_json(nlohmann::json& j, const Program& p) {
  auto ops = nlohmann::json::array();
  for (const Op& op : p.ops) {
    nlohmann::json o;
    if (const auto* f = std::get_if<FilterOp>(&op)) {
      o["op"] = "filter";
      o["column"] = f->column;
      o["cmp"] = comparator_text(f->cmp);
      o["literal"] = cell_to_json(f->literal);
    } else if (const auto* pr = std::get_if<ProjectOp>(&op)) {
      o["op"] = "project";
      o["columns"] = pr->columns;
    } else if (const auto* jn = std::get_if<JoinOp>(&op)) {
      o["op"] = "join";
      o["table"] = jn->other_table;
      o["left_key"] = jn->left_key;
      o["right_key"] = jn->right_key;
    } else if (const auto* a = std::get_if<AggregateOp>(&op)) {
      o["op"] = "aggregate";
      o["group_col"] = a->group_col;
      o["fn"] = a->fn == AggFn::Count ? "count" : "sum";
      o["target_col"] = a->target_col;
    }
    ops.push_back(std::move(o));
  }
  j = nlohmann::json{{"ops", std::move(ops)}, {"well_formed", p.well_formed}};
}

void from_json(const nlohmann::json& j, Program& p) {
  p.ops.clear();
  for (const auto& o : j.at("ops")) {
    const std::string kind = o.at("op").get<std::string>();
    if (kind == "filter") {
      FilterOp f;
      f.column = o.at("column").get<std::string>();
      f.cmp = comparator_from_text(o.at("cmp").get<std::string>());
      f.literal = cell_from_json(o.at("literal"));
      p.ops.emplace_back(std::move(f));
    } else if (kind == "project") {
      ProjectOp pr;
      pr.columns = o.at("columns").get<std::vector<std::string>>();
      p.ops.emplace_back(std::move(pr));
    } else if (kind == "join") {
      JoinOp jn;
      jn.other_table = o.at("table").get<std::string>();
      jn.left_key = o.at("left_key").get<std::string>();
      jn.right_key = o.at("right_key").get<std::string>();
      p.ops.emplace_back(std::move(jn));
    } else if (kind == "aggregate") {
      AggregateOp a;
      a.group_col = o.at("group_col").get<std::string>();
      const std::string fn = o.at("fn").get<std::string>();
      if (fn == "count")
        a.fn = AggFn::Count;
      else if (fn == "sum")
        a.fn = AggFn::Sum;
      else
        throw validation_error("unknown aggregate fn: " + fn);
      a.target_col = o.at("target_col").get<std::string>();
      p.ops.emplace_back(std::move(a));
    } else {
      throw validation_error("unknown op kind: " + kind);
    }
  }
  p.well_formed = j.at("well_formed").get<bool>();
}

}  // namespace cosmocore::miniworld

namespace cosmocore {

void to_json(nlohmann::json& j, const AffectTag& tag) {
  j = nlohmann::json{{"valence", tag.valence}, {"arousal", tag.arousal}};
}

void from_json(const nlohmann::json& j, AffectTag& tag) {
  tag.valence = j.at("valence").get<double>();
  tag.arousal = j.at("arousal").get<double>();
}

void to_json(nlohmann::json& j, const Trajectory& t) {
  j = nlohmann::json{{"task_id", t.task_id},
                     {"features", t.prompt_features},
                     {"program", t.program},
                     {"feedback", feedback_text(t.feedback)},
                     {"detail", t.feedback_detail},
                     {"reward", t.reward}};
}

void from_json(const nlohmann::json& j, Trajectory& t) {
  t.task_id = j.at("task_id").get<std::string>();
  t.prompt_features = j.at("features").get<std::vector<double>>();
  t.program = j.at("program").get<miniworld::Program>();
  t.feedback = feedback_from_text(j.at("feedback").get<std::string>());
  t.feedback_detail = j.at("detail").get<std::string>();
  t.reward = j.at("reward").get<double>();
}

void to_json(nlohmann::json& j, const BufferEntry& e) {
  j = nlohmann::json{{"trajectory", e.trajectory},
                     {"tag", e.tag},
                     {"td_error", e.td_error},
                     {"priority", e.priority},
                     {"seq", e.seq}};
}

void from_json(const nlohmann::json& j, BufferEntry& e) {
  e.trajectory = j.at("trajectory").get<Trajectory>();
  e.tag = j.at("tag").get<AffectTag>();
  e.td_error = j.at("td_error").get<double>();
  e.priority = j.at("priority").get<double>();
  e.seq = j.at("seq").get<std::uint64_t>();
}

}  // namespace cosmocore
