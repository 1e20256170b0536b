#include "cosmocore/miniworld.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "cosmocore/serialization.hpp"

namespace cosmocore::miniworld {

namespace {

struct PipelineError {
  FeedbackKind kind;
  std::string detail;
};

struct PipelineResult {
  bool ok = false;
  Table table;
  PipelineError error{FeedbackKind::SyntaxError, ""};
};

PipelineResult fail(FeedbackKind kind, std::string detail) {
  PipelineResult r;
  r.ok = false;
  r.error = {kind, std::move(detail)};
  return r;
}

bool cells_equal(const Cell& a, const Cell& b) { return a == b; }

// Comparator semantics: ints numerically, strings lexicographically;
// comparing across types is a runtime type error.
bool compare_cells(const Cell& a, Comparator cmp, const Cell& b, bool& type_error) {
  type_error = false;
  if (a.index() != b.index()) {
    if (cmp == Comparator::Eq) return false;
    if (cmp == Comparator::Ne) return true;
    type_error = true;
    return false;
  }
  auto ordered = [&](auto&& x, auto&& y) {
    switch (cmp) {
      case Comparator::Gt: return x > y;
      case Comparator::Lt: return x < y;
      case Comparator::Eq: return x == y;
      case Comparator::Ne: return x != y;
    }
    return false;
  };
  if (std::holds_alternative<std::int64_t>(a))
    return ordered(std::get<std::int64_t>(a), std::get<std::int64_t>(b));
  return ordered(std::get<std::string>(a), std::get<std::string>(b));
}

PipelineResult run_pipeline(const Program& program, const std::vector<Table>& tables) {
  if (tables.empty()) return fail(FeedbackKind::SyntaxError, "no input tables");
  if (!program.well_formed)
    return fail(FeedbackKind::SyntaxError, "program flagged ill-formed");

  Table current = tables.front();
  for (const Op& op : program.ops) {
    if (const auto* f = std::get_if<FilterOp>(&op)) {
      const int col = current.column_index(f->column);
      if (col < 0)
        return fail(FeedbackKind::SyntaxError, "unknown column: " + f->column);
      Table out;
      out.name = current.name;
      out.columns = current.columns;
      for (const auto& row : current.rows) {
        bool type_error = false;
        const bool keep =
            compare_cells(row[static_cast<std::size_t>(col)], f->cmp, f->literal,
                          type_error);
        if (type_error)
          return fail(FeedbackKind::RuntimeError,
                      "type mismatch in filter on " + f->column);
        if (keep) out.rows.push_back(row);
      }
      current = std::move(out);
    } else if (const auto* p = std::get_if<ProjectOp>(&op)) {
      if (p->columns.empty())
        return fail(FeedbackKind::SyntaxError, "project with no columns");
      std::vector<int> idx;
      for (const auto& c : p->columns) {
        const int col = current.column_index(c);
        if (col < 0) return fail(FeedbackKind::SyntaxError, "unknown column: " + c);
        idx.push_back(col);
      }
      Table out;
      out.name = current.name;
      out.columns = p->columns;
      for (const auto& row : current.rows) {
        std::vector<Cell> r;
        for (int col : idx) r.push_back(row[static_cast<std::size_t>(col)]);
        out.rows.push_back(std::move(r));
      }
      current = std::move(out);
    } else if (const auto* j = std::get_if<JoinOp>(&op)) {
      const Table* other = nullptr;
      for (const auto& t : tables)
        if (t.name == j->other_table) other = &t;
      if (!other)
        return fail(FeedbackKind::SyntaxError, "unknown table: " + j->other_table);
      const int lk = current.column_index(j->left_key);
      if (lk < 0)
        return fail(FeedbackKind::SyntaxError, "unknown column: " + j->left_key);
      const int rk = other->column_index(j->right_key);
      if (rk < 0)
        return fail(FeedbackKind::SyntaxError, "unknown column: " + j->right_key);
      Table out;
      out.name = current.name;
      out.columns = current.columns;
      std::vector<int> keep_right;
      for (std::size_t c = 0; c < other->columns.size(); ++c) {
        if (static_cast<int>(c) == rk) continue;
        keep_right.push_back(static_cast<int>(c));
        std::string name = other->columns[c];
        if (out.column_index(name) >= 0) name = "r_" + name;
        out.columns.push_back(std::move(name));
      }
      for (const auto& lrow : current.rows) {
        for (const auto& rrow : other->rows) {
          if (!cells_equal(lrow[static_cast<std::size_t>(lk)],
                           rrow[static_cast<std::size_t>(rk)]))
            continue;
          std::vector<Cell> r = lrow;
          for (int c : keep_right) r.push_back(rrow[static_cast<std::size_t>(c)]);
          out.rows.push_back(std::move(r));
        }
      }
      current = std::move(out);
    } else if (const auto* a = std::get_if<AggregateOp>(&op)) {
      const int gc = current.column_index(a->group_col);
      if (gc < 0)
        return fail(FeedbackKind::SyntaxError, "unknown column: " + a->group_col);
      int tc = -1;
      if (a->fn == AggFn::Sum) {
        tc = current.column_index(a->target_col);
        if (tc < 0)
          return fail(FeedbackKind::SyntaxError, "unknown column: " + a->target_col);
      }
      // first-appearance group order
      std::vector<Cell> group_keys;
      std::map<std::vector<Cell>, std::size_t> seen;
      std::vector<std::int64_t> acc;
      for (const auto& row : current.rows) {
        const Cell key = row[static_cast<std::size_t>(gc)];
        const std::vector<Cell> mapkey{key};
        auto it = seen.find(mapkey);
        std::size_t slot;
        if (it == seen.end()) {
          slot = group_keys.size();
          seen.emplace(mapkey, slot);
          group_keys.push_back(key);
          acc.push_back(0);
        } else {
          slot = it->second;
        }
        if (a->fn == AggFn::Count) {
          acc[slot] += 1;
        } else {
          const Cell& target = row[static_cast<std::size_t>(tc)];
          if (!std::holds_alternative<std::int64_t>(target))
            return fail(FeedbackKind::RuntimeError,
                        "sum over non-integer column: " + a->target_col);
          acc[slot] += std::get<std::int64_t>(target);
        }
      }
      Table out;
      out.name = current.name;
      out.columns = {a->group_col,
                     a->fn == AggFn::Count ? "count" : "sum_" + a->target_col};
      for (std::size_t g = 0; g < group_keys.size(); ++g)
        out.rows.push_back({group_keys[g], Cell{acc[g]}});
      current = std::move(out);
    }
  }
  PipelineResult r;
  r.ok = true;
  r.table = std::move(current);
  return r;
}

std::vector<std::vector<Cell>> sorted_rows(const Table& t) {
  auto rows = t.rows;
  std::sort(rows.begin(), rows.end());
  return rows;
}

}  // namespace

bool tables_match(const Table& a, const Table& b) {
  return a.columns == b.columns && sorted_rows(a) == sorted_rows(b);
}

ExecResult execute(const Program& program, const TaskSpec& task) {
  ExecResult res;
  const PipelineResult run = run_pipeline(program, task.tables);
  if (!run.ok) {
    res.feedback = run.error.kind;
    res.detail = run.error.detail;
    res.reward = -1.0;
    return res;
  }
  res.output = run.table;
  if (tables_match(run.table, task.expected)) {
    res.feedback = FeedbackKind::Pass;
    res.detail = "output matches hidden test";
    res.reward = 1.0;
  } else {
    res.feedback = FeedbackKind::SemanticError;
    res.detail = "output differs from hidden test";
    res.reward = -0.5;
  }
  return res;
}

std::string bug_kind_text(BugKind kind) {
  switch (kind) {
    case BugKind::WrongPredicate: return "wrong_predicate";
    case BugKind::WrongJoinKey: return "wrong_join_key";
    case BugKind::WrongAggregation: return "wrong_aggregation";
    case BugKind::MalformedOp: return "malformed_op";
  }
  throw validation_error("unknown bug kind");
}

namespace {

std::vector<std::size_t> ops_of_kind(const Program& p, std::size_t variant_index) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < p.ops.size(); ++i)
    if (p.ops[i].index() == variant_index) idx.push_back(i);
  return idx;
}

}  // namespace

bool bug_applicable(const Program& reference, BugKind kind) {
  switch (kind) {
    case BugKind::WrongPredicate: return !ops_of_kind(reference, 0).empty();
    case BugKind::WrongJoinKey: {
      for (const Op& op : reference.ops)
        if (const auto* j = std::get_if<JoinOp>(&op))
          if (j->left_key != j->right_key) return true;
      return false;
    }
    case BugKind::WrongAggregation: return !ops_of_kind(reference, 3).empty();
    case BugKind::MalformedOp: return !reference.ops.empty();
  }
  return false;
}

Program mutate(const Program& reference, BugKind kind, Rng& rng) {
  if (!bug_applicable(reference, kind))
    throw validation_error("bug kind " + bug_kind_text(kind) +
                           " not applicable to this program");
  Program out = reference;
  switch (kind) {
    case BugKind::WrongPredicate: {
      const auto filters = ops_of_kind(reference, 0);
      auto& f = std::get<FilterOp>(out.ops[filters[rng.bounded(filters.size())]]);
      const bool int_literal = std::holds_alternative<std::int64_t>(f.literal);
      // 3 comparator swaps, plus 4 literal nudges for integer literals
      const std::uint64_t n_options = int_literal ? 7 : 3;
      const std::uint64_t choice = rng.bounded(n_options);
      if (choice < 3) {
        static constexpr Comparator all[] = {Comparator::Gt, Comparator::Lt,
                                             Comparator::Eq, Comparator::Ne};
        std::vector<Comparator> others;
        for (Comparator c : all)
          if (c != f.cmp) others.push_back(c);
        f.cmp = others[choice];
      } else {
        static constexpr std::int64_t deltas[] = {-2, -1, 1, 2};
        f.literal = std::get<std::int64_t>(f.literal) + deltas[choice - 3];
      }
      break;
    }
    case BugKind::WrongJoinKey: {
      std::vector<std::size_t> joins;
      for (std::size_t i = 0; i < reference.ops.size(); ++i)
        if (const auto* j = std::get_if<JoinOp>(&reference.ops[i]))
          if (j->left_key != j->right_key) joins.push_back(i);
      auto& j = std::get<JoinOp>(out.ops[joins[rng.bounded(joins.size())]]);
      switch (rng.bounded(3)) {
        case 0: std::swap(j.left_key, j.right_key); break;
        case 1: j.left_key = j.right_key; break;
        default: j.right_key = j.left_key; break;
      }
      break;
    }
    case BugKind::WrongAggregation: {
      const auto aggs = ops_of_kind(reference, 3);
      auto& a = std::get<AggregateOp>(out.ops[aggs[rng.bounded(aggs.size())]]);
      if (a.group_col != a.target_col && rng.bounded(2) == 0)
        std::swap(a.group_col, a.target_col);
      else
        a.fn = a.fn == AggFn::Count ? AggFn::Sum : AggFn::Count;
      break;
    }
    case BugKind::MalformedOp: {
      Op& op = out.ops[rng.bounded(out.ops.size())];
      if (auto* f = std::get_if<FilterOp>(&op))
        f->column = "__missing__";
      else if (auto* p = std::get_if<ProjectOp>(&op))
        p->columns[0] = "__missing__";
      else if (auto* j = std::get_if<JoinOp>(&op))
        j->other_table = "__missing__";
      else if (auto* a = std::get_if<AggregateOp>(&op))
        a->group_col = "__missing__";
      out.well_formed = false;
      break;
    }
  }
  if (out == reference) throw validation_error("mutation produced an identical program");
  return out;
}

namespace {

std::uint64_t fnv1a(const std::string& token) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<std::string> tokenize_prompt(const std::string& prompt) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char raw : prompt) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      cur.push_back(c);
    } else if (!cur.empty()) {
      tokens.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(cur);
  return tokens;
}

std::vector<std::string> tokenize_program(const Program& program) {
  std::vector<std::string> tokens;
  for (const Op& op : program.ops) {
    if (const auto* f = std::get_if<FilterOp>(&op)) {
      tokens.push_back("filter");
      tokens.push_back(f->column);
      tokens.push_back(comparator_text(f->cmp));
      if (std::holds_alternative<std::int64_t>(f->literal))
        tokens.push_back(std::to_string(std::get<std::int64_t>(f->literal)));
      else
        tokens.push_back(std::get<std::string>(f->literal));
    } else if (const auto* p = std::get_if<ProjectOp>(&op)) {
      tokens.push_back("project");
      for (const auto& c : p->columns) tokens.push_back(c);
    } else if (const auto* j = std::get_if<JoinOp>(&op)) {
      tokens.push_back("join");
      tokens.push_back(j->other_table);
      tokens.push_back(j->left_key);
      tokens.push_back(j->right_key);
    } else if (const auto* a = std::get_if<AggregateOp>(&op)) {
      tokens.push_back("aggregate");
      tokens.push_back(a->group_col);
      tokens.push_back(a->fn == AggFn::Count ? "count" : "sum");
      tokens.push_back(a->target_col);
    }
  }
  if (!program.well_formed) tokens.push_back("__illformed__");
  return tokens;
}

void hash_block(const std::vector<std::string>& tokens, double* block,
                std::size_t width) {
  for (const auto& t : tokens) block[fnv1a(t) % width] += 1.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < width; ++i) norm += block[i] * block[i];
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < width; ++i) block[i] /= norm;
  }
}

constexpr std::size_t kPromptBlock = 256;
constexpr std::size_t kProgramBlock = 255;

}  // namespace

std::vector<double> encode_features(const std::string& prompt, const Program& program,
                                    double reward) {
  std::vector<double> v(kFeatureDim, 0.0);
  hash_block(tokenize_prompt(prompt), v.data(), kPromptBlock);
  hash_block(tokenize_program(program), v.data() + kPromptBlock, kProgramBlock);
  v[kFeatureDim - 1] = reward;
  return v;
}

namespace {

Table make_items_table(Rng& rng, std::size_t n_rows) {
  static const char* vals[] = {"a", "b", "c", "d"};
  Table t;
  t.name = "t0";
  t.columns = {"id", "val", "score"};
  // ids cover 0..n-1 and scores cycle through 1..4 (never 0, so dropping or
  // keeping any single row always moves per-group sums); with >= 6 rows every
  // one- or two-step literal nudge changes the selected row set
  for (std::size_t i = 0; i < n_rows; ++i) {
    t.rows.push_back({Cell{static_cast<std::int64_t>(i)},
                      Cell{std::string(vals[rng.bounded(4)])},
                      Cell{static_cast<std::int64_t>(1 + (i % 4))}});
  }
  return t;
}

Table make_tags_table(Rng& rng, std::size_t n_rows) {
  static const char* tags[] = {"x", "y", "z"};
  Table t;
  t.name = "t1";
  t.columns = {"uid", "tag"};
  // uids cover every item id once, so joins keep the full score range and
  // downstream filters stay discriminating
  for (std::size_t i = 0; i < n_rows; ++i) {
    t.rows.push_back({Cell{static_cast<std::int64_t>(i)},
                      Cell{std::string(tags[rng.bounded(3)])}});
  }
  return t;
}

std::string literal_prompt_text(const Cell& c) {
  if (std::holds_alternative<std::int64_t>(c))
    return std::to_string(std::get<std::int64_t>(c));
  return std::get<std::string>(c);
}

std::string describe(const Program& p) {
  std::ostringstream out;
  for (std::size_t i = 0; i < p.ops.size(); ++i) {
    if (i) out << " then ";
    const Op& op = p.ops[i];
    if (const auto* f = std::get_if<FilterOp>(&op)) {
      out << "filter rows where " << f->column << " " << comparator_text(f->cmp) << " "
          << literal_prompt_text(f->literal);
    } else if (const auto* pr = std::get_if<ProjectOp>(&op)) {
      out << "keep columns";
      for (const auto& c : pr->columns) out << " " << c;
    } else if (const auto* j = std::get_if<JoinOp>(&op)) {
      out << "join with " << j->other_table << " matching " << j->left_key << " to "
          << j->right_key;
    } else if (const auto* a = std::get_if<AggregateOp>(&op)) {
      if (a->fn == AggFn::Count)
        out << "count rows per " << a->group_col;
      else
        out << "sum " << a->target_col << " per " << a->group_col;
    }
  }
  return out.str();
}

}  // namespace

std::vector<TaskSpec> make_corpus(std::uint64_t seed, std::size_t n_tasks) {
  Rng rng(seed, /*stream=*/101);
  std::vector<TaskSpec> corpus;
  for (std::size_t i = 0; i < n_tasks; ++i) {
    TaskSpec task;
    std::ostringstream id;
    id << "t" << (i < 10 ? "0" : "") << i;
    task.id = id.str();

    const std::size_t family = i % 6;
    const std::size_t rows = 6 + rng.bounded(2);
    task.tables = {make_items_table(rng, rows)};

    Program ref;
    switch (family) {
      case 0: {  // plain filter; literals sit strictly inside the value range
        FilterOp f;
        const bool on_id = rng.bounded(2) == 0;
        f.column = on_id ? "id" : "score";
        f.cmp = rng.bounded(2) == 0 ? Comparator::Gt : Comparator::Lt;
        f.literal = Cell{static_cast<std::int64_t>(on_id ? 1 + rng.bounded(3)
                                                         : 2 + rng.bounded(2))};
        ref.ops.emplace_back(std::move(f));
        break;
      }
      case 1: {  // filter then project
        FilterOp f;
        f.column = "score";
        f.cmp = Comparator::Gt;
        f.literal = Cell{static_cast<std::int64_t>(2 + rng.bounded(2))};
        ref.ops.emplace_back(std::move(f));
        ProjectOp p;
        p.columns = rng.bounded(2) == 0 ? std::vector<std::string>{"id", "val"}
                                        : std::vector<std::string>{"val", "score"};
        ref.ops.emplace_back(std::move(p));
        break;
      }
      case 2: {  // join
        task.tables.push_back(make_tags_table(rng, rows));
        JoinOp j;
        j.other_table = "t1";
        j.left_key = "id";
        j.right_key = "uid";
        ref.ops.emplace_back(std::move(j));
        break;
      }
      case 3: {  // aggregate
        AggregateOp a;
        a.group_col = "val";
        a.fn = rng.bounded(2) == 0 ? AggFn::Count : AggFn::Sum;
        a.target_col = "score";
        ref.ops.emplace_back(std::move(a));
        break;
      }
      case 4: {  // filter then aggregate
        FilterOp f;
        f.column = "id";
        f.cmp = Comparator::Gt;
        f.literal = Cell{static_cast<std::int64_t>(1 + rng.bounded(2))};
        ref.ops.emplace_back(std::move(f));
        AggregateOp a;
        a.group_col = "val";
        a.fn = AggFn::Sum;
        a.target_col = "score";
        ref.ops.emplace_back(std::move(a));
        break;
      }
      default: {  // join then filter
        task.tables.push_back(make_tags_table(rng, rows));
        JoinOp j;
        j.other_table = "t1";
        j.left_key = "id";
        j.right_key = "uid";
        ref.ops.emplace_back(std::move(j));
        FilterOp f;
        f.column = "score";
        f.cmp = Comparator::Gt;
        f.literal = Cell{std::int64_t{2}};
        ref.ops.emplace_back(std::move(f));
        break;
      }
    }
    task.reference = std::move(ref);
    task.prompt = "task " + task.id + " on " + task.tables[0].name + ": " +
                  describe(task.reference);

    const PipelineResult run = run_pipeline(task.reference, task.tables);
    if (!run.ok) throw validation_error("corpus reference failed to execute");
    task.expected = run.table;
    corpus.push_back(std::move(task));
  }
  return corpus;
}

std::string corpus_to_json(const std::vector<TaskSpec>& corpus) {
  nlohmann::json j;
  j["version"] = 1;
  auto tasks = nlohmann::json::array();
  for (const auto& t : corpus) {
    nlohmann::json jt;
    jt["id"] = t.id;
    jt["prompt"] = t.prompt;
    jt["tables"] = t.tables;
    jt["reference"] = t.reference;
    jt["expected"] = t.expected;
    tasks.push_back(std::move(jt));
  }
  j["tasks"] = std::move(tasks);
  return j.dump(2);
}

std::vector<TaskSpec> corpus_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("version").get<int>() != 1)
    throw validation_error("unsupported corpus version");
  std::vector<TaskSpec> corpus;
  for (const auto& jt : j.at("tasks")) {
    TaskSpec t;
    t.id = jt.at("id").get<std::string>();
    t.prompt = jt.at("prompt").get<std::string>();
    t.tables = jt.at("tables").get<std::vector<Table>>();
    t.reference = jt.at("reference").get<Program>();
    t.expected = jt.at("expected").get<Table>();
    corpus.push_back(std::move(t));
  }
  return corpus;
}

std::vector<std::string> validate_corpus(const std::vector<TaskSpec>& corpus) {
  std::vector<std::string> problems;
  std::set<std::string> ids;
  for (const auto& task : corpus) {
    if (!ids.insert(task.id).second)
      problems.push_back(task.id + ": duplicate task id");
    for (const auto& table : task.tables) {
      if (!table.rectangular())
        problems.push_back(task.id + ": table " + table.name + " not rectangular");
      std::set<std::string> cols(table.columns.begin(), table.columns.end());
      if (cols.size() != table.columns.size())
        problems.push_back(task.id + ": table " + table.name +
                           " has duplicate columns");
    }
    const ExecResult res = execute(task.reference, task);
    if (res.feedback != FeedbackKind::Pass)
      problems.push_back(task.id + ": reference program does not pass its hidden test (" +
                         feedback_text(res.feedback) + ": " + res.detail + ")");
  }
  return problems;
}

}  // namespace cosmocore::miniworld
