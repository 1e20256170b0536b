#include "cosmocore/program.hpp"

#include <sstream>

#include "cosmocore/types.hpp"

namespace cosmocore::miniworld {

int Table::column_index(const std::string& col) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == col) return static_cast<int>(i);
  return -1;
}

bool Table::rectangular() const {
  for (const auto& row : rows)
    if (row.size() != columns.size()) return false;
  return true;
}

std::string comparator_text(Comparator c) {
  switch (c) {
    case Comparator::Gt: return ">";
    case Comparator::Lt: return "<";
    case Comparator::Eq: return "==";
    case Comparator::Ne: return "!=";
  }
  throw validation_error("unknown comparator");
}

Comparator comparator_from_text(const std::string& s) {
  if (s == ">") return Comparator::Gt;
  if (s == "<") return Comparator::Lt;
  if (s == "==") return Comparator::Eq;
  if (s == "!=") return Comparator::Ne;
  throw validation_error("unknown comparator: " + s);
}

namespace {

std::string cell_text(const Cell& c) {
  if (std::holds_alternative<std::int64_t>(c))
    return std::to_string(std::get<std::int64_t>(c));
  return "\"" + std::get<std::string>(c) + "\"";
}

}  // namespace

std::string Program::to_text() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (i) out << " | ";
    const Op& op = ops[i];
    if (const auto* f = std::get_if<FilterOp>(&op)) {
      out << "filter(" << f->column << " " << comparator_text(f->cmp) << " "
          << cell_text(f->literal) << ")";
    } else if (const auto* p = std::get_if<ProjectOp>(&op)) {
      out << "project(";
      for (std::size_t j = 0; j < p->columns.size(); ++j)
        out << (j ? "," : "") << p->columns[j];
      out << ")";
    } else if (const auto* jn = std::get_if<JoinOp>(&op)) {
      out << "join(" << jn->other_table << " on " << jn->left_key << "="
          << jn->right_key << ")";
    } else if (const auto* a = std::get_if<AggregateOp>(&op)) {
      out << "aggregate(" << a->group_col << ", "
          << (a->fn == AggFn::Count ? "count" : "sum");
      if (a->fn == AggFn::Sum) out << "(" << a->target_col << ")";
      out << ")";
    }
  }
  if (!well_formed) out << " [ill-formed]";
  return out.str();
}

}  // namespace cosmocore::miniworld
