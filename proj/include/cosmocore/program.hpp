#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace cosmocore::miniworld {

using Cell = std::variant<std::int64_t, std::string>;

// Rectangular table of int/string cells with unique column names.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  int column_index(const std::string& col) const;  // -1 if absent
  bool rectangular() const;
  bool operator==(const Table&) const = default;
};

enum class Comparator { Gt, Lt, Eq, Ne };

std::string comparator_text(Comparator c);
Comparator comparator_from_text(const std::string& s);

struct FilterOp {
  std::string column;
  Comparator cmp = Comparator::Gt;
  Cell literal;
  bool operator==(const FilterOp&) const = default;
};

struct ProjectOp {
  std::vector<std::string> columns;
  bool operator==(const ProjectOp&) const = default;
};

struct JoinOp {
  std::string other_table;  // resolved against the task's input tables
  std::string left_key;
  std::string right_key;
  bool operator==(const JoinOp&) const = default;
};

enum class AggFn { Count, Sum };

struct AggregateOp {
  std::string group_col;
  AggFn fn = AggFn::Count;
  std::string target_col;  // ignored for Count
  bool operator==(const AggregateOp&) const = default;
};

using Op = std::variant<FilterOp, ProjectOp, JoinOp, AggregateOp>;

// A pipeline over the task's first input table. Ill-formed programs stay
// representable: `well_formed == false` models a syntax-level failure.
struct Program {
  std::vector<Op> ops;
  bool well_formed = true;

  std::string to_text() const;  // compact one-line rendering
  bool operator==(const Program&) const = default;
};

}  // namespace cosmocore::miniworld
