#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsbo/rng.hpp"

namespace lsbo {

enum class VarKind { categorical, discrete_integer, discretized_continuous };

// A level is either a number or a text label (labels only make sense for
// categorical variables). Equality is exact; numeric levels never compare
// equal to labels.
class LevelValue {
 public:
  LevelValue() : is_number_(true), number_(0.0) {}
  explicit LevelValue(double v) : is_number_(true), number_(v) {}
  explicit LevelValue(std::string s) : is_number_(false), number_(0.0), label_(std::move(s)) {}

  bool is_number() const { return is_number_; }
  double number() const;            // throws on labels
  const std::string& label() const; // throws on numbers
  std::string to_string() const;    // shortest round-trip for numbers

  bool operator==(const LevelValue& o) const;

 private:
  bool is_number_;
  double number_;
  std::string label_;
};

struct VariableSpec {
  std::string name;
  VarKind kind = VarKind::categorical;
  std::vector<LevelValue> levels;
};

// A point is stored as per-variable level indices; physical values are always
// derived from the space so the two can never disagree.
struct DesignPoint {
  std::vector<std::size_t> indices;
  bool operator==(const DesignPoint& o) const { return indices == o.indices; }
};

class DesignSpace {
 public:
  DesignSpace() = default;
  explicit DesignSpace(std::vector<VariableSpec> vars);  // validates

  // Parses the JSON config document (see docs/formats.md). Errors name the
  // offending variable.
  static DesignSpace parse(const std::string& json_text);
  static DesignSpace load_file(const std::string& path);

  std::size_t num_vars() const { return vars_.size(); }
  const VariableSpec& var(std::size_t n) const { return vars_.at(n); }
  const std::vector<VariableSpec>& vars() const { return vars_; }
  std::size_t find_var(const std::string& name) const;  // throws when absent

  std::uint64_t cardinality() const { return cardinality_; }

  const LevelValue& value(const DesignPoint& p, std::size_t n) const;
  double numeric_value(const DesignPoint& p, std::size_t n) const;

  // Mixed-radix flat index, variable order with the last variable fastest.
  std::uint64_t flat_index(const DesignPoint& p) const;
  DesignPoint point_from_flat(std::uint64_t flat) const;

  // One independent uniform index per variable, drawn in variable order.
  DesignPoint sample_uniform(Rng& rng) const;

  bool operator==(const DesignSpace& o) const;

 private:
  void validate_and_finalize();

  std::vector<VariableSpec> vars_;
  std::uint64_t cardinality_ = 0;
};

}  // namespace lsbo
