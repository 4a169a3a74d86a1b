#include "lsbo/design_space.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lsbo {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("design space: " + msg);
}

std::string double_to_string(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

VarKind parse_kind(const std::string& s, const std::string& var) {
  if (s == "categorical") return VarKind::categorical;
  if (s == "discrete-integer") return VarKind::discrete_integer;
  if (s == "discretized-continuous") return VarKind::discretized_continuous;
  fail("variable '" + var + "': unknown kind '" + s + "'");
}

}  // namespace

double LevelValue::number() const {
  if (!is_number_) throw std::runtime_error("level '" + label_ + "' is not numeric");
  return number_;
}

const std::string& LevelValue::label() const {
  if (is_number_) throw std::runtime_error("numeric level has no label");
  return label_;
}

std::string LevelValue::to_string() const {
  return is_number_ ? double_to_string(number_) : label_;
}

bool LevelValue::operator==(const LevelValue& o) const {
  if (is_number_ != o.is_number_) return false;
  return is_number_ ? number_ == o.number_ : label_ == o.label_;
}

DesignSpace::DesignSpace(std::vector<VariableSpec> vars) : vars_(std::move(vars)) {
  validate_and_finalize();
}

void DesignSpace::validate_and_finalize() {
  if (vars_.empty()) fail("no variables defined");
  for (std::size_t n = 0; n < vars_.size(); ++n) {
    const auto& v = vars_[n];
    if (v.name.empty()) fail("variable " + std::to_string(n) + " has an empty name");
    for (std::size_t m = 0; m < n; ++m)
      if (vars_[m].name == v.name) fail("duplicate variable name '" + v.name + "'");
    if (v.levels.empty()) fail("variable '" + v.name + "' has no levels");
    for (std::size_t i = 0; i < v.levels.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (v.levels[i] == v.levels[j])
          fail("variable '" + v.name + "' has duplicate level " + v.levels[i].to_string());
    if (v.kind != VarKind::categorical) {
      for (const auto& lv : v.levels)
        if (!lv.is_number())
          fail("variable '" + v.name + "': non-numeric level '" + lv.label() +
               "' requires kind categorical");
    }
    if (v.kind == VarKind::discrete_integer) {
      for (const auto& lv : v.levels)
        if (lv.number() != std::floor(lv.number()))
          fail("variable '" + v.name + "': level " + lv.to_string() + " is not an integer");
    }
    if (v.kind == VarKind::discretized_continuous) {
      if (v.levels.size() < 2)
        fail("variable '" + v.name + "': discretized-continuous needs at least 2 levels");
      const double step = v.levels[1].number() - v.levels[0].number();
      if (step <= 0.0) fail("variable '" + v.name + "': levels must be strictly increasing");
      const double span = v.levels.back().number() - v.levels.front().number();
      for (std::size_t i = 1; i < v.levels.size(); ++i) {
        const double d = v.levels[i].number() - v.levels[i - 1].number();
        if (d <= 0.0) fail("variable '" + v.name + "': levels must be strictly increasing");
        if (std::abs(d - step) > 1e-9 * std::max(std::abs(span), std::abs(step)))
          fail("variable '" + v.name + "': levels must be evenly spaced");
      }
    }
  }
  std::uint64_t card = 1;
  for (const auto& v : vars_) {
    if (__builtin_mul_overflow(card, static_cast<std::uint64_t>(v.levels.size()), &card))
      fail("cardinality overflows 64 bits");
  }
  cardinality_ = card;
}

DesignSpace DesignSpace::parse(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("variables") || !doc["variables"].is_array())
    fail("config must be an object with a 'variables' array");

  std::vector<VariableSpec> vars;
  for (const auto& jv : doc["variables"]) {
    if (!jv.is_object()) fail("each variable entry must be an object");
    VariableSpec v;
    if (!jv.contains("name") || !jv["name"].is_string())
      fail("variable entry missing string 'name'");
    v.name = jv["name"].get<std::string>();
    if (!jv.contains("kind") || !jv["kind"].is_string())
      fail("variable '" + v.name + "' missing string 'kind'");
    v.kind = parse_kind(jv["kind"].get<std::string>(), v.name);

    const bool has_levels = jv.contains("levels");
    const bool has_bounds = jv.contains("lower") || jv.contains("upper");
    if (has_levels && has_bounds)
      fail("variable '" + v.name + "': give either 'levels' or lower/upper, not both");

    if (has_levels) {
      if (!jv["levels"].is_array() || jv["levels"].empty())
        fail("variable '" + v.name + "': 'levels' must be a non-empty array");
      for (const auto& jl : jv["levels"]) {
        if (jl.is_number())
          v.levels.emplace_back(jl.get<double>());
        else if (jl.is_string())
          v.levels.emplace_back(jl.get<std::string>());
        else
          fail("variable '" + v.name + "': levels must be numbers or strings");
      }
    } else {
      if (v.kind == VarKind::categorical)
        fail("variable '" + v.name + "': categorical requires an explicit 'levels' list");
      if (!jv.contains("lower") || !jv.contains("upper") ||
          !jv["lower"].is_number() || !jv["upper"].is_number())
        fail("variable '" + v.name + "': needs numeric 'lower' and 'upper'");
      const double lower = jv["lower"].get<double>();
      const double upper = jv["upper"].get<double>();
      if (v.kind == VarKind::discrete_integer) {
        if (lower != std::floor(lower) || upper != std::floor(upper))
          fail("variable '" + v.name + "': integer bounds required");
        if (upper < lower)
          fail("variable '" + v.name + "': upper must be >= lower");
        const double count = upper - lower + 1.0;
        if (jv.contains("num_levels") && jv["num_levels"].get<double>() != count)
          fail("variable '" + v.name + "': num_levels conflicts with the integer range");
        for (double x = lower; x <= upper; x += 1.0) v.levels.emplace_back(x);
      } else {
        if (!(lower < upper))
          fail("variable '" + v.name + "': lower must be strictly below upper");
        std::size_t num = 30;  // default grid resolution
        if (jv.contains("num_levels")) {
          if (!jv["num_levels"].is_number_unsigned() || jv["num_levels"].get<std::uint64_t>() < 2)
            fail("variable '" + v.name + "': num_levels must be an integer >= 2");
          num = jv["num_levels"].get<std::size_t>();
        }
        for (std::size_t k = 0; k < num; ++k)
          v.levels.emplace_back(lower + (upper - lower) * static_cast<double>(k) /
                                            static_cast<double>(num - 1));
      }
    }
    vars.push_back(std::move(v));
  }
  return DesignSpace(std::move(vars));
}

DesignSpace DesignSpace::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::size_t DesignSpace::find_var(const std::string& name) const {
  for (std::size_t n = 0; n < vars_.size(); ++n)
    if (vars_[n].name == name) return n;
  fail("no variable named '" + name + "'");
}

const LevelValue& DesignSpace::value(const DesignPoint& p, std::size_t n) const {
  if (p.indices.size() != vars_.size()) fail("point arity does not match the space");
  const auto& v = vars_.at(n);
  const std::size_t idx = p.indices.at(n);
  if (idx >= v.levels.size())
    fail("index " + std::to_string(idx) + " out of range for variable '" + v.name + "'");
  return v.levels[idx];
}

double DesignSpace::numeric_value(const DesignPoint& p, std::size_t n) const {
  return value(p, n).number();
}

std::uint64_t DesignSpace::flat_index(const DesignPoint& p) const {
  if (p.indices.size() != vars_.size()) fail("point arity does not match the space");
  std::uint64_t flat = 0;
  for (std::size_t n = 0; n < vars_.size(); ++n) {
    const std::size_t idx = p.indices[n];
    if (idx >= vars_[n].levels.size())
      fail("index " + std::to_string(idx) + " out of range for variable '" + vars_[n].name + "'");
    flat = flat * vars_[n].levels.size() + idx;
  }
  return flat;
}

DesignPoint DesignSpace::point_from_flat(std::uint64_t flat) const {
  if (flat >= cardinality_)
    fail("flat index " + std::to_string(flat) + " out of range (cardinality " +
         std::to_string(cardinality_) + ")");
  DesignPoint p;
  p.indices.resize(vars_.size());
  for (std::size_t n = vars_.size(); n-- > 0;) {
    const std::uint64_t c = vars_[n].levels.size();
    p.indices[n] = static_cast<std::size_t>(flat % c);
    flat /= c;
  }
  return p;
}

DesignPoint DesignSpace::sample_uniform(Rng& rng) const {
  DesignPoint p;
  p.indices.reserve(vars_.size());
  for (const auto& v : vars_)
    p.indices.push_back(static_cast<std::size_t>(rng.uniform_below(v.levels.size())));
  return p;
}

bool DesignSpace::operator==(const DesignSpace& o) const {
  if (vars_.size() != o.vars_.size()) return false;
  for (std::size_t n = 0; n < vars_.size(); ++n) {
    if (vars_[n].name != o.vars_[n].name || vars_[n].kind != o.vars_[n].kind ||
        vars_[n].levels.size() != o.vars_[n].levels.size())
      return false;
    for (std::size_t i = 0; i < vars_[n].levels.size(); ++i)
      if (!(vars_[n].levels[i] == o.vars_[n].levels[i])) return false;
  }
  return true;
}

}  // namespace lsbo
