#ifndef EQUILOX_MODEL_IR_HPP_
#define EQUILOX_MODEL_IR_HPP_

// Solver-agnostic linear model: typed variables, linear rows, a linear
// objective, plus deterministic MPS (fixed/free) and LP text emitters and an
// MPS reader used for round-trip checks and by the subprocess backend.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace equilox {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { kContinuous, kBinary };
enum class RowSense { kLessEqual, kGreaterEqual, kEqual };
enum class ObjectiveSense { kMaximize, kMinimize };

using VarId = std::size_t;

struct Term {
  VarId var;
  double coef;
};

/// Linear expression accumulated term by term. Duplicate variables are
/// merged when the expression is attached to a model.
class LinearExpr {
 public:
  LinearExpr() = default;

  LinearExpr& add(VarId var, double coef) {
    if (coef != 0.0) terms_.push_back({var, coef});
    return *this;
  }
  LinearExpr& add(const LinearExpr& other, double scale = 1.0) {
    for (const Term& t : other.terms_) add(t.var, t.coef * scale);
    return *this;
  }

  const std::vector<Term>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  /// Sorted by variable with duplicates summed and zeros dropped.
  std::vector<Term> canonical() const {
    std::vector<Term> out = terms_;
    std::stable_sort(out.begin(), out.end(),
                     [](const Term& a, const Term& b) { return a.var < b.var; });
    std::vector<Term> merged;
    merged.reserve(out.size());
    for (const Term& t : out) {
      if (!merged.empty() && merged.back().var == t.var) {
        merged.back().coef += t.coef;
      } else {
        merged.push_back(t);
      }
    }
    std::erase_if(merged, [](const Term& t) { return t.coef == 0.0; });
    return merged;
  }

 private:
  std::vector<Term> terms_;
};

struct Variable {
  std::string name;
  VarKind kind = VarKind::kContinuous;
  double lower = 0.0;
  double upper = kInf;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;  // canonical: sorted by var, no duplicates
  RowSense sense = RowSense::kLessEqual;
  double rhs = 0.0;
};

struct Objective {
  ObjectiveSense sense = ObjectiveSense::kMaximize;
  std::vector<Term> terms;  // canonical
  double constant = 0.0;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ModelIR {
 public:
  ModelIR() = default;
  explicit ModelIR(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }

  VarId add_variable(std::string name, VarKind kind, double lower,
                     double upper) {
    if (kind == VarKind::kBinary) {
      lower = std::max(lower, 0.0);
      upper = std::min(upper, 1.0);
    }
    if (lower > upper) {
      throw ModelError("variable '" + name + "' has empty domain");
    }
    auto [it, inserted] = var_index_.emplace(name, variables_.size());
    if (!inserted) throw ModelError("duplicate variable name '" + name + "'");
    variables_.push_back({std::move(name), kind, lower, upper});
    return it->second;
  }

  std::size_t add_constraint(std::string name, const LinearExpr& expr,
                             RowSense sense, double rhs) {
    std::vector<Term> terms = expr.canonical();
    for (const Term& t : terms) {
      if (t.var >= variables_.size()) {
        throw ModelError("constraint '" + name +
                         "' references an undeclared variable");
      }
    }
    auto [it, inserted] = row_index_.emplace(name, constraints_.size());
    if (!inserted) throw ModelError("duplicate constraint name '" + name + "'");
    constraints_.push_back({std::move(name), std::move(terms), sense, rhs});
    return it->second;
  }

  void set_objective(ObjectiveSense sense, const LinearExpr& expr,
                     double constant = 0.0) {
    std::vector<Term> terms = expr.canonical();
    for (const Term& t : terms) {
      if (t.var >= variables_.size()) {
        throw ModelError("objective references an undeclared variable");
      }
    }
    objective_ = {sense, std::move(terms), constant};
  }

  void set_bounds(VarId var, double lower, double upper) {
    Variable& v = variables_.at(var);
    if (lower > upper) {
      throw ModelError("variable '" + v.name + "' has empty domain");
    }
    v.lower = lower;
    v.upper = upper;
  }

  std::optional<VarId> find_variable(std::string_view name) const {
    auto it = var_index_.find(std::string(name));
    if (it == var_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<std::size_t> find_constraint(std::string_view name) const {
    auto it = row_index_.find(std::string(name));
    if (it == row_index_.end()) return std::nullopt;
    return it->second;
  }
  VarId variable_id(std::string_view name) const {
    auto id = find_variable(name);
    if (!id) throw ModelError("unknown variable '" + std::string(name) + "'");
    return *id;
  }

  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const Objective& objective() const { return objective_; }

  std::size_t num_binaries() const {
    return static_cast<std::size_t>(
        std::count_if(variables_.begin(), variables_.end(), [](const auto& v) {
          return v.kind == VarKind::kBinary;
        }));
  }
  std::size_t num_nonzeros() const {
    std::size_t nz = 0;
    for (const auto& c : constraints_) nz += c.terms.size();
    return nz;
  }

  /// Copy with every binary relaxed to a continuous variable on its bounds.
  ModelIR relaxed() const {
    ModelIR out = *this;
    for (Variable& v : out.variables_) v.kind = VarKind::kContinuous;
    return out;
  }

 private:
  std::string name_ = "model";
  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  Objective objective_;
  std::unordered_map<std::string, VarId> var_index_;
  std::unordered_map<std::string, std::size_t> row_index_;
};

// ---------------------------------------------------------------------------
// Text emitters.

namespace detail {

/// Shortest round-trip decimal representation.
inline std::string format_number(double v) {
  if (v == 0.0) return "0";
  if (std::isinf(v)) return v > 0 ? "1e+30" : "-1e+30";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw ModelError("number formatting failed");
  return std::string(buf, ptr);
}

inline std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

struct MpsNames {
  std::vector<std::string> cols;
  std::vector<std::string> rows;
  std::string objective = "OBJ";
};

inline MpsNames mps_names(const ModelIR& m, bool fixed) {
  MpsNames n;
  bool short_enough = true;
  for (const auto& v : m.variables()) {
    if (v.name.size() > 8 || v.name.find(' ') != std::string::npos) {
      short_enough = false;
    }
  }
  for (const auto& c : m.constraints()) {
    if (c.name.size() > 8 || c.name.find(' ') != std::string::npos) {
      short_enough = false;
    }
  }
  const bool positional = fixed && !short_enough;
  char buf[16];
  for (std::size_t i = 0; i < m.variables().size(); ++i) {
    if (positional) {
      std::snprintf(buf, sizeof(buf), "C%07zu", i);
      n.cols.emplace_back(buf);
    } else {
      n.cols.push_back(m.variables()[i].name);
    }
  }
  for (std::size_t i = 0; i < m.constraints().size(); ++i) {
    if (positional) {
      std::snprintf(buf, sizeof(buf), "R%07zu", i);
      n.rows.emplace_back(buf);
    } else {
      n.rows.push_back(m.constraints()[i].name);
    }
  }
  return n;
}

}  // namespace detail

enum class MpsFormat { kFixed, kFree };

/// Writes the model in MPS. Fixed form falls back to positional names
/// (C0000000, R0000000) when any name exceeds eight characters.
inline std::string to_mps(const ModelIR& m, MpsFormat format) {
  using detail::format_number;
  const bool fixed = format == MpsFormat::kFixed;
  const detail::MpsNames names = detail::mps_names(m, fixed);

  // Column-major view of the rows.
  std::vector<std::vector<std::pair<std::size_t, double>>> cols(
      m.variables().size());
  for (std::size_t r = 0; r < m.constraints().size(); ++r) {
    for (const Term& t : m.constraints()[r].terms) {
      cols[t.var].emplace_back(r, t.coef);
    }
  }
  std::vector<double> obj(m.variables().size(), 0.0);
  for (const Term& t : m.objective().terms) obj[t.var] = t.coef;

  std::ostringstream os;
  auto field_line = [&](std::string_view code, const std::string& f1,
                        const std::string& f2, const std::string& f3) {
    if (fixed) {
      std::string line = " " + detail::pad(std::string(code), 3) +
                         detail::pad(f1, 8) + "  " + detail::pad(f2, 8) +
                         "  " + f3;
      os << line << '\n';
    } else {
      os << ' ' << code;
      if (!code.empty()) os << ' ';
      os << f1 << ' ' << f2 << ' ' << f3 << '\n';
    }
  };

  os << "NAME          " << m.name() << '\n';
  os << "OBJSENSE\n    "
     << (m.objective().sense == ObjectiveSense::kMaximize ? "MAX" : "MIN") << '\n';
  os << "ROWS\n";
  os << " N  " << names.objective << '\n';
  for (std::size_t r = 0; r < m.constraints().size(); ++r) {
    const char* code = "L";
    switch (m.constraints()[r].sense) {
      case RowSense::kLessEqual: code = "L"; break;
      case RowSense::kGreaterEqual: code = "G"; break;
      case RowSense::kEqual: code = "E"; break;
    }
    os << ' ' << code << "  " << names.rows[r] << '\n';
  }
  os << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (std::size_t j = 0; j < m.variables().size(); ++j) {
    const bool is_int = m.variables()[j].kind == VarKind::kBinary;
    if (is_int != in_int) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "MARKER%02d", marker++);
      field_line("", buf, "'MARKER'", is_int ? "'INTORG'" : "'INTEND'");
      in_int = is_int;
    }
    if (obj[j] != 0.0) {
      field_line("", names.cols[j], names.objective, format_number(obj[j]));
    }
    for (const auto& [r, coef] : cols[j]) {
      field_line("", names.cols[j], names.rows[r], format_number(coef));
    }
    if (obj[j] == 0.0 && cols[j].empty()) {
      // Keep otherwise-empty columns declared.
      field_line("", names.cols[j], names.objective, "0");
    }
  }
  if (in_int) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "MARKER%02d", marker++);
    field_line("", buf, "'MARKER'", "'INTEND'");
  }
  os << "RHS\n";
  if (m.objective().constant != 0.0) {
    // MPS convention: the objective constant enters negated.
    field_line("", "RHS", names.objective,
               format_number(-m.objective().constant));
  }
  for (std::size_t r = 0; r < m.constraints().size(); ++r) {
    if (m.constraints()[r].rhs != 0.0) {
      field_line("", "RHS", names.rows[r],
                 format_number(m.constraints()[r].rhs));
    }
  }
  os << "BOUNDS\n";
  for (std::size_t j = 0; j < m.variables().size(); ++j) {
    const Variable& v = m.variables()[j];
    if (v.kind == VarKind::kBinary && v.lower == 0.0 && v.upper == 1.0) {
      field_line("BV", "BND", names.cols[j], "");
      continue;
    }
    if (v.lower == v.upper) {
      field_line("FX", "BND", names.cols[j], format_number(v.lower));
      continue;
    }
    if (std::isinf(v.lower) && std::isinf(v.upper)) {
      field_line("FR", "BND", names.cols[j], "");
      continue;
    }
    if (std::isinf(v.lower)) {
      field_line("MI", "BND", names.cols[j], "");
    } else if (v.lower != 0.0) {
      field_line("LO", "BND", names.cols[j], format_number(v.lower));
    }
    if (!std::isinf(v.upper)) {
      field_line("UP", "BND", names.cols[j], format_number(v.upper));
    }
  }
  os << "ENDATA\n";
  std::string text = os.str();
  // Strip trailing blanks left by empty third fields.
  std::string out;
  out.reserve(text.size());
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    std::string_view line(text.data() + start, end - start);
    while (!line.empty() && line.back() == ' ') line.remove_suffix(1);
    out.append(line);
    out.push_back('\n');
    start = end + 1;
  }
  return out;
}

/// CPLEX-style LP text. Square brackets in names are mapped to parentheses.
inline std::string to_lp(const ModelIR& m) {
  using detail::format_number;
  auto lp_name = [](std::string s) {
    for (char& c : s) {
      if (c == '[') c = '(';
      if (c == ']') c = ')';
    }
    return s;
  };
  auto write_terms = [&](std::ostringstream& os,
                         const std::vector<Term>& terms) {
    std::size_t col = 0;
    bool first = true;
    for (const Term& t : terms) {
      std::string piece;
      double c = t.coef;
      if (first) {
        if (c < 0) piece += "- ";
      } else {
        piece += c < 0 ? " - " : " + ";
      }
      c = std::fabs(c);
      if (c != 1.0) piece += format_number(c) + " ";
      piece += lp_name(m.variables()[t.var].name);
      if (col + piece.size() > 240) {
        os << "\n  ";
        col = 2;
      }
      os << piece;
      col += piece.size();
      first = false;
    }
    if (first) os << "0";
  };

  std::ostringstream os;
  os << "\\ " << m.name() << '\n';
  os << (m.objective().sense == ObjectiveSense::kMaximize ? "Maximize" : "Minimize")
     << "\n obj: ";
  write_terms(os, m.objective().terms);
  if (m.objective().constant != 0.0) {
    os << (m.objective().constant < 0 ? " - " : " + ")
       << format_number(std::fabs(m.objective().constant));
  }
  os << "\nSubject To\n";
  for (const Constraint& c : m.constraints()) {
    os << ' ' << lp_name(c.name) << ": ";
    write_terms(os, c.terms);
    switch (c.sense) {
      case RowSense::kLessEqual: os << " <= "; break;
      case RowSense::kGreaterEqual: os << " >= "; break;
      case RowSense::kEqual: os << " = "; break;
    }
    os << format_number(c.rhs) << '\n';
  }
  os << "Bounds\n";
  for (const Variable& v : m.variables()) {
    if (v.kind == VarKind::kBinary && v.lower == 0.0 && v.upper == 1.0) continue;
    const std::string n = lp_name(v.name);
    if (v.lower == v.upper) {
      os << ' ' << n << " = " << format_number(v.lower) << '\n';
    } else if (std::isinf(v.lower) && std::isinf(v.upper)) {
      os << ' ' << n << " free\n";
    } else if (std::isinf(v.upper)) {
      if (v.lower != 0.0) os << ' ' << n << " >= " << format_number(v.lower) << '\n';
    } else {
      os << ' ' << (std::isinf(v.lower) ? "-inf" : format_number(v.lower))
         << " <= " << n << " <= " << format_number(v.upper) << '\n';
    }
  }
  bool any_binary = false;
  for (const Variable& v : m.variables()) {
    if (v.kind != VarKind::kBinary) continue;
    if (!any_binary) os << "Binaries\n";
    any_binary = true;
    os << ' ' << lp_name(v.name) << '\n';
  }
  os << "End\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// MPS reader (free form; whitespace-separated fields, which also accepts the
// fixed-form output above since it never emits names with spaces).

inline ModelIR parse_mps(std::istream& in) {
  enum class Section { kNone, kName, kObjSense, kRows, kColumns, kRhs, kRanges, kBounds };
  Section section = Section::kNone;
  std::string model_name = "model";
  ObjectiveSense sense = ObjectiveSense::kMinimize;
  std::string obj_row;
  struct RowDecl {
    std::string name;
    RowSense sense;
  };
  std::vector<RowDecl> rows;
  std::unordered_map<std::string, std::size_t> row_pos;
  struct ColData {
    std::string name;
    bool integer = false;
    double obj = 0.0;
    std::vector<std::pair<std::size_t, double>> entries;
    double lower = 0.0;
    double upper = kInf;
    bool upper_set = false;
  };
  std::vector<ColData> cols;
  std::unordered_map<std::string, std::size_t> col_pos;
  std::vector<double> rhs;
  double obj_constant = 0.0;
  bool in_int = false;

  auto to_double = [](const std::string& s) {
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      if (v >= 1e30) return kInf;
      if (v <= -1e30) return -kInf;
      return v;
    } catch (const std::exception&) {
      throw ModelError("MPS: bad number '" + s + "'");
    }
  };

  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '*') continue;
    std::istringstream ls(line);
    std::vector<std::string> f;
    for (std::string tok; ls >> tok;) f.push_back(tok);
    if (f.empty()) continue;
    if (line[0] != ' ' && line[0] != '\t') {
      const std::string& head = f[0];
      if (head == "NAME") {
        section = Section::kName;
        if (f.size() > 1) model_name = f[1];
      } else if (head == "OBJSENSE") {
        section = Section::kObjSense;
        if (f.size() > 1) sense = f[1] == "MAX" ? ObjectiveSense::kMaximize : ObjectiveSense::kMinimize;
      } else if (head == "ROWS") {
        section = Section::kRows;
      } else if (head == "COLUMNS") {
        section = Section::kColumns;
      } else if (head == "RHS") {
        section = Section::kRhs;
      } else if (head == "RANGES") {
        section = Section::kRanges;
      } else if (head == "BOUNDS") {
        section = Section::kBounds;
      } else if (head == "ENDATA") {
        break;
      } else {
        throw ModelError("MPS: unknown section '" + head + "'");
      }
      continue;
    }
    switch (section) {
      case Section::kObjSense:
        sense = (f[0] == "MAX" || f[0] == "MAXIMIZE") ? ObjectiveSense::kMaximize
                                                     : ObjectiveSense::kMinimize;
        break;
      case Section::kRows: {
        if (f.size() < 2) throw ModelError("MPS: malformed ROWS line");
        if (f[0] == "N") {
          if (obj_row.empty()) obj_row = f[1];
          break;
        }
        RowSense rs = f[0] == "L" ? RowSense::kLessEqual
                      : f[0] == "G" ? RowSense::kGreaterEqual
                      : f[0] == "E" ? RowSense::kEqual
                                    : throw ModelError("MPS: bad row type " + f[0]);
        row_pos.emplace(f[1], rows.size());
        rows.push_back({f[1], rs});
        rhs.push_back(0.0);
        break;
      }
      case Section::kColumns: {
        if (f.size() >= 3 && f[1] == "'MARKER'") {
          in_int = f[2] == "'INTORG'";
          break;
        }
        if (f.size() < 3 || f.size() % 2 == 0) {
          throw ModelError("MPS: malformed COLUMNS line");
        }
        auto [it, inserted] = col_pos.emplace(f[0], cols.size());
        if (inserted) {
          ColData cd;
          cd.name = f[0];
          cd.integer = in_int;
          if (in_int) cd.upper = 1.0;  // integer default bounds [0,1] if unset
          cols.push_back(std::move(cd));
        }
        ColData& cd = cols[it->second];
        for (std::size_t k = 1; k + 1 < f.size(); k += 2) {
          double v = to_double(f[k + 1]);
          if (f[k] == obj_row) {
            cd.obj += v;
          } else {
            auto rp = row_pos.find(f[k]);
            if (rp == row_pos.end()) throw ModelError("MPS: unknown row " + f[k]);
            if (v != 0.0) cd.entries.emplace_back(rp->second, v);
          }
        }
        break;
      }
      case Section::kRhs: {
        std::size_t k = f.size() % 2 == 1 ? 1 : 0;
        for (; k + 1 < f.size(); k += 2) {
          double v = to_double(f[k + 1]);
          if (f[k] == obj_row) {
            obj_constant = -v;
          } else {
            auto rp = row_pos.find(f[k]);
            if (rp == row_pos.end()) throw ModelError("MPS: unknown row " + f[k]);
            rhs[rp->second] = v;
          }
        }
        break;
      }
      case Section::kRanges:
        throw ModelError("MPS: RANGES section is not supported");
      case Section::kBounds: {
        if (f.size() < 3) throw ModelError("MPS: malformed BOUNDS line");
        auto cp = col_pos.find(f[2]);
        if (cp == col_pos.end()) throw ModelError("MPS: unknown column " + f[2]);
        ColData& cd = cols[cp->second];
        const std::string& type = f[0];
        double v = f.size() > 3 ? to_double(f[3]) : 0.0;
        if (type == "UP") {
          cd.upper = v;
          cd.upper_set = true;
        } else if (type == "LO") {
          cd.lower = v;
        } else if (type == "FX") {
          cd.lower = cd.upper = v;
        } else if (type == "FR") {
          cd.lower = -kInf;
          cd.upper = kInf;
        } else if (type == "MI") {
          cd.lower = -kInf;
        } else if (type == "PL") {
          cd.upper = kInf;
        } else if (type == "BV") {
          cd.integer = true;
          cd.lower = 0.0;
          cd.upper = 1.0;
        } else {
          throw ModelError("MPS: unsupported bound type " + type);
        }
        break;
      }
      default:
        throw ModelError("MPS: data outside of a section");
    }
  }

  ModelIR m(model_name);
  for (const ColData& cd : cols) {
    if (cd.integer && !(cd.lower >= 0.0 && cd.upper <= 1.0)) {
      throw ModelError("MPS: only binary integer columns are supported (" +
                       cd.name + ")");
    }
    m.add_variable(cd.name, cd.integer ? VarKind::kBinary : VarKind::kContinuous,
                   cd.lower, cd.upper);
  }
  std::vector<LinearExpr> row_exprs(rows.size());
  LinearExpr obj;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j].obj != 0.0) obj.add(j, cols[j].obj);
    for (const auto& [r, v] : cols[j].entries) row_exprs[r].add(j, v);
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    m.add_constraint(rows[r].name, row_exprs[r], rows[r].sense, rhs[r]);
  }
  m.set_objective(sense, obj, obj_constant);
  return m;
}

inline ModelIR parse_mps(const std::string& text) {
  std::istringstream in(text);
  return parse_mps(in);
}

// ---------------------------------------------------------------------------

/// 64-bit FNV-1a, used for content-addressed cache keys and manifests.
inline std::uint64_t fnv1a(std::string_view data,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string model_hash(const ModelIR& m) {
  return hex64(fnv1a(to_mps(m, MpsFormat::kFree)));
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace equilox

#endif  // EQUILOX_MODEL_IR_HPP_
