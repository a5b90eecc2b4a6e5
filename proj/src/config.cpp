#include "hjbexec/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "hjbexec/montecarlo.hpp"

namespace hjbexec {

namespace {

struct Value {
  enum Kind { Number, Bool, String, Array } kind = Number;
  double num = 0.0;
  bool is_int = false;
  std::uint64_t uint_value = 0;
  bool negative = false;
  bool b = false;
  std::string str;
  std::vector<double> arr;
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '\\' && in_str) {
      ++i;
    } else if (c == '"') {
      in_str = !in_str;
    } else if (c == '#' && !in_str) {
      return line.substr(0, i);
    }
  }
  return line;
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  return std::all_of(k.begin(), k.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

Value parse_number(const std::string& tok, int line) {
  Value v;
  v.kind = Value::Number;
  std::string t = tok;
  t.erase(std::remove(t.begin(), t.end(), '_'), t.end());
  if (t.empty()) throw ParseError(line, "empty value");
  const bool looks_int = t.find_first_of(".eEinn") == std::string::npos;
  if (t == "inf" || t == "+inf" || t == "-inf" || t == "nan" || t == "+nan" || t == "-nan") {
    v.num = std::strtod(t.c_str(), nullptr);
    return v;
  }
  errno = 0;
  char* end = nullptr;
  v.num = std::strtod(t.c_str(), &end);
  if (end == t.c_str() || *end != '\0') throw ParseError(line, "invalid value '" + tok + "'");
  if (looks_int) {
    v.is_int = true;
    v.negative = t[0] == '-';
    const std::string digits = (t[0] == '-' || t[0] == '+') ? t.substr(1) : t;
    errno = 0;
    v.uint_value = std::strtoull(digits.c_str(), &end, 10);
    if (errno == ERANGE || *end != '\0') throw ParseError(line, "integer out of range '" + tok + "'");
  }
  return v;
}

Value parse_value(const std::string& raw, int line) {
  const std::string s = trim(raw);
  if (s.empty()) throw ParseError(line, "missing value");
  Value v;
  if (s == "true" || s == "false") {
    v.kind = Value::Bool;
    v.b = s == "true";
    return v;
  }
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') throw ParseError(line, "unterminated string");
    v.kind = Value::String;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      char c = s[i];
      if (c == '\\') {
        if (i + 2 >= s.size()) throw ParseError(line, "bad escape");
        const char e = s[++i];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: throw ParseError(line, std::string("unsupported escape \\") + e);
        }
      } else if (c == '"') {
        throw ParseError(line, "unexpected quote inside string");
      }
      v.str.push_back(c);
    }
    return v;
  }
  if (s.front() == '[') {
    if (s.back() != ']') throw ParseError(line, "unterminated array");
    v.kind = Value::Array;
    const std::string body = trim(s.substr(1, s.size() - 2));
    if (body.empty()) return v;
    std::stringstream ss(body);
    std::string item;
    std::vector<std::string> items;
    while (std::getline(ss, item, ',')) items.push_back(trim(item));
    if (!items.empty() && items.back().empty()) items.pop_back();  // trailing comma
    for (const auto& it : items) {
      if (it.empty()) throw ParseError(line, "empty array element");
      v.arr.push_back(parse_number(it, line).num);
    }
    return v;
  }
  return parse_number(s, line);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out + "\"";
}

std::string array(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + "]";
}

[[noreturn]] void type_error(const std::string& path, const char* want) {
  throw ConfigError(path + ": expected " + want);
}

double as_number(const Value& v, const std::string& path) {
  if (v.kind != Value::Number) type_error(path, "a number");
  return v.num;
}

long long as_int(const Value& v, const std::string& path) {
  if (v.kind != Value::Number || !v.is_int) type_error(path, "an integer");
  if (v.uint_value > static_cast<std::uint64_t>(1LL << 62)) throw ConfigError(path + ": integer too large");
  const auto x = static_cast<long long>(v.uint_value);
  return v.negative ? -x : x;
}

bool as_bool(const Value& v, const std::string& path) {
  if (v.kind != Value::Bool) type_error(path, "true or false");
  return v.b;
}

std::string as_string(const Value& v, const std::string& path) {
  if (v.kind != Value::String) type_error(path, "a string");
  return v.str;
}

std::vector<double> as_array(const Value& v, const std::string& path) {
  if (v.kind != Value::Array) type_error(path, "an array of numbers");
  return v.arr;
}

int narrow(long long x, const std::string& path) {
  if (x < -2147483647LL || x > 2147483647LL) throw ConfigError(path + ": integer out of range");
  return static_cast<int>(x);
}

void set_param(CoefficientEntry& e, const std::string& name, double value) {
  auto it = std::find_if(e.params.begin(), e.params.end(), [&](const auto& p) { return p.first == name; });
  if (it != e.params.end()) {
    it->second = value;
  } else {
    e.params.emplace_back(name, value);
    std::sort(e.params.begin(), e.params.end());
  }
}

CoefficientSpec build_entry(const CoefficientEntry& e, const std::string& path,
                            const CoefficientSpec* inner) {
  std::map<std::string, double> m(e.params.begin(), e.params.end());
  static const std::map<std::string, std::set<std::string>> allowed = {
      {"constant", {"value"}},
      {"affine", {"intercept", "slope"}},
      {"clamped_exp", {"scale", "lo", "hi"}},
      {"power_of_kappa", {"base", "exponent"}},
  };
  auto it = allowed.find(e.form);
  if (it == allowed.end()) throw ConfigError(path + ".form: unknown catalog tag '" + e.form + "'");
  for (const auto& kv : m) {
    if (!it->second.count(kv.first)) {
      throw ConfigError(path + "." + kv.first + ": not a parameter of '" + e.form + "'");
    }
  }
  try {
    return coefficient_from_tag(e.form, m, inner);
  } catch (const ConfigError& err) {
    throw ConfigError(path + ": " + err.what());
  }
}

}  // namespace

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

CoefficientFields RunConfig::fields() const {
  const CoefficientSpec k = build_entry(kappa, "coefficients.kappa", nullptr);
  const CoefficientSpec s = build_entry(sigma, "coefficients.sigma", &k);
  const CoefficientSpec a = build_entry(alpha, "coefficients.alpha", &k);
  const CoefficientSpec b = build_entry(beta, "coefficients.beta", &k);
  try {
    return CoefficientFields(k, s, a, b);
  } catch (const ConfigError& err) {
    throw ConfigError(std::string("coefficients: ") + err.what());
  }
}

Grid RunConfig::grid() const {
  try {
    return build_grid(y_min, y_max, ny, nt, model.horizon);
  } catch (const ConfigError& err) {
    throw ConfigError(std::string("grid: ") + err.what());
  }
}

SolverOptions RunConfig::solver() const {
  SolverOptions o;
  o.tol = tol;
  o.max_iter = max_iter;
  o.bounds = bounds == "declared" ? BoundsSource::Declared : BoundsSource::Domain;
  o.freeze = freeze == "fixed" ? FreezeMode::Fixed : FreezeMode::Refreeze;
  o.max_internal_steps = max_internal_steps;
  o.require_h3 = require_h3;
  return o;
}

void RunConfig::check() const {
  try {
    model.check();
  } catch (const ConfigError& err) {
    throw ConfigError(std::string("model: ") + err.what());
  }
  (void)fields();
  (void)grid();
  if (!(tol >= 0.0) || !std::isfinite(tol)) throw ConfigError("solver.tol: must be >= 0");
  if (max_iter < 1) throw ConfigError("solver.max_iter: must be >= 1");
  if (bounds != "domain" && bounds != "declared") {
    throw ConfigError("solver.bounds: expected \"domain\" or \"declared\"");
  }
  if (freeze != "refreeze" && freeze != "fixed") {
    throw ConfigError("solver.freeze: expected \"refreeze\" or \"fixed\"");
  }
  if (max_internal_steps < nt) throw ConfigError("solver.max_internal_steps: must be >= grid.nt");
  if (n_paths < 1) throw ConfigError("montecarlo.n_paths: must be >= 1");
  if (substeps < 1) throw ConfigError("montecarlo.substeps: must be >= 1");
  try {
    (void)parse_sweep_param(sweep_param);
  } catch (const ConfigError& err) {
    throw ConfigError(std::string("sweep.param: ") + err.what());
  }
  if (sweep_values.empty()) throw ConfigError("sweep.values: needs at least one value");
  for (double v : sweep_values) {
    try {
      (void)with_value(model, parse_sweep_param(sweep_param), v);
    } catch (const ConfigError& err) {
      throw ConfigError(std::string("sweep.values: ") + err.what());
    }
  }
  if (exhibit_path < 0 || exhibit_path >= n_paths) {
    throw ConfigError("sweep.exhibit_path: must lie in [0, n_paths)");
  }
  if (singular_A.empty()) throw ConfigError("singular.A_values: needs at least one value");
  for (std::size_t i = 0; i < singular_A.size(); ++i) {
    if (!(singular_A[i] > 0.0) || !std::isfinite(singular_A[i]) ||
        (i > 0 && !(singular_A[i] > singular_A[i - 1]))) {
      throw ConfigError("singular.A_values: must be positive and strictly increasing");
    }
  }
  if (singular_paths < 1) throw ConfigError("singular.n_paths: must be >= 1");
  if (singular_nt < 0) throw ConfigError("singular.nt: must be >= 0");
  for (double t : envelope_times) {
    if (!(t >= 0.0 && t < model.horizon)) throw ConfigError("singular.envelope_times: must lie in [0, T)");
  }
  if (out_dir.empty()) throw ConfigError("output.directory: must not be empty");
}

std::string RunConfig::canonical() const {
  std::ostringstream os;
  os << "[model]\n"
     << "T = " << fmt(model.horizon) << "\n"
     << "phi = " << fmt(model.impact_exponent) << "\n"
     << "gamma = " << fmt(model.risk_aversion) << "\n"
     << "A = " << fmt(model.penalty) << "\n"
     << "q0 = " << fmt(model.initial_inventory) << "\n"
     << "S0 = " << fmt(model.initial_price) << "\n"
     << "x0 = " << fmt(model.initial_cash) << "\n"
     << "y0 = " << fmt(model.initial_factor) << "\n";
  const std::pair<const char*, const CoefficientEntry*> entries[] = {
      {"kappa", &kappa}, {"sigma", &sigma}, {"alpha", &alpha}, {"beta", &beta}};
  for (const auto& [name, e] : entries) {
    os << "\n[coefficients." << name << "]\nform = " << quote(e->form) << "\n";
    for (const auto& kv : e->params) os << kv.first << " = " << fmt(kv.second) << "\n";
  }
  os << "\n[grid]\n"
     << "y_min = " << fmt(y_min) << "\n"
     << "y_max = " << fmt(y_max) << "\n"
     << "ny = " << ny << "\n"
     << "nt = " << nt << "\n"
     << "\n[solver]\n"
     << "tol = " << fmt(tol) << "\n"
     << "max_iter = " << max_iter << "\n"
     << "bounds = " << quote(bounds) << "\n"
     << "freeze = " << quote(freeze) << "\n"
     << "max_internal_steps = " << max_internal_steps << "\n"
     << "require_h3 = " << (require_h3 ? "true" : "false") << "\n"
     << "\n[montecarlo]\n"
     << "n_paths = " << n_paths << "\n"
     << "master_seed = " << master_seed << "\n"
     << "substeps = " << substeps << "\n"
     << "\n[sweep]\n"
     << "param = " << quote(sweep_param) << "\n"
     << "values = " << array(sweep_values) << "\n"
     << "exhibit_path = " << exhibit_path << "\n"
     << "\n[singular]\n"
     << "A_values = " << array(singular_A) << "\n"
     << "n_paths = " << singular_paths << "\n"
     << "nt = " << singular_nt << "\n"
     << "envelope_times = " << array(envelope_times) << "\n"
     << "\n[output]\n"
     << "directory = " << quote(out_dir) << "\n";
  return os.str();
}

std::uint64_t RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  using Setter = std::function<void(const Value&, const std::string&)>;
  std::map<std::string, std::map<std::string, Setter>> table;
  auto& m = table["model"];
  auto num = [](double& dst) { return [&dst](const Value& v, const std::string& p) { dst = as_number(v, p); }; };
  for (const char* k : {"T", "horizon"}) m[k] = num(cfg.model.horizon);
  for (const char* k : {"phi", "impact_exponent"}) m[k] = num(cfg.model.impact_exponent);
  for (const char* k : {"gamma", "risk_aversion"}) m[k] = num(cfg.model.risk_aversion);
  for (const char* k : {"A", "penalty"}) m[k] = num(cfg.model.penalty);
  for (const char* k : {"q0", "initial_inventory"}) m[k] = num(cfg.model.initial_inventory);
  for (const char* k : {"S0", "initial_price"}) m[k] = num(cfg.model.initial_price);
  for (const char* k : {"x0", "initial_cash"}) m[k] = num(cfg.model.initial_cash);
  for (const char* k : {"y0", "initial_factor"}) m[k] = num(cfg.model.initial_factor);

  auto& g = table["grid"];
  g["y_min"] = num(cfg.y_min);
  g["y_max"] = num(cfg.y_max);
  g["ny"] = [&](const Value& v, const std::string& p) { cfg.ny = narrow(as_int(v, p), p); };
  g["nt"] = [&](const Value& v, const std::string& p) { cfg.nt = narrow(as_int(v, p), p); };

  auto& s = table["solver"];
  s["tol"] = num(cfg.tol);
  s["max_iter"] = [&](const Value& v, const std::string& p) { cfg.max_iter = narrow(as_int(v, p), p); };
  s["bounds"] = [&](const Value& v, const std::string& p) { cfg.bounds = as_string(v, p); };
  s["freeze"] = [&](const Value& v, const std::string& p) { cfg.freeze = as_string(v, p); };
  s["max_internal_steps"] = [&](const Value& v, const std::string& p) { cfg.max_internal_steps = as_int(v, p); };
  s["require_h3"] = [&](const Value& v, const std::string& p) { cfg.require_h3 = as_bool(v, p); };

  auto& mc = table["montecarlo"];
  mc["n_paths"] = [&](const Value& v, const std::string& p) { cfg.n_paths = as_int(v, p); };
  mc["master_seed"] = [&](const Value& v, const std::string& p) {
    if (v.kind != Value::Number || !v.is_int || v.negative) type_error(p, "a nonnegative integer");
    cfg.master_seed = v.uint_value;
  };
  mc["substeps"] = [&](const Value& v, const std::string& p) { cfg.substeps = narrow(as_int(v, p), p); };

  auto& sw = table["sweep"];
  sw["param"] = [&](const Value& v, const std::string& p) { cfg.sweep_param = as_string(v, p); };
  sw["values"] = [&](const Value& v, const std::string& p) { cfg.sweep_values = as_array(v, p); };
  sw["exhibit_path"] = [&](const Value& v, const std::string& p) { cfg.exhibit_path = as_int(v, p); };

  auto& sg = table["singular"];
  sg["A_values"] = [&](const Value& v, const std::string& p) { cfg.singular_A = as_array(v, p); };
  sg["n_paths"] = [&](const Value& v, const std::string& p) { cfg.singular_paths = as_int(v, p); };
  sg["nt"] = [&](const Value& v, const std::string& p) { cfg.singular_nt = narrow(as_int(v, p), p); };
  sg["envelope_times"] = [&](const Value& v, const std::string& p) { cfg.envelope_times = as_array(v, p); };

  table["output"]["directory"] = [&](const Value& v, const std::string& p) { cfg.out_dir = as_string(v, p); };

  std::map<std::string, CoefficientEntry*> coef = {
      {"coefficients.kappa", &cfg.kappa},
      {"coefficients.sigma", &cfg.sigma},
      {"coefficients.alpha", &cfg.alpha},
      {"coefficients.beta", &cfg.beta}};

  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::set<std::string> seen_sections;
  std::set<std::string> seen_keys;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw ParseError(line_no, "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ParseError(line_no, "empty section name");
      if (!seen_sections.insert(section).second) throw ParseError(line_no, "duplicate section [" + section + "]");
      if (!table.count(section) && !coef.count(section)) {
        throw ConfigError("[" + section + "]: unknown section");
      }
      if (auto it = coef.find(section); it != coef.end()) *it->second = CoefficientEntry{};
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key)) throw ParseError(line_no, "invalid key '" + key + "'");
    const int value_line = line_no;
    if (!value.empty() && value.front() == '[' && value.back() != ']') {
      while (std::getline(in, raw)) {
        ++line_no;
        value += " " + trim(strip_comment(raw));
        if (!value.empty() && value.back() == ']') break;
      }
    }
    const Value v = parse_value(value, value_line);
    const std::string path = section.empty() ? key : section + "." + key;
    if (section.empty()) throw ConfigError(path + ": keys must belong to a section");
    if (!seen_keys.insert(path).second) throw ParseError(value_line, "duplicate key '" + path + "'");
    if (auto it = coef.find(section); it != coef.end()) {
      if (key == "form") {
        it->second->form = as_string(v, path);
      } else {
        set_param(*it->second, key, as_number(v, path));
      }
      continue;
    }
    auto& keys = table[section];
    auto kit = keys.find(key);
    if (kit == keys.end()) throw ConfigError(path + ": unknown key");
    kit->second(v, path);
  }
  for (const auto& [name, e] : coef) {
    if (seen_sections.count(name) && e->form.empty()) throw ConfigError(name + ".form: missing");
  }
  cfg.check();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace hjbexec
