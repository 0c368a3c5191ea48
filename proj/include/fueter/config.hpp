#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fueter/domain.hpp"
#include "fueter/neumann.hpp"

namespace fueter {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DomainConfig {
  std::string kind = "ball";
  double radius = 1.0;
  double a1 = 1.0, b1 = 0.0, a2 = 1.0, b2 = 0.0, level = 1.0;
};

struct WeightConfig {
  std::string form = "quadratic";  // quadratic | catalog
  std::string name = "radial";     // catalog entry: zero | radial | r1 | r2
  std::string chi = "identity";
  double kappa = 0.125;
};

struct GridConfig {
  int n = 12;
  double lo = -1.05, hi = 1.05;
};

struct SolverConfig {
  double tol = 1e-8;
  int maxiter = 0;
  double slack = 0.25;
  double probe_slack = 0.5;
  int trials = 100;
  std::string scheme = "nested";
};

struct OutputConfig {
  std::string path;  // empty: stdout
  std::string format = "json";
};

struct ExperimentConfig {
  int k = 2;
  DomainConfig domain;
  WeightConfig weight;
  GridConfig grid;
  SolverConfig solver;
  std::vector<std::string> suites;
  std::uint64_t seed = 1;
  OutputConfig output;
  bool parallel = false;
};

inline const std::vector<std::string>& known_suites() {
  static const std::vector<std::string> s{"identities", "convexity", "symbols", "stokes", "solve", "estimate"};
  return s;
}

namespace detail {

/// 1-based line of the first occurrence of "key" in the source text, or 0.
inline int line_of(const std::string& text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

class Reader {
 public:
  Reader(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& path, const std::string& key, const std::string& msg) const {
    std::ostringstream os;
    os << source_;
    if (const int line = line_of(text_, key); line > 0) os << ":" << line;
    os << ": field '" << path << "': " << msg;
    throw ConfigError(os.str());
  }

  void only(const json& obj, const std::string& path, const std::set<std::string>& allowed) const {
    if (!obj.is_object()) fail(path, path, "expected an object");
    for (const auto& [key, v] : obj.items())
      if (!allowed.count(key)) {
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        fail(path + "/" + key, key, "unknown key (allowed: " + list + ")");
      }
  }

  template <class T>
  void get(const json& obj, const std::string& path, const std::string& key, T& out) const {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    const std::string p = path + "/" + key;
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(p, key, "expected a string");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(p, key, "expected true or false");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail(p, key, "expected an integer");
      if constexpr (std::is_unsigned_v<T>)
        if (v.get<std::int64_t>() < 0 && !v.is_number_unsigned()) fail(p, key, "expected a non-negative integer");
    } else {
      if (!v.is_number()) fail(p, key, "expected a number");
    }
    out = v.get<T>();
  }

  void one_of(const std::string& path, const std::string& key, const std::string& v,
              const std::vector<std::string>& allowed) const {
    for (const auto& a : allowed)
      if (a == v) return;
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    fail(path, key, "'" + v + "' is not one of: " + list);
  }

 private:
  const std::string& text_;
  std::string source_;
};

}  // namespace detail

/// Parse and validate; unknown keys and out-of-range values throw ConfigError.
[[nodiscard]] inline ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>") {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  const detail::Reader r(text, source);
  ExperimentConfig c;
  r.only(j, "", {"k", "domain", "weight", "grid", "solver", "suites", "seed", "output", "parallel"});
  if (!j.contains("k")) r.fail("/k", "k", "missing (k is required, allowed range [2, 8])");
  r.get(j, "", "k", c.k);
  if (c.k < 2 || c.k > 8) r.fail("/k", "k", "k = " + std::to_string(c.k) + " is out of the allowed range [2, 8]");
  r.get(j, "", "seed", c.seed);
  r.get(j, "", "parallel", c.parallel);

  if (j.contains("domain")) {
    const json& d = j["domain"];
    r.only(d, "/domain", {"kind", "radius", "a1", "b1", "a2", "b2", "level"});
    r.get(d, "/domain", "kind", c.domain.kind);
    r.one_of("/domain/kind", "kind", c.domain.kind, {"ball", "sum_convex", "halfspace"});
    r.get(d, "/domain", "radius", c.domain.radius);
    for (auto [key, ptr] : {std::pair{"a1", &c.domain.a1}, std::pair{"b1", &c.domain.b1},
                            std::pair{"a2", &c.domain.a2}, std::pair{"b2", &c.domain.b2},
                            std::pair{"level", &c.domain.level}})
      r.get(d, "/domain", key, *ptr);
    if (!(c.domain.radius > 0)) r.fail("/domain/radius", "radius", "must be positive");
  }
  if (j.contains("weight")) {
    const json& w = j["weight"];
    r.only(w, "/weight", {"form", "name", "chi", "kappa"});
    r.get(w, "/weight", "form", c.weight.form);
    r.one_of("/weight/form", "form", c.weight.form, {"quadratic", "catalog"});
    r.get(w, "/weight", "name", c.weight.name);
    r.one_of("/weight/name", "name", c.weight.name, {"zero", "radial", "r1", "r2"});
    r.get(w, "/weight", "chi", c.weight.chi);
    r.one_of("/weight/chi", "chi", c.weight.chi, {"identity", "square", "exp", "softplus"});
    r.get(w, "/weight", "kappa", c.weight.kappa);
    if (c.weight.form == "quadratic" && c.weight.name != "radial")
      r.fail("/weight/name", "name", "the quadratic form is κ|x|²; use form 'catalog' for other entries");
  }
  if (j.contains("grid")) {
    const json& g = j["grid"];
    r.only(g, "/grid", {"n", "bounds"});
    r.get(g, "/grid", "n", c.grid.n);
    if (c.grid.n < 4 || c.grid.n > 64) r.fail("/grid/n", "n", "n = " + std::to_string(c.grid.n) + " is outside [4, 64]");
    if (g.contains("bounds")) {
      const json& b = g["bounds"];
      if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number())
        r.fail("/grid/bounds", "bounds", "expected [lo, hi]");
      c.grid.lo = b[0].get<double>();
      c.grid.hi = b[1].get<double>();
      if (!(c.grid.lo < c.grid.hi)) r.fail("/grid/bounds", "bounds", "lo must be below hi");
    }
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    r.only(s, "/solver", {"tol", "maxiter", "slack", "probe_slack", "trials", "scheme"});
    r.get(s, "/solver", "tol", c.solver.tol);
    r.get(s, "/solver", "maxiter", c.solver.maxiter);
    r.get(s, "/solver", "slack", c.solver.slack);
    r.get(s, "/solver", "probe_slack", c.solver.probe_slack);
    r.get(s, "/solver", "trials", c.solver.trials);
    r.get(s, "/solver", "scheme", c.solver.scheme);
    r.one_of("/solver/scheme", "scheme", c.solver.scheme, {"nested", "one-sided"});
    if (!(c.solver.tol > 0 && c.solver.tol < 1)) r.fail("/solver/tol", "tol", "must lie in (0, 1)");
    if (c.solver.maxiter < 0) r.fail("/solver/maxiter", "maxiter", "must be >= 0 (0 selects 10·sqrt(dof))");
    if (c.solver.slack < 0) r.fail("/solver/slack", "slack", "must be >= 0");
    if (c.solver.probe_slack < 0 || c.solver.probe_slack >= 1)
      r.fail("/solver/probe_slack", "probe_slack", "must lie in [0, 1)");
    if (c.solver.trials < 1) r.fail("/solver/trials", "trials", "must be >= 1");
  }
  if (j.contains("suites")) {
    const json& s = j["suites"];
    if (!s.is_array()) r.fail("/suites", "suites", "expected a list of suite names");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s[i].is_string()) r.fail("/suites/" + std::to_string(i), "suites", "expected a string");
      const auto name = s[i].get<std::string>();
      r.one_of("/suites/" + std::to_string(i), "suites", name, known_suites());
      c.suites.push_back(name);
    }
  }
  if (c.suites.empty()) r.fail("/suites", "suites", "at least one suite is required");
  if (j.contains("output")) {
    const json& o = j["output"];
    r.only(o, "/output", {"path", "format"});
    r.get(o, "/output", "path", c.output.path);
    r.get(o, "/output", "format", c.output.format);
    r.one_of("/output/format", "format", c.output.format, {"json", "csv"});
  }
  return c;
}

[[nodiscard]] inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

[[nodiscard]] inline DomainSpec make_domain(const DomainConfig& c) {
  if (c.kind == "ball") return DomainSpec::ball(c.radius);
  if (c.kind == "sum_convex") return DomainSpec::sum_convex(c.a1, c.b1, c.a2, c.b2, c.level);
  return DomainSpec::halfspace();
}

[[nodiscard]] inline Weight make_weight(const WeightConfig& c) {
  Weight base;
  if (c.form == "quadratic" || c.name == "radial") {
    base = Weight::radial(c.kappa);
  } else {
    base = c.name == "r1" ? Weight::r1() : c.name == "r2" ? Weight::r2() : Weight::zero();
    if (c.name != "zero") base = base.scaled(c.kappa);
  }
  if (c.chi == "identity") return base;
  return Weight::chain(Chi::by_name(c.chi), base);
}

[[nodiscard]] inline Grid4 make_grid(const GridConfig& c) {
  Grid4 g;
  g.lo = {c.lo, c.lo, c.lo, c.lo};
  g.hi = {c.hi, c.hi, c.hi, c.hi};
  g.n = c.n;
  g.validate();
  return g;
}

[[nodiscard]] inline Scheme make_scheme(const SolverConfig& c) {
  return c.scheme == "one-sided" ? Scheme::OneSided : Scheme::Nested;
}

[[nodiscard]] inline SolverOptions make_solver_options(const SolverConfig& c) {
  SolverOptions o;
  o.tol = c.tol;
  o.maxiter = c.maxiter;
  o.slack = c.slack;
  return o;
}

[[nodiscard]] inline json to_json(const ExperimentConfig& c) {
  return {{"k", c.k},
          {"domain",
           {{"kind", c.domain.kind}, {"radius", c.domain.radius}, {"a1", c.domain.a1}, {"b1", c.domain.b1},
            {"a2", c.domain.a2}, {"b2", c.domain.b2}, {"level", c.domain.level}}},
          {"weight", {{"form", c.weight.form}, {"name", c.weight.name}, {"chi", c.weight.chi}, {"kappa", c.weight.kappa}}},
          {"grid", {{"n", c.grid.n}, {"bounds", {c.grid.lo, c.grid.hi}}}},
          {"solver",
           {{"tol", c.solver.tol}, {"maxiter", c.solver.maxiter}, {"slack", c.solver.slack},
            {"probe_slack", c.solver.probe_slack}, {"trials", c.solver.trials}, {"scheme", c.solver.scheme}}},
          {"suites", c.suites},
          {"seed", c.seed},
          {"output", {{"path", c.output.path}, {"format", c.output.format}}},
          {"parallel", c.parallel}};
}

}  // namespace fueter
