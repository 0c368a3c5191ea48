// fueter-neumann: run verification suites and solver experiments from JSON configs.
//
//   fueter-neumann run <config.json> [--output PATH] [--parallel] [--dump-matrices DIR]
//   fueter-neumann converge <config.json>... [--n 8,12,16] [--format csv|json]
//   fueter-neumann verify [--k 2..6] [--seed S]
//
// Exit codes: 0 all suites pass, 1 a suite failed, 2 configuration or usage error.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fueter/experiments.hpp"

namespace {

using namespace fueter;

constexpr int kPass = 0, kSuiteFail = 1, kConfigError = 2;

void apply_thread_env() {
  const char* env = std::getenv("FUETER_THREADS");
  if (!env) return;
  const int n = std::atoi(env);
  if (n < 1) throw ConfigError(std::string("FUETER_THREADS must be a positive integer, got '") + env + "'");
  Eigen::setNbThreads(n);
#ifdef _OPENMP
  omp_set_num_threads(n);
#endif
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError(path + ": cannot write output");
  out << text;
}

std::string as_csv(const json& report) {
  std::ostringstream os;
  os << "suite,check,value,limit,pass\n";
  os << std::setprecision(12);
  for (const auto& [suite, body] : report["suites"].items())
    for (const auto& [name, v] : body["measured"].items()) {
      if (!v.is_object() || !v.contains("value")) continue;
      const json lim = v.contains("max") ? v["max"] : v.contains("min") ? v["min"] : v.value("expected", json());
      os << suite << ',' << name << ',' << v["value"].dump() << ',' << (lim.is_null() ? "" : lim.dump()) << ','
         << (v.value("pass", false) ? "true" : "false") << '\n';
    }
  return os.str();
}

void summarise(const json& report) {
  for (const auto& [suite, body] : report["suites"].items()) {
    std::cerr << suite << ": " << (body["pass"].get<bool>() ? "pass" : "FAIL") << '\n';
    for (const auto& f : body["failures"]) std::cerr << "  - " << f.get<std::string>() << '\n';
  }
}

void dump_matrices(const ExperimentConfig& cfg, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const NeumannSystem sys = make_system(cfg);
  for (const auto& [name, op] : {std::pair{"D0", &sys.D0()}, std::pair{"D1", &sys.D1()}}) {
    std::ofstream out(std::filesystem::path(dir) / (std::string(name) + ".coo"));
    write_coo(out, op->A);
  }
  for (const auto& [name, m] :
       {std::pair{"mass_sym", &sys.mass_sym()}, std::pair{"mass_mixed", &sys.mass_mixed()},
        std::pair{"mass_two", &sys.mass_two()}}) {
    std::ofstream out(std::filesystem::path(dir) / (std::string(name) + ".txt"));
    out.precision(17);
    for (Eigen::Index i = 0; i < m->size(); ++i) out << (*m)[i] << '\n';
  }
}

std::vector<int> parse_n_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--n expects a comma-separated list of integers, got '" + text + "'");
    }
  }
  return out;
}

std::pair<int, int> parse_k_range(const std::string& text) {
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      const int k = std::stoi(text);
      return {k, k};
    }
    return {std::stoi(text.substr(0, dots)), std::stoi(text.substr(dots + 2))};
  } catch (const std::exception&) {
    throw ConfigError("--k expects K or LO..HI, got '" + text + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted Neumann solver and verification suites for the k-Cauchy-Fueter complex"};
  app.require_subcommand(1);

  std::string config_path, output, dump_dir;
  bool parallel = false;
  auto* run = app.add_subcommand("run", "Run the suites listed in a config");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--output", output, "Report path (overrides output.path)");
  run->add_flag("--parallel", parallel, "Run suites concurrently");
  run->add_option("--dump-matrices", dump_dir, "Write D0, D1 (coordinate lists) and masses to DIR");

  std::vector<std::string> converge_paths;
  std::string n_list, format = "csv";
  auto* converge = app.add_subcommand("converge", "Refinement table over grid sizes");
  converge->add_option("configs", converge_paths, "Config(s); with --n only the first is used")->required();
  converge->add_option("--n", n_list, "Comma-separated grid sizes, e.g. 8,12,16");
  converge->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  converge->add_option("--output", output, "Table path (default stdout)");

  std::string k_range = "2..6";
  std::uint64_t seed = 1;
  auto* verify = app.add_subcommand("verify", "Identity, convexity and symbol suites over a range of k");
  verify->add_option("--k", k_range, "K or LO..HI");
  verify->add_option("--seed", seed, "Seed");
  verify->add_option("--output", output, "Report path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }

  try {
    apply_thread_env();
    if (*run) {
      ExperimentConfig cfg = load_config(config_path);
      if (parallel) cfg.parallel = true;
      if (!output.empty()) cfg.output.path = output;
      if (!dump_dir.empty()) dump_matrices(cfg, dump_dir);
      const RunReport rep = run_experiment(cfg);
      summarise(rep.doc);
      emit(cfg.output.path, cfg.output.format == "csv" ? as_csv(rep.doc) : rep.doc.dump(2) + "\n");
      return rep.pass ? kPass : kSuiteFail;
    }
    if (*converge) {
      std::vector<ExperimentConfig> cfgs;
      if (!n_list.empty()) {
        const ExperimentConfig base = load_config(converge_paths.front());
        for (int n : parse_n_list(n_list)) {
          ExperimentConfig c = base;
          if (n < 4 || n > 64) throw ConfigError("--n: n = " + std::to_string(n) + " is outside [4, 64]");
          c.grid.n = n;
          cfgs.push_back(c);
        }
      } else {
        for (const auto& p : converge_paths) cfgs.push_back(load_config(p));
      }
      const ConvergenceTable table = report_convergence(cfgs);
      std::ostringstream os;
      if (format == "json") os << to_json(table).dump(2) << '\n';
      else write_csv(os, table);
      emit(output, os.str());
      bool ok = true;
      for (const auto& [name, flag] : table.flags) ok = ok && flag;
      return ok ? kPass : kSuiteFail;
    }
    if (*verify) {
      const auto [lo, hi] = parse_k_range(k_range);
      if (lo < 2 || hi > 8 || lo > hi)
        throw ConfigError("--k: range " + k_range + " is outside the allowed range [2, 8]");
      json doc = {{"tool", "fueter-neumann"}, {"prng", Rng::algorithm}, {"seed", seed}};
      json per_k = json::object();
      bool pass = true;
      for (int k = lo; k <= hi; ++k) {
        ExperimentConfig cfg;
        cfg.k = k;
        cfg.seed = seed;
        cfg.suites = {"identities", "convexity", "symbols"};
        const RunReport rep = run_experiment(cfg);
        std::cerr << "k = " << k << '\n';
        summarise(rep.doc);
        per_k[std::to_string(k)] = rep.doc["suites"];
        pass = pass && rep.pass;
      }
      doc["k"] = per_k;
      doc["pass"] = pass;
      doc["timestamp"] = {{"started", iso_timestamp()}};
      emit(output, doc.dump(2) + "\n");
      return pass ? kPass : kSuiteFail;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSuiteFail;
  }
  return kConfigError;
}
