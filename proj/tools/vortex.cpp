// vortex: symbolic product evaluation, sampler checks and Monte Carlo experiments.
//
// Exit codes: 0 ok, 1 a criterion failed, 2 parse/config error, 3 rule violation.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "vortex/experiments.hpp"
#include "vortex/functional_json.hpp"

namespace fs = std::filesystem;
using namespace vortex;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

int cmd_eval(const std::string& word, const std::string& mode, const std::string& spec_path) {
  nlohmann::json spec;
  try {
    spec = nlohmann::json::parse(read_file(spec_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("spec: ") + e.what());
  }
  auto results = evaluate_spec(spec, mode, word);
  if (results.size() == 1) {
    std::cout << results[0].second << "\n";
  } else {
    for (const auto& [label, value] : results) std::cout << label << " = " << value << "\n";
  }
  return 0;
}

int cmd_sample_check(std::size_t n, std::size_t k, std::uint64_t seed, std::size_t trials) {
  if (n == 0 || k >= n) throw ConfigError("sample-check needs 0 <= k < N");
  std::vector<ComplexVector> fixed;
  for (std::size_t i = 0; i < k; ++i) fixed.push_back(basis_vector(n, i));
  StabilizerHaarSampler sampler(n, fixed, seed);
  ComplexMatrix u = sampler.sample();
  double unit_res = unitarity_residual(u);
  double stab_res = k ? stabilizer_residual(u, fixed) : 0.0;
  std::printf("N=%zu k=%zu seed=%llu\n", n, k, static_cast<unsigned long long>(seed));
  std::printf("unitarity residual  %.3e\n", unit_res);
  std::printf("stabilizer residual %.3e\n", stab_res);
  ComplexMatrix p = ComplexMatrix::Zero(Eigen::Index(n), Eigen::Index(n));
  for (const auto& v : fixed) p += v * v.adjoint();
  std::printf("||U - I||_F = %.6g, ||U - P_fixed||_F = %.6g (complement dimension %zu)\n",
              (u - ComplexMatrix::Identity(Eigen::Index(n), Eigen::Index(n))).norm(), (u - p).norm(), n - k);

  ComplexMatrix mean = ComplexMatrix::Zero(Eigen::Index(n), Eigen::Index(n));
  for (std::size_t t = 0; t < trials; ++t) mean += sampler.sample();
  mean /= double(trials);
  // Entries of the complement block have E|V_ij|^2 = 1/(N-k).
  double sigma = 1.0 / std::sqrt(double(n - k) * double(trials));
  double worst = (mean - p).cwiseAbs().maxCoeff() / sigma;
  std::printf("E[U] over %zu trials: max |mean - P_fixed| = %.3g sigma\n", trials, worst);
  bool ok = unit_res < 1e-10 && stab_res < 1e-10 && worst < 6;
  std::printf("%s\n", ok ? "OK" : "FAIL");
  return ok ? 0 : 1;
}

int cmd_run(const std::string& config_path, const std::string& preset_name, std::optional<std::uint64_t> seed,
            const std::string& out_dir, std::optional<std::size_t> threads) {
  ExperimentConfig cfg;
  if (!config_path.empty()) cfg = config_from_json_text(read_file(config_path));
  else if (!preset_name.empty()) cfg = preset(preset_name);
  else throw ConfigError("run needs --config or --preset");
  if (seed) cfg.seed = *seed;
  cfg.validate();

  std::string stem = cfg.name.empty() ? kind_name(cfg.kind) : cfg.name;
  fs::path csv = cfg.csv_path.empty() ? fs::path(stem + ".csv") : fs::path(cfg.csv_path);
  fs::path json = cfg.json_path.empty() ? fs::path(stem + ".json") : fs::path(cfg.json_path);
  if (!out_dir.empty()) {
    csv = fs::path(out_dir) / csv.filename();
    json = fs::path(out_dir) / json.filename();
  }

  RunOptions opt;
  opt.threads = resolve_threads(threads);
  opt.log = [](const std::string& line) { std::cerr << line << "\n"; };
  Report rep = run_experiment(cfg, opt);
  write_file(csv, report_csv(rep));
  write_file(json, report_json(rep));
  for (const auto& c : rep.criteria)
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
  for (const auto& note : rep.notes) std::cout << "note: " << note << "\n";
  std::cout << "wrote " << csv.string() << " and " << json.string() << "\n";
  return rep.passed() ? 0 : 1;
}

int cmd_report(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("summary: ") + e.what());
  }
  if (!j.contains("criteria") || !j.contains("passed")) throw ConfigError(path + " is not a run summary");
  std::cout << j.value("experiment", "?") << " " << j.value("name", "") << " seed=" << j.value("seed", 0ULL) << "\n";
  for (const auto& c : j.at("criteria"))
    std::cout << "  " << (c.at("pass").get<bool>() ? "PASS " : "FAIL ") << c.at("name").get<std::string>() << ": "
              << c.value("detail", "") << "\n";
  for (const auto& f : j.value("fits", nlohmann::json::array())) {
    const auto& c1 = f.at("c1");
    std::cout << "  fit " << f.at("word").get<std::string>() << ": c1 = " << c1.at(0).dump() << " + "
              << c1.at(1).dump() << "i, chi2/dof = " << f.at("chi2").dump() << "/" << f.at("dof").dump() << "\n";
  }
  for (const auto& n : j.value("notes", nlohmann::json::array())) std::cout << "  note: " << n.get<std::string>() << "\n";
  bool passed = j.at("passed").get<bool>();
  std::cout << (passed ? "all criteria pass" : "some criteria fail") << "\n";
  return passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vortex: products of states, vortex matrix models and Monte Carlo checks"};
  app.require_subcommand(1);

  std::string word, mode = "free", spec;
  auto* eval = app.add_subcommand("eval", "evaluate a product state on a word or polynomial");
  eval->add_option("--word", word, "word or polynomial, e.g. \"X0*Y0\"")->required();
  eval->add_option("--mode", mode, "free, cfree, weighted, cyclic, ordered, indented, covariance");
  eval->add_option("--spec", spec, "functional spec JSON file")->required();

  std::size_t n = 64, k = 1, trials = 2000;
  std::uint64_t seed_value = 1;
  auto* check = app.add_subcommand("sample-check", "stabilizer Haar sampler diagnostics");
  check->add_option("-N,--n", n, "dimension");
  check->add_option("-k,--k", k, "number of fixed basis vectors e1..ek");
  check->add_option("--seed", seed_value, "seed");
  check->add_option("--trials", trials, "samples for the E[U] check");

  std::string config, preset_name, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  auto* run = app.add_subcommand("run", "run an experiment and write CSV and JSON reports");
  run->add_option("--config", config, "experiment config JSON");
  run->add_option("--preset", preset_name, "named preset")->check(CLI::IsMember(preset_names()));
  run->add_option("--seed", seed, "override the config seed");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--threads", threads, "worker threads (default: VORTEX_THREADS, else all cores)");

  std::string summary;
  auto* report = app.add_subcommand("report", "render a JSON run summary");
  report->add_option("summary", summary, "summary JSON written by run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*eval) return cmd_eval(word, mode, spec);
    if (*check) return cmd_sample_check(n, k, seed_value, trials);
    if (*run) return cmd_run(config, preset_name, seed, out_dir, threads);
    if (*report) return cmd_report(summary);
  } catch (const RuleViolation& e) {
    std::cerr << "rule violation: " << e.what() << "\n";
    return 3;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "invalid parameters: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
