#include <doctest.h>

#include <cstdlib>
#include <json.hpp>
#include <random>

#include "vortex/experiments.hpp"
#include "vortex/parse.hpp"

using namespace vortex;

namespace {

const ReportRow* find_row(const Report& r, const std::string& word, std::size_t n, const std::string& mode,
                          const std::string& quantity = "mean") {
  for (const auto& row : r.rows)
    if (row.word == word && row.dimension == n && row.mode == mode && row.quantity == quantity) return &row;
  return nullptr;
}

ExperimentConfig small(ExperimentConfig c, std::vector<std::size_t> dims, std::size_t trials) {
  c.dimensions = std::move(dims);
  c.trials = trials;
  return c;
}

}  // namespace

TEST_CASE("summarize: mean and stderr per complex part") {
  auto e = summarize("w", 4, "trace", {Complex(1, 0), Complex(1, 0)});
  CHECK(e.mean == Complex(1, 0));
  CHECK(e.stderr() == 0);

  e = summarize("w", 4, "trace", {Complex(1, 5), Complex(3, 5)});
  CHECK(e.mean.real() == doctest::Approx(2));
  CHECK(e.stderr_re == doctest::Approx(1));
  CHECK(e.stderr_im == 0);

  CHECK_THROWS_AS(summarize("w", 4, "trace", {Complex(1)}), DomainError);
}

TEST_CASE("summarize: a fair coin has stderr close to 1/sqrt(T)") {
  std::mt19937_64 rng(5);
  std::vector<Complex> v(10000);
  for (auto& x : v) x = (rng() & 1) ? 1.0 : -1.0;
  auto e = summarize("coin", 1, "trace", v);
  CHECK(e.stderr() == doctest::Approx(0.01).epsilon(0.01));
}

TEST_CASE("estimate: words without rotated letters are deterministic") {
  std::size_t n = 8;
  EnsembleMap ens;
  ens.emplace(0, standard_ensemble(0, {EnsembleSpec::spiked_diagonal(3, 1)}, n));
  ens.emplace(1, standard_ensemble(1, {EnsembleSpec::shift()}, n));
  StabilizerHaarSampler s(n, {basis_vector(n, 0)}, 4);
  auto e = estimate(parse_as<Complex>("X0^2"), StateMode::normalized(), s, ens, 1, 10);
  CHECK(e.stderr() == 0);
  CHECK(e.mean.real() == doctest::Approx(1 + 8.0 / 8));
  auto r = estimate(parse_as<Complex>("X0*Y0*X0*Y0"), StateMode::normalized(), s, ens, 1, 10);
  CHECK(r.stderr() > 0);
  CHECK_THROWS_AS(estimate(parse_as<Complex>("X0"), StateMode::normalized(), s, ens, 1, 1), DomainError);
}

TEST_CASE("fit_expansion recovers exact data and propagates errors") {
  std::vector<MomentEstimate> data;
  for (std::size_t n : {16, 32, 64, 128}) {
    MomentEstimate e;
    e.dimension = n;
    e.mean = Complex(2, -1) + Complex(5, 3) / double(n);
    e.stderr_re = 0.01;
    data.push_back(e);
  }
  auto fit = fit_expansion("w", data);
  CHECK(std::abs(fit.c0 - Complex(2, -1)) < 1e-12);
  CHECK(std::abs(fit.c1 - Complex(5, 3)) < 1e-9);
  CHECK(fit.chi2 < 1e-12);
  CHECK(fit.dof == 2);

  // Unweighted two-parameter design: Var(c1) = s^2 / Sxx with x = 1/N.
  double mx = 0, sxx = 0;
  for (auto& e : data) mx += 1.0 / double(e.dimension) / 4;
  for (auto& e : data) sxx += std::pow(1.0 / double(e.dimension) - mx, 2);
  CHECK(fit.var_c1 == doctest::Approx(1e-4 / sxx));

  // Residuals larger than the errors inflate the covariance.
  data[0].mean += 0.5;
  auto noisy = fit_expansion("w", data);
  CHECK(noisy.chi2 / double(noisy.dof) > 1);
  CHECK(noisy.var_c1 == doctest::Approx(1e-4 / sxx * noisy.chi2 / double(noisy.dof)));
  CHECK(noisy.residual_norm > 0);

  data.pop_back();
  data.pop_back();
  CHECK_THROWS_AS(fit_expansion("w", data), DomainError);
}

TEST_CASE("loglog_slope") {
  CHECK(*loglog_slope({32, 64, 128}, {3.0 / 32, 3.0 / 64, 3.0 / 128}) == doctest::Approx(-1));
  CHECK(*loglog_slope({32, 64, 128}, {1, 0, 0.25}) == doctest::Approx(-1));
  CHECK_FALSE(loglog_slope({32, 64}, {0, 1}).has_value());
}

TEST_CASE("run_trials: results indexed by trial for any worker count") {
  auto fn = [](std::size_t t) { return std::vector<Complex>{Complex(double(t * t), 1)}; };
  auto a = run_trials(50, 1, fn), b = run_trials(50, 4, fn);
  CHECK(a == b);
  CHECK(a[7][0] == Complex(49, 1));
  CHECK_THROWS_AS(run_trials(10, 3,
                             [](std::size_t t) -> std::vector<Complex> {
                               if (t == 5) throw DomainError("boom");
                               return {};
                             }),
                  DomainError);
}

TEST_CASE("resolve_threads precedence") {
  CHECK(resolve_threads(3) == 3);
  setenv("VORTEX_THREADS", "5", 1);
  CHECK(resolve_threads(std::nullopt) == 5);
  CHECK(resolve_threads(2) == 2);
  setenv("VORTEX_THREADS", "zero", 1);
  CHECK(resolve_threads(std::nullopt) >= 1);
  unsetenv("VORTEX_THREADS");
}

TEST_CASE("config JSON round trip for every preset") {
  for (const auto& name : preset_names()) {
    auto cfg = preset(name);
    CHECK_NOTHROW(cfg.validate());
    auto text = config_to_json_text(cfg);
    auto back = config_from_json_text(text);
    CHECK(config_to_json_text(back) == text);
  }
  CHECK_THROWS_AS(preset("no-such-preset"), ConfigError);
}

TEST_CASE("config overrides on top of a preset") {
  auto cfg = config_from_json_text(R"({"preset":"cfree-basic","dimensions":[8,16,32],"trials":10,"seed":9,
    "vectors":{"v":"flat"},"words":["X0*Y0",{"word":"X0*Y0","center":{"0":"trace"}}]})");
  CHECK(cfg.kind == ExperimentKind::cfree);
  CHECK(cfg.seed == 9);
  CHECK(cfg.vector("v").kind == VectorSpec::Kind::flat);
  CHECK(cfg.words[1].label() == "c[trace](X0*Y0)");
  CHECK(cfg.words[1].center.size() == 1);
}

TEST_CASE("config errors") {
  auto bad = [](const std::string& patch) {
    auto j = nlohmann::json::parse(config_to_json_text(preset("cfree-basic")));
    j.merge_patch(nlohmann::json::parse(patch));
    return j.dump();
  };
  CHECK_THROWS_AS(config_from_json_text("{not json"), ConfigError);
  CHECK_THROWS_AS(config_from_json_text(bad(R"({"dimensions":[64,32]})")), ConfigError);
  CHECK_THROWS_AS(config_from_json_text(bad(R"({"dimensions":[]})")), ConfigError);
  CHECK_THROWS_AS(config_from_json_text(bad(R"({"trials":1})")), ConfigError);
  CHECK_THROWS_AS(config_from_json_text(bad(R"({"kind":"fluctuation","trials":999})")), ConfigError);
  CHECK_THROWS_AS(config_from_json_text(bad(R"({"kind":"sideways"})")), ConfigError);
  CHECK_THROWS_AS(config_from_json_text(bad(R"({"words":[]})")), ConfigError);
  CHECK_THROWS_AS(config_from_json_text(bad(R"({"words":["X0**Y0"]})")), ConfigError);
  CHECK_THROWS_AS(config_from_json_text(bad(R"({"words":["X1*Y0"]})")), ConfigError);
  CHECK_THROWS_AS(config_from_json_text(bad(R"({"words":[{"word":"X0+Y0","center":"trace"}]})")), ConfigError);
  CHECK_THROWS_AS(config_from_json_text(bad(R"({"words":[{"word":"X0*Y0","center":"w"}]})")), ConfigError);
  CHECK_THROWS_AS(config_from_json_text(bad(R"({"vectors":{"v":null,"x":"e1"}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json_text(bad(R"({"vectors":{"v":"e0"}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json_text(bad(R"({"ensembles":{"0":[{"type":"ring"}]}})")), ConfigError);
  CHECK_THROWS_AS(config_from_json_text(bad(R"({"slope_range":[0,-1]})")), ConfigError);
}

TEST_CASE("vector specs") {
  VectorSpec e3{"x", VectorSpec::Kind::basis, 2, {}};
  CHECK(e3.build(4)(2) == Complex(1));
  CHECK_THROWS_AS(e3.build(2), ConfigError);
  VectorSpec ex{"x", VectorSpec::Kind::explicit_values, 0, {Complex(3), Complex(0, 4)}};
  CHECK(std::abs(ex.build(2)(1) - Complex(0, 0.8)) < 1e-15);
  CHECK_THROWS_AS(ex.build(3), ConfigError);
}

TEST_CASE("cfree experiment: single-family words are exact, reports are deterministic") {
  auto cfg = small(preset("cfree-basic"), {8, 16, 32}, 30);
  cfg.words = {WordSpec{"X0", {}}, WordSpec{"X0*Y0*X0*Y0", {}}, WordSpec{"X0*Y0", {{0, "trace"}, {1, "trace"}}}};
  RunOptions one, three;
  three.threads = 3;
  auto a = run_cfree_experiment(cfg, one);
  auto b = run_cfree_experiment(cfg, three);
  CHECK(report_csv(a) == report_csv(b));
  CHECK(report_json(a) == report_json(b));

  for (std::size_t n : cfg.dimensions) {
    const auto* r = find_row(a, "X0", n, "trace");
    REQUIRE(r);
    CHECK(r->stderr == 0);
    CHECK(r->zscore == 0);
    const auto* c = find_row(a, "c[trace](X0*Y0)", n, "trace");
    REQUIRE(c);
    CHECK(std::abs(*c->prediction) < 1e-12);
  }
  CHECK(a.criterion("cfree_match"));
  CHECK(a.criterion("trace_error_slope"));

  cfg.seed += 1;
  CHECK(report_csv(run_cfree_experiment(cfg, one)) != report_csv(a));
}

TEST_CASE("infinitesimal experiment: one-family words give c0 = psi, c1 = omega exactly") {
  auto cfg = small(preset("infinitesimal-basic"), {8, 16, 32}, 10);
  cfg.words = {WordSpec{"X0^2", {}}, WordSpec{"X0*Y0", {{0, "trace"}, {1, "trace"}}}};
  auto rep = run_infinitesimal_experiment(cfg);
  REQUIRE(rep.fits.size() == 1);
  // A = diag(2, 0.5, 1.5, 2.5, 1.5, ...): psi(A^2) = 2.75, omega(A^2) = 4 - 2.25.
  CHECK(std::abs(rep.fits[0].c0 - Complex(2.75)) < 1e-9);
  CHECK(std::abs(rep.fits[0].c1 - Complex(1.75)) < 1e-8);
  const auto* c1 = find_row(rep, "X0^2", 0, "trace", "c1");
  REQUIRE(c1);
  CHECK(c1->pass);
  CHECK(find_row(rep, "c[trace](X0*Y0)", 32, "Trace"));
  CHECK(rep.criterion("expansion_fit")->pass);

  cfg.words = {WordSpec{"X0*Y0*X0", {{0, "trace"}, {1, "trace"}}}};
  CHECK_THROWS_AS(run_infinitesimal_experiment(cfg), ConfigError);
}

TEST_CASE("fluctuation experiment: single-family words do not fluctuate") {
  auto cfg = small(preset("fluctuation-basic"), {16}, 1000);
  cfg.words = {WordSpec{"X0^2", {}}, WordSpec{"X0*Y0", {}}};
  cfg.pairs = {{0, 0}, {0, 1}};
  auto rep = run_fluctuation_experiment(cfg);
  const auto* v = find_row(rep, "X0^2", 16, "trace", "variance");
  REQUIRE(v);
  CHECK(std::abs(v->estimate) < 1e-20);
  CHECK(std::abs(*v->prediction) < 1e-12);
  CHECK(v->pass);
  CHECK_THROWS_AS(run_fluctuation_experiment(small(cfg, {16}, 999)), ConfigError);
}

TEST_CASE("ordered and indented experiments: exact rows have zero noise") {
  auto cfg = small(preset("ordered-basic"), {8, 16}, 20);
  cfg.words = {WordSpec{"X0^2", {}}, WordSpec{"X0*Y0", {}}};
  auto rep = run_ordered_experiment(cfg);
  const auto* u = find_row(rep, "X0^2", 16, "vector:u");
  REQUIRE(u);
  CHECK(u->stderr == 0);
  CHECK(u->pass);
  const auto* iso = find_row(rep, "X0*X0", 16, "vector:u", "isotropy");
  REQUIRE(iso);
  CHECK(iso->stderr == 0);
  CHECK(iso->pass);
  CHECK(rep.criterion("isotropy"));

  auto ind = small(preset("indented-basic"), {8, 16}, 20);
  ind.words = {WordSpec{"Y0", {}}, WordSpec{"X0*Y0", {}}};
  auto ri = run_indented_experiment(ind);
  for (const char* s : {"vector:u", "vector:w"}) {
    const auto* r = find_row(ri, "Y0", 16, s);
    REQUIRE(r);
    CHECK(r->stderr == 0);
    CHECK(r->pass);
  }
  CHECK(find_row(ri, "Y0", 16, "vector:v")->stderr > 0);
}

TEST_CASE("indented experiment: centered word at v carries a 1/N term the limit drops") {
  // A fixes v, so the word reduces to (a_v - tr A)^2 E|v*(VBV* - tr B)v|^2 plus a
  // 1/N^2 remainder; summed exactly at N = 16 this is 0.0512036581229660.
  auto cfg = small(preset("indented-basic"), {16}, 20000);
  cfg.words = {WordSpec{"X0*Y0*X0*Y0", {{0, "trace"}, {1, "trace"}}}};
  auto rep = run_indented_experiment(cfg);
  const auto* r = find_row(rep, cfg.words[0].label(), 16, "vector:v");
  REQUIRE(r);
  REQUIRE(r->prediction);
  CHECK(std::abs(*r->prediction) < 1e-12);
  CHECK(std::abs(r->estimate - Complex(0.0512036581229660)) < 4 * r->stderr);
  CHECK(r->estimate.real() > 10 * r->stderr);
}

TEST_CASE("concentration: deterministic words are reported, not fitted") {
  auto cfg = small(preset("concentration-basic"), {16, 32, 64}, 40);
  cfg.words = {WordSpec{"X0^2", {}}, WordSpec{"X0*Y0", {}}};
  auto rep = concentration_check(cfg);
  CHECK_FALSE(find_row(rep, "X0^2", 0, "trace", "std_slope"));
  CHECK(find_row(rep, "X0*Y0", 0, "trace", "std_slope"));
  CHECK_FALSE(rep.notes.empty());
}

TEST_CASE("report CSV layout") {
  Report r;
  r.config = preset("smoke");
  ReportRow row;
  row.word = "c[0:trace,1:limit](X0*Y0)";
  row.dimension = 8;
  row.mode = "trace";
  row.quantity = "mean";
  row.estimate = Complex(0.1, 0);
  row.prediction = Complex(0);
  row.zscore = std::numeric_limits<double>::infinity();
  r.rows.push_back(row);
  auto csv = report_csv(r);
  CHECK(csv.rfind("experiment,seed,word,mode,N,trials,quantity,estimate_re,estimate_im,stderr,prediction_re,"
                  "prediction_im,zscore,",
                  0) == 0);
  CHECK(csv.find("\"c[0:trace,1:limit](X0*Y0)\"") != std::string::npos);
  CHECK(csv.find(",0.10000000000000001,0,0,0,0,inf,") != std::string::npos);
  auto j = nlohmann::json::parse(report_json(r));
  CHECK(j["seed"] == r.config.seed);
  CHECK(j["passed"] == true);
}
