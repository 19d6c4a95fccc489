// Acceptance run: one PASS/FAIL line per criterion 1-10.
//
// Usage: acceptance [--threads N] [--only 1,2,...]
// Exit status is 0 whenever the run completes; the verdicts are the
// printed lines (and a failing criterion is never retried or relaxed).

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "vortex/experiments.hpp"

using namespace vortex;
using Q = QComplex;
using F = MomentFunctional<Q>;
using P = Polynomial<Q>;
using oracle::random_functional;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

const std::vector<Generator> kAlphabet{X(0), X(1), Y(0), Y(1)};

Outcome criterion_1() {
  auto t0 = Clock::now();
  std::size_t checked = 0, bad = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    Q unit = oracle::small_rational(oracle::mix(s + 9000));
    ProductContext<Q> ctx;
    std::array<std::array<Q, 3>, 2> v;  // (phi, psi, omega) on a and b
    for (Family f : {Family{0}, Family{1}}) {
      std::uint64_t seed = 10000 + 10 * s + f;
      FunctionalTriple<Q> t{random_functional({f}, seed, false), random_functional({f}, seed + 3, false),
                            random_functional({f}, seed + 6, true, unit)};
      ctx.register_triple(t);
      Word x{Generator(f, 0)};
      v[f] = {t.phi(x), t.psi(x), t.omega(x)};
    }
    Q got = cyclic_cfree_eval(ctx, Word{X(0), Y(0)});
    Q want = oracle::omega_ab_formula(v[0][0], v[0][1], v[0][2], v[1][0], v[1][1], v[1][2], unit);
    ++checked;
    bad += !(got == want);
  }
  double t = seconds_since(t0);
  return {bad == 0 && t < 1.0,
          std::to_string(checked - bad) + "/" + std::to_string(checked) + " exact, " + fmt("%.3f s", t)};
}

Outcome criterion_2() {
  auto t0 = Clock::now();
  std::size_t checked = 0, bad = 0;
  for (std::uint64_t s : {21, 22}) {
    auto fa = random_functional({0}, 100 * s + 1, false), fb = random_functional({1}, 100 * s + 2, false);
    ProductContext<Q> ctx;
    ctx.register_free(fa);
    ctx.register_free(fb);
    FreeCumulants<Q> ka(fa), kb(fb);
    for (const auto& w : oracle::all_words(kAlphabet, 2, 8)) {
      auto blocks = alternating_blocks<Q>(w);
      if (blocks.size() < 2) continue;
      if (blocks.size() % 2) blocks.push_back(Block<Q>{Family(1 - blocks.back().family), P::unit()});
      bool a_first = blocks.front().family == 0;
      Q kre = a_first ? mixed_moment_oracle(ka, fb, blocks) : mixed_moment_oracle(kb, fa, blocks);
      ++checked;
      bad += !(free_product_eval(ctx, w) == kre);
    }
  }
  double t = seconds_since(t0);
  return {bad == 0 && t < 30.0, std::to_string(checked - bad) + "/" + std::to_string(checked) +
                                    " alternating words (length <= 8, 2 functional draws), " + fmt("%.1f s", t)};
}

Outcome criterion_3() {
  std::size_t checked = 0, bad = 0;
  auto tally = [&](bool ok) {
    ++checked;
    bad += !ok;
  };
  {
    auto phi_a = random_functional({0}, 501, false), phi_b = random_functional({1}, 502, false);
    Q unit(mpq_class(3, 4));
    auto om_a = random_functional({0}, 503, true, unit), om_b = random_functional({1}, 504, true, unit);
    ProductContext<Q> ctx;
    ctx.register_triple({F::delta(0), phi_a, om_a});
    ctx.register_triple({F::delta(1), phi_b, om_b});
    std::map<Family, F> phi{{0, phi_a}, {1, phi_b}}, om{{0, om_a}, {1, om_b}};
    for (const auto& w : oracle::all_words(kAlphabet, 0, 6)) {
      tally(cyclic_cfree_eval(ctx, w) == oracle::cyclic_boolean(phi, om, w, unit));
      tally(weighted_cfree_eval(ctx, w) == oracle::boolean_phi(phi, w));
    }
  }
  {
    auto phi_a = random_functional({0}, 601, false), phi_b = random_functional({1}, 602, true);
    Q unit(mpq_class(-1, 2));
    auto om_a = random_functional({0}, 603, true, unit), om_b = random_functional({1}, 604, true, unit);
    ProductContext<Q> ctx;
    ctx.register_triple({F::delta(0), phi_a, om_a});
    ctx.register_triple({phi_b, phi_b, om_b});
    for (const auto& w : oracle::all_words(kAlphabet, 1, 6)) {
      tally(cyclic_cfree_eval(ctx, w) == oracle::cyclic_monotone_omega(0, om_a, phi_b, om_b, w));
      tally(weighted_cfree_eval(ctx, w) == oracle::monotone_phi(0, phi_a, phi_b, w));
    }
  }
  {
    // Tracial phi = psi: (i) infinitesimal freeness == (ii) the cyclic
    // product, and (iii) cyclically alternating centered words vanish.
    auto phi_a = random_functional({0}, 701, true), phi_b = random_functional({1}, 702, true);
    Q unit(2);
    auto om_a = random_functional({0}, 703, true, unit), om_b = random_functional({1}, 704, true, unit);
    ProductContext<Q> ctx;
    ctx.register_triple({phi_a, phi_a, om_a});
    ctx.register_triple({phi_b, phi_b, om_b});
    oracle::FreeMomentOracle phi_free({phi_a, phi_b});
    oracle::InfinitesimalOracle inf({{0, phi_a}, {1, phi_b}}, {{0, om_a}, {1, om_b}},
                                    [&](const P& p) { return phi_free(p); }, unit);
    for (const auto& w : oracle::all_words(kAlphabet, 0, 6)) {
      tally(cyclic_cfree_eval(ctx, w) == inf(w));
      auto bl = ctx.blocks(w);
      if (bl.size() < 2 || bl.front().first == bl.back().first) continue;
      P c = P::unit();
      for (const auto& [comp, block] : bl) c *= P(block) - P(ctx.functional(comp, Role::phi)(block));
      tally(phi_free(c).is_zero());
      tally(evaluate_linear(c, [&](const Word& x) { return cyclic_cfree_eval(ctx, x); }).is_zero());
    }
  }
  return {bad == 0, std::to_string(checked - bad) + "/" + std::to_string(checked) +
                        " exact identities (cyclic-Boolean, cyclic-monotone, infinitesimal, equivalence)"};
}

Outcome criterion_4() {
  Q unit(mpq_class(1, 5));
  auto triple = [&](Family f, std::uint64_t s) {
    return FunctionalTriple<Q>{random_functional({f}, s, false), random_functional({f}, s + 1, false),
                               random_functional({f}, s + 2, true, unit)};
  };
  std::array<FunctionalTriple<Q>, 3> t{triple(0, 801), triple(1, 811), triple(2, 821)};
  auto composite = [](const ProductContext<Q>& inner) {
    auto shared = std::make_shared<const ProductContext<Q>>(inner);
    return FunctionalTriple<Q>{
        product_functional(shared, inner.uniform_config(false, Role::psi, Role::psi), true, false, "psi"),
        product_functional(shared, inner.uniform_config(false, Role::psi, Role::phi), true, false, "phi"),
        product_functional(shared, inner.uniform_config(true, Role::psi, Role::phi), false, true, "omega")};
  };
  ProductContext<Q> in12, in23, left, right;
  in12.register_triple(t[0]);
  in12.register_triple(t[1]);
  in23.register_triple(t[1]);
  in23.register_triple(t[2]);
  left.register_triple(composite(in12));
  left.register_triple(t[2]);
  right.register_triple(t[0]);
  right.register_triple(composite(in23));
  std::size_t checked = 0, bad = 0;
  for (const auto& w : oracle::all_words({X(0), Y(0), Z(0)}, 0, 6)) {
    ++checked;
    bad += !(cyclic_cfree_eval(left, w) == cyclic_cfree_eval(right, w));
  }
  return {bad == 0, std::to_string(checked - bad) + "/" + std::to_string(checked) + " words agree exactly"};
}

Outcome criterion_5() {
  double worst_unit = 0, worst_stab = 0;
  for (std::size_t n : {64, 256, 1024}) {
    std::vector<std::vector<ComplexVector>> fixed_sets = {{basis_vector(n, 0)}, {flat_vector(n)}};
    for (const auto& fixed : fixed_sets) {
      StabilizerHaarSampler s(n, fixed, derive_seed(5, {n}));
      ComplexMatrix u = s.sample();
      worst_unit = std::max(worst_unit, unitarity_residual(u));
      worst_stab = std::max(worst_stab, stabilizer_residual(u, fixed));
    }
    Rng rng(derive_seed(5, {n, 1}));
    worst_unit = std::max(worst_unit, unitarity_residual(sample_haar(n, rng)));
  }
  // E|U_ij|^2 = 1/N for Haar U at N = 8, every entry, 10^4 draws.
  const std::size_t n = 8, trials = 10000;
  Rng rng(55);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n), sum2 = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t t = 0; t < trials; ++t) {
    Eigen::MatrixXd a = sample_haar(n, rng).cwiseAbs2();
    sum += a;
    sum2 += a.cwiseAbs2();
  }
  double worst_z = 0;
  for (Eigen::Index i = 0; i < Eigen::Index(n); ++i)
    for (Eigen::Index j = 0; j < Eigen::Index(n); ++j) {
      double m = sum(i, j) / trials, var = (sum2(i, j) / trials - m * m) * trials / (trials - 1);
      worst_z = std::max(worst_z, std::abs(m - 1.0 / n) / std::sqrt(var / trials));
    }
  // 64 entries are tested; each must lie within 3 stderr.
  bool ok = worst_unit < 1e-10 && worst_stab < 1e-10 && worst_z < 3;
  return {ok, "unitarity " + fmt("%.2e", worst_unit) + ", stabilizer " + fmt("%.2e", worst_stab) +
                  ", max |E|U_ij|^2 - 1/8| = " + fmt("%.2f", worst_z) + " stderr"};
}

Outcome from_report(const Report& rep, const std::vector<std::string>& names) {
  Outcome o;
  for (const auto& name : names) {
    const auto* c = rep.criterion(name);
    bool ok = c && c->pass;
    o.pass = o.pass && ok;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += name + (c ? (ok ? " ok (" : " FAILED (") + c->detail + ")" : std::string(" missing"));
  }
  return o;
}

RunOptions options(std::size_t threads) {
  RunOptions o;
  o.threads = threads;
  o.log = [](const std::string& line) { std::fprintf(stderr, "%s\n", line.c_str()); };
  return o;
}

Outcome criterion_6(std::size_t threads) {
  return from_report(run_experiment(preset("cfree-basic"), options(threads)), {"cfree_match", "trace_error_slope"});
}

Outcome criterion_7(std::size_t threads) {
  return from_report(run_experiment(preset("infinitesimal-basic"), options(threads)),
                     {"expansion_fit", "unnormalized_trace"});
}

Outcome criterion_8(std::size_t threads) {
  return from_report(run_experiment(preset("fluctuation-basic"), options(threads)), {"covariance", "kurtosis"});
}

Outcome criterion_9(std::size_t threads) {
  auto a = from_report(run_experiment(preset("ordered-basic"), options(threads)), {"isotropy", "ordered_match"});
  auto b = from_report(run_experiment(preset("indented-basic"), options(threads)), {"isotropy", "indented_match"});
  return {a.pass && b.pass, "ordered: " + a.detail + " | indented: " + b.detail};
}

Outcome criterion_10(std::size_t threads) {
  std::size_t other = threads > 1 ? 1 : 3;
  std::vector<ExperimentConfig> cfgs{preset("smoke"), preset("ordered-basic"), preset("fluctuation-basic")};
  cfgs[1].dimensions = {16, 32};
  cfgs[1].trials = 60;
  cfgs[2].dimensions = {16};
  cfgs[2].trials = 1000;
  std::size_t same = 0;
  for (const auto& cfg : cfgs) {
    RunOptions quiet;
    quiet.threads = threads;
    std::string a = report_csv(run_experiment(cfg, quiet));
    std::string b = report_csv(run_experiment(cfg, quiet));
    quiet.threads = other;
    std::string c = report_csv(run_experiment(cfg, quiet));
    same += a == b && a == c;
  }
  return {same == cfgs.size(), std::to_string(same) + "/" + std::to_string(cfgs.size()) +
                                   " configs byte-identical across reruns and thread counts " +
                                   std::to_string(threads) + " vs " + std::to_string(other)};
}

}  // namespace

int main(int argc, char** argv) {
  std::optional<std::size_t> requested;
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--threads") && i + 1 < argc) {
      requested = std::stoul(argv[++i]);
    } else if (!std::strcmp(argv[i], "--only") && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
    } else {
      std::fprintf(stderr, "usage: acceptance [--threads N] [--only 1,2,...]\n");
      return 2;
    }
  }
  std::size_t threads = resolve_threads(requested);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"symbolic golden identity", criterion_1},
      {"free product vs Kreweras oracle", criterion_2},
      {"specialization ladder", criterion_3},
      {"associativity", criterion_4},
      {"sampler correctness", criterion_5},
      {"vortex c-freeness", [&] { return criterion_6(threads); }},
      {"infinitesimal expansion", [&] { return criterion_7(threads); }},
      {"fluctuations", [&] { return criterion_8(threads); }},
      {"ordered/indented models", [&] { return criterion_9(threads); }},
      {"determinism", [&] { return criterion_10(threads); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    int id = int(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return 0;
}
