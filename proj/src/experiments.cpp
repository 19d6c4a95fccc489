#include "vortex/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include "vortex/parse.hpp"

namespace vortex {

namespace {

/// Neumaier summation in the given order.
double ksum(const std::vector<double>& xs) {
  double s = 0, c = 0;
  for (double x : xs) {
    double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  }
  return s + c;
}

double mean_of(const std::vector<double>& xs) { return xs.empty() ? 0.0 : ksum(xs) / double(xs.size()); }

/// Unbiased sample variance.
double variance_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0;
  double m = mean_of(xs);
  std::vector<double> d(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) d[i] = (xs[i] - m) * (xs[i] - m);
  return ksum(d) / double(xs.size() - 1);
}

std::vector<double> real_parts(const std::vector<Complex>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].real();
  return out;
}

std::vector<double> imag_parts(const std::vector<Complex>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].imag();
  return out;
}

Complex complex_mean(const std::vector<Complex>& v) { return {mean_of(real_parts(v)), mean_of(imag_parts(v))}; }

std::vector<Complex> column(const std::vector<std::vector<Complex>>& results, std::size_t j) {
  std::vector<Complex> out(results.size());
  for (std::size_t t = 0; t < results.size(); ++t) out[t] = results[t][j];
  return out;
}

void log_line(const ExperimentConfig& cfg, const RunOptions& opt, const std::string& msg) {
  if (opt.log) opt.log("[" + kind_name(cfg.kind) + " seed=" + std::to_string(cfg.seed) + "] " + msg);
}

/// Deterministic data at one dimension.
struct Dim {
  const ExperimentConfig* cfg = nullptr;
  std::size_t n = 0;
  std::shared_ptr<EnsembleMap> base;
  std::map<std::string, ComplexVector> vectors;
  std::shared_ptr<WordEvaluator> eval;
  std::shared_ptr<std::mutex> mu;
};

Dim make_dim(const ExperimentConfig& cfg, std::size_t n) {
  Dim d;
  d.cfg = &cfg;
  d.n = n;
  d.base = std::make_shared<EnsembleMap>();
  for (const auto& [f, specs] : cfg.ensembles) d.base->emplace(f, standard_ensemble(f, specs, n));
  for (const auto& v : cfg.vectors) d.vectors[v.name] = v.build(n);
  d.eval = std::make_shared<WordEvaluator>(*d.base);
  d.mu = std::make_shared<std::mutex>();
  return d;
}

const ComplexVector& vec(const Dim& d, const std::string& name) {
  auto it = d.vectors.find(name);
  if (it == d.vectors.end()) throw ConfigError("no vector named '" + name + "'");
  return it->second;
}

/// N -> infinity normalized trace of family f, defined on powers of one generator.
MomentFunctional<Complex> limit_functional(const ExperimentConfig& cfg, Family f) {
  const auto& specs = cfg.ensembles.at(f);
  return MomentFunctional<Complex>(
      {f},
      [specs](const Word& w) {
        std::uint32_t idx = w[0].index();
        for (const auto& g : w)
          if (g.index() != idx) throw RuleViolation("no N -> infinity limit for the mixed word " + w.to_string());
        if (idx >= specs.size()) throw RuleViolation("no matrix for " + w.to_string());
        auto v = limit_trace(specs[idx], w.size());
        if (!v) throw RuleViolation("ensemble " + specs[idx].describe() + " has no known limit moments");
        return Complex(*v);
      },
      true, true, "limit");
}

bool limits_available(const ExperimentConfig& cfg) {
  for (const auto& [f, specs] : cfg.ensembles) {
    if (specs.size() != 1) return false;
    for (const auto& s : specs)
      if (!limit_trace(s, 1)) return false;
  }
  return true;
}

/// Finite-N state of the unrotated ensemble: "trace", "limit" or a vector name.
MomentFunctional<Complex> state(const Dim& d, Family f, const std::string& name) {
  if (name == "limit") return limit_functional(*d.cfg, f);
  StateMode mode = name == "trace" ? StateMode::normalized() : StateMode::vector_state(vec(d, name));
  auto eval = d.eval;
  auto mu = d.mu;
  auto base = d.base;
  return MomentFunctional<Complex>(
      {f},
      [eval, mu, base, mode](const Word& w) {
        std::lock_guard lock(*mu);
        return (*eval)(w, mode);
      },
      true, name == "trace", name + "@N=" + std::to_string(d.n));
}

Polynomial<Complex> expand(const Dim& d, const WordSpec& ws) {
  auto p = parse_as<Complex>(ws.text);
  if (!ws.centered()) return p;
  Word w = p.terms().begin()->first;
  auto out = Polynomial<Complex>::unit();
  for (const auto& b : alternating_blocks<Complex>(w)) {
    auto it = ws.center.find(b.family);
    out *= it == ws.center.end() ? b.content : center(state(d, b.family, it->second), b.content);
  }
  return out;
}

bool trace_centered(const WordSpec& ws) {
  for (const auto& [f, s] : ws.center)
    if (s == "trace") return true;
  return false;
}

template <class Fn>
Complex eval_poly(const Polynomial<Complex>& p, Fn&& fn) {
  return evaluate_linear(p, std::forward<Fn>(fn));
}

double tolerance(Complex pred) { return 1e-9 * (1 + std::abs(pred)); }

/// Differences within floating tolerance count as exact agreement.
double zscore(double diff, double se, double tol) {
  if (diff <= tol) return 0.0;
  return se > 0 ? diff / se : std::numeric_limits<double>::infinity();
}

ReportRow make_row(const MomentEstimate& e, std::string quantity, std::optional<Complex> pred, std::string criterion,
                   double threshold) {
  ReportRow r;
  r.word = e.word;
  r.dimension = e.dimension;
  r.mode = e.mode;
  r.quantity = std::move(quantity);
  r.trials = e.trials;
  r.estimate = e.mean;
  r.stderr = e.stderr();
  r.prediction = pred;
  r.criterion = std::move(criterion);
  if (pred) {
    double diff = std::abs(e.mean - *pred);
    double tol = tolerance(*pred);
    r.zscore = zscore(diff, r.stderr, tol);
    r.pass = diff <= threshold * r.stderr + tol;
  }
  return r;
}

void set_baseline(ReportRow& r, Complex b, std::string label) {
  r.baseline = b;
  r.baseline_label = std::move(label);
  r.baseline_z = zscore(std::abs(r.estimate - b), r.stderr, tolerance(b));
}

/// One criterion per distinct row criterion, in order of first appearance.
void collect_criteria(Report& rep) {
  std::vector<std::string> order;
  for (const auto& r : rep.rows)
    if (r.gated() && std::find(order.begin(), order.end(), r.criterion) == order.end()) order.push_back(r.criterion);
  for (const auto& name : order) {
    std::size_t total = 0, ok = 0;
    double worst = 0;
    std::string worst_row;
    for (const auto& r : rep.rows) {
      if (r.criterion != name) continue;
      ++total;
      ok += r.pass;
      if (r.prediction && r.zscore >= worst) {
        worst = r.zscore;
        worst_row = r.word + " " + r.mode + " " + r.quantity + " N=" + std::to_string(r.dimension);
      }
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", worst);
    std::string detail = std::to_string(ok) + "/" + std::to_string(total) + " rows pass";
    if (!worst_row.empty()) detail += "; max z " + std::string(buf) + " (" + worst_row + ")";
    rep.criteria.push_back(CriterionResult{name, ok == total, detail});
  }
}

struct Rotation {
  Family family;
  const StabilizerHaarSampler* proto;
};

/// Targets evaluated once per trial on the rotated ensembles.
struct Target {
  Polynomial<Complex> poly;
  StateMode mode;
};

std::vector<std::vector<Complex>> sample_targets(const Dim& d, const std::vector<Rotation>& rot,
                                                 const std::vector<Target>& targets, const RunOptions& opt) {
  const auto& cfg = *d.cfg;
  return run_trials(cfg.trials, opt.threads, [&](std::size_t t) {
    EnsembleMap m = *d.base;
    for (std::size_t r = 0; r < rot.size(); ++r) {
      StabilizerHaarSampler s = *rot[r].proto;
      s.reseed(derive_seed(cfg.seed, {d.n, t, r}));
      m[rot[r].family] = conjugate(s.sample(), d.base->at(rot[r].family));
    }
    WordEvaluator ev(m);
    std::vector<Complex> out;
    out.reserve(targets.size());
    for (const auto& tg : targets) out.push_back(ev(tg.poly, tg.mode));
    return out;
  });
}

void require_kind(const ExperimentConfig& cfg, ExperimentKind k) {
  if (cfg.kind != k) throw ConfigError("config kind is " + kind_name(cfg.kind) + ", expected " + kind_name(k));
  cfg.validate();
}

double sample_skewness_se(double n) { return std::sqrt(6 * n * (n - 1) / ((n - 2) * (n + 1) * (n + 3))); }
double sample_kurtosis_se(double n) {
  return std::sqrt(24 * n * (n - 1) * (n - 1) / ((n - 3) * (n - 2) * (n + 3) * (n + 5)));
}

}  // namespace

double MomentEstimate::stderr() const { return std::hypot(stderr_re, stderr_im); }

MomentEstimate summarize(std::string word, std::size_t n, std::string mode, const std::vector<Complex>& values) {
  if (values.size() < 2) throw DomainError("an estimate needs at least 2 trials");
  MomentEstimate e;
  e.word = std::move(word);
  e.dimension = n;
  e.mode = std::move(mode);
  e.trials = values.size();
  auto re = real_parts(values), im = imag_parts(values);
  e.mean = {mean_of(re), mean_of(im)};
  double t = double(values.size());
  e.stderr_re = std::sqrt(variance_of(re) / t);
  e.stderr_im = std::sqrt(variance_of(im) / t);
  return e;
}

MomentEstimate estimate(const Polynomial<Complex>& p, const StateMode& mode, StabilizerHaarSampler& sampler,
                        const EnsembleMap& ensembles, Family rotated, std::size_t trials) {
  if (trials < 2) throw DomainError("an estimate needs at least 2 trials");
  auto it = ensembles.find(rotated);
  if (it == ensembles.end()) throw RuleViolation("no ensemble for the rotated family");
  std::vector<Complex> values;
  values.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    EnsembleMap m = ensembles;
    m[rotated] = conjugate(sampler.sample(), it->second);
    values.push_back(evaluate_word_state(m, p, mode));
  }
  return summarize(p.to_string(), sampler.dimension(), mode.label(), values);
}

ExpansionFit fit_expansion(const std::string& word, const std::vector<MomentEstimate>& data) {
  if (data.size() < 3) throw DomainError("expansion fit needs at least 3 dimensions");
  std::size_t m = data.size();
  Eigen::MatrixXd x(m, 2);
  Eigen::VectorXd yr(m), yi(m), w(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (data[i].dimension == 0) throw DomainError("expansion fit needs positive dimensions");
    double se = std::max(data[i].stderr(), 1e-12 * (1 + std::abs(data[i].mean)));
    w(Eigen::Index(i)) = 1 / se;
    x(Eigen::Index(i), 0) = w(Eigen::Index(i));
    x(Eigen::Index(i), 1) = w(Eigen::Index(i)) / double(data[i].dimension);
    yr(Eigen::Index(i)) = w(Eigen::Index(i)) * data[i].mean.real();
    yi(Eigen::Index(i)) = w(Eigen::Index(i)) * data[i].mean.imag();
  }
  Eigen::Matrix2d normal = x.transpose() * x;
  Eigen::FullPivLU<Eigen::Matrix2d> lu(normal);
  if (!lu.isInvertible()) throw DomainError("expansion fit design is degenerate");
  Eigen::Matrix2d cov = lu.inverse();
  Eigen::Vector2d br = cov * (x.transpose() * yr), bi = cov * (x.transpose() * yi);
  ExpansionFit fit;
  fit.word = word;
  fit.data = data;
  fit.c0 = {br(0), bi(0)};
  fit.c1 = {br(1), bi(1)};
  fit.dof = m - 2;
  double rss = 0;
  for (std::size_t i = 0; i < m; ++i) {
    Complex model = fit.c0 + fit.c1 / double(data[i].dimension);
    double r = std::abs(data[i].mean - model);
    rss += r * r;
    fit.chi2 += r * r * w(Eigen::Index(i)) * w(Eigen::Index(i));
  }
  fit.residual_norm = std::sqrt(rss);
  double inflate = std::max(1.0, fit.chi2 / double(fit.dof));
  fit.var_c0 = cov(0, 0) * inflate;
  fit.var_c1 = cov(1, 1) * inflate;
  fit.cov_c0c1 = cov(0, 1) * inflate;
  return fit;
}

std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DomainError("slope needs equally many x and y values");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0 && y[i] > 0 && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  if (lx.size() < 2) return std::nullopt;
  double mx = mean_of(lx), my = mean_of(ly), sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  return sxy / sxx;
}

bool Report::passed() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.pass; });
}

const CriterionResult* Report::criterion(const std::string& name) const {
  for (const auto& c : criteria)
    if (c.name == name) return &c;
  return nullptr;
}

std::size_t resolve_threads(std::optional<std::size_t> requested) {
  if (requested && *requested > 0) return *requested;
  if (const char* env = std::getenv("VORTEX_THREADS")) {
    char* end = nullptr;
    unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<std::vector<Complex>> run_trials(std::size_t trials, std::size_t threads,
                                             const std::function<std::vector<Complex>(std::size_t)>& fn) {
  std::vector<std::vector<Complex>> out(trials);
  std::size_t workers = std::max<std::size_t>(1, std::min(threads, trials));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < trials;) {
      try {
        out[t] = fn(t);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next = trials;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

Report run_cfree_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
  require_kind(cfg, ExperimentKind::cfree);
  Report rep;
  rep.config = cfg;
  bool limits = limits_available(cfg);
  std::vector<double> dims;
  std::vector<std::vector<double>> word_errors(cfg.words.size());
  std::vector<bool> word_has_limit(cfg.words.size(), limits);
  std::vector<double> total_error;

  for (std::size_t n : cfg.dimensions) {
    Dim d = make_dim(cfg, n);
    const auto& v = vec(d, "v");
    StabilizerHaarSampler proto(n, {v}, cfg.seed);

    ProductContext<Complex> ctx, free_v, lim;
    for (Family f : {Family{0}, Family{1}}) {
      ctx.register_pair(FunctionalPair<Complex>{state(d, f, "v"), state(d, f, "trace")});
      free_v.register_free(state(d, f, "v"));
      if (limits) lim.register_free(limit_functional(cfg, f));
    }

    std::vector<Polynomial<Complex>> polys;
    std::vector<Target> targets;
    for (const auto& ws : cfg.words) {
      polys.push_back(expand(d, ws));
      targets.push_back({polys.back(), StateMode::normalized()});
      targets.push_back({polys.back(), StateMode::vector_state(v)});
    }
    log_line(cfg, opt, "N=" + std::to_string(n) + ": " + std::to_string(cfg.trials) + " trials");
    auto results = sample_targets(d, {{1, &proto}}, targets, opt);

    bool last = n == cfg.dimensions.back();
    std::string crit = last ? "cfree_match" : "";
    double total = 0;
    for (std::size_t i = 0; i < cfg.words.size(); ++i) {
      const auto& p = polys[i];
      std::string label = cfg.words[i].label();
      auto tr = summarize(label, n, "trace", column(results, 2 * i));
      auto vs = summarize(label, n, "vector", column(results, 2 * i + 1));
      Complex tr_pred = eval_poly(p, [&](const Word& w) { return free_product_eval(ctx, w); });
      Complex vs_pred = eval_poly(p, [&](const Word& w) { return weighted_cfree_eval(ctx, w); });
      auto tr_row = make_row(tr, "mean", tr_pred, crit, cfg.threshold);
      auto vs_row = make_row(vs, "mean", vs_pred, crit, cfg.threshold);
      if (word_has_limit[i]) {
        try {
          // The limit prediction uses the limit-centered form of the word.
          Complex lp = eval_poly(p, [&](const Word& w) { return free_product_eval(lim, w); });
          set_baseline(tr_row, lp, "free-limit");
          double err = std::abs(tr.mean - lp);
          word_errors[i].push_back(err);
          total += err;
        } catch (const RuleViolation&) {
          word_has_limit[i] = false;
        }
      }
      set_baseline(vs_row, eval_poly(p, [&](const Word& w) { return free_product_eval(free_v, w); }), "free-vector");
      rep.rows.push_back(std::move(tr_row));
      rep.rows.push_back(std::move(vs_row));
    }
    dims.push_back(double(n));
    total_error.push_back(total);
  }

  for (std::size_t i = 0; i < cfg.words.size(); ++i) {
    if (!word_has_limit[i] || word_errors[i].size() != dims.size()) continue;
    auto s = loglog_slope(dims, word_errors[i]);
    if (!s) continue;
    ReportRow r;
    r.word = cfg.words[i].label();
    r.mode = "trace";
    r.quantity = "error_slope";
    r.trials = cfg.trials;
    r.estimate = *s;
    rep.rows.push_back(r);
  }
  collect_criteria(rep);
  if (limits && dims.size() >= 2) {
    auto s = loglog_slope(dims, total_error);
    ReportRow r;
    r.word = "sum over trace words";
    r.mode = "trace";
    r.quantity = "error_slope";
    r.trials = cfg.trials;
    r.estimate = s.value_or(std::nan(""));
    r.criterion = "trace_error_slope";
    r.pass = s && *s >= cfg.slope_min && *s <= cfg.slope_max;
    rep.rows.push_back(r);
    char buf[128];
    std::snprintf(buf, sizeof buf, "slope %.4g, accepted range [%.3g, %.3g]", r.estimate.real(), cfg.slope_min,
                  cfg.slope_max);
    rep.criteria.push_back(CriterionResult{"trace_error_slope", r.pass, buf});
  } else {
    rep.notes.push_back("trace error slope skipped: limit moments unavailable or a single dimension");
  }
  return rep;
}

namespace {

/// Product context of limit traces, vector states at the largest N, and
/// omega = N (psi_N - psi_infinity).
struct LimitModel {
  ProductContext<Complex> free_ctx;
  ProductContext<Complex> triple_ctx;
};

LimitModel limit_model(const ExperimentConfig& cfg, const Dim& d, Report& rep) {
  LimitModel lm;
  for (Family f : {Family{0}, Family{1}}) {
    auto psi_inf = limit_functional(cfg, f);
    auto psi_n = state(d, f, "trace");
    double nd = double(d.n);
    MomentFunctional<Complex> omega(
        {f}, [psi_inf, psi_n, nd](const Word& w) { return w.empty() ? Complex(0) : nd * (psi_n(w) - psi_inf(w)); },
        false, true, "omega");
    lm.free_ctx.register_free(psi_inf);
    lm.triple_ctx.register_triple(FunctionalTriple<Complex>{psi_inf, state(d, f, "v"), omega});
  }
  (void)rep;
  return lm;
}

/// Largest spread of N (psi_N - psi_infinity)(X^k) across the grid.
void omega_stability_note(const ExperimentConfig& cfg, Report& rep, std::size_t max_power) {
  double spread = 0;
  for (Family f : {Family{0}, Family{1}}) {
    auto lim = limit_functional(cfg, f);
    for (std::size_t k = 1; k <= max_power; ++k) {
      Word w;
      for (std::size_t j = 0; j < k; ++j) w *= Word{Generator(f, 0)};
      double lo = INFINITY, hi = -INFINITY;
      for (std::size_t n : cfg.dimensions) {
        Dim d = make_dim(cfg, n);
        double om = (double(n) * (state(d, f, "trace")(w) - lim(w))).real();
        lo = std::min(lo, om);
        hi = std::max(hi, om);
      }
      spread = std::max(spread, hi - lo);
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "omega = N(psi_N - psi_limit) varies by at most %.3g across the grid (powers <= %zu)",
                spread, max_power);
  rep.notes.push_back(buf);
}

std::size_t max_degree(const ExperimentConfig& cfg) {
  std::size_t m = 1;
  for (const auto& ws : cfg.words) m = std::max(m, parse_as<Complex>(ws.text).degree());
  return m;
}

}  // namespace

Report run_infinitesimal_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
  require_kind(cfg, ExperimentKind::infinitesimal);
  if (!limits_available(cfg)) throw ConfigError("infinitesimal experiments need ensembles with known limits");
  if (cfg.dimensions.size() < 3) throw ConfigError("the expansion fit needs at least 3 dimensions");
  Report rep;
  rep.config = cfg;
  Dim top = make_dim(cfg, cfg.dimensions.back());
  LimitModel lm = limit_model(cfg, top, rep);
  omega_stability_note(cfg, rep, max_degree(cfg));

  std::vector<std::vector<MomentEstimate>> series(cfg.words.size());
  std::vector<Polynomial<Complex>> fit_polys(cfg.words.size());
  for (std::size_t n : cfg.dimensions) {
    Dim d = make_dim(cfg, n);
    const auto& v = vec(d, "v");
    StabilizerHaarSampler proto(n, {v}, cfg.seed);
    std::vector<Target> targets;
    std::vector<Complex> tr_pred(cfg.words.size());
    for (std::size_t i = 0; i < cfg.words.size(); ++i) {
      const auto& ws = cfg.words[i];
      auto p = expand(d, ws);
      if (trace_centered(ws)) {
        Word w = parse_word(ws.text);
        auto blocks = alternating_blocks<Complex>(w);
        if (blocks.size() < 2 || blocks.front().family == blocks.back().family)
          throw ConfigError("trace-centered word '" + ws.text + "' must be cyclically alternating");
        Complex prod(1);
        for (const auto& b : blocks) {
          auto it = ws.center.find(b.family);
          auto piece = it == ws.center.end() ? b.content : center(state(d, b.family, it->second), b.content);
          prod *= state(d, b.family, "v").evaluate(piece);
        }
        tr_pred[i] = prod;
        targets.push_back({p, StateMode::unnormalized()});
      } else {
        fit_polys[i] = p;
        targets.push_back({p, StateMode::normalized()});
      }
    }
    log_line(cfg, opt, "N=" + std::to_string(n) + ": " + std::to_string(cfg.trials) + " trials");
    auto results = sample_targets(d, {{1, &proto}}, targets, opt);
    bool last = n == cfg.dimensions.back();
    for (std::size_t i = 0; i < cfg.words.size(); ++i) {
      std::string label = cfg.words[i].label();
      if (trace_centered(cfg.words[i])) {
        auto e = summarize(label, n, "Trace", column(results, i));
        rep.rows.push_back(make_row(e, "mean", tr_pred[i], last ? "unnormalized_trace" : "", cfg.threshold));
      } else {
        series[i].push_back(summarize(label, n, "trace", column(results, i)));
      }
    }
  }

  for (std::size_t i = 0; i < cfg.words.size(); ++i) {
    if (trace_centered(cfg.words[i])) continue;
    const auto& p = fit_polys[i];
    Complex c0 = eval_poly(p, [&](const Word& w) { return free_product_eval(lm.free_ctx, w); });
    Complex c1 = eval_poly(p, [&](const Word& w) { return cyclic_cfree_eval(lm.triple_ctx, w); });
    for (const auto& e : series[i]) {
      auto r = make_row(e, "mean", c0 + c1 / double(e.dimension), "", cfg.threshold);
      rep.rows.push_back(r);
    }
    ExpansionFit fit;
    try {
      fit = fit_expansion(cfg.words[i].label(), series[i]);
    } catch (const DomainError& err) {
      rep.notes.push_back("fit of " + cfg.words[i].label() + " failed: " + err.what());
      ReportRow r;
      r.word = cfg.words[i].label();
      r.mode = "trace";
      r.quantity = "c1";
      r.criterion = "expansion_fit";
      r.pass = false;
      rep.rows.push_back(r);
      continue;
    }
    for (auto [name, est, var, pred] : {std::tuple{"c0", fit.c0, fit.var_c0, c0}, std::tuple{"c1", fit.c1, fit.var_c1, c1}}) {
      MomentEstimate e;
      e.word = fit.word;
      e.mode = "trace";
      e.mean = est;
      e.stderr_re = std::sqrt(var);
      e.trials = cfg.trials;
      auto r = make_row(e, name, pred, "expansion_fit", cfg.threshold);
      rep.rows.push_back(r);
    }
    rep.fits.push_back(std::move(fit));
  }
  collect_criteria(rep);
  return rep;
}

Report run_fluctuation_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
  require_kind(cfg, ExperimentKind::fluctuation);
  if (!limits_available(cfg)) throw ConfigError("fluctuation experiments need ensembles with known limits");
  Report rep;
  rep.config = cfg;
  Dim top = make_dim(cfg, cfg.dimensions.back());
  LimitModel lm = limit_model(cfg, top, rep);
  const std::size_t k = cfg.words.size();

  for (std::size_t n : cfg.dimensions) {
    Dim d = make_dim(cfg, n);
    const auto& v = vec(d, "v");
    StabilizerHaarSampler proto(n, {v}, cfg.seed);
    std::vector<Polynomial<Complex>> polys;
    std::vector<Complex> c0(k), c1(k);
    for (std::size_t i = 0; i < k; ++i) {
      polys.push_back(expand(d, cfg.words[i]));
      c0[i] = eval_poly(polys[i], [&](const Word& w) { return free_product_eval(lm.free_ctx, w); });
      c1[i] = eval_poly(polys[i], [&](const Word& w) { return cyclic_cfree_eval(lm.triple_ctx, w); });
    }
    log_line(cfg, opt, "N=" + std::to_string(n) + ": " + std::to_string(cfg.trials) + " trials");
    const double nd = double(n);
    auto results = run_trials(cfg.trials, opt.threads, [&](std::size_t t) {
      StabilizerHaarSampler s = proto;
      s.reseed(derive_seed(cfg.seed, {n, t, 0}));
      ComplexMatrix u = s.sample();
      EnsembleMap m = *d.base, mp = *d.base;
      m[1] = conjugate(u, d.base->at(1));
      mp[1] = conjugate(compress_perp(u, v), d.base->at(1));
      WordEvaluator ev(m), evp(mp);
      std::vector<Complex> out;
      for (std::size_t i = 0; i < k; ++i) {
        out.push_back(nd * (ev(polys[i], StateMode::normalized()) - c0[i]));
        out.push_back(evp(polys[i], StateMode::unnormalized()) - nd * c0[i]);
      }
      return out;
    });

    std::vector<std::vector<Complex>> x(k), xp(k);
    for (std::size_t i = 0; i < k; ++i) {
      x[i] = column(results, 2 * i);
      xp[i] = column(results, 2 * i + 1);
    }
    const double tn = double(cfg.trials);
    for (std::size_t i = 0; i < k; ++i) {
      std::string label = cfg.words[i].label();
      rep.rows.push_back(make_row(summarize(label, n, "trace", x[i]), "fluctuation_mean", c1[i], "", cfg.threshold));
      rep.rows.push_back(make_row(summarize(label, n, "trace", xp[i]), "perp_mean", std::nullopt, "", cfg.threshold));
      std::vector<Complex> axis(x[i].size());
      for (std::size_t t = 0; t < axis.size(); ++t) axis[t] = x[i][t] - xp[i][t];
      rep.rows.push_back(make_row(summarize(label, n, "trace", axis), "axis_mean", std::nullopt, "", cfg.threshold));

      auto re = real_parts(x[i]);
      double m2 = variance_of(re) * (tn - 1) / tn;
      if (m2 <= 1e-20 * (1 + std::abs(c0[i]) * nd)) {
        rep.notes.push_back(label + ": deterministic at N=" + std::to_string(n) + ", no cumulant rows");
        continue;
      }
      double mu = mean_of(re);
      std::vector<double> d3(re.size()), d4(re.size());
      for (std::size_t t = 0; t < re.size(); ++t) {
        double z = re[t] - mu;
        d3[t] = z * z * z;
        d4[t] = z * z * z * z;
      }
      double g1 = mean_of(d3) / std::pow(m2, 1.5), g2 = mean_of(d4) / (m2 * m2) - 3;
      double crit_n = tn;
      bool gate = n == cfg.dimensions.back();
      for (auto [q, g, se, c] : {std::tuple{"skewness", g1, sample_skewness_se(crit_n), "skewness"},
                                 std::tuple{"excess_kurtosis", g2, sample_kurtosis_se(crit_n), "kurtosis"}}) {
        MomentEstimate e;
        e.word = label;
        e.dimension = n;
        e.mode = "trace";
        e.mean = g;
        e.stderr_re = se;
        e.trials = cfg.trials;
        rep.rows.push_back(make_row(e, q, Complex(0), gate ? c : "", cfg.threshold));
      }
    }

    for (const auto& [i, j] : cfg.pairs) {
      auto cov_of = [&](const std::vector<Complex>& a, const std::vector<Complex>& b) {
        Complex ma = complex_mean(a), mb = complex_mean(b);
        std::vector<Complex> prod(a.size());
        for (std::size_t t = 0; t < a.size(); ++t) prod[t] = (a[t] - ma) * (b[t] - mb);
        auto e = summarize("", n, "trace", prod);
        e.mean *= tn / (tn - 1);
        return e;
      };
      std::string label = i == j ? cfg.words[i].label() : cfg.words[i].label() + " | " + cfg.words[j].label();
      Complex pred = second_order_covariance(lm.free_ctx, polys[i], polys[j]);
      auto e = cov_of(x[i], x[j]);
      e.word = label;
      bool gate = n == cfg.dimensions.back();
      ReportRow r = make_row(e, i == j ? "variance" : "covariance", pred, "", cfg.threshold);
      if (gate) {
        if (i == j) {
          r.criterion = "covariance";
          double rel = std::abs(e.mean - pred);
          r.pass = std::abs(pred) > 0 ? rel <= cfg.variance_tolerance * std::abs(pred) : r.pass;
        } else {
          r.criterion = "cross_covariance";
        }
      }
      rep.rows.push_back(r);
      auto ep = cov_of(xp[i], xp[j]);
      ep.word = label;
      rep.rows.push_back(make_row(ep, i == j ? "perp_variance" : "perp_covariance", std::nullopt, "", cfg.threshold));
    }
  }
  collect_criteria(rep);
  return rep;
}

namespace {

/// Isotropy rows for one family: the given rotated-ensemble vector states of
/// powers of its generator 0, each against a finite-N state of the
/// unrotated ensemble.
struct IsotropyCheck {
  Family family;
  std::string rotated_state;
  std::string reference;
};

std::string power_word(Family f, std::size_t k) {
  std::string out;
  for (std::size_t j = 0; j < k; ++j) out += (j ? "*" : "") + std::string(f == 0 ? "X0" : "Y0");
  return out;
}

/// Runs the two-rotation experiments (ordered, indented). `states` lists the
/// vector names estimated; `prediction(i, state_index)` gives the symbolic
/// value for word i.
Report run_two_rotation(const ExperimentConfig& cfg, const RunOptions& opt,
                        const std::vector<std::vector<std::string>>& fixed, const std::vector<std::string>& states,
                        const std::vector<IsotropyCheck>& iso, const std::string& match_criterion,
                        const std::function<std::vector<Complex>(const Dim&, const Word&)>& product) {
  Report rep;
  rep.config = cfg;
  for (std::size_t n : cfg.dimensions) {
    Dim d = make_dim(cfg, n);
    std::vector<StabilizerHaarSampler> protos;
    for (const auto& names : fixed) {
      std::vector<ComplexVector> vs;
      for (const auto& nm : names) vs.push_back(vec(d, nm));
      protos.emplace_back(n, vs, cfg.seed);
    }
    std::vector<Polynomial<Complex>> polys;
    std::vector<Target> targets;
    for (const auto& ws : cfg.words) {
      polys.push_back(expand(d, ws));
      for (const auto& s : states) targets.push_back({polys.back(), StateMode::vector_state(vec(d, s))});
    }
    std::size_t iso_start = targets.size();
    for (const auto& c : iso)
      for (std::size_t p = 1; p <= cfg.isotropy_powers; ++p)
        targets.push_back({parse_as<Complex>(power_word(c.family, p)), StateMode::vector_state(vec(d, c.rotated_state))});

    log_line(cfg, opt, "N=" + std::to_string(n) + ": " + std::to_string(cfg.trials) + " trials");
    auto results = sample_targets(d, {{0, &protos[0]}, {1, &protos[1]}}, targets, opt);
    bool last = n == cfg.dimensions.back();
    std::size_t col = 0;
    for (std::size_t i = 0; i < cfg.words.size(); ++i) {
      std::vector<Complex> pred(states.size(), Complex(0));
      for (const auto& [w, c] : polys[i].terms()) {
        auto vals = product(d, w);
        for (std::size_t s = 0; s < states.size(); ++s) pred[s] += c * vals[s];
      }
      for (std::size_t s = 0; s < states.size(); ++s) {
        auto e = summarize(cfg.words[i].label(), n, "vector:" + states[s], column(results, col++));
        rep.rows.push_back(make_row(e, "mean", pred[s], last ? match_criterion : "", cfg.threshold));
      }
    }
    col = iso_start;
    for (const auto& c : iso)
      for (std::size_t p = 1; p <= cfg.isotropy_powers; ++p) {
        std::string w = power_word(c.family, p);
        Complex ref = state(d, c.family, c.reference)(parse_word(w));
        auto e = summarize(w, n, "vector:" + c.rotated_state, column(results, col++));
        auto r = make_row(e, "isotropy", ref, last ? "isotropy" : "", cfg.threshold);
        r.baseline_label = "reference:" + c.reference;
        rep.rows.push_back(r);
      }
  }
  collect_criteria(rep);
  return rep;
}

}  // namespace

Report run_ordered_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
  require_kind(cfg, ExperimentKind::ordered);
  std::vector<IsotropyCheck> iso = {
      {0, "v", "trace"}, {0, "u", "u"}, {1, "u", "trace"}, {1, "v", "v"}};
  return run_two_rotation(cfg, opt, {{"u"}, {"v"}}, {"u", "v"}, iso, "ordered_match",
                          [](const Dim& d, const Word& w) {
                            ProductContext<Complex> ctx;
                            ctx.register_pair(FunctionalPair<Complex>{state(d, 0, "u"), state(d, 0, "trace")});
                            ctx.register_pair(FunctionalPair<Complex>{state(d, 1, "trace"), state(d, 1, "v")});
                            auto [pu, pv] = ordered_product_eval(ctx, w);
                            return std::vector<Complex>{pu, pv};
                          });
}

Report run_indented_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
  require_kind(cfg, ExperimentKind::indented);
  std::vector<IsotropyCheck> iso = {{0, "w", "trace"}, {0, "u", "u"}, {0, "v", "v"},
                                    {1, "v", "trace"}, {1, "u", "u"}, {1, "w", "w"}};
  return run_two_rotation(cfg, opt, {{"u", "v"}, {"u", "w"}}, {"u", "v", "w"}, iso, "indented_match",
                          [](const Dim& d, const Word& w) {
                            ProductContext<Complex> ctx;
                            ctx.register_indented(
                                IndentedTriple<Complex>{state(d, 0, "u"), state(d, 0, "v"), state(d, 0, "trace")});
                            ctx.register_indented(
                                IndentedTriple<Complex>{state(d, 1, "u"), state(d, 1, "trace"), state(d, 1, "w")});
                            auto r = indented_product_eval(ctx, w);
                            return std::vector<Complex>{r[0], r[1], r[2]};
                          });
}

Report concentration_check(const ExperimentConfig& cfg, const RunOptions& opt) {
  require_kind(cfg, ExperimentKind::concentration);
  Report rep;
  rep.config = cfg;
  const std::size_t k = cfg.words.size();
  std::vector<double> dims;
  std::vector<std::vector<double>> sd(2 * k);
  std::vector<bool> random(2 * k, false);
  for (std::size_t n : cfg.dimensions) {
    Dim d = make_dim(cfg, n);
    const auto& v = vec(d, "v");
    StabilizerHaarSampler proto(n, {v}, cfg.seed);
    std::vector<Target> targets;
    for (const auto& ws : cfg.words) {
      auto p = expand(d, ws);
      targets.push_back({p, StateMode::normalized()});
      targets.push_back({p, StateMode::vector_state(v)});
    }
    log_line(cfg, opt, "N=" + std::to_string(n) + ": " + std::to_string(cfg.trials) + " trials");
    auto results = sample_targets(d, {{1, &proto}}, targets, opt);
    for (std::size_t j = 0; j < 2 * k; ++j) {
      auto vals = column(results, j);
      Complex m = complex_mean(vals);
      double s = std::sqrt(variance_of(real_parts(vals)) + variance_of(imag_parts(vals)));
      // Rounding noise of a deterministic quantity is not a fluctuation.
      if (s > 1e-12 * (1 + std::abs(m))) random[j] = true;
      sd[j].push_back(s);
      ReportRow r;
      r.word = cfg.words[j / 2].label();
      r.dimension = n;
      r.mode = j % 2 ? "vector" : "trace";
      r.quantity = "std";
      r.trials = cfg.trials;
      r.estimate = s;
      r.stderr = s / std::sqrt(2.0 * double(cfg.trials - 1));
      rep.rows.push_back(r);
    }
    dims.push_back(double(n));
  }
  for (std::size_t j = 0; j < 2 * k; ++j) {
    ReportRow r;
    r.word = cfg.words[j / 2].label();
    r.mode = j % 2 ? "vector" : "trace";
    r.quantity = "std_slope";
    r.trials = cfg.trials;
    if (!random[j]) {
      rep.notes.push_back(r.word + " (" + r.mode + "): deterministic, std 0 at every N");
      continue;
    }
    auto s = loglog_slope(dims, sd[j]);
    r.estimate = s.value_or(std::nan(""));
    if (j % 2) {
      r.criterion = "vector_std_slope";
      r.pass = s && *s <= cfg.vector_slope_max;
    } else {
      r.criterion = "trace_std_slope";
      r.pass = s && *s >= cfg.slope_min && *s <= cfg.slope_max;
    }
    rep.rows.push_back(r);
  }
  collect_criteria(rep);
  return rep;
}

Report run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
  switch (cfg.kind) {
    case ExperimentKind::cfree: return run_cfree_experiment(cfg, opt);
    case ExperimentKind::infinitesimal: return run_infinitesimal_experiment(cfg, opt);
    case ExperimentKind::fluctuation: return run_fluctuation_experiment(cfg, opt);
    case ExperimentKind::ordered: return run_ordered_experiment(cfg, opt);
    case ExperimentKind::indented: return run_indented_experiment(cfg, opt);
    case ExperimentKind::concentration: return concentration_check(cfg, opt);
  }
  throw ConfigError("unknown experiment kind");
}

}  // namespace vortex
