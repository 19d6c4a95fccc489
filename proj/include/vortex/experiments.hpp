#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vortex/matrix_models.hpp"
#include "vortex/products.hpp"

namespace vortex {

/// Invalid experiment configuration (maps to exit code 2 in the CLI).
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class ExperimentKind { cfree, infinitesimal, fluctuation, ordered, indented, concentration };

std::string kind_name(ExperimentKind k);
ExperimentKind kind_from_name(const std::string& name);

/// A named unit vector: e_i, the flat vector, or explicit coordinates
/// (normalized on use; the explicit length must equal N).
struct VectorSpec {
  enum class Kind { basis, flat, explicit_values };
  std::string name;
  Kind kind = Kind::basis;
  std::size_t index = 0;
  std::vector<Complex> values;

  ComplexVector build(std::size_t n) const;
};

/// An experiment word. `center` names, per family, the state used to center
/// every alternating block of the monomial `text`: "trace" (finite-N
/// normalized trace), "limit" (N -> infinity trace) or a vector name.
/// An empty map leaves `text` (any polynomial) as is.
struct WordSpec {
  std::string text;
  std::map<Family, std::string> center;

  std::string label() const;
  bool centered() const { return !center.empty(); }
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::cfree;
  std::string name;
  std::vector<std::size_t> dimensions;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double threshold = 3.0;
  std::map<Family, std::vector<EnsembleSpec>> ensembles;
  std::vector<VectorSpec> vectors;
  std::vector<WordSpec> words;
  /// Fluctuation experiment: (P, Q) index pairs into `words`.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  /// Largest power used by isotropy rows.
  std::size_t isotropy_powers = 3;
  double variance_tolerance = 0.15;
  double slope_min = -1.6;
  double slope_max = -0.6;
  double vector_slope_max = -0.4;
  std::string csv_path;
  std::string json_path;

  /// Throws ConfigError.
  void validate() const;
  const VectorSpec& vector(const std::string& name) const;
  std::size_t min_trials() const;
};

ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& cfg);

std::vector<std::string> preset_names();
/// Throws ConfigError for unknown names.
ExperimentConfig preset(const std::string& name);

/// Monte Carlo summary of one quantity.
struct MomentEstimate {
  std::string word;
  std::size_t dimension = 0;
  std::string mode;
  Complex mean;
  double stderr_re = 0;
  double stderr_im = 0;
  std::size_t trials = 0;

  double stderr() const;
};

/// Mean and stderr = sample-std / sqrt(trials), real and imaginary parts
/// separately. Summation is compensated and runs in trial order.
MomentEstimate summarize(std::string word, std::size_t n, std::string mode, const std::vector<Complex>& values);

/// Draws `trials` rotations of family `rotated` by `sampler` and estimates
/// the state `mode` of `p`.
MomentEstimate estimate(const Polynomial<Complex>& p, const StateMode& mode, StabilizerHaarSampler& sampler,
                        const EnsembleMap& ensembles, Family rotated, std::size_t trials);

/// Weighted least squares fit mean(N) = c0 + c1/N with weights 1/stderr^2.
struct ExpansionFit {
  std::string word;
  Complex c0, c1;
  /// Covariance of (c0, c1) from the Monte Carlo errors, inflated by the
  /// reduced chi-square when that exceeds 1.
  double var_c0 = 0, var_c1 = 0, cov_c0c1 = 0;
  double chi2 = 0;
  std::size_t dof = 0;
  double residual_norm = 0;
  std::vector<MomentEstimate> data;
};

/// Throws DomainError with fewer than 3 dimensions or a degenerate design.
ExpansionFit fit_expansion(const std::string& word, const std::vector<MomentEstimate>& data);

/// Least squares slope of log y against log x over the points with y > 0.
std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// One line of a report. `prediction` is absent for purely informative rows.
struct ReportRow {
  std::string word;
  std::size_t dimension = 0;
  std::string mode;
  std::string quantity;
  std::size_t trials = 0;
  Complex estimate;
  double stderr = 0;
  std::optional<Complex> prediction;
  double zscore = 0;
  /// Acceptance criterion this row feeds; empty for informative rows.
  std::string criterion;
  bool pass = true;
  /// Competing prediction (e.g. the free product for a c-free row), to show
  /// the test can tell the two apart.
  std::optional<Complex> baseline;
  std::string baseline_label;
  double baseline_z = 0;

  bool gated() const { return !criterion.empty(); }
};

struct CriterionResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct Report {
  ExperimentConfig config;
  std::vector<ReportRow> rows;
  std::vector<CriterionResult> criteria;
  std::vector<ExpansionFit> fits;
  std::vector<std::string> notes;

  bool passed() const;
  const CriterionResult* criterion(const std::string& name) const;
};

std::string report_csv(const Report& r);
std::string report_json(const Report& r);

struct RunOptions {
  std::size_t threads = 1;
  std::function<void(const std::string&)> log;
};

/// `threads` from the argument, else VORTEX_THREADS, else the hardware count.
std::size_t resolve_threads(std::optional<std::size_t> requested);

/// Calls fn(t) for t in [0, trials) on a pool of workers and returns the
/// results indexed by t, so reductions are independent of the worker count.
std::vector<std::vector<Complex>> run_trials(std::size_t trials, std::size_t threads,
                                             const std::function<std::vector<Complex>(std::size_t)>& fn);

Report run_cfree_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});
Report run_infinitesimal_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});
Report run_fluctuation_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});
Report run_ordered_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});
Report run_indented_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});
Report concentration_check(const ExperimentConfig& cfg, const RunOptions& opt = {});
/// Dispatches on cfg.kind.
Report run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});

}  // namespace vortex
