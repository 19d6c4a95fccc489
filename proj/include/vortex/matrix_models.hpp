#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "vortex/error.hpp"
#include "vortex/polynomial.hpp"

namespace vortex {

using ComplexMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexVector = Eigen::VectorXcd;
using Rng = std::mt19937_64;

/// Splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);
/// Seed for a sub-stream addressed by `path` below `master`.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// Standard complex Gaussian entries, E|z|^2 = 1.
ComplexMatrix sample_ginibre(std::size_t n, std::size_t m, Rng& rng);

/// Haar unitary via QR of a Ginibre matrix, with the phases of diag(R)
/// moved into Q so the law is exactly Haar.
ComplexMatrix sample_haar(std::size_t n, Rng& rng);

/// ||U*U - I||_F.
double unitarity_residual(const ComplexMatrix& u);

ComplexVector basis_vector(std::size_t n, std::size_t i);
/// (1,...,1)/sqrt(n).
ComplexVector flat_vector(std::size_t n);

/// Haar measure on the subgroup of U(N) fixing v_1..v_k:
/// U = sum v_i v_i* + Q V Q*, V Haar on U(N-k), Q an isometry onto the
/// orthogonal complement. Copies share nothing; each owns its generator.
class StabilizerHaarSampler {
 public:
  StabilizerHaarSampler(std::size_t n, std::vector<ComplexVector> fixed, std::uint64_t seed);

  std::size_t dimension() const noexcept { return n_; }
  const std::vector<ComplexVector>& fixed_vectors() const noexcept { return fixed_; }
  /// N x (N-k) isometry onto span(v_i)^perp.
  const ComplexMatrix& complement() const noexcept { return complement_; }

  void reseed(std::uint64_t seed) { rng_.seed(seed); }
  Rng& rng() noexcept { return rng_; }

  ComplexMatrix sample();

 private:
  std::size_t n_;
  std::vector<ComplexVector> fixed_;
  ComplexMatrix complement_;
  bool standard_prefix_ = false;
  Rng rng_;
};

/// max_i ||U v_i - v_i||.
double stabilizer_residual(const ComplexMatrix& u, const std::vector<ComplexVector>& fixed);

/// Deterministic matrices assigned to the generators of one family.
class MatrixEnsemble {
 public:
  struct Member {
    ComplexMatrix matrix;
    bool diagonal = false;
  };

  MatrixEnsemble() = default;
  /// Checks shared dimension and that `norm_bound` dominates every spectral norm.
  MatrixEnsemble(Family family, std::map<std::uint32_t, ComplexMatrix> members, double norm_bound);

  Family family() const noexcept { return family_; }
  std::size_t dimension() const noexcept { return n_; }
  double norm_bound() const noexcept { return norm_bound_; }
  const std::map<std::uint32_t, Member>& members() const noexcept { return members_; }
  const Member& member(std::uint32_t index) const;

 private:
  friend MatrixEnsemble conjugate(const ComplexMatrix& u, const MatrixEnsemble& ens);

  Family family_ = 0;
  std::size_t n_ = 0;
  double norm_bound_ = 0;
  std::map<std::uint32_t, Member> members_;
};

double spectral_norm(const ComplexMatrix& m);

/// B -> U B U* for every member.
MatrixEnsemble conjugate(const ComplexMatrix& u, const MatrixEnsemble& ens);

using EnsembleMap = std::map<Family, MatrixEnsemble>;

struct StateMode {
  enum class Kind { normalized_trace, unnormalized_trace, vector_state };
  Kind kind = Kind::normalized_trace;
  ComplexVector vector;

  static StateMode normalized() { return {}; }
  static StateMode unnormalized() { return {Kind::unnormalized_trace, {}}; }
  static StateMode vector_state(ComplexVector v);

  std::string label() const;
};

/// Evaluates words on an ensemble map, caching the matrix of every
/// single-family run it meets. Valid while the ensembles it points to live.
class WordEvaluator {
 public:
  explicit WordEvaluator(const EnsembleMap& ensembles);

  Complex operator()(const Word& w, const StateMode& mode);
  Complex operator()(const Polynomial<Complex>& p, const StateMode& mode);

  std::size_t dimension() const noexcept { return n_; }

 private:
  struct Operand {
    bool diagonal = false;
    ComplexVector diag;
    ComplexMatrix dense;
  };

  const MatrixEnsemble::Member& letter(const Generator& g) const;
  const Operand& run(const Word& run);
  Complex trace(const Word& w);
  Complex vector_state(const Word& w, const ComplexVector& v) const;

  const EnsembleMap* ensembles_;
  std::size_t n_ = 0;
  std::unordered_map<Word, Operand> cache_;
};

Complex evaluate_word_state(const EnsembleMap& ensembles, const Word& w, const StateMode& mode);
Complex evaluate_word_state(const EnsembleMap& ensembles, const Polynomial<Complex>& p, const StateMode& mode);

/// U - v v*; requires U v = v to 1e-8.
ComplexMatrix compress_perp(const ComplexMatrix& u, const ComplexVector& v);

/// Concrete bounded test matrices.
struct EnsembleSpec {
  enum class Kind { spiked_diagonal, two_spectrum, shift, projection };
  Kind kind = Kind::spiked_diagonal;
  /// spiked_diagonal: diag(theta, a, ..., a).
  double theta = 0;
  double a = 0;
  /// two_spectrum: diagonal cycling through `spectrum`, with the entries
  /// listed in `spikes` (0-based index -> value) overwritten.
  std::vector<double> spectrum;
  std::map<std::size_t, double> spikes;
  /// Rotation by this angle in the (e1, e2) plane.
  double mixing = 0;
  /// Conjugate by the unitary DFT (makes e1 isotropic).
  bool circulant = false;
  std::size_t rank = 0;

  static EnsembleSpec spiked_diagonal(double theta, double a);
  static EnsembleSpec two_spectrum(std::vector<double> spectrum, std::map<std::size_t, double> spikes = {});
  static EnsembleSpec shift();
  static EnsembleSpec projection(std::size_t rank);

  std::string describe() const;
};

ComplexMatrix standard_matrix(const EnsembleSpec& spec, std::size_t n);
/// Ensemble whose member i is built from specs[i].
MatrixEnsemble standard_ensemble(Family family, const std::vector<EnsembleSpec>& specs, std::size_t n);
/// lim tr_N(M^k) as N -> infinity, when the ensemble defines it.
std::optional<double> limit_trace(const EnsembleSpec& spec, std::size_t k);

}  // namespace vortex
