#include "vortex/matrix_models.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace vortex {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(master);
  for (auto p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

ComplexMatrix sample_ginibre(std::size_t n, std::size_t m, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  ComplexMatrix g(n, m);
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      double re = gauss(rng);
      g(i, j) = Complex(re, gauss(rng));
    }
  return g;
}

ComplexMatrix sample_haar(std::size_t n, Rng& rng) {
  if (n == 0) throw DomainError("sample_haar: dimension must be >= 1");
  Eigen::MatrixXcd g = sample_ginibre(n, n, rng);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q = qr.householderQ();
  const auto& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    Complex d = r(j, j);
    double mod = std::abs(d);
    q.col(j) *= mod > 0 ? d / mod : Complex(1.0);
  }
  return q;
}

double unitarity_residual(const ComplexMatrix& u) {
  ComplexMatrix p = u.adjoint() * u;
  p.diagonal().array() -= 1.0;
  return p.norm();
}

ComplexVector basis_vector(std::size_t n, std::size_t i) {
  if (i >= n) throw DomainError("basis vector index out of range");
  ComplexVector e = ComplexVector::Zero(static_cast<Eigen::Index>(n));
  e(static_cast<Eigen::Index>(i)) = 1.0;
  return e;
}

ComplexVector flat_vector(std::size_t n) {
  return ComplexVector::Constant(static_cast<Eigen::Index>(n), 1.0 / std::sqrt(double(n)));
}

StabilizerHaarSampler::StabilizerHaarSampler(std::size_t n, std::vector<ComplexVector> fixed, std::uint64_t seed)
    : n_(n), fixed_(std::move(fixed)), rng_(seed) {
  const std::size_t k = fixed_.size();
  if (n == 0) throw DomainError("stabilizer sampler: dimension must be >= 1");
  if (k >= n) throw DomainError("stabilizer sampler: need fewer fixed vectors than the dimension");
  const auto N = static_cast<Eigen::Index>(n), K = static_cast<Eigen::Index>(k);
  Eigen::MatrixXcd v(N, K);
  for (Eigen::Index i = 0; i < K; ++i) {
    if (fixed_[i].size() != N) throw DomainError("stabilizer sampler: fixed vector has the wrong length");
    v.col(i) = fixed_[i];
  }
  Eigen::MatrixXcd gram = v.adjoint() * v - Eigen::MatrixXcd::Identity(K, K);
  if (gram.cwiseAbs().maxCoeff() > 1e-12 && K > 0)
    throw DomainError("stabilizer sampler: fixed vectors are not orthonormal");

  standard_prefix_ = true;
  for (Eigen::Index i = 0; i < K && standard_prefix_; ++i)
    standard_prefix_ = (v.col(i) - basis_vector(n, i)).norm() == 0.0;
  if (standard_prefix_) {
    complement_ = ComplexMatrix::Zero(N, N - K);
    complement_.bottomRows(N - K).setIdentity();
    return;
  }

  // Complete [v | G] by Householder QR, then project out the v_i again.
  Rng completion_rng(derive_seed(seed, {0xc0ffee}));
  Eigen::MatrixXcd basis(N, N);
  basis.leftCols(K) = v;
  basis.rightCols(N - K) = sample_ginibre(n, n - k, completion_rng);
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(basis);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(N, N);
  Eigen::MatrixXcd perp = q.rightCols(N - K);
  perp -= v * (v.adjoint() * perp);
  Eigen::HouseholderQR<Eigen::MatrixXcd> again(perp);
  complement_ = again.householderQ() * Eigen::MatrixXcd::Identity(N, N - K);
}

ComplexMatrix StabilizerHaarSampler::sample() {
  const auto N = static_cast<Eigen::Index>(n_);
  const auto K = static_cast<Eigen::Index>(fixed_.size());
  ComplexMatrix inner = sample_haar(n_ - fixed_.size(), rng_);
  if (standard_prefix_) {
    ComplexMatrix u = ComplexMatrix::Zero(N, N);
    u.topLeftCorner(K, K).setIdentity();
    u.bottomRightCorner(N - K, N - K) = inner;
    return u;
  }
  ComplexMatrix u = complement_ * inner * complement_.adjoint();
  for (const auto& v : fixed_) u += v * v.adjoint();
  return u;
}

double stabilizer_residual(const ComplexMatrix& u, const std::vector<ComplexVector>& fixed) {
  double worst = 0;
  for (const auto& v : fixed) worst = std::max(worst, (u * v - v).norm());
  return worst;
}

namespace {

bool is_diagonal(const ComplexMatrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (i != j && m(i, j) != Complex(0.0)) return false;
  return true;
}

}  // namespace

double spectral_norm(const ComplexMatrix& m) {
  if (is_diagonal(m)) return m.diagonal().cwiseAbs().maxCoeff();
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() < 1e-14 * (1.0 + m.cwiseAbs().maxCoeff())) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues()(0);
}

MatrixEnsemble::MatrixEnsemble(Family family, std::map<std::uint32_t, ComplexMatrix> members, double norm_bound)
    : family_(family), norm_bound_(norm_bound) {
  if (members.empty()) throw DomainError("ensemble needs at least one member");
  n_ = static_cast<std::size_t>(members.begin()->second.rows());
  if (n_ == 0) throw DomainError("ensemble matrices must have dimension >= 1");
  for (auto& [index, m] : members) {
    if (static_cast<std::size_t>(m.rows()) != n_ || m.rows() != m.cols())
      throw DomainError("ensemble members must be square of a common dimension");
    if (!m.allFinite()) throw DomainError("ensemble member has non-finite entries");
    double norm = spectral_norm(m);
    if (norm > norm_bound * (1 + 1e-9) + 1e-12)
      throw DomainError("ensemble member norm " + std::to_string(norm) + " exceeds the bound " +
                        std::to_string(norm_bound));
    bool diag = is_diagonal(m);
    members_.emplace(index, Member{std::move(m), diag});
  }
}

const MatrixEnsemble::Member& MatrixEnsemble::member(std::uint32_t index) const {
  auto it = members_.find(index);
  if (it == members_.end())
    throw RuleViolation("unknown generator " + to_string(Generator(family_, index)) + ": no matrix assigned");
  return it->second;
}

MatrixEnsemble conjugate(const ComplexMatrix& u, const MatrixEnsemble& ens) {
  if (static_cast<std::size_t>(u.rows()) != ens.dimension() || u.rows() != u.cols())
    throw DomainError("conjugate: dimension mismatch");
  MatrixEnsemble out;
  out.family_ = ens.family_;
  out.n_ = ens.n_;
  out.norm_bound_ = ens.norm_bound_;
  for (const auto& [index, m] : ens.members_) {
    ComplexMatrix c;
    if (m.diagonal)
      c = u * m.matrix.diagonal().asDiagonal() * u.adjoint();
    else
      c = u * m.matrix * u.adjoint();
    out.members_.emplace(index, MatrixEnsemble::Member{std::move(c), false});
  }
  return out;
}

StateMode StateMode::vector_state(ComplexVector v) {
  if (std::abs(v.norm() - 1.0) > 1e-10) throw DomainError("vector state needs a unit vector");
  return {Kind::vector_state, std::move(v)};
}

std::string StateMode::label() const {
  switch (kind) {
    case Kind::normalized_trace: return "trace";
    case Kind::unnormalized_trace: return "Trace";
    case Kind::vector_state: return "vector";
  }
  return "?";
}

WordEvaluator::WordEvaluator(const EnsembleMap& ensembles) : ensembles_(&ensembles) {
  for (const auto& [f, e] : ensembles) {
    if (e.family() != f) throw DomainError("ensemble map key disagrees with the ensemble family");
    if (n_ == 0) n_ = e.dimension();
    if (e.dimension() != n_) throw DomainError("ensembles have different dimensions");
  }
}

const MatrixEnsemble::Member& WordEvaluator::letter(const Generator& g) const {
  auto it = ensembles_->find(g.family());
  if (it == ensembles_->end())
    throw RuleViolation("unknown generator " + to_string(g) + ": no ensemble for its family");
  return it->second.member(g.index());
}

const WordEvaluator::Operand& WordEvaluator::run(const Word& r) {
  if (auto it = cache_.find(r); it != cache_.end()) return it->second;
  Operand op;
  op.diagonal = true;
  for (const auto& g : r) op.diagonal = op.diagonal && letter(g).diagonal;
  if (op.diagonal) {
    op.diag = ComplexVector::Ones(static_cast<Eigen::Index>(n_));
    for (const auto& g : r) op.diag.array() *= letter(g).matrix.diagonal().array();
  } else {
    op.dense = letter(r[0]).matrix;
    for (std::size_t i = 1; i < r.size(); ++i) {
      const auto& m = letter(r[i]);
      if (m.diagonal)
        op.dense = op.dense * m.matrix.diagonal().asDiagonal();
      else
        op.dense = op.dense * m.matrix;
    }
  }
  return cache_.emplace(r, std::move(op)).first->second;
}

Complex WordEvaluator::trace(const Word& w) {
  if (w.empty()) return Complex(double(n_));
  auto runs = split_runs(w, [](Family f) { return f; });
  if (runs.size() == 1) {
    const auto& op = run(runs[0]);
    return op.diagonal ? op.diag.sum() : op.dense.trace();
  }
  // Accumulate all but the last run, then Tr(acc * last) in O(N^2).
  Operand acc = run(runs[0]);
  for (std::size_t i = 1; i + 1 < runs.size(); ++i) {
    const auto& op = run(runs[i]);
    if (acc.diagonal && op.diagonal) {
      acc.diag.array() *= op.diag.array();
    } else if (acc.diagonal) {
      acc.dense = acc.diag.asDiagonal() * op.dense;
      acc.diagonal = false;
    } else if (op.diagonal) {
      acc.dense = acc.dense * op.diag.asDiagonal();
    } else {
      acc.dense = acc.dense * op.dense;
    }
  }
  const auto& last = run(runs.back());
  if (acc.diagonal && last.diagonal) return (acc.diag.array() * last.diag.array()).sum();
  if (acc.diagonal) return (acc.diag.array() * last.dense.diagonal().array()).sum();
  if (last.diagonal) return (acc.dense.diagonal().array() * last.diag.array()).sum();
  // Tr(AB) = sum_ij A_ij B_ji.
  return (acc.dense.array() * last.dense.transpose().array()).sum();
}

Complex WordEvaluator::vector_state(const Word& w, const ComplexVector& v) const {
  if (static_cast<std::size_t>(v.size()) != n_) throw DomainError("state vector has the wrong dimension");
  ComplexVector x = v;
  for (std::size_t i = w.size(); i-- > 0;) {
    const auto& m = letter(w[i]);
    if (m.diagonal)
      x = m.matrix.diagonal().cwiseProduct(x);
    else
      x = m.matrix * x;
  }
  return v.dot(x);
}

Complex WordEvaluator::operator()(const Word& w, const StateMode& mode) {
  switch (mode.kind) {
    case StateMode::Kind::normalized_trace: return trace(w) / double(n_);
    case StateMode::Kind::unnormalized_trace: return trace(w);
    case StateMode::Kind::vector_state: return vector_state(w, mode.vector);
  }
  return {};
}

Complex WordEvaluator::operator()(const Polynomial<Complex>& p, const StateMode& mode) {
  Complex out(0);
  for (const auto& [w, c] : p.terms()) out += c * (*this)(w, mode);
  return out;
}

Complex evaluate_word_state(const EnsembleMap& ensembles, const Word& w, const StateMode& mode) {
  WordEvaluator eval(ensembles);
  return eval(w, mode);
}

Complex evaluate_word_state(const EnsembleMap& ensembles, const Polynomial<Complex>& p, const StateMode& mode) {
  WordEvaluator eval(ensembles);
  return eval(p, mode);
}

ComplexMatrix compress_perp(const ComplexMatrix& u, const ComplexVector& v) {
  if (u.rows() != v.size() || u.rows() != u.cols()) throw DomainError("compress_perp: dimension mismatch");
  if ((u * v - v).norm() > 1e-8) throw DomainError("compress_perp: U does not fix v");
  return u - v * v.adjoint();
}

EnsembleSpec EnsembleSpec::spiked_diagonal(double theta, double a) {
  EnsembleSpec s;
  s.kind = Kind::spiked_diagonal;
  s.theta = theta;
  s.a = a;
  return s;
}

EnsembleSpec EnsembleSpec::two_spectrum(std::vector<double> spectrum, std::map<std::size_t, double> spikes) {
  EnsembleSpec s;
  s.kind = Kind::two_spectrum;
  s.spectrum = std::move(spectrum);
  s.spikes = std::move(spikes);
  return s;
}

EnsembleSpec EnsembleSpec::shift() {
  EnsembleSpec s;
  s.kind = Kind::shift;
  return s;
}

EnsembleSpec EnsembleSpec::projection(std::size_t rank) {
  EnsembleSpec s;
  s.kind = Kind::projection;
  s.rank = rank;
  return s;
}

std::string EnsembleSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::spiked_diagonal: os << "spiked_diagonal(" << theta << "," << a << ")"; break;
    case Kind::two_spectrum: {
      os << "two_spectrum(";
      for (std::size_t i = 0; i < spectrum.size(); ++i) os << (i ? "," : "") << spectrum[i];
      os << ")";
      for (const auto& [i, x] : spikes) os << " spike[" << i << "]=" << x;
      break;
    }
    case Kind::shift: os << "shift"; break;
    case Kind::projection: os << "projection(" << rank << ")"; break;
  }
  if (mixing != 0) os << " mixing " << mixing;
  if (circulant) os << " circulant";
  return os.str();
}

ComplexMatrix standard_matrix(const EnsembleSpec& spec, std::size_t n) {
  if (n == 0) throw DomainError("ensemble dimension must be >= 1");
  const auto N = static_cast<Eigen::Index>(n);
  ComplexMatrix m = ComplexMatrix::Zero(N, N);
  switch (spec.kind) {
    case EnsembleSpec::Kind::spiked_diagonal:
      m.diagonal().setConstant(spec.a);
      m(0, 0) = spec.theta;
      break;
    case EnsembleSpec::Kind::two_spectrum:
      if (spec.spectrum.empty()) throw DomainError("two_spectrum needs at least one value");
      for (Eigen::Index i = 0; i < N; ++i) m(i, i) = spec.spectrum[static_cast<std::size_t>(i) % spec.spectrum.size()];
      for (const auto& [i, x] : spec.spikes) {
        if (i >= n) throw DomainError("spike index outside the dimension");
        m(Eigen::Index(i), Eigen::Index(i)) = x;
      }
      break;
    case EnsembleSpec::Kind::shift:
      for (Eigen::Index i = 0; i < N; ++i) m((i + 1) % N, i) = 1.0;
      break;
    case EnsembleSpec::Kind::projection:
      if (spec.rank > n) throw DomainError("projection rank exceeds the dimension");
      for (std::size_t i = 0; i < spec.rank; ++i) m(Eigen::Index(i), Eigen::Index(i)) = 1.0;
      break;
  }
  if (spec.mixing != 0) {
    if (n < 2) throw DomainError("mixing needs dimension >= 2");
    ComplexMatrix r = ComplexMatrix::Identity(N, N);
    double c = std::cos(spec.mixing), s = std::sin(spec.mixing);
    r(0, 0) = c;
    r(0, 1) = -s;
    r(1, 0) = s;
    r(1, 1) = c;
    m = r * m * r.adjoint();
  }
  if (spec.circulant) {
    ComplexMatrix f(N, N);
    const double scale = 1.0 / std::sqrt(double(n));
    for (Eigen::Index j = 0; j < N; ++j)
      for (Eigen::Index k = 0; k < N; ++k)
        f(j, k) = std::polar(scale, 2 * std::numbers::pi * double((j * k) % N) / double(n));
    m = f * m * f.adjoint();
  }
  return m;
}

MatrixEnsemble standard_ensemble(Family family, const std::vector<EnsembleSpec>& specs, std::size_t n) {
  std::map<std::uint32_t, ComplexMatrix> members;
  double bound = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    ComplexMatrix m = standard_matrix(specs[i], n);
    bound = std::max(bound, spectral_norm(m));
    members.emplace(static_cast<std::uint32_t>(i), std::move(m));
  }
  return MatrixEnsemble(family, std::move(members), bound);
}

std::optional<double> limit_trace(const EnsembleSpec& spec, std::size_t k) {
  if (k == 0) return 1.0;
  switch (spec.kind) {
    case EnsembleSpec::Kind::spiked_diagonal: return std::pow(spec.a, double(k));
    case EnsembleSpec::Kind::two_spectrum: {
      double s = 0;
      for (double x : spec.spectrum) s += std::pow(x, double(k));
      return s / double(spec.spectrum.size());
    }
    case EnsembleSpec::Kind::shift: return 0.0;
    case EnsembleSpec::Kind::projection: return 0.0;
  }
  return std::nullopt;
}

}  // namespace vortex
