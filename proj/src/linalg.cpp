#include "cqpolar/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "cqpolar/errors.hpp"

namespace cqpolar {

namespace {

Matrix hermitian_part(const Matrix& a) { return (a + a.adjoint()) * 0.5; }

void check_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) throw StructuralError(std::string(what) + ": matrix is not square");
}

bool exactly_diagonal(const Matrix& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j && a(i, j) != cplx(0.0, 0.0)) return false;
  return true;
}

void check_same_dim(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw StructuralError("dimension mismatch: " + std::to_string(a.rows()) + " vs " + std::to_string(b.rows()));
}

}  // namespace

HermEig hermitian_eig(const Matrix& a) {
  check_square(a, "eig");
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(a));
  return {es.eigenvalues(), es.eigenvectors()};
}

Matrix psd_sqrt(const Matrix& a) {
  auto e = hermitian_eig(a);
  RVector s = e.values.cwiseMax(0.0).cwiseSqrt();
  return e.vectors * s.asDiagonal() * e.vectors.adjoint();
}

Matrix psd_inv_sqrt(const Matrix& a, double rel_tol, Matrix* support) {
  auto e = hermitian_eig(a);
  const double top = e.values.size() ? std::max(e.values.maxCoeff(), 0.0) : 0.0;
  const double cut = rel_tol * top;
  RVector s(e.values.size()), p(e.values.size());
  for (Eigen::Index i = 0; i < e.values.size(); ++i) {
    bool on = top > 0 && e.values(i) > cut;
    s(i) = on ? 1.0 / std::sqrt(e.values(i)) : 0.0;
    p(i) = on ? 1.0 : 0.0;
  }
  if (support) *support = e.vectors * p.asDiagonal() * e.vectors.adjoint();
  return e.vectors * s.asDiagonal() * e.vectors.adjoint();
}

Matrix psd_factor(const Matrix& a, double rel_cut) {
  check_square(a, "factor");
  const Eigen::Index k = a.rows();
  if (exactly_diagonal(a)) {
    double top = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) top = std::max(top, a(i, i).real());
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < k; ++i)
      if (a(i, i).real() > rel_cut * top && a(i, i).real() > 0) keep.push_back(i);
    Matrix f = Matrix::Zero(k, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) f(keep[j], j) = std::sqrt(a(keep[j], keep[j]).real());
    return f;
  }
  auto e = hermitian_eig(a);
  const double top = e.values.size() ? e.values.maxCoeff() : 0.0;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = e.values.size(); i-- > 0;)
    if (e.values(i) > 0 && e.values(i) > rel_cut * top) keep.push_back(i);
  Matrix f(a.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) f.col(j) = e.vectors.col(keep[j]) * std::sqrt(e.values(keep[j]));
  return f;
}

Matrix compress_factor(const Matrix& f) {
  if (f.cols() <= f.rows()) return f;
  return psd_factor(f * f.adjoint());
}

double nuclear_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  if (std::min(m.rows(), m.cols()) <= 16) {
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues().sum();
  }
  Eigen::BDCSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

double trace_sqrt(const Matrix& psd) {
  auto e = hermitian_eig(psd);
  return e.values.cwiseMax(0.0).cwiseSqrt().sum();
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix r(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return r;
}

double fidelity_psd(const Matrix& a, const Matrix& b) {
  check_square(a, "fidelity");
  check_same_dim(a, b);
  // via factors: square roots of rank-deficient matrices lose ~sqrt(eps)
  return factor_fidelity(psd_factor(a), psd_factor(b));
}

double factor_fidelity(const Matrix& fa, const Matrix& fb) {
  if (fa.rows() != fb.rows()) throw StructuralError("factor dimension mismatch");
  if (fa.cols() == 0 || fb.cols() == 0) return 0.0;
  return nuclear_norm(fb.adjoint() * fa);
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  return std::min(1.0, fidelity_psd(rho.matrix(), sigma.matrix()));
}

double trace_norm_hermitian(const Matrix& a) {
  auto e = hermitian_eig(a);
  return e.values.cwiseAbs().sum();
}

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  check_same_dim(rho.matrix(), sigma.matrix());
  return std::min(1.0, 0.5 * trace_norm_hermitian(rho.matrix() - sigma.matrix()));
}

double angle(const DensityMatrix& rho, const DensityMatrix& sigma) { return std::acos(fidelity(rho, sigma)); }

double spectrum_entropy(const RVector& eig) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < eig.size(); ++i)
    if (eig(i) > 0) h -= eig(i) * std::log(eig(i));
  return h;
}

double psd_entropy(const Matrix& a) { return spectrum_entropy(hermitian_eig(a).values); }

double factor_entropy(const Matrix& f) {
  if (f.cols() == 0) return 0.0;
  // nonzero spectra of F F^dagger and F^dagger F agree; use the smaller Gram
  if (f.cols() < f.rows()) return psd_entropy(f.adjoint() * f);
  return psd_entropy(f * f.adjoint());
}

double von_neumann_entropy(const DensityMatrix& rho) { return psd_entropy(rho.matrix()); }

DensityMatrix DensityMatrix::from(const Matrix& m, const NumericTolerances& tol) {
  if (m.rows() != m.cols() || m.rows() == 0) throw LoadError("density matrix must be square and non-empty");
  if (!m.allFinite()) throw LoadError("density matrix has non-finite entries");
  const double herm_err = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (herm_err > tol.herm) throw LoadError("matrix is not Hermitian (deviation " + std::to_string(herm_err) + ")");
  const cplx tr = m.trace();
  if (std::abs(tr - cplx(1.0, 0.0)) > tol.trace)
    throw LoadError("trace is " + std::to_string(tr.real()) + ", expected 1");
  auto e = hermitian_eig(m);
  if (e.values.minCoeff() < -tol.psd)
    throw LoadError("matrix is not PSD (eigenvalue " + std::to_string(e.values.minCoeff()) + ")");
  if (e.values.minCoeff() >= 0) return DensityMatrix(hermitian_part(m) / tr.real());
  RVector v = e.values.cwiseMax(0.0);
  v /= v.sum();
  return DensityMatrix(e.vectors * v.asDiagonal() * e.vectors.adjoint());
}

DensityMatrix DensityMatrix::pure(const Vector& psi) {
  Vector p = psi / psi.norm();
  return DensityMatrix(p * p.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(int k) {
  return DensityMatrix(Matrix::Identity(k, k) / static_cast<double>(k));
}

DensityMatrix DensityMatrix::basis(int k, int i) {
  Matrix m = Matrix::Zero(k, k);
  m(i, i) = 1.0;
  return DensityMatrix(m);
}

Povm pgm_from_weighted(const std::vector<Matrix>& weighted, double rel_tol) {
  if (weighted.empty()) throw StructuralError("PGM needs at least one state");
  const Eigen::Index k = weighted[0].rows();
  Matrix s = Matrix::Zero(k, k);
  for (const auto& w : weighted) {
    check_same_dim(w, s);
    s += w;
  }
  if (s.cwiseAbs().maxCoeff() == 0.0) throw StructuralError("PGM: average state is zero");
  Matrix support;
  Matrix r = psd_inv_sqrt(s, rel_tol, &support);
  Matrix rest = (Matrix::Identity(k, k) - support) / static_cast<double>(weighted.size());
  Povm p;
  p.effects.reserve(weighted.size());
  for (const auto& w : weighted) p.effects.push_back(hermitian_part(r * w * r) + rest);
  return p;
}

Povm pretty_good_measurement(const std::vector<DensityMatrix>& states, const std::vector<double>& priors) {
  if (states.size() != priors.size()) throw StructuralError("PGM: priors and states differ in length");
  double tot = 0.0;
  for (double p : priors) {
    if (p < 0) throw StructuralError("PGM: negative prior");
    tot += p;
  }
  if (std::abs(tot - 1.0) > 1e-9) throw StructuralError("PGM: priors do not sum to one");
  std::vector<Matrix> w;
  for (std::size_t i = 0; i < states.size(); ++i) w.push_back(priors[i] * states[i].matrix());
  return pgm_from_weighted(w);
}

void validate_povm(const Povm& p, const NumericTolerances& tol) {
  if (p.effects.empty()) throw StructuralError("empty POVM");
  const Eigen::Index k = p.effects[0].rows();
  Matrix sum = Matrix::Zero(k, k);
  for (const auto& e : p.effects) {
    check_same_dim(e, sum);
    auto ev = hermitian_eig(e).values;
    if (ev.minCoeff() < -tol.psd || ev.maxCoeff() > 1 + tol.psd) throw StructuralError("POVM effect outside [0, I]");
    sum += e;
  }
  if ((sum - Matrix::Identity(k, k)).cwiseAbs().maxCoeff() > tol.trace) throw StructuralError("POVM effects do not sum to I");
}

double povm_error(const Povm& p, const std::vector<Matrix>& weighted) {
  double ok = 0.0;
  for (std::size_t i = 0; i < weighted.size(); ++i) ok += (p.effects[i] * weighted[i]).trace().real();
  double tot = 0.0;
  for (const auto& w : weighted) tot += w.trace().real();
  return tot - ok;
}

double helstrom_error(const Matrix& rho0, const Matrix& rho1, double p0) {
  return 0.5 * (1.0 - trace_norm_hermitian(p0 * rho0 - (1.0 - p0) * rho1));
}

SequentialResult sequential_measure(const std::vector<Matrix>& ops, const Matrix& rho, const NumericTolerances& tol) {
  SequentialResult r;
  r.post_state = rho;
  for (const auto& op : ops) {
    check_same_dim(op, rho);
    auto ev = hermitian_eig(op).values;
    if (ev.minCoeff() < -tol.psd || ev.maxCoeff() > 1 + tol.psd) throw StructuralError("operator not between 0 and I");
    Matrix s = psd_sqrt(op);
    r.post_state = s * r.post_state * s;
  }
  r.survival = r.post_state.trace().real();
  return r;
}

double sequential_union_bound(const std::vector<Matrix>& ops, const Matrix& rho) {
  double miss = 0.0;
  for (const auto& op : ops) miss += 1.0 - (op * rho).trace().real();
  return 2.0 * std::sqrt(static_cast<double>(ops.size())) * std::sqrt(std::max(miss, 0.0));
}

bool trace_sqrt_subadditivity_check(const Matrix& a, const Matrix& b, const NumericTolerances& tol) {
  check_same_dim(a, b);
  return trace_sqrt(a + b) <= trace_sqrt(a) + trace_sqrt(b) + tol.eq;
}

Vector haar_vector(int k, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vector v(k);
  for (int i = 0; i < k; ++i) v(i) = cplx(n(rng), n(rng));
  return v / v.norm();
}

Matrix ginibre(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix g(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) g(i, j) = cplx(n(rng), n(rng));
  return g;
}

Matrix random_psd(int k, int rank, Rng& rng) {
  Matrix g = ginibre(k, rank, rng);
  return g * g.adjoint();
}

DensityMatrix random_density(int k, int rank, Rng& rng) {
  Matrix m = random_psd(k, rank, rng);
  m /= m.trace().real();
  return DensityMatrix::from(m);
}

Matrix random_subidentity(int k, Rng& rng) {
  Matrix u = ginibre(k, k, rng).householderQr().householderQ();
  RVector d(k);
  for (int i = 0; i < k; ++i) {
    double x = uniform01(rng);
    // push some mass to the ends so projectors and near-identities show up
    d(i) = x < 0.15 ? 0.0 : (x > 0.85 ? 1.0 : uniform01(rng));
  }
  Matrix m = u * d.asDiagonal() * u.adjoint();
  return hermitian_part(m);
}

}  // namespace cqpolar
