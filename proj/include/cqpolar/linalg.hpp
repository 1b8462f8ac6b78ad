#pragma once
#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "cqpolar/rng.hpp"

namespace cqpolar {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

struct NumericTolerances {
  double herm = 1e-9;
  double psd = 1e-9;
  double trace = 1e-9;
  double eq = 1e-7;
};

class DensityMatrix {
 public:
  DensityMatrix() = default;
  // Symmetrises, clips eigenvalues in [-tol_psd, 0) and renormalises the trace.
  // Anything worse throws LoadError.
  static DensityMatrix from(const Matrix& m, const NumericTolerances& tol = {});
  static DensityMatrix pure(const Vector& psi);
  static DensityMatrix maximally_mixed(int k);
  static DensityMatrix basis(int k, int i);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }

 private:
  explicit DensityMatrix(Matrix m) : m_(std::move(m)) {}
  Matrix m_;
};

struct Povm {
  std::vector<Matrix> effects;
};

struct HermEig {
  RVector values;  // ascending
  Matrix vectors;
};

HermEig hermitian_eig(const Matrix& a);
Matrix psd_sqrt(const Matrix& a);
// Inverse square root on the support (eigenvalues above rel_tol * max).
Matrix psd_inv_sqrt(const Matrix& a, double rel_tol, Matrix* support = nullptr);
// Factor F with F F^dagger = a. Eigenvalues at or below rel_cut * max are
// dropped; diagonal input gives a monomial factor with no rounding.
Matrix psd_factor(const Matrix& a, double rel_cut = 1e-14);
// Same operator, at most rows() columns.
Matrix compress_factor(const Matrix& f);

double nuclear_norm(const Matrix& m);
double trace_sqrt(const Matrix& psd);
Matrix kron(const Matrix& a, const Matrix& b);

// Fidelity Tr sqrt(sqrt(a) b sqrt(a)) of PSD operators (not necessarily trace one).
double fidelity_psd(const Matrix& a, const Matrix& b);
// Same quantity for a = A A^dagger, b = B B^dagger.
double factor_fidelity(const Matrix& fa, const Matrix& fb);

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma);
double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma);
double trace_norm_hermitian(const Matrix& a);
double angle(const DensityMatrix& rho, const DensityMatrix& sigma);

// -sum l ln l over the spectrum, non-positive eigenvalues dropped.
double spectrum_entropy(const RVector& eig);
double psd_entropy(const Matrix& a);
double factor_entropy(const Matrix& f);
double von_neumann_entropy(const DensityMatrix& rho);

// Effects E_x = S^{-1/2} w_x S^{-1/2} for weighted states w_x = p_x rho_x;
// the complement of supp(S) is shared out evenly.
Povm pgm_from_weighted(const std::vector<Matrix>& weighted, double rel_tol = 1e-12);
Povm pretty_good_measurement(const std::vector<DensityMatrix>& states, const std::vector<double>& priors);
void validate_povm(const Povm& p, const NumericTolerances& tol = {});
// Probability of error when measuring priors-weighted states with p.
double povm_error(const Povm& p, const std::vector<Matrix>& weighted);
double helstrom_error(const Matrix& rho0, const Matrix& rho1, double p0);

struct SequentialResult {
  double survival = 1.0;
  Matrix post_state;  // unnormalised
};
SequentialResult sequential_measure(const std::vector<Matrix>& ops, const Matrix& rho,
                                    const NumericTolerances& tol = {});
double sequential_union_bound(const std::vector<Matrix>& ops, const Matrix& rho);

bool trace_sqrt_subadditivity_check(const Matrix& a, const Matrix& b, const NumericTolerances& tol = {});

// Random objects for fuzzing.
Vector haar_vector(int k, Rng& rng);
Matrix ginibre(int rows, int cols, Rng& rng);
DensityMatrix random_density(int k, int rank, Rng& rng);
Matrix random_psd(int k, int rank, Rng& rng);
// PSD with spectrum in [0,1].
Matrix random_subidentity(int k, Rng& rng);

}  // namespace cqpolar
