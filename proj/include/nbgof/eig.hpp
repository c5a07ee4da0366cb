#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "nbgof/operators.hpp"

namespace nbgof {

using Complex = std::complex<double>;

// Eigenvalues sorted by descending real part; ties by descending |imag|, then
// positive imaginary part first. Eigenvectors (when present) are columns with
// unit 2-norm whose first nonzero coordinate is real and positive.
struct Spectrum {
  std::vector<Complex> values;
  std::optional<Eigen::MatrixXcd> vectors;
  // Largest ||op x - mu x|| / max(1, |mu|) over the returned pairs (NaN when
  // no vectors were computed).
  double max_residual = 0.0;

  std::size_t size() const { return values.size(); }
  const Complex& operator[](std::size_t i) const { return values[i]; }
};

struct EigOptions {
  int k = 1;
  double tol = 1e-10;
  int max_restarts = 1000;
  int subspace_dim = 0;  // 0: max(2k + 8, 20)
  Eigen::Index dense_threshold = 600;
  bool want_vectors = true;
};

// |Im mu| <= 1e-6 max(1, |mu|).
bool is_real_eigenvalue(const Complex& mu);

// Applies the canonical ordering; `vectors` columns are permuted alongside.
void sort_spectrum(Spectrum& s);

// Full decomposition of a symmetric matrix, descending eigenvalues.
// Throws ContractError if asymmetric beyond 1e-12 (relative to max |entry|).
Spectrum eig_dense_sym(const Eigen::MatrixXd& m, bool want_vectors = true);

// Full decomposition of a general real matrix.
Spectrum eig_dense(const Eigen::MatrixXd& m, bool want_vectors = true);

// Leading k eigenpairs (largest real part). Uses the dense path when
// dim <= dense_threshold, otherwise restarted Krylov-Schur iteration with
// matrix-free products. Throws ConvergenceError after max_restarts.
Spectrum eig_leading(const LinearOperator& op, const EigOptions& opts);

// First half of eigenvector `which` of a 2n-dimensional operator. For a
// complex eigenvector the real part is taken (after phase normalization).
Eigen::VectorXd leading_halfvector(const Spectrum& s, std::size_t which = 0);

}  // namespace nbgof
