#include "nbgof/eig.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "nbgof/errors.hpp"
#include "nbgof/rng.hpp"

namespace nbgof {

bool is_real_eigenvalue(const Complex& mu) {
  return std::abs(mu.imag()) <= 1e-6 * std::max(1.0, std::abs(mu));
}

namespace {

bool precedes(const Complex& a, const Complex& b) {
  if (a.real() != b.real()) return a.real() > b.real();
  if (std::abs(a.imag()) != std::abs(b.imag())) return std::abs(a.imag()) > std::abs(b.imag());
  return a.imag() > b.imag();
}

void normalize_vector(Eigen::Ref<Eigen::VectorXcd> v) {
  const double norm = v.norm();
  if (norm == 0.0) return;
  v /= norm;
  const double cutoff = 1e-10 * v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > cutoff) {
      v *= std::conj(v[i]) / std::abs(v[i]);
      v[i] = Complex(v[i].real(), 0.0);
      return;
    }
  }
}

Eigen::VectorXcd apply_complex(const LinearOperator& op, const Eigen::VectorXcd& x) {
  const Eigen::VectorXd re = x.real();
  const Eigen::VectorXd im = x.imag();
  Eigen::VectorXcd y(x.size());
  y.real() = op * re;
  y.imag() = op * im;
  return y;
}

double relative_residual(const LinearOperator& op, const Complex& mu, const Eigen::VectorXcd& x) {
  return (apply_complex(op, x) - mu * x).norm() / std::max(1.0, std::abs(mu));
}

}  // namespace

void sort_spectrum(Spectrum& s) {
  std::vector<std::size_t> order(s.values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return precedes(s.values[a], s.values[b]); });
  std::vector<Complex> values(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) values[i] = s.values[order[i]];
  s.values = std::move(values);
  if (s.vectors) {
    Eigen::MatrixXcd v(s.vectors->rows(), static_cast<Eigen::Index>(order.size()));
    for (std::size_t i = 0; i < order.size(); ++i) {
      v.col(static_cast<Eigen::Index>(i)) = s.vectors->col(static_cast<Eigen::Index>(order[i]));
    }
    s.vectors = std::move(v);
  }
}

Spectrum eig_dense_sym(const Eigen::MatrixXd& m, bool want_vectors) {
  if (m.rows() != m.cols()) throw ContractError("matrix must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ContractError("eig_dense_sym: matrix is not symmetric");
  }
  Spectrum s;
  if (m.rows() == 0) return s;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
      m, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  const Eigen::Index n = m.rows();
  for (Eigen::Index i = n - 1; i >= 0; --i) s.values.emplace_back(solver.eigenvalues()[i], 0.0);
  if (want_vectors) {
    Eigen::MatrixXcd v(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      v.col(i) = solver.eigenvectors().col(n - 1 - i).cast<Complex>();
      normalize_vector(v.col(i));
    }
    s.vectors = std::move(v);
    s.max_residual = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Complex mu = s.values[static_cast<std::size_t>(i)];
      const double r = (m.cast<Complex>() * v.col(i) - mu * v.col(i)).norm() / std::max(1.0, std::abs(mu));
      s.max_residual = std::max(s.max_residual, r);
    }
  } else {
    s.max_residual = std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

Spectrum eig_dense(const Eigen::MatrixXd& m, bool want_vectors) {
  if (m.rows() != m.cols()) throw ContractError("matrix must be square");
  Spectrum s;
  if (m.rows() == 0) return s;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, want_vectors);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("dense Hessenberg QR failed", std::numeric_limits<double>::infinity());
  }
  const Eigen::VectorXcd ev = solver.eigenvalues();
  s.values.assign(ev.data(), ev.data() + ev.size());
  if (want_vectors) {
    Eigen::MatrixXcd v = solver.eigenvectors();
    for (Eigen::Index i = 0; i < v.cols(); ++i) normalize_vector(v.col(i));
    s.vectors = std::move(v);
  }
  sort_spectrum(s);
  if (want_vectors) {
    const Eigen::MatrixXcd mc = m.cast<Complex>();
    s.max_residual = 0.0;
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      const auto col = s.vectors->col(static_cast<Eigen::Index>(i));
      s.max_residual = std::max(
          s.max_residual, (mc * col - s.values[i] * col).norm() / std::max(1.0, std::abs(s.values[i])));
    }
  } else {
    s.max_residual = std::numeric_limits<double>::quiet_NaN();
  }
  return s;
}

namespace {

Spectrum truncate(Spectrum s, int k) {
  const auto keep = std::min<std::size_t>(static_cast<std::size_t>(k), s.values.size());
  s.values.resize(keep);
  if (s.vectors) s.vectors = Eigen::MatrixXcd(s.vectors->leftCols(static_cast<Eigen::Index>(keep)));
  return s;
}

// Eigen-decomposition of the small projected matrix, ordered canonically.
struct RitzSet {
  std::vector<Complex> values;
  Eigen::MatrixXcd vectors;  // unit columns
};

RitzSet ritz(const Eigen::MatrixXd& g, bool symmetric) {
  RitzSet out;
  const Eigen::Index m = g.rows();
  Spectrum s;
  if (symmetric) {
    const Eigen::MatrixXd sym = 0.5 * (g + g.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    for (Eigen::Index i = 0; i < m; ++i) s.values.emplace_back(solver.eigenvalues()[i], 0.0);
    s.vectors = solver.eigenvectors().cast<Complex>();
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(g);
    const Eigen::VectorXcd ev = solver.eigenvalues();
    s.values.assign(ev.data(), ev.data() + ev.size());
    s.vectors = solver.eigenvectors();
  }
  sort_spectrum(s);
  for (Eigen::Index i = 0; i < m; ++i) s.vectors->col(i).normalize();
  out.values = std::move(s.values);
  out.vectors = std::move(*s.vectors);
  return out;
}

// Orthogonalizes w against the first `cols` columns of v (classical
// Gram-Schmidt applied twice); returns the projection coefficients.
Eigen::VectorXd orthogonalize(const Eigen::MatrixXd& v, Eigen::Index cols, Eigen::VectorXd& w) {
  Eigen::VectorXd h = v.leftCols(cols).transpose() * w;
  w.noalias() -= v.leftCols(cols) * h;
  const Eigen::VectorXd h2 = v.leftCols(cols).transpose() * w;
  w.noalias() -= v.leftCols(cols) * h2;
  return h + h2;
}

}  // namespace

Spectrum eig_leading(const LinearOperator& op, const EigOptions& opts) {
  if (opts.k < 1) throw ParameterError("EigOptions.k must be at least 1");
  if (!(opts.tol > 0.0)) throw ParameterError("EigOptions.tol must be positive");
  const Eigen::Index n = op.dim();
  const int k = static_cast<int>(std::min<Eigen::Index>(opts.k, n));
  const bool symmetric = op.symmetric();
  int m = opts.subspace_dim > 0 ? opts.subspace_dim : std::max(2 * k + 8, 20);
  if (n <= opts.dense_threshold || m >= n - 1) {
    const Eigen::MatrixXd dense = op.dense();
    return truncate(symmetric ? eig_dense_sym(dense, opts.want_vectors) : eig_dense(dense, opts.want_vectors), k);
  }
  m = std::max(m, k + 2);

  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, m + 1);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m + 1, m);
  {
    CounterRng rng(RngSeed{0x5eed0fa11ULL, static_cast<std::uint64_t>(n)});
    Eigen::VectorXd v0(n);
    for (Eigen::Index i = 0; i < n; ++i) v0[i] = rng.uniform() - 0.5;
    v.col(0) = v0.normalized();
  }

  Eigen::VectorXd w(n);
  int start = 0;
  double best_residual = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart <= opts.max_restarts; ++restart) {
    // Extend the Krylov decomposition A V_j = V_{j+1} G to j = m.
    for (int j = start; j < m; ++j) {
      op.apply({v.col(j).data(), static_cast<std::size_t>(n)}, {w.data(), static_cast<std::size_t>(n)});
      const double wnorm0 = w.norm();
      const Eigen::VectorXd h = orthogonalize(v, j + 1, w);
      g.col(j).head(j + 1) = h;
      double beta = w.norm();
      if (beta <= 1e-12 * std::max(wnorm0, 1e-300)) {
        // Invariant subspace: continue with a fresh direction.
        CounterRng rng(RngSeed{0xb4eacd0ULL, static_cast<std::uint64_t>(restart * (m + 1) + j)});
        for (Eigen::Index i = 0; i < n; ++i) w[i] = rng.uniform() - 0.5;
        orthogonalize(v, j + 1, w);
        w.normalize();
        beta = 0.0;
        v.col(j + 1) = w;
      } else {
        v.col(j + 1) = w / beta;
      }
      g(j + 1, j) = beta;
    }

    const Eigen::MatrixXd gm = g.topRows(m);
    RitzSet rs = ritz(gm, symmetric);
    const Eigen::RowVectorXd last = g.row(m);
    std::vector<double> res(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      res[i] = std::abs((last.cast<Complex>() * rs.vectors.col(i))(0)) / std::max(1.0, std::abs(rs.values[i]));
    }
    double worst = 0.0;
    for (int i = 0; i < k; ++i) worst = std::max(worst, res[i]);
    best_residual = std::min(best_residual, worst);

    if (worst <= opts.tol) {
      Spectrum s;
      s.values.assign(rs.values.begin(), rs.values.begin() + k);
      if (opts.want_vectors) {
        Eigen::MatrixXcd x = v.leftCols(m).cast<Complex>() * rs.vectors.leftCols(k);
        s.max_residual = 0.0;
        for (int i = 0; i < k; ++i) {
          normalize_vector(x.col(i));
          s.max_residual = std::max(s.max_residual, relative_residual(op, s.values[i], x.col(i)));
        }
        s.vectors = std::move(x);
      } else {
        s.max_residual = std::numeric_limits<double>::quiet_NaN();
      }
      return s;
    }
    if (restart == opts.max_restarts) break;

    // Thick restart on the leading p Ritz vectors (conjugate pairs kept whole).
    int nconv = 0;
    for (int i = 0; i < m && res[i] <= opts.tol; ++i) ++nconv;
    int p = std::min(m - 2, k + std::max(nconv, (m - k) / 2));
    if (p < m && p > 0 && !is_real_eigenvalue(rs.values[p - 1]) &&
        std::abs(rs.values[p - 1] - std::conj(rs.values[p])) <= 1e-12 * std::max(1.0, std::abs(rs.values[p]))) {
      p = (p + 1 <= m - 1) ? p + 1 : p - 1;
    }
    Eigen::MatrixXd basis(m, 2 * p);
    int cols = 0;
    for (int i = 0; i < p; ++i) {
      const Eigen::VectorXcd y = rs.vectors.col(i);
      if (is_real_eigenvalue(rs.values[i]) || y.imag().norm() <= 1e-14) {
        basis.col(cols++) = y.real();
      } else if (rs.values[i].imag() > 0.0) {
        basis.col(cols++) = y.real();
        basis.col(cols++) = y.imag();
      } else if (i == 0 || std::abs(rs.values[i] - std::conj(rs.values[i - 1])) > 1e-12 * std::max(1.0, std::abs(rs.values[i]))) {
        // Lone member of a pair: its partner lies beyond p.
        basis.col(cols++) = y.real();
        basis.col(cols++) = y.imag();
      }
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis.leftCols(cols));
    qr.setThreshold(1e-10);
    const int rank = std::min<int>(static_cast<int>(qr.rank()), m - 1);
    const Eigen::MatrixXd q = Eigen::MatrixXd(qr.householderQ()).leftCols(rank);

    const Eigen::MatrixXd t = q.transpose() * gm * q;
    const Eigen::RowVectorXd b = last * q;
    Eigen::MatrixXd vnew(n, rank + 1);
    vnew.leftCols(rank) = v.leftCols(m) * q;
    vnew.col(rank) = v.col(m);
    v.leftCols(rank + 1) = vnew;
    g.setZero();
    g.topLeftCorner(rank, rank) = t;
    g.row(rank).head(rank) = b;
    start = rank;
  }
  std::ostringstream msg;
  msg << "Krylov-Schur iteration did not converge after " << opts.max_restarts
      << " restarts (best residual " << best_residual << ")";
  throw ConvergenceError(msg.str(), best_residual);
}

Eigen::VectorXd leading_halfvector(const Spectrum& s, std::size_t which) {
  if (!s.vectors) throw ContractError("spectrum carries no eigenvectors");
  if (which >= s.values.size()) throw ContractError("eigenpair index out of range");
  const Eigen::Index dim = s.vectors->rows();
  if (dim % 2 != 0) throw ContractError("operator dimension is not even");
  return s.vectors->col(static_cast<Eigen::Index>(which)).head(dim / 2).real();
}

}  // namespace nbgof
