#include "fraclab/eigen_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <fmt/format.h>

#include "fraclab/errors.hpp"

namespace fraclab {

namespace {

double off_diagonal_norm(const Eigen::MatrixXd& A) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) sum += 2.0 * A(i, j) * A(i, j);
  }
  return std::sqrt(sum);
}

/// One Jacobi rotation annihilating A(p, q), p < q. Both triangles of A are kept.
void rotate(Eigen::MatrixXd& A, Eigen::MatrixXd& V, Eigen::Index p, Eigen::Index q) {
  const double apq = A(p, q);
  const double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;

  const Eigen::Index n = A.rows();
  double* colp = A.col(p).data();
  double* colq = A.col(q).data();
  for (Eigen::Index r = 0; r < n; ++r) {
    if (r == p || r == q) continue;
    const double arp = colp[r];
    const double arq = colq[r];
    colp[r] = c * arp - s * arq;
    colq[r] = s * arp + c * arq;
    A(p, r) = colp[r];
    A(q, r) = colq[r];
  }
  A(p, p) -= t * apq;
  A(q, q) += t * apq;
  A(p, q) = 0.0;
  A(q, p) = 0.0;

  double* vp = V.col(p).data();
  double* vq = V.col(q).data();
  for (Eigen::Index r = 0; r < n; ++r) {
    const double a = vp[r];
    const double b = vq[r];
    vp[r] = c * a - s * b;
    vq[r] = s * a + c * b;
  }
}

EigenResult sorted(Eigen::VectorXd values, const Eigen::MatrixXd& vectors, int sweeps,
                   double off) {
  const auto n = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });
  EigenResult result;
  result.values.resize(n);
  result.vectors.resize(vectors.rows(), n);
  for (Eigen::Index k = 0; k < n; ++k) {
    result.values[k] = values[order[static_cast<std::size_t>(k)]];
    result.vectors.col(k) = vectors.col(order[static_cast<std::size_t>(k)]);
  }
  result.sweeps = sweeps;
  result.off_diagonal = off;
  return result;
}

EigenResult jacobi(Eigen::MatrixXd A, const EigenOptions& options) {
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd V = Eigen::MatrixXd::Identity(n, n);
  const double scale = A.norm();
  if (scale == 0.0) return sorted(A.diagonal(), V, 0, 0.0);

  double off = off_diagonal_norm(A) / scale;
  int sweep = 0;
  while (off > options.tolerance) {
    if (sweep == options.max_sweeps) {
      throw ConvergenceError(
          fmt::format("Jacobi iteration did not converge in {} sweeps (relative off-diagonal {:.3e})",
                      options.max_sweeps, off),
          off);
    }
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = A(p, q);
        if (apq == 0.0) continue;
        // entries below rounding of both diagonals are dropped instead of rotated
        const double g = 100.0 * std::abs(apq);
        if (sweep > 3 && std::abs(A(p, p)) + g == std::abs(A(p, p)) &&
            std::abs(A(q, q)) + g == std::abs(A(q, q))) {
          A(p, q) = 0.0;
          A(q, p) = 0.0;
          continue;
        }
        rotate(A, V, p, q);
      }
    }
    ++sweep;
    off = off_diagonal_norm(A) / scale;
  }
  return sorted(A.diagonal(), V, sweep, off);
}

}  // namespace

void normalize_signs(Eigen::MatrixXd& vectors) {
  for (Eigen::Index k = 0; k < vectors.cols(); ++k) {
    auto col = vectors.col(k);
    const double largest = col.cwiseAbs().maxCoeff();
    if (largest == 0.0) continue;
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      if (std::abs(col[i]) >= (1.0 - 1e-8) * largest) {
        if (col[i] < 0.0) col = -col;
        break;
      }
    }
  }
}

EigenResult symmetric_eigen(const Eigen::MatrixXd& A, const EigenOptions& options) {
  if (A.rows() != A.cols()) {
    throw DimensionMismatch(fmt::format("eigensolver needs a square matrix, got {}x{}", A.rows(),
                                        A.cols()));
  }
  EigenResult result;
  if (options.method == EigenMethod::jacobi) {
    result = jacobi(0.5 * (A + A.transpose()), options);
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(A);
    if (solver.info() != Eigen::Success) {
      throw ConvergenceError("tridiagonal QR iteration did not converge", std::nan(""));
    }
    result = sorted(solver.eigenvalues(), solver.eigenvectors(), 0, 0.0);
  }
  normalize_signs(result.vectors);
  return result;
}

EigenResult generalized_eigen(const Eigen::MatrixXd& K, const Eigen::MatrixXd& M,
                              const EigenOptions& options) {
  if (K.rows() != K.cols() || M.rows() != M.cols() || K.rows() != M.rows()) {
    throw DimensionMismatch("stiffness and mass matrices must be square and of equal size");
  }
  Eigen::LLT<Eigen::MatrixXd> chol(M);
  if (chol.info() != Eigen::Success) {
    throw SingularMass("mass matrix is not positive definite (Cholesky factorization failed)");
  }
  const auto L = chol.matrixL();
  // L^{-1} K L^{-T}
  Eigen::MatrixXd half = L.solve(K);
  Eigen::MatrixXd reduced = L.solve(half.transpose());
  EigenResult standard = symmetric_eigen(reduced, options);
  standard.vectors = chol.matrixU().solve(standard.vectors);
  normalize_signs(standard.vectors);
  return standard;
}

}  // namespace fraclab
