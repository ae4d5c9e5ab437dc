#include "twistguide/linalg.hpp"

#include "twistguide/error.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace twg {

Inertia sparse_inertia(const Eigen::SparseMatrix<double>& symmetric)
{
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt(symmetric);
  if (ldlt.info() != Eigen::Success) {
    throw FactorizationBreakdown("LDL^T hit a zero pivot");
  }
  Inertia result;
  const Eigen::VectorXd d = ldlt.vectorD();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i])) {
      throw FactorizationBreakdown("non-finite pivot in LDL^T");
    }
    if (d[i] < 0.0) {
      ++result.negative;
    } else if (d[i] > 0.0) {
      ++result.positive;
    } else {
      ++result.zero;
    }
  }
  return result;
}

long tridiagonal_negative_count(std::span<const double> diag, std::span<const double> off)
{
  long negatives = 0;
  double pivot = 1.0;
  constexpr double tiny = std::numeric_limits<double>::min();
  for (std::size_t i = 0; i < diag.size(); ++i) {
    pivot = (i == 0) ? diag[0] : diag[i] - off[i - 1] * off[i - 1] / pivot;
    if (pivot == 0.0) {
      pivot = -tiny;
    }
    if (pivot < 0.0) {
      ++negatives;
    }
  }
  return negatives;
}

void fix_phase(Eigen::Ref<Eigen::VectorXcd> v)
{
  if (v.size() == 0) {
    return;
  }
  const double largest = v.cwiseAbs().maxCoeff();
  if (largest == 0.0) {
    return;
  }
  Eigen::Index pick = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) >= largest * (1.0 - 1e-9)) {
      pick = i;
      break;
    }
  }
  const cplx rotation = std::conj(v[pick]) / std::abs(v[pick]);
  v *= rotation;
  v[pick] = cplx(v[pick].real(), 0.0);
}

namespace {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

void finish_pairs(const SparseMatrixC& H, HermitianEigen& out)
{
  out.residuals.resize(out.values.size());
  for (Index i = 0; i < out.values.size(); ++i) {
    fix_phase(out.vectors.col(i));
    const VectorXcd r = H * out.vectors.col(i) - out.values[i] * out.vectors.col(i);
    out.residuals[i] = r.norm();
  }
}

HermitianEigen dense_solve(const SparseMatrixC& H, int count)
{
  const MatrixXcd dense = MatrixXcd(H);
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(dense);
  if (es.info() != Eigen::Success) {
    throw NoConvergence("dense Hermitian eigensolver failed");
  }
  HermitianEigen out;
  out.values = es.eigenvalues().head(count);
  out.vectors = es.eigenvectors().leftCols(count);
  out.method = "dense";
  out.iterations = 1;
  finish_pairs(H, out);
  return out;
}

// Orthonormalize the columns of X against Q[:, :m] and among themselves.
// Columns that collapse below `drop` relative norm are removed.
MatrixXcd orthonormalize_block(const MatrixXcd& Q, Index m, MatrixXcd X)
{
  const Eigen::VectorXd original = X.colwise().norm();
  for (int pass = 0; pass < 2; ++pass) {
    if (m > 0) {
      X -= Q.leftCols(m) * (Q.leftCols(m).adjoint() * X);
    }
  }
  std::vector<VectorXcd> kept;
  for (Index j = 0; j < X.cols(); ++j) {
    VectorXcd v = X.col(j);
    for (int pass = 0; pass < 2; ++pass) {
      if (m > 0) {
        v -= Q.leftCols(m) * (Q.leftCols(m).adjoint() * v);
      }
      for (const auto& u : kept) {
        v -= u * u.dot(v);
      }
    }
    const double nv = v.norm();
    if (nv > 1e-10 * std::max(original[j], 1e-300)) {
      kept.push_back(v / nv);
    }
  }
  MatrixXcd out(X.rows(), static_cast<Index>(kept.size()));
  for (Index j = 0; j < out.cols(); ++j) {
    out.col(j) = kept[static_cast<std::size_t>(j)];
  }
  return out;
}

MatrixXcd random_block(Index n, Index cols, std::mt19937_64& rng)
{
  std::normal_distribution<double> normal;
  MatrixXcd X(n, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < n; ++i) {
      X(i, j) = cplx(normal(rng), normal(rng));
    }
  }
  return X;
}

HermitianEigen krylov_solve(const SparseMatrixC& H, int count, const EigenSolverOptions& opt)
{
  const Index n = H.rows();
  Eigen::SimplicialLLT<SparseMatrixC, Eigen::Lower, Eigen::AMDOrdering<int>> llt(H);
  if (llt.info() != Eigen::Success) {
    throw NoConvergence("Cholesky factorization failed; operator is not positive definite");
  }

  const Index block = std::clamp<Index>(opt.block_size, 1, n);
  const Index keep = std::min<Index>(n, std::max<Index>(count + block, 2 * count));
  const Index capacity = std::min<Index>(n, std::max<Index>(opt.max_basis, keep + 2 * block));

  std::mt19937_64 rng(opt.seed);
  MatrixXcd Q(n, capacity);
  MatrixXcd AQ(n, capacity);
  MatrixXcd P = MatrixXcd::Zero(capacity, capacity);
  Index m = 0;
  MatrixXcd X = random_block(n, block, rng);

  HermitianEigen out;
  out.method = "block-krylov";
  int restarts = 0;
  double worst = std::numeric_limits<double>::infinity();

  for (int iter = 1;; ++iter) {
    MatrixXcd fresh = orthonormalize_block(Q, m, X);
    if (fresh.cols() == 0) {
      fresh = orthonormalize_block(Q, m, random_block(n, block, rng));
    }
    fresh = fresh.leftCols(std::min<Index>(fresh.cols(), capacity - m));
    if (fresh.cols() == 0 && m < count) {
      throw NoConvergence("Krylov basis exhausted before reaching the requested count");
    }
    const MatrixXcd W = llt.solve(fresh);
    const Index added = fresh.cols();
    Q.middleCols(m, added) = fresh;
    AQ.middleCols(m, added) = W;
    // projected operator, updated by the new columns only
    const MatrixXcd column = Q.leftCols(m + added).adjoint() * W;
    P.block(0, m, m + added, added) = column;
    P.block(m, 0, added, m) = column.topRows(m).adjoint();
    m += added;
    P.topLeftCorner(m, m) = (0.5 * (P.topLeftCorner(m, m) + P.topLeftCorner(m, m).adjoint())).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(P.topLeftCorner(m, m));
    // largest Ritz values of H^{-1} are the lowest of H
    const Index available = std::min<Index>(count, m);
    MatrixXcd S = es.eigenvectors().rightCols(available).rowwise().reverse();

    if (m >= count) {
      MatrixXcd Y = Q.leftCols(m) * S;
      Eigen::VectorXd values(count);
      Eigen::VectorXd residuals(count);
      worst = 0.0;
      for (Index i = 0; i < count; ++i) {
        Y.col(i).normalize();
        const VectorXcd Hy = H * Y.col(i);
        values[i] = Y.col(i).dot(Hy).real();
        residuals[i] = (Hy - values[i] * Y.col(i)).norm();
        worst = std::max(worst, residuals[i] / std::max(std::abs(values[i]), 1e-300));
      }
      if (worst <= opt.tol || m == n) {
        std::vector<Index> order(static_cast<std::size_t>(count));
        std::iota(order.begin(), order.end(), Index{0});
        std::sort(order.begin(), order.end(), [&](Index a, Index b) { return values[a] < values[b]; });
        out.values.resize(count);
        out.vectors.resize(n, count);
        for (Index i = 0; i < count; ++i) {
          out.values[i] = values[order[static_cast<std::size_t>(i)]];
          out.vectors.col(i) = Y.col(order[static_cast<std::size_t>(i)]);
        }
        out.iterations = iter;
        finish_pairs(H, out);
        return out;
      }
    }

    if (m + block > capacity) {
      if (++restarts > opt.max_restarts) {
        std::ostringstream msg;
        msg << "no convergence after " << restarts - 1 << " restarts (" << iter
            << " block steps, worst relative residual " << worst << ", tol " << opt.tol << ")";
        throw NoConvergence(msg.str());
      }
      const Index kept = std::min<Index>(keep, m);
      const MatrixXcd Sk = es.eigenvectors().rightCols(kept).rowwise().reverse();
      const MatrixXcd Qk = Q.leftCols(m) * Sk;
      const MatrixXcd AQk = AQ.leftCols(m) * Sk;
      Q.leftCols(kept) = Qk;
      AQ.leftCols(kept) = AQk;
      P.topLeftCorner(kept, kept) = Qk.adjoint() * AQk;
      m = kept;
      X = AQk.leftCols(std::min<Index>(block, kept));
    } else {
      X = W;
    }
  }
}

} // namespace

HermitianEigen lowest_eigenpairs(const SparseMatrixC& H, int count, const EigenSolverOptions& options)
{
  if (H.rows() != H.cols()) {
    throw std::invalid_argument("lowest_eigenpairs: matrix must be square");
  }
  if (count < 1 || count > H.rows()) {
    throw std::invalid_argument("lowest_eigenpairs: count must lie in [1, dimension]");
  }
  if (!(options.tol > 0.0)) {
    throw std::invalid_argument("lowest_eigenpairs: tol must be positive");
  }
  if (H.rows() <= options.dense_threshold) {
    return dense_solve(H, count);
  }
  return krylov_solve(H, count, options);
}

} // namespace twg
