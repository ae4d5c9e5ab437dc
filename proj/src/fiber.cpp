#include "twistguide/fiber.hpp"

#include "twistguide/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace twg {

TwistProfile::TwistProfile(std::vector<cplx> coeffs) : coeffs_(std::move(coeffs))
{
  if (coeffs_.empty() || coeffs_.size() % 2 == 0) {
    throw std::invalid_argument("TwistProfile: need an odd number of coefficients (m = -M..M)");
  }
  const int M = order();
  for (int m = 0; m <= M; ++m) {
    const cplx a = coeffs_[static_cast<std::size_t>(M + m)];
    const cplx b = coeffs_[static_cast<std::size_t>(M - m)];
    if (std::abs(a - std::conj(b)) > 1e-12 * (1.0 + std::abs(a))) {
      throw std::invalid_argument("TwistProfile: coefficients must satisfy c_{-m} = conj(c_m)");
    }
  }
  // enforce exact symmetry so that beta(x) is real to the last bit
  for (int m = 1; m <= M; ++m) {
    coeffs_[static_cast<std::size_t>(M - m)] = std::conj(coeffs_[static_cast<std::size_t>(M + m)]);
  }
  coeffs_[static_cast<std::size_t>(M)] = cplx(coeffs_[static_cast<std::size_t>(M)].real(), 0.0);
}

TwistProfile TwistProfile::constant(double value) { return TwistProfile({cplx(value, 0.0)}); }

TwistProfile TwistProfile::trigonometric(double mean, const std::vector<double>& cosines, const std::vector<double>& sines)
{
  const int M = static_cast<int>(std::max(cosines.size(), sines.size()));
  std::vector<cplx> c(static_cast<std::size_t>(2 * M + 1), cplx(0.0));
  c[static_cast<std::size_t>(M)] = mean;
  for (int m = 1; m <= M; ++m) {
    const double a = m <= static_cast<int>(cosines.size()) ? cosines[static_cast<std::size_t>(m - 1)] : 0.0;
    const double b = m <= static_cast<int>(sines.size()) ? sines[static_cast<std::size_t>(m - 1)] : 0.0;
    // a cos + b sin = (a - ib)/2 e^{imx} + (a + ib)/2 e^{-imx}
    c[static_cast<std::size_t>(M + m)] = cplx(0.5 * a, -0.5 * b);
    c[static_cast<std::size_t>(M - m)] = cplx(0.5 * a, 0.5 * b);
  }
  return TwistProfile(std::move(c));
}

cplx TwistProfile::coefficient(int m) const
{
  const int M = order();
  if (m < -M || m > M) {
    return cplx(0.0);
  }
  return coeffs_[static_cast<std::size_t>(m + M)];
}

bool TwistProfile::is_constant() const
{
  for (int m = 1; m <= order(); ++m) {
    if (coefficient(m) != cplx(0.0)) {
      return false;
    }
  }
  return true;
}

double TwistProfile::derivative(double x3, int n) const
{
  const int M = order();
  double value = coefficient(0).real() * (n == 0 ? 1.0 : 0.0);
  for (int m = 1; m <= M; ++m) {
    // (im)^n c_m e^{imx} + conj = 2 Re[(im)^n c_m e^{imx}]
    const cplx factor = std::pow(cplx(0.0, m), n);
    value += 2.0 * (factor * coefficient(m) * std::polar(1.0, m * x3)).real();
  }
  return value;
}

double TwistProfile::max_abs() const
{
  double sampled = 0.0;
  const int samples = 64 * (order() + 1);
  for (int s = 0; s < samples; ++s) {
    sampled = std::max(sampled, std::abs((*this)(2.0 * std::numbers::pi * s / samples)));
  }
  return sampled;
}

FiberMatrix assemble_fiber(const TransverseOperators& ops, const TwistProfile& beta, double k, int ell_max)
{
  const int M = beta.order();
  if (ell_max < M) {
    std::ostringstream msg;
    msg << "ell_max = " << ell_max << " is below the twist order M = " << M;
    throw TruncationTooSmall(msg.str());
  }
  const int n = ops.size();
  const int in_modes = 2 * ell_max + 1;
  const int out_modes = 2 * (ell_max + M) + 1;
  using T = Eigen::Triplet<cplx>;

  // G: rows (p, node), p = -(ell_max+M)..ell_max+M; columns (l, node)
  std::vector<T> g;
  g.reserve(static_cast<std::size_t>(in_modes) * static_cast<std::size_t>(n) *
            static_cast<std::size_t>(1 + (2 * M + 1) * 4));
  for (int l = -ell_max; l <= ell_max; ++l) {
    const int col0 = (l + ell_max) * n;
    {
      const int row0 = (l + ell_max + M) * n;
      const cplx diag(0.0, l + k);
      for (int i = 0; i < n; ++i) {
        g.emplace_back(row0 + i, col0 + i, diag);
      }
    }
    for (int m = -M; m <= M; ++m) {
      const cplx bm = beta.coefficient(m);
      if (bm == cplx(0.0)) {
        continue;
      }
      const int row0 = (l + m + ell_max + M) * n;
      for (int c = 0; c < ops.dphi.outerSize(); ++c) {
        for (SparseMatrixR::InnerIterator it(ops.dphi, c); it; ++it) {
          g.emplace_back(row0 + static_cast<int>(it.row()), col0 + static_cast<int>(it.col()), bm * it.value());
        }
      }
    }
  }
  SparseMatrixC G(out_modes * n, in_modes * n);
  G.setFromTriplets(g.begin(), g.end());

  std::vector<T> lap;
  lap.reserve(static_cast<std::size_t>(in_modes) * static_cast<std::size_t>(ops.laplacian_t.nonZeros()));
  for (int l = 0; l < in_modes; ++l) {
    for (int c = 0; c < ops.laplacian_t.outerSize(); ++c) {
      for (SparseMatrixR::InnerIterator it(ops.laplacian_t, c); it; ++it) {
        lap.emplace_back(l * n + static_cast<int>(it.row()), l * n + static_cast<int>(it.col()), cplx(it.value(), 0.0));
      }
    }
  }
  SparseMatrixC L(in_modes * n, in_modes * n);
  L.setFromTriplets(lap.begin(), lap.end());

  SparseMatrixC H = L + SparseMatrixC(G.adjoint()) * G;
  // exact Hermitian symmetry: average with the adjoint
  SparseMatrixC Ht = H.adjoint();
  H = (H + Ht) * 0.5;
  H.prune(cplx(0.0));
  H.makeCompressed();

  FiberMatrix fm;
  fm.k = k;
  fm.ell_max = ell_max;
  fm.n_omega = n;
  fm.matrix = std::move(H);
  return fm;
}

EigenPairs lowest_eigenpairs(const FiberMatrix& fm, int count, double tol, const EigenSolverOptions& base)
{
  EigenSolverOptions opt = base;
  opt.tol = tol;
  const HermitianEigen he = lowest_eigenpairs(fm.matrix, count, opt);
  return {he.values, he.vectors, he.residuals, he.method};
}

Eigen::VectorXd fiber_eigenvalues(const TransverseOperators& ops, const TwistProfile& beta, double k, int ell_max,
                                  int count, double tol, const EigenSolverOptions& base)
{
  return lowest_eigenpairs(assemble_fiber(ops, beta, k, ell_max), count, tol, base).values;
}

std::string dump_fiber(const FiberMatrix& fm)
{
  std::ostringstream os;
  os.precision(17);
  os << "# fiber k " << fm.k << " ell_max " << fm.ell_max << " n_omega " << fm.n_omega << " nnz "
     << fm.matrix.nonZeros() << "\n";
  for (int c = 0; c < fm.matrix.outerSize(); ++c) {
    for (SparseMatrixC::InnerIterator it(fm.matrix, c); it; ++it) {
      os << it.row() << " " << it.col() << " " << it.value().real() << " " << it.value().imag() << "\n";
    }
  }
  return os.str();
}

} // namespace twg
