#include "drmc/covariance.hpp"

#include "drmc/kernels.hpp"
#include "drmc/spectrum.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace drmc {

CovarianceOperator::CovarianceOperator(Matrix C) : C_(std::move(C)) {
  if (C_.rows() != C_.cols() || C_.rows() == 0) throw std::invalid_argument("covariance must be a non-empty square matrix");
  const double scale = C_.cwiseAbs().maxCoeff();
  if (!C_.allFinite()) throw NumericalError("covariance has non-finite entries");
  if ((C_ - C_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw std::invalid_argument("covariance is not symmetric");
  C_ = 0.5 * (C_ + C_.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> eig(C_);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition of the covariance failed");
  const Vector asc = eig.eigenvalues();
  const double lmax = asc[asc.size() - 1];
  if (!(asc[0] > 1e-13 * lmax)) {
    std::ostringstream msg;
    msg << "covariance is not positive definite (smallest eigenvalue " << asc[0] << ", largest " << lmax << ")";
    throw NumericalError(msg.str());
  }
  evals_ = asc.reverse();
  evecs_ = eig.eigenvectors().rowwise().reverse();
  const Vector root = evals_.cwiseSqrt();
  S_ = evecs_ * root.asDiagonal() * evecs_.transpose();
  S_inv_ = evecs_ * root.cwiseInverse().asDiagonal() * evecs_.transpose();
  S_ = 0.5 * (S_ + S_.transpose());
  S_inv_ = 0.5 * (S_inv_ + S_inv_.transpose());
}

LowRankSpectrum CovarianceOperator::leading_spectrum(Index r) const {
  if (r < 0 || r > dim()) throw std::invalid_argument("rank out of range");
  return LowRankSpectrum(evals_.head(r), evecs_.leftCols(r), Metric::identity);
}

CovarianceOperator build_prior_covariance(const std::vector<Eigen::Vector2d>& nodes, double sigma_u, double s0) {
  if (!(sigma_u > 0.0) || !(s0 > 0.0)) throw std::invalid_argument("sigma_u and s_0 must be positive");
  if (nodes.empty()) throw std::invalid_argument("no nodes given");
  Matrix C = kernels::exponential_kernel(nodes, sigma_u, s0);
  const double var = sigma_u * sigma_u;
  std::string last_error;
  for (double rel = 1e-10; rel <= 1e-6 * (1 + 1e-9); rel *= 10.0) {
    Matrix Cj = C;
    Cj.diagonal().array() += rel * var;
    try {
      CovarianceOperator cov(std::move(Cj));
      cov.jitter_ = rel * var;
      return cov;
    } catch (const NumericalError& e) {
      last_error = e.what();
    }
  }
  throw NumericalError("ill-conditioned kernel: factorization failed after jitter escalation to 1e-6 sigma^2 (" +
                       last_error + ")");
}

Vector sample_prior(const CovarianceOperator& cov, Rng& rng) {
  return cov.apply_sqrt(standard_normal(cov.dim(), rng));
}

GaussianSample sample_prior(const CovarianceOperator& cov, std::uint64_t seed) {
  Rng rng(seed);
  return {sample_prior(cov, rng), seed};
}

}  // namespace drmc
