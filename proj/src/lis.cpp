#include "drmc/lis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <stdexcept>

namespace drmc {

LowRankSpectrum local_spectrum(const State& state, const WhitenedTarget& target, const Truncation& trunc,
                               const RandomizedEigOptions& eig) {
  const Index n = target.dim();
  const ModelPoint* point = state.point.get();
  if (!point) throw std::invalid_argument("state has no model point");
  const LinearAction H = [point](const Vector& u) { return point->gnh(u); };
  Index r = 0;
  if (trunc.mode == Truncation::Mode::fixed_rank) {
    r = trunc.rank;
  } else {
    r = trunc.max_rank > 0 ? trunc.max_rank : target.model().num_observations();
  }
  r = std::clamp<Index>(r, 0, n - eig.oversampling);
  LowRankSpectrum spec = generalized_eig(H, target.covariance(), r, eig);
  if (trunc.mode == Truncation::Mode::threshold) spec = spec.thresholded(trunc.threshold);
  spec.set_anchor(fingerprint(state.v));
  return spec;
}

LisState merge_lis(const LisState& state, const LowRankSpectrum& local) {
  if (state.frozen) throw std::logic_error("LIS is frozen");
  if (state.m >= state.settings.m_max) throw std::logic_error("LIS already absorbed m_max states");
  const Index n = state.spectrum.dim();
  if (local.dim() != n) throw std::invalid_argument("local spectrum dimension differs from LIS");

  const double m = state.m;
  const Index k = state.spectrum.rank(), kl = local.rank();
  LisState next = state;
  next.m = state.m + 1;

  LowRankSpectrum merged(n);
  if (k + kl > 0) {
    Matrix joint(n, k + kl);
    joint << state.spectrum.basis(), local.basis();
    const Index cols = std::min<Index>(n, k + kl);
    Eigen::HouseholderQR<Matrix> qr(joint);
    const Matrix Q = qr.householderQ() * Matrix::Identity(n, cols);
    const Matrix Pa = Q.transpose() * state.spectrum.basis();
    const Matrix Pb = Q.transpose() * local.basis();
    Matrix M = (m * Pa * state.spectrum.eigenvalues().asDiagonal() * Pa.transpose() +
                Pb * local.eigenvalues().asDiagonal() * Pb.transpose()) /
               (m + 1.0);
    M = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(M);
    if (eig.info() != Eigen::Success) throw NumericalError("LIS merge eigendecomposition failed");
    if (eig.eigenvalues().minCoeff() < -1e-10) throw NumericalError("LIS merge produced a negative eigenvalue");
    Index r = 0;
    while (r < cols && eig.eigenvalues()[cols - 1 - r] >= state.settings.rho_g) ++r;
    Vector lam(r);
    Matrix W(cols, r);
    for (Index i = 0; i < r; ++i) {
      lam[i] = eig.eigenvalues()[cols - 1 - i];
      W.col(i) = eig.eigenvectors().col(cols - 1 - i);
    }
    merged = LowRankSpectrum(std::move(lam), Q * W);
  }
  next.d_F = forstner_distance(state.spectrum, merged);
  next.spectrum = std::move(merged);
  next.history.push_back({next.m, next.spectrum.rank(), next.d_F});
  return next;
}

LisState update_lis(const LisState& lis, const State& state, const WhitenedTarget& target, const Truncation& trunc,
                    const RandomizedEigOptions& eig) {
  return merge_lis(lis, local_spectrum(state, target, trunc, eig));
}

bool adaptation_step(int n, LisState& lis, const std::function<LowRankSpectrum()>& local) {
  if (lis.frozen) return false;
  const auto& s = lis.settings;
  if ((n + 1) % s.n_lag != 0) return false;
  bool changed = false;
  if (lis.m < s.m_max && lis.d_F >= s.delta) {
    lis = merge_lis(lis, local());
    changed = true;
  }
  if (lis.m >= s.m_max || lis.d_F < s.delta) lis.frozen = true;
  return changed;
}

}  // namespace drmc
