#pragma once

// Gaussian and covariance algebra shared by the latent, covariance and
// sampler modules. Free functions templated on the scalar type.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>

namespace mixscale {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Cholesky factor of an SPD matrix, or nullopt when the factorization fails.
template <typename Derived>
std::optional<Eigen::LLT<MatrixX<typename Derived::Scalar>>> try_cholesky(
    const Eigen::MatrixBase<Derived>& m) {
  Eigen::LLT<MatrixX<typename Derived::Scalar>> llt(m);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const auto& l = llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i)
    if (!(l(i, i) > 0) || !std::isfinite(l(i, i))) return std::nullopt;
  return llt;
}

template <typename Scalar>
Scalar log_det(const Eigen::LLT<MatrixX<Scalar>>& llt) {
  return Scalar(2) * llt.matrixLLT().diagonal().array().log().sum();
}

/// log N_q(x | mean, scale * C) where `llt` factors C.
template <typename Scalar, typename DerivedX, typename DerivedM>
Scalar log_normal_density(const Eigen::MatrixBase<DerivedX>& x,
                          const Eigen::MatrixBase<DerivedM>& mean,
                          const Eigen::LLT<MatrixX<Scalar>>& llt, Scalar logdet, Scalar scale = 1) {
  const auto q = static_cast<Scalar>(x.size());
  VectorX<Scalar> r = x - mean;
  llt.matrixL().solveInPlace(r);
  return Scalar(-0.5) * (q * std::log(Scalar(2) * std::numbers::pi_v<Scalar> * scale) + logdet +
                         r.squaredNorm() / scale);
}

/// Sigma = Lambda * Omega * Lambda for Lambda = diag(sd).
template <typename DerivedS, typename DerivedC>
MatrixX<typename DerivedC::Scalar> compose_sigma(const Eigen::MatrixBase<DerivedS>& sd,
                                                 const Eigen::MatrixBase<DerivedC>& corr) {
  return sd.asDiagonal() * corr * sd.asDiagonal();
}

template <typename Scalar>
struct ConditionalMoments {
  Scalar mean;
  Scalar variance;
};

/// Moments of coordinate `coord` of N(mu, scale * sigma) given the remaining
/// coordinates fixed at z, by partitioning sigma around `coord`.
template <typename DerivedS, typename DerivedM, typename DerivedZ>
ConditionalMoments<typename DerivedS::Scalar> conditional_moments(
    const Eigen::MatrixBase<DerivedS>& sigma, const Eigen::MatrixBase<DerivedM>& mu,
    const Eigen::MatrixBase<DerivedZ>& z, Eigen::Index coord, typename DerivedS::Scalar scale) {
  using Scalar = typename DerivedS::Scalar;
  const Eigen::Index q = sigma.rows();
  if (q == 1) return {mu(0), scale * sigma(0, 0)};

  // Indices of the conditioning block.
  Eigen::VectorXi rest(q - 1);
  for (Eigen::Index l = 0, k = 0; l < q; ++l)
    if (l != coord) rest(k++) = static_cast<int>(l);

  MatrixX<Scalar> s22(q - 1, q - 1);
  VectorX<Scalar> s21(q - 1), dz(q - 1);
  for (Eigen::Index a = 0; a < q - 1; ++a) {
    s21(a) = sigma(rest(a), coord);
    dz(a) = z(rest(a)) - mu(rest(a));
    for (Eigen::Index b = 0; b < q - 1; ++b) s22(a, b) = sigma(rest(a), rest(b));
  }
  auto llt = try_cholesky(s22);
  if (!llt) throw std::runtime_error("conditional_moments: covariance block is not positive definite");
  const VectorX<Scalar> solved = llt->solve(s21);
  const Scalar mean = mu(coord) + solved.dot(dz);
  const Scalar var = scale * (sigma(coord, coord) - solved.dot(s21));
  return {mean, var};
}

/// Same moments from the precision matrix P = sigma^{-1}: the conditional
/// variance is scale / P_cc and the mean is mu_c - sum_l P_cl (z_l - mu_l) / P_cc.
template <typename DerivedP, typename DerivedM, typename DerivedZ>
ConditionalMoments<typename DerivedP::Scalar> conditional_moments_from_precision(
    const Eigen::MatrixBase<DerivedP>& precision, const Eigen::MatrixBase<DerivedM>& mu,
    const Eigen::MatrixBase<DerivedZ>& z, Eigen::Index coord, typename DerivedP::Scalar scale) {
  using Scalar = typename DerivedP::Scalar;
  const Scalar pcc = precision(coord, coord);
  Scalar acc = 0;
  for (Eigen::Index l = 0; l < precision.rows(); ++l)
    if (l != coord) acc += precision(coord, l) * (z(l) - mu(l));
  return {mu(coord) - acc / pcc, scale / pcc};
}

}  // namespace mixscale
