#pragma once

// Reward shaping and advantage kernels. Header-only; every kernel is templated on the scalar
// type through its Eigen argument(s).

#include "rmfs/core.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

namespace rmfs::rl {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

struct ShapingConfig {
  double p = 8.0;
  double gamma = 0.99;       // per-second discount
  double lambda = 0.95;
  bool literal_gamma = false;  // use plain gamma in the shaping term instead of gamma^dtau
};

/// Scaled L_p norm of active times: ((1/N) sum T_r^p)^(1/p), max factored out for p up to 32+.
template <typename Derived>
typename Derived::Scalar potential(const Eigen::DenseBase<Derived>& active_times,
                                   typename Derived::Scalar p) {
  using Scalar = typename Derived::Scalar;
  const auto n = active_times.size();
  if (n == 0) throw InputError("potential: empty active-time vector");
  if (!(p >= Scalar(1))) throw InputError("potential: p must be >= 1");
  const Scalar m = active_times.maxCoeff();
  if (m <= Scalar(0)) return Scalar(0);
  const Scalar mean_pow = (active_times.derived().array() / m).pow(p).sum() / Scalar(n);
  return m * std::pow(mean_pow, Scalar(1) / p);
}

template <typename Scalar>
Scalar time_discount(Scalar gamma, Scalar dtau) {
  return std::pow(gamma, dtau);
}

/// -(gamma^dtau * phi_next - phi_now); `literal_gamma` drops the exponent.
template <typename Scalar>
Scalar shaped_reward(Scalar phi_now, Scalar phi_next, Scalar gamma, Scalar dtau,
                     bool literal_gamma = false) {
  if (dtau < Scalar(0)) throw InputError("shaped_reward: negative dtau");
  const Scalar g = literal_gamma ? gamma : time_discount(gamma, dtau);
  return -(g * phi_next - phi_now);
}

/// delta_t = r_t + gamma^dtau_t V(s_{t+1}) - V(s_t). `values` has one more entry than
/// `rewards`: the bootstrap value of the state after the last transition.
template <typename DR, typename DV, typename DT>
Vector<typename DR::Scalar> td_errors(const Eigen::MatrixBase<DR>& rewards,
                                      const Eigen::MatrixBase<DV>& values,
                                      const Eigen::MatrixBase<DT>& dtaus,
                                      typename DR::Scalar gamma) {
  const auto n = rewards.size();
  if (values.size() != n + 1 || dtaus.size() != n) {
    throw InputError("td_errors: expected values of length n+1 and dtaus of length n");
  }
  Vector<typename DR::Scalar> delta(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    delta[t] = rewards[t] + time_discount(gamma, dtaus[t]) * values[t + 1] - values[t];
  }
  return delta;
}

/// A_t = delta_t + (lambda*gamma)^dtau_t A_{t+1}, i.e. the sum of (lambda*gamma)^{T_k} delta_{t+k}.
template <typename DD, typename DT>
Vector<typename DD::Scalar> gae(const Eigen::MatrixBase<DD>& deltas,
                                const Eigen::MatrixBase<DT>& dtaus, typename DD::Scalar gamma,
                                typename DD::Scalar lambda) {
  using Scalar = typename DD::Scalar;
  const auto n = deltas.size();
  if (dtaus.size() != n) throw InputError("gae: deltas and dtaus differ in length");
  Vector<Scalar> adv(n);
  Scalar next = Scalar(0);
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    next = deltas[t] + std::pow(lambda * gamma, dtaus[t]) * next;
    adv[t] = next;
  }
  return adv;
}

template <typename Scalar>
struct PpoLosses {
  Scalar clip = 0;
  Scalar value = 0;
  Scalar entropy = 0;
  Scalar total = 0;  // J = clip - c1 * value + c2 * entropy
};

template <typename D1, typename D2, typename D3, typename D4, typename D5>
PpoLosses<typename D1::Scalar> ppo_losses(const Eigen::MatrixBase<D1>& ratios,
                                          const Eigen::MatrixBase<D2>& advantages,
                                          const Eigen::MatrixBase<D3>& values,
                                          const Eigen::MatrixBase<D4>& value_targets,
                                          const Eigen::MatrixBase<D5>& entropies,
                                          typename D1::Scalar clip_eps, typename D1::Scalar c1,
                                          typename D1::Scalar c2) {
  using Scalar = typename D1::Scalar;
  const auto n = ratios.size();
  if (advantages.size() != n || values.size() != n || value_targets.size() != n ||
      entropies.size() != n) {
    throw InputError("ppo_losses: inputs differ in length");
  }
  if (n == 0) throw InputError("ppo_losses: empty batch");
  if (!(clip_eps > Scalar(0))) throw InputError("ppo_losses: clip epsilon must be positive");
  const auto r = ratios.array();
  const auto a = advantages.array();
  const auto unclipped = r * a;
  const auto clipped = r.min(Scalar(1) + clip_eps).max(Scalar(1) - clip_eps) * a;
  PpoLosses<Scalar> out;
  out.clip = unclipped.min(clipped).mean();
  out.value = (values - value_targets).array().square().mean();
  out.entropy = entropies.mean();
  out.total = out.clip - c1 * out.value + c2 * out.entropy;
  return out;
}

enum class Phase : std::uint8_t { Pickup, Delivery, Return };

/// Pickup: log(h + eps); Delivery: -log(u + eps); Return: -log(dist + eps).
template <typename Scalar>
Scalar phase_bias(Phase phase, Scalar value, Scalar eps = Scalar(1e-6)) {
  if (value < Scalar(0)) throw InputError("phase_bias: negative input");
  switch (phase) {
    case Phase::Pickup: return std::log(value + eps);
    case Phase::Delivery: return -std::log(value + eps);
    case Phase::Return: return -std::log(value + eps);
  }
  return Scalar(0);
}

/// Softmax over unmasked entries (max-subtracted); masked entries get exactly 0.
template <typename Derived, typename MaskDerived>
Vector<typename Derived::Scalar> masked_softmax(const Eigen::MatrixBase<Derived>& logits,
                                                const Eigen::MatrixBase<MaskDerived>& mask) {
  using Scalar = typename Derived::Scalar;
  const auto n = logits.size();
  if (mask.size() != n) throw InputError("masked_softmax: mask length mismatch");
  Scalar hi = -std::numeric_limits<Scalar>::infinity();
  bool any = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (mask[i]) {
      hi = std::max(hi, Scalar(logits[i]));
      any = true;
    }
  }
  if (!any) throw InputError("masked_softmax: every entry is masked");
  Vector<Scalar> p = Vector<Scalar>::Zero(n);
  Scalar z = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (mask[i]) {
      p[i] = std::exp(logits[i] - hi);
      z += p[i];
    }
  }
  return p / z;
}

}  // namespace rmfs::rl
