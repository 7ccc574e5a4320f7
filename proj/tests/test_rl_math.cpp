#include "rmfs/rl_math.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace rmfs;
using namespace rmfs::rl;
using Vec = Eigen::VectorXd;
using rmfs::testing::direct_gae;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("potential examples") {
  CHECK(potential(vec({0, 0, 0}), 8.0) == 0.0);
  CHECK(potential(vec({3, 4}), 2.0) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-12));
  CHECK(potential(vec({3, 4}), 1.0) == doctest::Approx(3.5).epsilon(1e-12));
  CHECK_THROWS_AS(potential(Vec(0), 2.0), InputError);
  CHECK_THROWS_AS(potential(vec({1}), 0.5), InputError);
  // No overflow at large exponents.
  CHECK(std::isfinite(potential(vec({1e6, 2e6}), 32.0)));
}

TEST_CASE("potential is a power mean") {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0, 5000);
  for (int i = 0; i < 500; ++i) {
    Vec t(1 + i % 9);
    for (auto& x : t) x = u(rng);
    double prev = 0;
    for (double p : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
      const double phi = potential(t, p);
      CHECK(phi >= prev - 1e-9 * t.maxCoeff());
      CHECK(phi <= t.maxCoeff() * (1 + 1e-12));
      CHECK(t.maxCoeff() <= std::pow(static_cast<double>(t.size()), 1 / p) * phi * (1 + 1e-12));
      CHECK(potential(Vec(3.0 * t), p) == doctest::Approx(3.0 * phi).epsilon(1e-12));
      prev = phi;
    }
  }
}

TEST_CASE("shaped reward and discount") {
  CHECK(shaped_reward(2.0, 2.0, 1.0, 5.0) == 0.0);
  CHECK(shaped_reward(3.5355, 4.0, 1.0, 1.0) == doctest::Approx(-0.4645));
  CHECK(shaped_reward(1.0, 2.0, 0.5, 2.0) == doctest::Approx(0.5));
  CHECK(shaped_reward(1.0, 2.0, 0.5, 2.0, true) == doctest::Approx(0.0));
  CHECK_THROWS_AS(shaped_reward(1.0, 1.0, 0.9, -1.0), InputError);
  CHECK(time_discount(0.99, 0.0) == 1.0);
  CHECK(time_discount(0.99, 2.0) == doctest::Approx(0.9801));
  CHECK(time_discount(1.0, 37.0) == 1.0);
}

TEST_CASE("TD errors") {
  CHECK(td_errors(vec({0, 0}), vec({2, 2, 2}), vec({1, 1}), 1.0).isZero());
  CHECK(td_errors(vec({1}), vec({2, 3}), vec({1}), 0.9)[0] == doctest::Approx(1.7));
  CHECK(td_errors(vec({0}), vec({0, 4}), vec({0}), 0.5)[0] == 4.0);
  CHECK_THROWS_AS(td_errors(vec({1}), vec({2}), vec({1}), 0.9), InputError);
}

TEST_CASE("time-aware GAE") {
  CHECK(gae(vec({1}), vec({3}), 0.9, 0.5)[0] == 1.0);
  const Vec a = gae(vec({1, 2}), vec({1, 1}), 0.9, 0.5);
  CHECK(a[0] == doctest::Approx(1.9));
  CHECK(a[1] == 2.0);
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(-3, 3), dt(0, 20);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Index n = 1 + i % 40;
    Vec delta(n), dtau(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      delta[k] = u(rng);
      dtau[k] = std::floor(dt(rng));
    }
    const Vec fast = gae(delta, dtau, 0.99, 0.95);
    const Vec slow = direct_gae(delta, dtau, 0.99, 0.95);
    CHECK((fast - slow).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("PPO loss components") {
  const Vec ones = Vec::Ones(3);
  const Vec adv = vec({1, -2, 0.5});
  auto l = ppo_losses(ones, adv, ones, ones, Vec::Zero(3), 0.1, 0.5, 0.01);
  CHECK(l.clip == doctest::Approx(adv.mean()));
  CHECK(l.value == 0.0);
  l = ppo_losses(vec({2}), vec({1}), vec({0}), vec({2}), vec({0.3}), 0.1, 0.5, 0.01);
  CHECK(l.clip == doctest::Approx(1.1));
  CHECK(l.value == doctest::Approx(4.0));
  CHECK(l.entropy == doctest::Approx(0.3));
  CHECK(l.total == doctest::Approx(1.1 - 0.5 * 4.0 + 0.01 * 0.3));
  // Negative advantage with a small ratio takes the clipped (more pessimistic) branch.
  l = ppo_losses(vec({0.5}), vec({-1}), vec({0}), vec({0}), vec({0}), 0.2, 0, 0);
  CHECK(l.clip == doctest::Approx(-0.8));
  CHECK_THROWS_AS(ppo_losses(ones, adv, ones, ones, Vec::Zero(3), 0.0, 0.5, 0.01), InputError);
}

TEST_CASE("phase bias") {
  CHECK(phase_bias(Phase::Pickup, std::exp(1.0) - 1e-6) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(phase_bias(Phase::Delivery, 0.0) == doctest::Approx(13.8155).epsilon(1e-5));
  CHECK(phase_bias(Phase::Return, 1.0) == doctest::Approx(-1e-6).epsilon(1e-3));
  CHECK_THROWS_AS(phase_bias(Phase::Pickup, -1.0), InputError);
}

TEST_CASE("masked softmax") {
  const Eigen::VectorXi all = Eigen::VectorXi::Ones(2);
  Vec p = masked_softmax(vec({0, 0}), all);
  CHECK(p[0] == 0.5);
  CHECK(p[1] == 0.5);
  Eigen::VectorXi m(3);
  m << 1, 0, 1;
  p = masked_softmax(vec({1, 1, 1}), m);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == 0.0);
  p = masked_softmax(vec({1000, 0}), all);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == doctest::Approx(std::exp(-1000.0)));
  CHECK(std::isfinite(p[1]));
  CHECK_THROWS_AS(masked_softmax(vec({1, 2}), Eigen::VectorXi::Zero(2)), InputError);
  std::mt19937 rng(3);
  std::normal_distribution<double> g(0, 30);
  for (int i = 0; i < 200; ++i) {
    Vec z(7);
    Eigen::VectorXi mask(7);
    for (int k = 0; k < 7; ++k) {
      z[k] = g(rng);
      mask[k] = (k == i % 7) || (rng() % 2);
    }
    p = masked_softmax(z, mask);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-12);
    for (int k = 0; k < 7; ++k) {
      if (!mask[k]) CHECK(p[k] == 0.0);
    }
  }
}
