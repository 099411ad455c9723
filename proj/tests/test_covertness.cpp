#include <doctest.h>

#include <cmath>
#include <random>

#include "mfda/covertness.hpp"

using namespace mfda;

namespace {

// Direct closed forms, independent of the library's offset evaluation.
double kl_oracle(double l0, double l1) { return std::log(l1 / l0) + l0 / l1 - 1.0; }
double y_oracle(double x) { return std::log(x) + 1.0 / x - 1.0; }

}  // namespace

TEST_CASE("KL divergence and DEP bound values") {
  const auto s = DetectionStats<double>{1.0, 2.0};
  CHECK(kl_divergence(s) == doctest::Approx(0.193147).epsilon(1e-6));
  CHECK(dep_lower_bound(s) == doctest::Approx(0.68925).epsilon(1e-4));
  CHECK(kl_divergence(DetectionStats<double>{3.0, 3.0}) == 0.0);
  CHECK(dep_lower_bound(DetectionStats<double>{1.0, 1e6}) == 0.0);
  CHECK_THROWS_AS(kl_divergence(DetectionStats<double>{0.0, 1.0}), std::domain_error);
}

TEST_CASE("KL matches the closed form") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-6.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const double l0 = std::pow(10.0, u(rng)) * 1e-13;
    const double l1 = l0 * (1.0 + std::pow(10.0, u(rng)));
    CHECK(kl_divergence(DetectionStats<double>{l0, l1}) == doctest::Approx(kl_oracle(l0, l1)).epsilon(1e-9));
  }
}

TEST_CASE("y inverse") {
  CHECK(std::abs(y_inverse(0.02) - 1.2299) <= 1e-3);
  CHECK(std::abs(y_inverse(0.005) - 1.1073) <= 1e-3);
  CHECK(y_inverse(0.0) == 1.0);
  CHECK_THROWS_AS(y_inverse(-1e-3), std::domain_error);
  for (double t : {1e-12, 1e-6, 0.3, 1.0, 5.0, 10.0})
    CHECK(y_oracle(y_inverse(t)) == doctest::Approx(t).epsilon(1e-10));
  CHECK(std::abs(y_inverse(0.02f) - 1.2299f) <= 1e-3f);
}

TEST_CASE("covert power threshold") {
  CHECK(covert_power_threshold(1e-13, 0.1) == doctest::Approx(2.299e-14).epsilon(1e-3));
  CHECK(covert_power_threshold(1e-13, 0.0) == 0.0);
  CHECK(covert_power_threshold(1e-13, 0.05) < covert_power_threshold(1e-13, 0.1));
  CHECK_THROWS_AS(covert_power_threshold(0.0, 0.1), std::domain_error);
  CHECK_THROWS_AS(covert_power_threshold(1e-13, -0.1), std::domain_error);
}

TEST_CASE("threshold is exactly the KL boundary") {
  const double noise = 1e-13;
  for (double eps : {0.01, 0.1, 0.3}) {
    const double t = covert_power_threshold(noise, eps);
    CHECK(kl_divergence(DetectionStats<double>::from_signal(noise, t)) ==
          doctest::Approx(2.0 * eps * eps).epsilon(1e-10));
    CHECK(dep_lower_bound(DetectionStats<double>::from_signal(noise, t)) == doctest::Approx(1.0 - eps).epsilon(1e-10));
  }
}
