#include <doctest.h>

#include <cmath>
#include <vector>

#include "ctf/error.hpp"
#include "ctf/rng.hpp"
#include "helpers.hpp"

using ctf::RngStream;
using testutil::contains;
using testutil::thrown;
using testutil::vecd;

TEST_SUITE("rng") {

TEST_CASE("same seed reproduces the raw stream") {
  RngStream a(42), b(42), c(43);
  bool all_equal = true;
  for (int i = 0; i < 100; ++i) all_equal = all_equal && (a.raw() == b.raw());
  CHECK(all_equal);
  RngStream a2(42);
  bool any_diff = false;
  for (int i = 0; i < 8; ++i) any_diff = any_diff || (a2.raw() != c.raw());
  CHECK(any_diff);
}

TEST_CASE("named splits are stable and distinct") {
  RngStream root(7);
  RngStream s1 = root.split("lambda");
  RngStream s2 = root.split("lambda");
  RngStream s3 = root.split("pi");
  CHECK(s1.raw() == s2.raw());
  CHECK(s1.seed() != s3.seed());
  CHECK(root.split(1).seed() != root.split(2).seed());
  // splitting must not disturb the parent stream
  RngStream fresh(7);
  CHECK(root.raw() == fresh.raw());
}

TEST_CASE("uniform stays inside its half-open interval") {
  RngStream rng(11);
  for (int i = 0; i < 20000; ++i) {
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 20000; ++i) {
    double u = rng.uniform_pos();
    CHECK(u > 0.0);
    CHECK(u <= 1.0);
  }
}

TEST_CASE("normal moments") {
  RngStream rng(5);
  const int n = 200000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = rng.normal();
    sum += x;
    sumsq += x * x;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.012);       // ~5 standard errors
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("gamma moments for both shape regimes") {
  RngStream rng(17);
  const int n = 200000;
  for (double shape : {2.5, 0.4}) {
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
      double x = rng.gamma(shape);
      CHECK(x > 0.0);
      sum += x;
      sumsq += x * x;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean - shape) < 0.02);
    CHECK(std::abs(var - shape) < 0.12);
  }
}

TEST_CASE("beta and dirichlet moments") {
  RngStream rng(23);
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = rng.beta(2.0, 3.0);
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
    sum += x;
  }
  CHECK(std::abs(sum / n - 0.4) < 0.01);

  const Eigen::VectorXd conc = vecd({1.0, 2.0, 3.0});
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd d = rng.dirichlet(conc);
    CHECK(std::abs(d.sum() - 1.0) < 1e-12);
    CHECK(d.minCoeff() >= 0.0);
    mean += d;
  }
  mean /= n;
  CHECK(std::abs(mean[0] - 1.0 / 6.0) < 0.01);
  CHECK(std::abs(mean[1] - 2.0 / 6.0) < 0.01);
  CHECK(std::abs(mean[2] - 3.0 / 6.0) < 0.01);
}

TEST_CASE("the three categorical samplers agree draw for draw") {
  std::vector<double> w = {0.2, 0.5, 0.3};
  std::vector<double> logw = {std::log(0.2), std::log(0.5), std::log(0.3)};
  std::vector<double> cum = {0.2, 0.7, 1.0};
  RngStream r1(31), r2(31), r3(31);
  for (int i = 0; i < 2000; ++i) {
    int a = r1.categorical(w);
    int b = r2.categorical_logits(logw);
    int c = r3.categorical_cdf(cum);
    CHECK(a == b);
    CHECK(a == c);
  }
}

TEST_CASE("categorical frequencies track the weights") {
  std::vector<double> w = {0.2, 0.5, 0.3};
  RngStream rng(37);
  const int n = 30000;
  std::vector<int> tally(3, 0);
  for (int i = 0; i < n; ++i) tally[static_cast<std::size_t>(rng.categorical(w))]++;
  for (int idx = 0; idx < 3; ++idx) {
    double p = w[static_cast<std::size_t>(idx)];
    double se = std::sqrt(p * (1.0 - p) / n);
    CHECK(std::abs(tally[static_cast<std::size_t>(idx)] / double(n) - p) < 4.0 * se);
  }
}

TEST_CASE("zero-weight categories are never selected") {
  std::vector<double> w = {0.0, 1.0, 0.0};
  RngStream rng(41);
  for (int i = 0; i < 200; ++i) CHECK(rng.categorical(w) == 1);
}

TEST_CASE("uniform_int covers its range") {
  RngStream rng(43);
  std::vector<int> seen(7, 0);
  for (int i = 0; i < 7000; ++i) {
    int v = rng.uniform_int(7);
    CHECK(v >= 0);
    CHECK(v < 7);
    seen[static_cast<std::size_t>(v)]++;
  }
  for (int v = 0; v < 7; ++v) CHECK(seen[static_cast<std::size_t>(v)] > 0);
}

TEST_CASE("degenerate arguments are rejected") {
  RngStream rng(47);
  CHECK(contains(thrown([&] { rng.gamma(0.0); }), "positive"));
  CHECK(contains(thrown([&] { rng.gamma(-1.0); }), "positive"));
  CHECK(!thrown([&] { (void)rng.categorical(std::vector<double>{}); }).empty());
  CHECK(!thrown([&] { (void)rng.categorical(std::vector<double>{0.0, 0.0}); }).empty());
  CHECK(!thrown([&] { (void)rng.uniform_int(0); }).empty());
}

}  // TEST_SUITE
