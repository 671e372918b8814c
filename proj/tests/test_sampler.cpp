#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "ctf/logmath.hpp"
#include "ctf/sampler.hpp"
#include "helpers.hpp"

using ctf::Hyperparams;
using ctf::LatentState;
using ctf::SequenceData;
using ctf::UTable;
using testutil::contains;
using testutil::thrown;
using testutil::vecd;
using testutil::veci;

namespace {

// Six observations over two categories with a known two-level grid.
// Modeled points t=3..6: y_t = (2,1,2,1), lag rows w1=(2,2,1,2),
// w2=(1,2,2,1).
SequenceData tiny_data() {
  return ctf::build_lag_design(ctf::make_sequence({"1", "2", "2", "1", "2", "1"}, {{"1", "2"}}), 2);
}

LatentState tiny_state() {
  LatentState s;
  s.C0 = 2;
  s.q = 2;
  s.L = 3;
  s.k = veci({2, 1});
  s.z.resize(2, 4);
  s.z.row(0) << 1, 2, 1, 2;
  s.z.row(1) << 1, 1, 1, 1;
  s.V = vecd({0.5, 0.5, 1.0});
  s.pi_star = vecd({0.5, 0.25, 0.25});
  s.lambda_star = {vecd({0.7, 0.3}), vecd({0.4, 0.6}), vecd({0.5, 0.5})};
  s.zstar = {2, 1};
  s.pi = {{vecd({0.5, 0.5}), vecd({0.6, 0.4})}, {vecd({1.0}), vecd({1.0})}};
  return s;
}

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("u tables on empty counts reduce to the lag prior") {
  UTable t = ctf::utable_for_counts(veci({0, 0}), 0.5, 0.5, 1, 2);
  Eigen::VectorXd p0 = ctf::lag_prior_pmf(0.5, 1, 2);
  CHECK(std::exp(t.log_terms[0]) == doctest::Approx(p0[0]).epsilon(1e-12));
  CHECK(std::exp(t.log_terms[1]) == doctest::Approx(p0[1]).epsilon(1e-12));
  CHECK(std::exp(t.log_u[0]) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::exp(t.log_u[1]) == doctest::Approx(p0[1]).epsilon(1e-12));
  CHECK(t.log_u[0] >= t.log_u[1]);
}

TEST_CASE("u table terms match direct ascending factorials") {
  // counts (3,2), gamma 0.5: term_k = p0(k) / [(kg)(kg+1)(kg+2)] * g(g+1)g... laid
  // out as a plain product below.
  UTable t = ctf::utable_for_counts(veci({3, 2}), 0.5, 0.5, 1, 2);
  Eigen::VectorXd p0 = ctf::lag_prior_pmf(0.5, 1, 2);
  double g = 0.5;
  for (int k = 1; k <= 2; ++k) {
    double term = p0[k - 1];
    for (int i = 0; i < 3; ++i) term *= (g + i) / (k * g + i);
    for (int i = 0; i < 2; ++i) term *= (g + i) / (k * g + i);
    // the table leaves out the k-free numerator, so compare ratios
    double table_k = std::exp(t.log_terms[k - 1]);
    double numer = 1.0;
    for (int i = 0; i < 3; ++i) numer *= (g + i);
    for (int i = 0; i < 2; ++i) numer *= (g + i);
    CHECK(table_k * numer == doctest::Approx(term).epsilon(1e-12));
  }
  double u1 = std::exp(t.log_u[0]);
  double u2 = std::exp(t.log_u[1]);
  CHECK(u1 == doctest::Approx(std::exp(t.log_terms[0]) + std::exp(t.log_terms[1])).epsilon(1e-12));
  CHECK(u2 == doctest::Approx(std::exp(t.log_terms[1])).epsilon(1e-12));
}

TEST_CASE("precomputed tables cover every lag") {
  SequenceData data = tiny_data();
  Hyperparams hyper = Hyperparams::defaults(2, 2);
  auto tables = ctf::precompute_u_tables(data, hyper);
  REQUIRE(tables.size() == 2);
  for (int j = 1; j <= 2; ++j) {
    UTable direct = ctf::utable_for_counts(data.n_counts.row(j - 1).transpose(), hyper.gamma[j - 1],
                                           hyper.phi, j, 2);
    CHECK(tables[static_cast<std::size_t>(j - 1)].log_terms.isApprox(direct.log_terms, 1e-14));
  }
}

TEST_CASE("level conditionals normalize and respect the allocation floor") {
  UTable t = ctf::utable_for_counts(veci({4, 3, 3}), 1.0 / 3.0, 0.5, 2, 3);
  for (int maxz = 1; maxz <= 3; ++maxz) {
    Eigen::VectorXd pmf = ctf::k_conditional_pmf(maxz, t);
    CHECK(pmf.size() == 3);
    CHECK(pmf.sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (int k = 1; k < maxz; ++k) CHECK(pmf[k - 1] == 0.0);
  }
  Eigen::VectorXd point = ctf::k_conditional_pmf(3, t);
  CHECK(point[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("level conditionals match the collapsed partition posterior") {
  // Full class-by-category table with row sums (4,3,3) and two occupied
  // classes. The class-level factors are level-free, so the normalized
  // posterior over k depends only on row sums and the occupancy floor.
  const double g = 1.0 / 3.0;
  Eigen::MatrixXi cells(3, 2);
  cells << 2, 2, 3, 0, 1, 2;
  Eigen::VectorXi row_sums = veci({4, 3, 3});
  const int maxz = 2;
  Eigen::VectorXd p0 = ctf::lag_prior_pmf(0.5, 2, 3);
  Eigen::VectorXd log_post = Eigen::VectorXd::Constant(3, -std::numeric_limits<double>::infinity());
  for (int k = maxz; k <= 3; ++k) {
    double lp = std::log(p0[k - 1]);
    for (int r = 0; r < 3; ++r) {
      lp += std::lgamma(k * g) - std::lgamma(k * g + row_sums[r]);
      for (int l = 0; l < 2; ++l)
        if (cells(r, l) > 0) lp += std::lgamma(g + cells(r, l)) - std::lgamma(g);
    }
    log_post[k - 1] = lp;
  }
  Eigen::VectorXd want = (log_post.array() - ctf::log_sum_exp(log_post)).exp();
  want[0] = 0.0;

  UTable t = ctf::utable_for_counts(row_sums, g, 0.5, 2, 3);
  Eigen::VectorXd got = ctf::k_conditional_pmf(maxz, t);
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("the factorial approximation stays close for large counts") {
  Eigen::VectorXi counts = veci({120, 150, 130});
  const double g = 1.0 / 3.0;
  UTable t = ctf::utable_for_counts(counts, g, 0.5, 1, 3);
  for (int maxz = 1; maxz <= 3; ++maxz) {
    Eigen::VectorXd exact = ctf::k_conditional_pmf(maxz, t);
    Eigen::VectorXd approx = ctf::k_conditional_pmf_stirling(maxz, counts, g, 0.5, 1, 3);
    CHECK(approx.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(0.5 * (exact - approx).cwiseAbs().sum() <= 0.02);
  }
}

TEST_CASE("grid and cluster counts on a tiny state") {
  SequenceData data = tiny_data();
  LatentState s = tiny_state();
  s.check_invariants();
  Eigen::MatrixXi n = ctf::grid_counts(s, data);
  REQUIRE(n.rows() == 2);
  CHECK(n(0, 0) == 0);
  CHECK(n(0, 1) == 2);
  CHECK(n(1, 0) == 2);
  CHECK(n(1, 1) == 0);

  ctf::SweepStats st = ctf::sweep_stats(s, data);
  CHECK((st.n_h_y.array() == n.array()).all());
  CHECK(st.n_star[0] == 1);
  CHECK(st.n_star[1] == 1);
  CHECK(st.n_star[2] == 0);
  CHECK(st.n_star_y(0, 0) == 2);  // cluster 1 holds grid point (2,1)
  CHECK(st.n_star_y(0, 1) == 0);
  CHECK(st.n_star_y(1, 0) == 0);
  CHECK(st.n_star_y(1, 1) == 2);

  Eigen::MatrixXi lag1 = ctf::lag_class_counts(s, data, 1);
  REQUIRE(lag1.rows() == 2);
  REQUIRE(lag1.cols() == 2);
  CHECK(lag1(0, 0) == 1);
  CHECK(lag1(0, 1) == 0);
  CHECK(lag1(1, 0) == 1);
  CHECK(lag1(1, 1) == 2);
  Eigen::MatrixXi lag2 = ctf::lag_class_counts(s, data, 2);
  CHECK(lag2(0, 0) == 2);
  CHECK(lag2(1, 0) == 2);
}

TEST_CASE("allocation-free grid points draw labels from the sticks") {
  LatentState s;
  s.C0 = 2;
  s.q = 1;
  s.L = 3;
  s.k = veci({2});
  s.z.resize(1, 0);
  s.V = vecd({0.5, 0.6, 1.0});
  s.pi_star = vecd({0.5, 0.3, 0.2});
  s.lambda_star = {vecd({0.5, 0.5}), vecd({0.5, 0.5}), vecd({0.5, 0.5})};
  s.zstar = {1, 1};
  s.pi = {{vecd({0.5, 0.5}), vecd({0.5, 0.5})}};
  Eigen::MatrixXi none = Eigen::MatrixXi::Zero(2, 2);
  ctf::RngStream rng(301);
  const int n = 6000;
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < n; ++i) {
    ctf::step_zstar(s, none, rng);
    freq[s.zstar[0] - 1] += 1.0;
  }
  freq /= n;
  for (int l = 0; l < 3; ++l) {
    double p = s.pi_star[l];
    CHECK(std::abs(freq[l] - p) < 4.0 * std::sqrt(p * (1 - p) / n));
  }
}

TEST_CASE("occupied grid points weigh sticks by kernel likelihood") {
  LatentState s;
  s.C0 = 2;
  s.q = 1;
  s.L = 2;
  s.k = veci({1});
  s.z = Eigen::MatrixXi::Ones(1, 3);
  s.V = vecd({0.5, 1.0});
  s.pi_star = vecd({0.5, 0.5});
  s.lambda_star = {vecd({0.9, 0.1}), vecd({0.5, 0.5})};
  s.zstar = {1};
  s.pi = {{vecd({1.0}), vecd({1.0})}};
  Eigen::MatrixXi counts(1, 2);
  counts << 3, 0;
  const double w1 = 0.5 * 0.9 * 0.9 * 0.9;
  const double w2 = 0.5 * 0.5 * 0.5 * 0.5;
  const double p1 = w1 / (w1 + w2);
  ctf::RngStream rng(302);
  const int n = 6000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    ctf::step_zstar(s, counts, rng);
    if (s.zstar[0] == 1) hits++;
  }
  CHECK(std::abs(hits / double(n) - p1) < 4.0 * std::sqrt(p1 * (1 - p1) / n));
}

TEST_CASE("stick updates use tail occupancy") {
  LatentState s;
  s.C0 = 2;
  s.q = 1;
  s.L = 3;
  s.k = veci({1});
  s.z.resize(1, 0);
  s.V = vecd({0.5, 0.5, 1.0});
  s.pi_star = vecd({0.5, 0.25, 0.25});
  s.lambda_star = {vecd({0.5, 0.5}), vecd({0.5, 0.5}), vecd({0.5, 0.5})};
  s.zstar = {1};
  s.pi = {{vecd({1.0}), vecd({1.0})}};
  Eigen::VectorXi n_star = veci({5, 2, 1});
  ctf::RngStream rng(303);
  const int n = 20000;
  double v1 = 0.0, v2 = 0.0;
  for (int i = 0; i < n; ++i) {
    ctf::step_sticks(s, n_star, 1.0, rng);
    v1 += s.V[0];
    v2 += s.V[1];
    CHECK(s.V[2] == 1.0);
    CHECK(std::abs(s.pi_star.sum() - 1.0) < 1e-12);
  }
  // V1 ~ Beta(1+5, 1+3), V2 ~ Beta(1+2, 1+1)
  CHECK(std::abs(v1 / n - 6.0 / 10.0) < 0.01);
  CHECK(std::abs(v2 / n - 3.0 / 5.0) < 0.02);
}

TEST_CASE("kernel updates pool cluster counts") {
  LatentState s;
  s.C0 = 2;
  s.q = 1;
  s.L = 2;
  s.k = veci({1});
  s.z.resize(1, 0);
  s.V = vecd({0.5, 1.0});
  s.pi_star = vecd({0.5, 0.5});
  s.lambda_star = {vecd({0.5, 0.5}), vecd({0.5, 0.5})};
  s.zstar = {1};
  s.pi = {{vecd({1.0}), vecd({1.0})}};
  Eigen::MatrixXi n_star_y(2, 2);
  n_star_y << 1000, 0, 0, 0;
  ctf::RngStream rng(304);
  const int n = 4000;
  double occupied = 0.0, empty = 0.0;
  for (int i = 0; i < n; ++i) {
    ctf::step_lambda(s, n_star_y, 0.5, rng);
    CHECK(std::abs(s.lambda_star[0].sum() - 1.0) < 1e-12);
    occupied += s.lambda_star[0][0];
    empty += s.lambda_star[1][0];
  }
  CHECK(std::abs(occupied / n - 1000.5 / 1001.0) < 0.005);
  CHECK(std::abs(empty / n - 0.5) < 0.03);
}

TEST_CASE("weight updates follow their dirichlet conditionals") {
  SequenceData data = tiny_data();
  LatentState base = tiny_state();
  Eigen::VectorXd gamma = vecd({0.5, 0.5});
  Eigen::MatrixXi lag1 = ctf::lag_class_counts(base, data, 1);
  ctf::RngStream rng(305);
  const int n = 8000;
  std::vector<Eigen::VectorXd> mean(2, Eigen::VectorXd::Zero(2));
  for (int i = 0; i < n; ++i) {
    LatentState s = base;
    ctf::step_pi(s, data, gamma, rng);
    for (int c = 0; c < 2; ++c) {
      CHECK(std::abs(s.pi[0][static_cast<std::size_t>(c)].sum() - 1.0) < 1e-12);
      mean[static_cast<std::size_t>(c)] += s.pi[0][static_cast<std::size_t>(c)];
      // level-one lags keep their degenerate weights
      CHECK(s.pi[1][static_cast<std::size_t>(c)].size() == 1);
      CHECK(s.pi[1][static_cast<std::size_t>(c)][0] == 1.0);
    }
  }
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd conc = gamma[0] * Eigen::VectorXd::Ones(2);
    conc[0] += lag1(c, 0);
    conc[1] += lag1(c, 1);
    Eigen::VectorXd want = conc / conc.sum();
    CHECK((mean[static_cast<std::size_t>(c)] / n - want).cwiseAbs().maxCoeff() < 0.02);
  }
}

TEST_CASE("level-one weights consume no randomness") {
  SequenceData data = ctf::build_lag_design(ctf::make_sequence({"1", "2", "1"}, {{"1", "2"}}), 1);
  LatentState s;
  s.C0 = 2;
  s.q = 1;
  s.L = 2;
  s.k = veci({1});
  s.z = Eigen::MatrixXi::Ones(1, 2);
  s.V = vecd({0.5, 1.0});
  s.pi_star = vecd({0.5, 0.5});
  s.lambda_star = {vecd({0.5, 0.5}), vecd({0.5, 0.5})};
  s.zstar = {1};
  s.pi = {{vecd({1.0}), vecd({1.0})}};
  ctf::RngStream a(306), b(306);
  ctf::step_pi(s, data, vecd({0.5}), a);
  CHECK(a.raw() == b.raw());
}

TEST_CASE("allocation updates follow the two-term conditional") {
  SequenceData data = ctf::build_lag_design(ctf::make_sequence({"1", "1", "2"}, {{"1", "2"}}), 1);
  LatentState base;
  base.C0 = 2;
  base.q = 1;
  base.L = 2;
  base.k = veci({2});
  base.z.resize(1, 2);
  base.z << 1, 1;
  base.V = vecd({0.5, 1.0});
  base.pi_star = vecd({0.5, 0.5});
  base.lambda_star = {vecd({0.9, 0.1}), vecd({0.2, 0.8})};
  base.zstar = {1, 2};
  base.pi = {{vecd({0.3, 0.7}), vecd({0.6, 0.4})}};
  // position 0: w=1, y=1 -> p(z=1) = .3*.9 / (.3*.9 + .7*.2) = 0.27/0.41
  // position 1: w=1, y=2 -> p(z=1) = .3*.1 / (.3*.1 + .7*.8) = 0.03/0.59
  const double p0 = 0.27 / 0.41;
  const double p1 = 0.03 / 0.59;
  ctf::RngStream rng(307);
  const int n = 8000;
  int hit0 = 0, hit1 = 0;
  for (int i = 0; i < n; ++i) {
    LatentState s = base;
    ctf::step_z(s, data, rng);
    if (s.z(0, 0) == 1) hit0++;
    if (s.z(0, 1) == 1) hit1++;
  }
  CHECK(std::abs(hit0 / double(n) - p0) < 4.0 * std::sqrt(p0 * (1 - p0) / n));
  CHECK(std::abs(hit1 / double(n) - p1) < 4.0 * std::sqrt(p1 * (1 - p1) / n));
}

TEST_CASE("level draws respect the allocation floor and table") {
  SequenceData data = tiny_data();
  LatentState s = tiny_state();
  Hyperparams hyper = Hyperparams::defaults(2, 2);
  auto tables = ctf::precompute_u_tables(data, hyper);
  Eigen::VectorXd pmf1 = ctf::k_conditional_pmf(2, tables[0]);  // lag 1 has classes {1,2}
  ctf::RngStream rng(308);
  const int n = 4000;
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(2);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXi k_new = ctf::step_k(s, data, tables, hyper, ctf::KMode::exact, rng);
    REQUIRE(k_new.size() == 2);
    CHECK(k_new[0] >= 2);  // z row 1 reaches class 2
    CHECK(k_new[1] >= 1);
    freq[k_new[0] - 1] += 1.0;
  }
  CHECK(freq[0] == 0.0);
  CHECK(freq[1] / n == doctest::Approx(pmf1[1]).epsilon(1e-12));
}

TEST_CASE("resizing to the same levels is a strict no-op") {
  SequenceData data = tiny_data();
  LatentState s = tiny_state();
  LatentState before = s;
  ctf::RngStream rng(309), probe(309);
  ctf::resize_after_k(s, s.k, data, vecd({0.5, 0.5}), rng);
  CHECK(rng.raw() == probe.raw());
  CHECK((s.z.array() == before.z.array()).all());
  CHECK(s.zstar == before.zstar);
  CHECK((s.pi[0][0].array() == before.pi[0][0].array()).all());
}

TEST_CASE("growing the grid keeps existing labels") {
  SequenceData data = tiny_data();
  LatentState s = tiny_state();
  std::vector<int> old_zstar = s.zstar;
  Eigen::VectorXd old_pi_lag1_cat1 = s.pi[0][0];
  ctf::RngStream rng(310);
  ctf::resize_after_k(s, veci({2, 2}), data, vecd({0.5, 0.5}), rng);
  s.check_invariants();
  ctf::GridIndexer gi(veci({2, 2}));
  // grid point (h1, 1) existed before as (h1) under k=(2,1)
  CHECK(s.zstar[static_cast<std::size_t>(gi.flat(veci({1, 1})))] == old_zstar[0]);
  CHECK(s.zstar[static_cast<std::size_t>(gi.flat(veci({2, 1})))] == old_zstar[1]);
  // lag 1 kept its level, so its weights stay untouched
  CHECK((s.pi[0][0].array() == old_pi_lag1_cat1.array()).all());
  CHECK(s.pi[1][0].size() == 2);

  // shrinking back keeps the surviving points
  std::vector<int> grown = s.zstar;
  ctf::resize_after_k(s, veci({2, 1}), data, vecd({0.5, 0.5}), rng);
  CHECK(s.zstar[0] == grown[static_cast<std::size_t>(gi.flat(veci({1, 1})))]);
  CHECK(s.zstar[1] == grown[static_cast<std::size_t>(gi.flat(veci({2, 1})))]);
  CHECK(s.pi[1][0].size() == 1);
  CHECK(s.pi[1][0][0] == 1.0);
}

TEST_CASE("new grid points draw labels from the sticks") {
  SequenceData data = ctf::build_lag_design(ctf::make_sequence({"1", "2", "1"}, {{"1", "2"}}), 1);
  ctf::RngStream rng(311);
  const int n = 6000;
  Eigen::VectorXd freq = Eigen::VectorXd::Zero(3);
  for (int i = 0; i < n; ++i) {
    LatentState s;
    s.C0 = 2;
    s.q = 1;
    s.L = 3;
    s.k = veci({1});
    s.z = Eigen::MatrixXi::Ones(1, 2);
    s.V = vecd({0.5, 0.6, 1.0});
    s.pi_star = vecd({0.5, 0.3, 0.2});
    s.lambda_star = {vecd({0.5, 0.5}), vecd({0.5, 0.5}), vecd({0.5, 0.5})};
    s.zstar = {2};
    s.pi = {{vecd({1.0}), vecd({1.0})}};
    ctf::resize_after_k(s, veci({2}), data, vecd({0.5}), rng);
    CHECK(s.zstar[0] == 2);  // the old point keeps its label
    freq[s.zstar[1] - 1] += 1.0;
  }
  freq /= n;
  for (int l = 0; l < 3; ++l) {
    double p = (l == 0) ? 0.5 : (l == 1 ? 0.3 : 0.2);
    CHECK(std::abs(freq[l] - p) < 4.0 * std::sqrt(p * (1 - p) / n));
  }
}

TEST_CASE("collapsed likelihood pinned values and invariances") {
  Eigen::MatrixXi one(1, 2);
  one << 1, 0;
  CHECK(ctf::collapsed_loglik(one, 0.5) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  Eigen::MatrixXi empty = Eigen::MatrixXi::Zero(3, 2);
  CHECK(ctf::collapsed_loglik(empty, 0.5) == 0.0);

  // permuting grid cells changes nothing
  SequenceData data = tiny_data();
  LatentState s = tiny_state();
  double ll = ctf::collapsed_loglik(s, data, 0.5);
  LatentState relabeled = s;
  for (int i = 0; i < 4; ++i) relabeled.z(0, i) = 3 - relabeled.z(0, i);
  CHECK(ctf::collapsed_loglik(relabeled, data, 0.5) == doctest::Approx(ll).epsilon(1e-12));

  Eigen::MatrixXi n = ctf::grid_counts(s, data);
  Eigen::MatrixXi swapped(2, 2);
  swapped.row(0) = n.row(1);
  swapped.row(1) = n.row(0);
  CHECK(ctf::collapsed_loglik(swapped, 0.5) == doctest::Approx(ctf::collapsed_loglik(n, 0.5)).epsilon(1e-12));
}

TEST_CASE("chain runs are reproducible and audited") {
  ctf::RngStream data_rng(312);
  SequenceData data = testutil::random_sequence(2, 40, 2, data_rng);
  Hyperparams hyper = Hyperparams::defaults(2, 2);
  hyper.L = 5;
  hyper.schedule = {60, 20, 4};
  ctf::RngStream init_rng(313);
  LatentState init = ctf::make_flat_state(data, hyper, init_rng);
  ctf::RunOptions opts;
  opts.snapshot_contexts = {veci({1, 2})};
  ctf::PosteriorChain a = ctf::run_chain(data, hyper, init, 9001, opts);
  ctf::RngStream init_rng2(313);
  LatentState init2 = ctf::make_flat_state(data, hyper, init_rng2);
  ctf::PosteriorChain b = ctf::run_chain(data, hyper, init2, 9001, opts);
  ctf::PosteriorChain c = ctf::run_chain(data, hyper, init2, 9002, opts);

  REQUIRE(a.samples.size() == 10);
  CHECK(a.samples.front().iter == 24);
  CHECK(a.samples.back().iter == 60);
  REQUIRE(b.samples.size() == 10);
  bool identical = true, different = false;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    identical = identical && a.samples[i].loglik == b.samples[i].loglik &&
                (a.samples[i].k.array() == b.samples[i].k.array()).all() &&
                (a.samples[i].ktilde.array() == b.samples[i].ktilde.array()).all() &&
                (a.samples[i].snapshots.array() == b.samples[i].snapshots.array()).all();
    different = different || a.samples[i].loglik != c.samples[i].loglik;
  }
  CHECK(identical);
  CHECK(different);

  for (const auto& smp : a.samples) {
    for (int j = 0; j < 2; ++j) {
      CHECK(smp.ktilde[j] <= smp.k[j]);
      CHECK(smp.k[j] <= 2);
      CHECK(smp.ktilde[j] >= 1);
    }
    REQUIRE(smp.snapshots.rows() == 1);
    CHECK(std::abs(smp.snapshots.row(0).sum() - 1.0) < 1e-10);
    CHECK(std::isfinite(smp.loglik));
  }
}

TEST_CASE("a schedule can keep exactly one sample") {
  ctf::RngStream data_rng(314);
  SequenceData data = testutil::random_sequence(2, 20, 1, data_rng);
  Hyperparams hyper = Hyperparams::defaults(2, 1);
  hyper.L = 4;
  hyper.schedule = {10, 5, 5};
  ctf::RngStream init_rng(315);
  LatentState init = ctf::make_flat_state(data, hyper, init_rng);
  ctf::PosteriorChain chain = ctf::run_chain(data, hyper, init, 1);
  REQUIRE(chain.samples.size() == 1);
  CHECK(chain.samples[0].iter == 10);
}

TEST_CASE("state construction honors the requested allocations") {
  ctf::RngStream data_rng(316);
  SequenceData data = testutil::random_sequence(3, 30, 2, data_rng);
  Hyperparams hyper = Hyperparams::defaults(3, 2);
  hyper.L = 6;
  Eigen::MatrixXi z(2, data.n_modeled());
  ctf::RngStream zr(317);
  Eigen::VectorXi k = veci({2, 3});
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < data.n_modeled(); ++i) z(j, i) = zr.uniform_int(k[j]) + 1;
  ctf::RngStream rng(318);
  LatentState s = ctf::make_initial_state(data, hyper, z, k, rng);
  s.check_invariants();
  CHECK((s.z.array() == z.array()).all());
  CHECK((s.k.array() == k.array()).all());
  CHECK(s.L == 6);

  LatentState flat = ctf::make_flat_state(data, hyper, rng);
  flat.check_invariants();
  CHECK((flat.k.array() == 1).all());
  CHECK(flat.grid_size() == 1);
  CHECK((flat.z.array() == 1).all());

  Eigen::MatrixXi bad = z;
  bad(0, 0) = 5;
  CHECK(!thrown([&] { ctf::make_initial_state(data, hyper, bad, k, rng); }).empty());
}

TEST_CASE("prior draws and regenerated data stay in range") {
  ctf::RngStream data_rng(319);
  SequenceData data = testutil::random_sequence(2, 30, 2, data_rng);
  Hyperparams hyper = Hyperparams::defaults(2, 2);
  hyper.L = 5;
  ctf::RngStream rng(320);
  LatentState s = ctf::draw_state_from_prior(data, hyper, rng);
  s.check_invariants();
  CHECK(s.k.minCoeff() >= 1);
  CHECK(s.k.maxCoeff() <= 2);

  SequenceData fresh = ctf::draw_data_and_allocations(s, data, rng);
  CHECK(fresh.T == data.T);
  CHECK((fresh.y.head(2).array() == data.y.head(2).array()).all());
  for (int t = 0; t < fresh.T; ++t) {
    CHECK(fresh.y[t] >= 1);
    CHECK(fresh.y[t] <= 2);
  }
  for (int j = 1; j <= 2; ++j)
    for (int i = 0; i < fresh.n_modeled(); ++i) {
      CHECK(fresh.lag_value(j, i) == fresh.y[fresh.t_star + i - j - 1]);
      CHECK(s.z(j - 1, i) >= 1);
      CHECK(s.z(j - 1, i) <= s.k[j - 1]);
    }

  // same stream state, same draw
  ctf::RngStream r1(321), r2(321);
  LatentState s1 = ctf::draw_state_from_prior(data, hyper, r1);
  LatentState s2 = ctf::draw_state_from_prior(data, hyper, r2);
  CHECK((s1.k.array() == s2.k.array()).all());
  CHECK((s1.V.array() == s2.V.array()).all());
}

TEST_CASE("chain inputs are validated before any work") {
  ctf::RngStream data_rng(322);
  SequenceData data = testutil::random_sequence(2, 20, 1, data_rng);
  Hyperparams hyper = Hyperparams::defaults(2, 1);
  hyper.schedule = {10, 20, 5};  // burn past the end
  ctf::RngStream init_rng(323);
  LatentState init = ctf::make_flat_state(data, Hyperparams::defaults(2, 1), init_rng);
  CHECK(!thrown([&] { ctf::run_chain(data, hyper, init, 1); }).empty());

  Hyperparams ok = Hyperparams::defaults(2, 1);
  ok.schedule = {10, 5, 5};
  ctf::RunOptions opts;
  opts.snapshot_contexts = {veci({1, 2})};  // wrong length for q=1
  CHECK(!thrown([&] { ctf::run_chain(data, ok, init, 1, opts); }).empty());
}

}  // TEST_SUITE
