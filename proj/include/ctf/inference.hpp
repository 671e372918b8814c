#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctf/chain.hpp"

namespace ctf {

// Distinct allocation classes used at each lag.
Eigen::VectorXi ktilde_of(const Eigen::MatrixXi& z);

// Posterior fraction of samples whose lag uses more than one class.
Eigen::VectorXd lag_inclusion(const PosteriorChain& chain);

// Posterior over the largest active lag, entries 0..q.
Eigen::VectorXd maximal_order_distribution(const PosteriorChain& chain);

// Conjunction of per-lag constraints on the distinct-class counts.
// Text form: '&'-joined terms 'k<j>=1' or 'k<j>>1', plus 'others=1' /
// 'others>1' for every unmentioned lag.
struct Hypothesis {
  enum class Constraint { any, one, many };
  std::vector<Constraint> constraint;

  static Hypothesis parse(const std::string& text, int q);
  bool satisfied(const Eigen::VectorXi& ktilde) const;
  std::string text() const;
};

double posterior_prob(const PosteriorChain& chain, const Hypothesis& h);

struct BayesTest {
  double prior0 = 0.0, prior1 = 0.0;
  double post0 = 0.0, post1 = 0.0;
  double bf10 = 0.0;
  bool infinite = false;
};

// Posterior-odds over prior-odds for h1 against h0. A missing h1 means
// the complement of h0. Zero posterior mass on h0 alone yields the
// infinity marker; zero mass on both is an error.
BayesTest bayes_factor(const PosteriorChain& chain, const Hypothesis& h0,
                       const std::optional<Hypothesis>& h1, double prior_p0, double prior_p1);

// Prior mass of a conjunctive hypothesis from independent per-lag
// probabilities that a lag uses one class.
double hypothesis_prior_from_lag_probs(const Hypothesis& h, const Eigen::VectorXd& p_one);

// Mean of the recorded snapshot rows at the requested contexts; every
// context must have been declared when the chain ran.
Eigen::MatrixXd posterior_mean_transition(const PosteriorChain& chain,
                                          const std::vector<Eigen::VectorXi>& contexts);

// Arg max category, ties toward the smaller index. 1-based.
int predict_one_step(const Eigen::VectorXd& probs);

// Batch-means standard error of a stationary trace mean.
double batch_means_mcse(std::span<const double> trace, int batch_len = 100);

// Row n holds the requested empirical quantiles of the first n+1 values;
// quantile p of n values is order statistic ceil(p n), clamped to 1..n.
Eigen::MatrixXd running_quantiles(std::span<const double> trace,
                                  const std::vector<double>& probs = {0.05, 0.95});

}  // namespace ctf
