#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ctf/error.hpp"
#include "ctf/rng.hpp"
#include "ctf/seq_data.hpp"

namespace ctf {

enum class KMode { exact, stirling };

struct Schedule {
  int n_iter = 50000;
  int n_burn = 10000;
  int thin = 5;
};

// Priors and sampler settings. gamma has one entry per lag.
struct Hyperparams {
  double alpha = 0.0;    // Dirichlet concentration for the shared kernels
  double alpha0 = 1.0;   // stick-breaking concentration
  double phi = 0.5;      // lag penalty in the level prior
  Eigen::VectorXd gamma; // per-lag weight concentration
  int L = 100;           // stick truncation level
  Schedule schedule;

  static Hyperparams defaults(int C0, int q);
  void validate(int C0, int q) const;
};

// Mixed-radix flat index over the level grid: h_1 is the most significant
// digit, h_q the fastest. All h are 1-based, the flat index 0-based.
struct GridIndexer {
  Eigen::VectorXi k;
  std::vector<long long> stride;
  long long size = 1;

  explicit GridIndexer(const Eigen::VectorXi& levels);
  long long flat(const Eigen::VectorXi& h) const;
  // Flat index after replacing digit j (1-based) of h with value v.
  long long flat_with(long long base, int j, int old_v, int new_v) const {
    return base + static_cast<long long>(new_v - old_v) * stride[static_cast<std::size_t>(j - 1)];
  }
  Eigen::VectorXi digits(long long flat_idx) const;
};

// Full sampler state. z columns index modeled positions; zstar maps the
// level grid (GridIndexer over k) to kernel cluster labels 1..L.
struct LatentState {
  int C0 = 0;
  int q = 0;
  int L = 0;
  Eigen::VectorXi k;                         // q, values 1..C0
  Eigen::MatrixXi z;                         // q x (T-q), z(j-1,i) in 1..k_j
  std::vector<int> zstar;                    // prod k_j entries, labels 1..L
  std::vector<Eigen::VectorXd> lambda_star;  // L kernels, each length C0
  Eigen::VectorXd V;                         // L stick fractions, V[L-1] = 1
  Eigen::VectorXd pi_star;                   // L stick weights
  std::vector<std::vector<Eigen::VectorXd>> pi;  // pi[j-1][c-1], length k_j

  long long grid_size() const;
  GridIndexer indexer() const { return GridIndexer(k); }
  // Throws Error with a diagnostic when a structural or normalization
  // invariant breaks (tolerance 1e-12 on simplex sums).
  void check_invariants() const;
};

// Dense conditional probability table, one row per full lag context in
// context-major order (first lag most significant), one column per symbol.
struct TransitionTensor {
  int C0 = 0;
  int q = 0;
  Eigen::MatrixXd p;  // C0^q x C0

  long long rows() const { return p.rows(); }
  long long context_row(const Eigen::VectorXi& context) const;
};

inline constexpr long long kDefaultTensorCap = 1048576;  // 4^10

// Next-symbol distribution for one q-length context (values 1..C0).
Eigen::VectorXd evaluate_transition(const LatentState& s, const Eigen::VectorXi& context);

// Evaluates every context; refuses tables above cap rows.
TransitionTensor materialize_tensor(const LatentState& s, long long cap = kDefaultTensorCap);

// Free parameters of the factorized table: (C0-1) prod k_j core entries
// plus C0 sum (k_j - 1) weight entries.
long long parameter_count(const Eigen::VectorXi& k, int C0);

// Unfactorized full-order table for comparison: (C0-1) C0^q.
long long full_model_parameter_count(int C0, int q);

// Level prior p(k) proportional to exp(-phi j k) on 1..C0.
Eigen::VectorXd lag_prior_pmf(double phi, int j, int C0);

// Sum of absolute differences over all contexts and symbols.
double l1_distance(const TransitionTensor& a, const TransitionTensor& b);

// Average L1 between estimated rows and reference rows at the same
// contexts: sum of absolute differences / (C0 * n_contexts).
double average_l1_error(const Eigen::MatrixXd& est_rows, const Eigen::MatrixXd& ref_rows);
double average_l1_error(const TransitionTensor& est, const TransitionTensor& ref,
                        const std::vector<Eigen::VectorXi>& contexts);

// Prior probability that every allocation at lag j falls in one class,
// given the observed lag-category counts: marginalizes the level k over
// its prior and the weights over their Dirichlet. stirling mode replaces
// Gamma(n+a)/Gamma(n) with n^a for nonzero counts.
double ktilde_prior_prob_one(double gamma_j, double phi, int j, const Eigen::VectorXi& counts,
                             int C0, KMode mode = KMode::exact);

}  // namespace ctf
