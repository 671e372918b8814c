#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ctf/chain.hpp"
#include "ctf/model.hpp"
#include "ctf/rng.hpp"
#include "ctf/seq_data.hpp"

namespace ctf {

// Per-lag table for the collapsed level update. log_terms[k-1] holds
// log p0j(k) + sum_r [lgamma(k g) - lgamma(k g + n_jr)]; log_u[z-1] the
// log of the tail sum over k >= z. Depends only on the fixed lag counts,
// so it is computed once per fit.
struct UTable {
  Eigen::VectorXd log_terms;
  Eigen::VectorXd log_u;
};

UTable utable_for_counts(const Eigen::VectorXi& counts, double gamma_j, double phi, int j, int C0);
std::vector<UTable> precompute_u_tables(const SequenceData& data, const Hyperparams& hyper);

// Count summaries a sweep needs: allocation-cell data counts, cluster
// occupancy over grid points, pooled per-cluster data counts.
struct SweepStats {
  Eigen::MatrixXi n_h_y;     // grid x C0
  Eigen::VectorXi n_star;    // L
  Eigen::MatrixXi n_star_y;  // L x C0
};

Eigen::MatrixXi grid_counts(const LatentState& s, const SequenceData& data);
SweepStats sweep_stats(const LatentState& s, const SequenceData& data);

// Per-lag class-by-category allocation counts n_{j,c}(h), shape C0 x k_j.
Eigen::MatrixXi lag_class_counts(const LatentState& s, const SequenceData& data, int j);

// The six conditional updates, in sweep order.
void step_zstar(LatentState& s, const Eigen::MatrixXi& n_h_y, RngStream& rng);
void step_sticks(LatentState& s, const Eigen::VectorXi& n_star, double alpha0, RngStream& rng);
void step_lambda(LatentState& s, const Eigen::MatrixXi& n_star_y, double alpha, RngStream& rng);
void step_pi(LatentState& s, const SequenceData& data, const Eigen::VectorXd& gamma, RngStream& rng);
void step_z(LatentState& s, const SequenceData& data, RngStream& rng);
Eigen::VectorXi step_k(const LatentState& s, const SequenceData& data, const std::vector<UTable>& utables,
                       const Hyperparams& hyper, KMode mode, RngStream& rng);

// Collapsed level conditionals on support {maxz..C0}, zero below.
Eigen::VectorXd k_conditional_pmf(int maxz, const UTable& table);
Eigen::VectorXd k_conditional_pmf_stirling(int maxz, const Eigen::VectorXi& counts, double gamma_j,
                                           double phi, int j, int C0);

// Applies a freshly drawn level vector: grid entries that already existed
// keep their labels, newborn grid points draw labels from the stick
// weights, weight vectors at changed lags are redrawn from their
// Dirichlet conditionals. Unchanged k leaves the state untouched.
void resize_after_k(LatentState& s, const Eigen::VectorXi& k_new, const SequenceData& data,
                    const Eigen::VectorXd& gamma, RngStream& rng);

// Marginal log likelihood of the allocation partition with the kernels
// integrated out, summed over occupied grid cells.
double collapsed_loglik(const Eigen::MatrixXi& n_h_y, double alpha);
double collapsed_loglik(const LatentState& s, const SequenceData& data, double alpha);

struct RunOptions {
  std::vector<Eigen::VectorXi> snapshot_contexts;
  KMode kmode = KMode::exact;
  bool audit = true;  // per-sweep invariant checks; failures abort the run
};

// Full Gibbs run: n_iter sweeps, samples kept past burn-in at the thinning
// stride. Reruns with the same data, init and seed are bit-identical.
PosteriorChain run_chain(const SequenceData& data, const Hyperparams& hyper, const LatentState& init,
                         std::uint64_t seed, const RunOptions& options = {});

// State construction: given allocations and levels, draws sticks and
// kernels from their priors, grid labels from the sticks, and weights
// from their Dirichlet conditionals.
LatentState make_initial_state(const SequenceData& data, const Hyperparams& hyper,
                               const Eigen::MatrixXi& z, const Eigen::VectorXi& k, RngStream& rng);
LatentState make_flat_state(const SequenceData& data, const Hyperparams& hyper, RngStream& rng);

// Forward draws from the generative model, used by the joint-distribution
// sampler checks: a state off the prior (allocations left at 1), then data
// plus allocations regenerated in time order given the first q values.
LatentState draw_state_from_prior(const SequenceData& data, const Hyperparams& hyper, RngStream& rng);
SequenceData draw_data_and_allocations(LatentState& s, SequenceData data, RngStream& rng);

}  // namespace ctf
