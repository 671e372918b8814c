#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "ctf/model.hpp"
#include "ctf/rng.hpp"
#include "ctf/seq_data.hpp"

namespace ctf {

// Hard clustering of the category labels at each lag: assign[j-1][c-1] is
// the cluster (1..k_j) that category c maps to at lag j. Labels are
// contiguous and every cluster nonempty.
struct HardPartition {
  std::vector<Eigen::VectorXi> assign;

  static HardPartition trivial(int q, int C0);  // one cluster per lag
  int n_clusters(int j) const;                  // 1-based lag
  void validate(int C0) const;
};

// Marginal log likelihood of the data under the hard partition with all
// kernel parameters integrated out (Dirichlet-multinomial over the cells
// the partition induces).
double partition_marginal_loglik(const SequenceData& data, const HardPartition& p, double alpha);

enum class MoveKind { split, merge };

struct MoveProposal {
  HardPartition partition;
  MoveKind kind;
};

// One lag's proposal: a single-cluster lag must split, a fully split lag
// must merge, anything between flips a fair coin. Splits pick a cluster
// of two or more members uniformly and scatter its members over two
// sides, redrawing while a side is empty; merges pick an unordered
// cluster pair uniformly.
MoveProposal propose_move(const HardPartition& p, int j, int C0, RngStream& rng);

struct InitResult {
  Eigen::VectorXi k;
  Eigen::MatrixXi z;
  HardPartition partition;
  double loglik = 0.0;
  int accepted = 0;
  int proposals = 0;
};

// Metropolis search over hard partitions on the marginal likelihood,
// started from the all-merged state; the final partition supplies the
// allocations and levels used to seed the main sampler.
InitResult init_two_stage(const SequenceData& data, const Hyperparams& hyper, int n_iter, RngStream& rng);

Eigen::MatrixXi partition_to_allocations(const SequenceData& data, const HardPartition& p);

void write_init_json(const InitResult& r, const std::filesystem::path& file);

}  // namespace ctf
