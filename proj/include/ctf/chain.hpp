#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "ctf/model.hpp"

namespace ctf {

// One kept sweep: level vector, realized distinct-class counts, collapsed
// log likelihood, and (when requested) next-symbol distributions at the
// declared snapshot contexts (one row per context).
struct ChainSample {
  int iter = 0;
  Eigen::VectorXi k;
  Eigen::VectorXi ktilde;
  double loglik = 0.0;
  Eigen::MatrixXd snapshots;
};

struct PosteriorChain {
  int C0 = 0;
  int q = 0;
  std::uint64_t seed = 0;
  Schedule schedule;
  std::vector<Eigen::VectorXi> snapshot_contexts;
  std::vector<ChainSample> samples;
};

// One JSON object per kept sample: {"iter","k","ktilde","loglik"}.
void write_chain_jsonl(const PosteriorChain& chain, const std::filesystem::path& file);
PosteriorChain read_chain_jsonl(const std::filesystem::path& file);

// Sidecar for snapshots: header iter,w1..wq,p1..pC0; one row per sample
// and context.
void write_snapshots_csv(const PosteriorChain& chain, const std::filesystem::path& file);
void read_snapshots_csv(PosteriorChain& chain, const std::filesystem::path& file);

// Dense table: q context columns then C0 probability columns.
void write_tensor_csv(const TransitionTensor& t, const std::filesystem::path& file);
TransitionTensor read_tensor_csv(const std::filesystem::path& file);
void write_tensor_json(const TransitionTensor& t, const std::filesystem::path& file);
TransitionTensor read_tensor_json(const std::filesystem::path& file);

// Deterministic shortest-round-trip formatting used by every writer.
std::string format_double(double v);

}  // namespace ctf
