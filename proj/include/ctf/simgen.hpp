#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ctf/model.hpp"
#include "ctf/rng.hpp"
#include "ctf/seq_data.hpp"

namespace ctf {

// Conditional table over a subset of lags: one row per combination of the
// listed lags' values (first lag most significant), one column per symbol.
struct LagTensor {
  int C0 = 0;
  std::vector<int> lags;
  Eigen::MatrixXd p;

  long long row_of(const Eigen::VectorXi& lag_values) const;
  Eigen::VectorXd row_for_context(const Eigen::VectorXi& full_context) const;
  // Dense table over all q lags; rows repeat across the unused ones.
  TransitionTensor lift(int q, long long cap = kDefaultTensorCap) const;
};

struct TrueProcess {
  LagTensor tensor;
  int q = 0;  // max lag + 2
};

// Rows drawn by stick-breaking squashed uniforms: p(1) = f(U1),
// p(c) = f(Uc) (1 - sum before), last takes the remainder, with
// f(u) = u^2 / (u^2 + (1-u)^2).
TrueProcess generate_true_tensor(int C0, const std::vector<int>& lags, RngStream& rng);

// Seeds q iid uniform values, discards a warmup stretch, then emits
// n_total values of the stationary run.
Eigen::VectorXi simulate_chain(const TrueProcess& proc, int n_total, RngStream& rng, int warmup = 200);

SequenceData seq_from_codes(const Eigen::VectorXi& codes, int C0);

// Add-constant frequency table over the listed lags.
LagTensor mle_oracle(const SequenceData& data, const std::vector<int>& lag_set, double smoothing = 0.5);

struct CaseSpec {
  std::string name;
  int C0 = 0;
  std::vector<int> lags;
  int q = 0;
};

// Named designs A..H, or a literal "[C0,{j1,j2,...}]".
CaseSpec parse_case(const std::string& text);

struct ExperimentRow {
  std::string case_name;
  int T = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  std::string method;
  double avg_l1 = 0.0;
  double class_err = 0.0;
  double wall_secs = 0.0;
};

struct ExperimentConfig {
  CaseSpec cs;
  int T = 500;
  int N = 500;
  int n_reps = 10;
  Schedule schedule;
  std::uint64_t seed = 1;
  int threads = 1;
  KMode kmode = KMode::exact;
  int init_iters = 100;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
};

// Fits the factorized model and the full-order frequency oracle on fresh
// draws from the case's process; one pair of rows per replicate. Results
// do not depend on the thread count.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct MethodSummary {
  double l1_mean = 0.0, l1_se = 0.0;
  double err_mean = 0.0, err_se = 0.0;
  double wall_mean = 0.0;
};

MethodSummary summarize_method(const ExperimentResult& res, const std::string& method);

void write_metrics_csv(const ExperimentResult& res, const std::filesystem::path& file);

}  // namespace ctf
