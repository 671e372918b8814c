#include "ctf/init_approx.hpp"

#include <cmath>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "ctf/error.hpp"

namespace ctf {

HardPartition HardPartition::trivial(int q, int C0) {
  HardPartition p;
  p.assign.assign(static_cast<std::size_t>(q), Eigen::VectorXi::Ones(C0));
  return p;
}

int HardPartition::n_clusters(int j) const {
  return assign[static_cast<std::size_t>(j - 1)].maxCoeff();
}

void HardPartition::validate(int C0) const {
  for (std::size_t j = 0; j < assign.size(); ++j) {
    const auto& a = assign[j];
    if (a.size() != C0) throw Error("partition row length != C0");
    const int k = a.maxCoeff();
    Eigen::VectorXi seen = Eigen::VectorXi::Zero(k);
    for (int c = 0; c < C0; ++c) {
      if (a[c] < 1 || a[c] > k) throw Error("partition label outside 1..k");
      seen[a[c] - 1] = 1;
    }
    if (seen.sum() != k) throw Error("partition has an empty cluster label");
  }
}

double partition_marginal_loglik(const SequenceData& data, const HardPartition& p, double alpha) {
  if (static_cast<int>(p.assign.size()) != data.q) throw ValidationError("partition lag count != q");
  const int q = data.q;
  const int C0 = data.C0;
  std::vector<long long> stride(static_cast<std::size_t>(q), 1);
  for (int j = q - 2; j >= 0; --j)
    stride[static_cast<std::size_t>(j)] =
        stride[static_cast<std::size_t>(j + 1)] * p.assign[static_cast<std::size_t>(j + 1)].maxCoeff();

  std::unordered_map<long long, Eigen::VectorXi> cells;
  const int npos = data.n_modeled();
  for (int i = 0; i < npos; ++i) {
    long long idx = 0;
    for (int j = 0; j < q; ++j)
      idx += static_cast<long long>(p.assign[static_cast<std::size_t>(j)][data.w(j, i) - 1] - 1) *
             stride[static_cast<std::size_t>(j)];
    auto [it, fresh] = cells.try_emplace(idx, Eigen::VectorXi::Zero(C0));
    (void)fresh;
    it->second[data.y[data.t_star + i - 1] - 1] += 1;
  }

  const double lg_alpha = std::lgamma(alpha);
  const double lg_total = std::lgamma(C0 * alpha);
  double ll = 0.0;
  for (const auto& [idx, counts] : cells) {
    (void)idx;
    double cell = lg_total - std::lgamma(C0 * alpha + counts.sum());
    for (int c = 0; c < C0; ++c)
      if (counts[c] > 0) cell += std::lgamma(alpha + counts[c]) - lg_alpha;
    ll += cell;
  }
  return ll;
}

MoveProposal propose_move(const HardPartition& p, int j, int C0, RngStream& rng) {
  const Eigen::VectorXi& a = p.assign[static_cast<std::size_t>(j - 1)];
  const int k = a.maxCoeff();
  bool do_split;
  if (k == 1)
    do_split = true;
  else if (k == C0)
    do_split = false;
  else
    do_split = rng.uniform() < 0.5;

  MoveProposal out{p, do_split ? MoveKind::split : MoveKind::merge};
  Eigen::VectorXi& b = out.partition.assign[static_cast<std::size_t>(j - 1)];

  if (do_split) {
    std::vector<int> eligible;
    for (int c = 1; c <= k; ++c)
      if ((a.array() == c).count() >= 2) eligible.push_back(c);
    // k < C0 guarantees some cluster has two or more members.
    const int target = eligible[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(eligible.size())))];
    std::vector<int> members;
    for (int c = 0; c < C0; ++c)
      if (a[c] == target) members.push_back(c);
    std::vector<int> side(members.size());
    for (;;) {
      int ones = 0;
      for (std::size_t m = 0; m < members.size(); ++m) {
        side[m] = rng.uniform() < 0.5 ? 1 : 0;
        ones += side[m];
      }
      if (ones > 0 && ones < static_cast<int>(members.size())) break;
    }
    for (std::size_t m = 0; m < members.size(); ++m)
      if (side[m] == 1) b[members[m]] = k + 1;
  } else {
    const int first = rng.uniform_int(k) + 1;
    int second = rng.uniform_int(k - 1) + 1;
    if (second >= first) ++second;
    const int lo = std::min(first, second);
    const int hi = std::max(first, second);
    for (int c = 0; c < C0; ++c) {
      if (b[c] == hi)
        b[c] = lo;
      else if (b[c] > hi)
        b[c] -= 1;
    }
  }
  return out;
}

InitResult init_two_stage(const SequenceData& data, const Hyperparams& hyper, int n_iter, RngStream& rng) {
  if (n_iter < 0) throw ValidationError("initializer iteration count must be nonnegative");
  if (data.q < 1) throw ValidationError("lag design missing; call build_lag_design first");
  InitResult r;
  r.partition = HardPartition::trivial(data.q, data.C0);
  double cur = partition_marginal_loglik(data, r.partition, hyper.alpha);
  for (int it = 0; it < n_iter; ++it) {
    for (int j = 1; j <= data.q; ++j) {
      MoveProposal prop = propose_move(r.partition, j, data.C0, rng);
      const double ll = partition_marginal_loglik(data, prop.partition, hyper.alpha);
      ++r.proposals;
      if (std::log(rng.uniform_pos()) < ll - cur) {
        r.partition = std::move(prop.partition);
        cur = ll;
        ++r.accepted;
      }
    }
  }
  r.loglik = cur;
  r.k.resize(data.q);
  for (int j = 1; j <= data.q; ++j) r.k[j - 1] = r.partition.n_clusters(j);
  r.z = partition_to_allocations(data, r.partition);
  return r;
}

Eigen::MatrixXi partition_to_allocations(const SequenceData& data, const HardPartition& p) {
  Eigen::MatrixXi z(data.q, data.n_modeled());
  for (int j = 0; j < data.q; ++j)
    for (int i = 0; i < data.n_modeled(); ++i)
      z(j, i) = p.assign[static_cast<std::size_t>(j)][data.w(j, i) - 1];
  return z;
}

void write_init_json(const InitResult& r, const std::filesystem::path& file) {
  nlohmann::json doc;
  doc["k"] = std::vector<int>(r.k.data(), r.k.data() + r.k.size());
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& a : r.partition.assign)
    rows.push_back(std::vector<int>(a.data(), a.data() + a.size()));
  doc["assign"] = std::move(rows);
  doc["loglik"] = r.loglik;
  doc["accepted"] = r.accepted;
  doc["proposals"] = r.proposals;
  std::ofstream out(file);
  if (!out) throw IoError("cannot write '" + file.string() + "'");
  out << doc.dump(2) << "\n";
}

}  // namespace ctf
