#include "ctf/inference.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "ctf/error.hpp"

namespace ctf {

Eigen::VectorXi ktilde_of(const Eigen::MatrixXi& z) {
  Eigen::VectorXi out(z.rows());
  for (int j = 0; j < z.rows(); ++j) {
    const int mx = z.row(j).maxCoeff();
    Eigen::VectorXi seen = Eigen::VectorXi::Zero(mx);
    for (int i = 0; i < z.cols(); ++i) seen[z(j, i) - 1] = 1;
    out[j] = seen.sum();
  }
  return out;
}

Eigen::VectorXd lag_inclusion(const PosteriorChain& chain) {
  if (chain.samples.empty()) throw ValidationError("input error: chain holds no samples");
  Eigen::VectorXd inc = Eigen::VectorXd::Zero(chain.q);
  for (const auto& s : chain.samples)
    for (int j = 0; j < chain.q; ++j)
      if (s.ktilde[j] > 1) inc[j] += 1.0;
  return inc / static_cast<double>(chain.samples.size());
}

Eigen::VectorXd maximal_order_distribution(const PosteriorChain& chain) {
  if (chain.samples.empty()) throw ValidationError("input error: chain holds no samples");
  Eigen::VectorXd pmf = Eigen::VectorXd::Zero(chain.q + 1);
  for (const auto& s : chain.samples) {
    int order = 0;
    for (int j = 0; j < chain.q; ++j)
      if (s.ktilde[j] > 1) order = j + 1;
    pmf[order] += 1.0;
  }
  return pmf / static_cast<double>(chain.samples.size());
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

Hypothesis Hypothesis::parse(const std::string& text, int q) {
  if (q < 1) throw ValidationError("hypothesis needs q >= 1");
  Hypothesis h;
  h.constraint.assign(static_cast<std::size_t>(q), Constraint::any);
  std::vector<bool> mentioned(static_cast<std::size_t>(q), false);
  std::optional<Constraint> others;

  std::stringstream ss(text);
  std::string term;
  int n_terms = 0;
  while (std::getline(ss, term, '&')) {
    term = trim(term);
    if (term.empty()) throw ValidationError("parse error: empty term in hypothesis '" + text + "'");
    ++n_terms;
    Constraint c;
    std::string head;
    if (term.size() >= 2 && term.substr(term.size() - 2) == "=1") {
      c = Constraint::one;
      head = trim(term.substr(0, term.size() - 2));
    } else if (term.size() >= 2 && term.substr(term.size() - 2) == ">1") {
      c = Constraint::many;
      head = trim(term.substr(0, term.size() - 2));
    } else {
      throw ValidationError("parse error: term '" + term + "' must end in =1 or >1");
    }
    if (head == "others") {
      if (others) throw ValidationError("parse error: 'others' appears twice in '" + text + "'");
      others = c;
      continue;
    }
    if (head.size() < 2 || head[0] != 'k')
      throw ValidationError("parse error: term '" + term + "' must constrain a lag k<j>");
    int j = 0;
    for (std::size_t i = 1; i < head.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(head[i])))
        throw ValidationError("parse error: bad lag index in term '" + term + "'");
      j = j * 10 + (head[i] - '0');
    }
    if (j < 1 || j > q)
      throw ValidationError("parse error: lag " + std::to_string(j) + " outside 1.." + std::to_string(q));
    if (mentioned[static_cast<std::size_t>(j - 1)] && h.constraint[static_cast<std::size_t>(j - 1)] != c)
      throw ValidationError("parse error: contradictory constraints on lag " + std::to_string(j));
    mentioned[static_cast<std::size_t>(j - 1)] = true;
    h.constraint[static_cast<std::size_t>(j - 1)] = c;
  }
  if (n_terms == 0) throw ValidationError("parse error: hypothesis '" + text + "' has no terms");
  if (others) {
    for (int j = 0; j < q; ++j)
      if (!mentioned[static_cast<std::size_t>(j)]) h.constraint[static_cast<std::size_t>(j)] = *others;
  }
  bool any_constrained = false;
  for (auto c : h.constraint)
    if (c != Constraint::any) any_constrained = true;
  if (!any_constrained) throw ValidationError("parse error: hypothesis constrains no lag");
  return h;
}

bool Hypothesis::satisfied(const Eigen::VectorXi& ktilde) const {
  if (ktilde.size() != static_cast<int>(constraint.size()))
    throw ValidationError("dimension error: ktilde length does not match hypothesis");
  for (int j = 0; j < ktilde.size(); ++j) {
    switch (constraint[static_cast<std::size_t>(j)]) {
      case Constraint::one:
        if (ktilde[j] != 1) return false;
        break;
      case Constraint::many:
        if (ktilde[j] <= 1) return false;
        break;
      case Constraint::any: break;
    }
  }
  return true;
}

std::string Hypothesis::text() const {
  std::string out;
  for (std::size_t j = 0; j < constraint.size(); ++j) {
    if (constraint[j] == Constraint::any) continue;
    if (!out.empty()) out += " & ";
    out += "k" + std::to_string(j + 1) + (constraint[j] == Constraint::one ? "=1" : ">1");
  }
  return out.empty() ? "(unconstrained)" : out;
}

double posterior_prob(const PosteriorChain& chain, const Hypothesis& h) {
  if (chain.samples.empty()) throw ValidationError("input error: chain holds no samples");
  long long hits = 0;
  for (const auto& s : chain.samples)
    if (h.satisfied(s.ktilde)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(chain.samples.size());
}

BayesTest bayes_factor(const PosteriorChain& chain, const Hypothesis& h0,
                       const std::optional<Hypothesis>& h1, double prior_p0, double prior_p1) {
  if (!(prior_p0 > 0.0 && prior_p0 < 1.0 && prior_p1 > 0.0 && prior_p1 < 1.0))
    throw ValidationError("hypothesis priors must lie strictly inside (0,1)");
  BayesTest t;
  t.prior0 = prior_p0;
  t.prior1 = prior_p1;
  t.post0 = posterior_prob(chain, h0);
  t.post1 = h1 ? posterior_prob(chain, *h1) : 1.0 - t.post0;
  if (t.post0 == 0.0 && t.post1 == 0.0)
    throw Error("undefined Bayes factor: both hypotheses carry zero posterior mass");
  if (t.post0 == 0.0) {
    t.infinite = true;
    t.bf10 = std::numeric_limits<double>::infinity();
  } else {
    t.bf10 = (t.post1 / prior_p1) / (t.post0 / prior_p0);
  }
  return t;
}

double hypothesis_prior_from_lag_probs(const Hypothesis& h, const Eigen::VectorXd& p_one) {
  if (p_one.size() != static_cast<int>(h.constraint.size()))
    throw ValidationError("dimension error: per-lag prior length does not match hypothesis");
  double p = 1.0;
  for (int j = 0; j < p_one.size(); ++j) {
    switch (h.constraint[static_cast<std::size_t>(j)]) {
      case Hypothesis::Constraint::one: p *= p_one[j]; break;
      case Hypothesis::Constraint::many: p *= 1.0 - p_one[j]; break;
      case Hypothesis::Constraint::any: break;
    }
  }
  return p;
}

Eigen::MatrixXd posterior_mean_transition(const PosteriorChain& chain,
                                          const std::vector<Eigen::VectorXi>& contexts) {
  if (chain.samples.empty()) throw ValidationError("input error: chain holds no samples");
  if (contexts.empty()) throw ValidationError("input error: no contexts requested");
  if (chain.snapshot_contexts.empty())
    throw ValidationError("chain recorded no snapshots; rerun the fit with snapshot contexts");
  auto key = [](const Eigen::VectorXi& v) {
    std::string s;
    for (int i = 0; i < v.size(); ++i) s += std::to_string(v[i]) + ",";
    return s;
  };
  std::unordered_map<std::string, std::size_t> where;
  for (std::size_t i = 0; i < chain.snapshot_contexts.size(); ++i) where[key(chain.snapshot_contexts[i])] = i;

  const int C0 = static_cast<int>(chain.samples.front().snapshots.cols());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<long long>(contexts.size()), C0);
  std::vector<std::size_t> slot(contexts.size());
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    auto it = where.find(key(contexts[i]));
    if (it == where.end()) throw ValidationError("context was not declared when the chain ran");
    slot[i] = it->second;
  }
  for (const auto& s : chain.samples) {
    if (s.snapshots.rows() != static_cast<long long>(chain.snapshot_contexts.size()))
      throw ValidationError("chain sample lacks snapshot rows");
    for (std::size_t i = 0; i < contexts.size(); ++i) out.row(static_cast<long long>(i)) += s.snapshots.row(static_cast<long long>(slot[i]));
  }
  return out / static_cast<double>(chain.samples.size());
}

int predict_one_step(const Eigen::VectorXd& probs) {
  if (probs.size() == 0) throw ValidationError("input error: empty probability vector");
  int best = 0;
  for (int c = 1; c < probs.size(); ++c)
    if (probs[c] > probs[best]) best = c;
  return best + 1;
}

double batch_means_mcse(std::span<const double> trace, int batch_len) {
  if (batch_len < 1) throw ValidationError("batch length must be positive");
  const long long n = static_cast<long long>(trace.size());
  if (n < 2LL * batch_len)
    throw ValidationError("input error: trace of length " + std::to_string(n) +
                          " is shorter than two batches of " + std::to_string(batch_len));
  const long long n_batches = n / batch_len;
  Eigen::VectorXd means(n_batches);
  for (long long b = 0; b < n_batches; ++b) {
    double s = 0.0;
    for (long long i = b * batch_len; i < (b + 1) * batch_len; ++i) s += trace[static_cast<std::size_t>(i)];
    means[b] = s / batch_len;
  }
  const double grand = means.mean();
  const double var = (means.array() - grand).square().sum() / static_cast<double>(n_batches - 1);
  return std::sqrt(var / static_cast<double>(n_batches));
}

Eigen::MatrixXd running_quantiles(std::span<const double> trace, const std::vector<double>& probs) {
  if (trace.empty()) throw ValidationError("input error: empty trace");
  for (double p : probs)
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("quantile probabilities must lie in (0,1)");
  Eigen::MatrixXd out(static_cast<long long>(trace.size()), static_cast<long long>(probs.size()));
  std::vector<double> sorted;
  sorted.reserve(trace.size());
  for (std::size_t n = 0; n < trace.size(); ++n) {
    const double v = trace[n];
    sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), v), v);
    for (std::size_t pi = 0; pi < probs.size(); ++pi) {
      long long rank = static_cast<long long>(std::ceil(probs[pi] * static_cast<double>(n + 1)));
      rank = std::max(1LL, std::min(rank, static_cast<long long>(n + 1)));
      out(static_cast<long long>(n), static_cast<long long>(pi)) = sorted[static_cast<std::size_t>(rank - 1)];
    }
  }
  return out;
}

}  // namespace ctf
