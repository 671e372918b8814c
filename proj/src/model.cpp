#include "ctf/model.hpp"

#include <cmath>

#include "ctf/logmath.hpp"

namespace ctf {

Hyperparams Hyperparams::defaults(int C0, int q) {
  if (C0 < 1 || q < 1) throw ValidationError("defaults need C0 >= 1 and q >= 1");
  Hyperparams h;
  h.alpha = 1.0 / C0;
  h.alpha0 = 1.0;
  h.phi = 0.5;
  h.gamma = Eigen::VectorXd::Constant(q, 1.0 / C0);
  h.L = 100;
  return h;
}

void Hyperparams::validate(int C0, int q) const {
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  if (!(alpha0 > 0.0)) throw ValidationError("alpha0 must be positive");
  if (!(phi >= 0.0)) throw ValidationError("phi must be nonnegative");
  if (gamma.size() != q) throw ValidationError("gamma needs one entry per lag");
  for (int j = 0; j < q; ++j)
    if (!(gamma[j] > 0.0)) throw ValidationError("gamma must be positive at every lag");
  if (L < 1) throw ValidationError("truncation level L must be at least 1");
  if (C0 < 2) throw ValidationError("state space needs at least two categories");
  if (schedule.n_iter < 1 || schedule.n_burn < 0 || schedule.thin < 1 ||
      schedule.n_burn >= schedule.n_iter)
    throw ValidationError("schedule needs n_iter > n_burn >= 0 and thin >= 1");
}

GridIndexer::GridIndexer(const Eigen::VectorXi& levels) : k(levels) {
  const int q = static_cast<int>(levels.size());
  stride.assign(static_cast<std::size_t>(q), 1);
  for (int j = q - 2; j >= 0; --j)
    stride[static_cast<std::size_t>(j)] = stride[static_cast<std::size_t>(j + 1)] * levels[j + 1];
  for (int j = 0; j < q; ++j) {
    if (levels[j] < 1) throw Error("grid level below 1");
    size *= levels[j];
  }
}

long long GridIndexer::flat(const Eigen::VectorXi& h) const {
  long long idx = 0;
  for (int j = 0; j < k.size(); ++j) idx += static_cast<long long>(h[j] - 1) * stride[static_cast<std::size_t>(j)];
  return idx;
}

Eigen::VectorXi GridIndexer::digits(long long flat_idx) const {
  Eigen::VectorXi h(k.size());
  for (int j = 0; j < k.size(); ++j) {
    h[j] = static_cast<int>(flat_idx / stride[static_cast<std::size_t>(j)]) + 1;
    flat_idx %= stride[static_cast<std::size_t>(j)];
  }
  return h;
}

long long LatentState::grid_size() const {
  long long g = 1;
  for (int j = 0; j < q; ++j) g *= k[j];
  return g;
}

void LatentState::check_invariants() const {
  const double tol = 1e-12;
  if (k.size() != q || static_cast<int>(pi.size()) != q) throw Error("state invariant: lag dimension mismatch");
  for (int j = 0; j < q; ++j) {
    if (k[j] < 1 || k[j] > C0)
      throw Error("state invariant: k_" + std::to_string(j + 1) + " outside 1..C0");
    if (static_cast<int>(pi[static_cast<std::size_t>(j)].size()) != C0)
      throw Error("state invariant: pi_" + std::to_string(j + 1) + " needs one vector per category");
    for (int c = 0; c < C0; ++c) {
      const auto& v = pi[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)];
      if (v.size() != k[j]) throw Error("state invariant: pi_" + std::to_string(j + 1) + " has wrong length");
      if (std::abs(v.sum() - 1.0) > tol) throw Error("state invariant: pi_" + std::to_string(j + 1) + " not normalized");
      if ((v.array() < 0).any()) throw Error("state invariant: pi_" + std::to_string(j + 1) + " has negative mass");
    }
  }
  if (static_cast<int>(lambda_star.size()) != L) throw Error("state invariant: lambda_star size != L");
  for (int l = 0; l < L; ++l) {
    const auto& lam = lambda_star[static_cast<std::size_t>(l)];
    if (lam.size() != C0) throw Error("state invariant: kernel length != C0");
    if (std::abs(lam.sum() - 1.0) > tol) throw Error("state invariant: kernel " + std::to_string(l + 1) + " not normalized");
    if ((lam.array() < 0).any()) throw Error("state invariant: kernel " + std::to_string(l + 1) + " has negative mass");
  }
  if (V.size() != L || pi_star.size() != L) throw Error("state invariant: stick arrays sized != L");
  if (std::abs(V[L - 1] - 1.0) > tol) throw Error("state invariant: final stick fraction != 1");
  if (std::abs(pi_star.sum() - 1.0) > tol) throw Error("state invariant: stick weights not normalized");
  if ((pi_star.array() < 0).any()) throw Error("state invariant: stick weights negative");
  if (static_cast<long long>(zstar.size()) != grid_size()) throw Error("state invariant: zstar does not cover the grid");
  for (int lab : zstar)
    if (lab < 1 || lab > L) throw Error("state invariant: zstar label outside 1..L");
  for (int j = 0; j < q; ++j) {
    for (int i = 0; i < z.cols(); ++i) {
      if (z(j, i) < 1 || z(j, i) > k[j])
        throw Error("state invariant: z_" + std::to_string(j + 1) + " exceeds k_" + std::to_string(j + 1));
    }
  }
}

long long TransitionTensor::context_row(const Eigen::VectorXi& context) const {
  if (context.size() != q) throw ValidationError("dimension error: context length != q");
  long long row = 0;
  for (int j = 0; j < q; ++j) {
    if (context[j] < 1 || context[j] > C0) throw ValidationError("context value outside 1..C0");
    row = row * C0 + (context[j] - 1);
  }
  return row;
}

Eigen::VectorXd evaluate_transition(const LatentState& s, const Eigen::VectorXi& context) {
  if (context.size() != s.q) throw ValidationError("dimension error: context length != q");
  for (int j = 0; j < s.q; ++j)
    if (context[j] < 1 || context[j] > s.C0) throw ValidationError("context value outside 1..C0");

  // Walk the level grid with an odometer, maintaining the prefix product
  // of weight terms, and pool mass by kernel cluster.
  const long long grid = s.grid_size();
  Eigen::VectorXd cluster_mass = Eigen::VectorXd::Zero(s.L);
  Eigen::VectorXi h = Eigen::VectorXi::Ones(s.q);
  std::vector<double> prefix(static_cast<std::size_t>(s.q) + 1, 1.0);
  auto weight = [&](int j) { return s.pi[static_cast<std::size_t>(j)][static_cast<std::size_t>(context[j] - 1)][h[j] - 1]; };
  for (int j = 0; j < s.q; ++j) prefix[static_cast<std::size_t>(j) + 1] = prefix[static_cast<std::size_t>(j)] * weight(j);
  for (long long idx = 0;;) {
    cluster_mass[s.zstar[static_cast<std::size_t>(idx)] - 1] += prefix[static_cast<std::size_t>(s.q)];
    ++idx;
    if (idx == grid) break;
    int j = s.q - 1;
    while (h[j] == s.k[j]) {
      h[j] = 1;
      --j;
    }
    ++h[j];
    for (int m = j; m < s.q; ++m) prefix[static_cast<std::size_t>(m) + 1] = prefix[static_cast<std::size_t>(m)] * weight(m);
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(s.C0);
  for (int l = 0; l < s.L; ++l)
    if (cluster_mass[l] > 0.0) out += cluster_mass[l] * s.lambda_star[static_cast<std::size_t>(l)];
  return out;
}

TransitionTensor materialize_tensor(const LatentState& s, long long cap) {
  double rows_f = std::pow(static_cast<double>(s.C0), s.q);
  if (rows_f > static_cast<double>(cap))
    throw ValidationError("size error: C0^q = " + std::to_string(rows_f) + " rows exceed cap " + std::to_string(cap));
  long long rows = 1;
  for (int j = 0; j < s.q; ++j) rows *= s.C0;
  TransitionTensor t;
  t.C0 = s.C0;
  t.q = s.q;
  t.p.resize(rows, s.C0);
  Eigen::VectorXi ctx = Eigen::VectorXi::Ones(s.q);
  for (long long r = 0;; ++r) {
    t.p.row(r) = evaluate_transition(s, ctx).transpose();
    if (r + 1 == rows) break;
    int j = s.q - 1;
    while (ctx[j] == s.C0) {
      ctx[j] = 1;
      --j;
    }
    ++ctx[j];
  }
  return t;
}

long long parameter_count(const Eigen::VectorXi& k, int C0) {
  long long core = C0 - 1;
  long long weights = 0;
  for (int j = 0; j < k.size(); ++j) {
    if (k[j] < 1 || k[j] > C0) throw ValidationError("level outside 1..C0 in parameter_count");
    core *= k[j];
    weights += k[j] - 1;
  }
  return core + static_cast<long long>(C0) * weights;
}

long long full_model_parameter_count(int C0, int q) {
  long long rows = 1;
  for (int j = 0; j < q; ++j) rows *= C0;
  return (C0 - 1) * rows;
}

Eigen::VectorXd lag_prior_pmf(double phi, int j, int C0) {
  if (j < 1 || C0 < 1) throw ValidationError("lag_prior_pmf needs j >= 1 and C0 >= 1");
  if (!(phi >= 0.0)) throw ValidationError("phi must be nonnegative");
  Eigen::VectorXd p(C0);
  for (int k = 1; k <= C0; ++k) p[k - 1] = -phi * j * k;
  p = (p.array() - p.maxCoeff()).exp();
  return p / p.sum();
}

double l1_distance(const TransitionTensor& a, const TransitionTensor& b) {
  if (a.C0 != b.C0 || a.q != b.q || a.p.rows() != b.p.rows() || a.p.cols() != b.p.cols())
    throw ValidationError("dimension error: transition tables have different shapes");
  return (a.p - b.p).cwiseAbs().sum();
}

double average_l1_error(const Eigen::MatrixXd& est_rows, const Eigen::MatrixXd& ref_rows) {
  if (est_rows.rows() != ref_rows.rows() || est_rows.cols() != ref_rows.cols())
    throw ValidationError("dimension error: row blocks have different shapes");
  if (est_rows.rows() == 0) throw ValidationError("input error: no contexts to score");
  return (est_rows - ref_rows).cwiseAbs().sum() /
         (static_cast<double>(est_rows.cols()) * static_cast<double>(est_rows.rows()));
}

double average_l1_error(const TransitionTensor& est, const TransitionTensor& ref,
                        const std::vector<Eigen::VectorXi>& contexts) {
  if (contexts.empty()) throw ValidationError("input error: no contexts to score");
  Eigen::MatrixXd e(static_cast<long long>(contexts.size()), est.C0);
  Eigen::MatrixXd r(static_cast<long long>(contexts.size()), ref.C0);
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    e.row(static_cast<long long>(i)) = est.p.row(est.context_row(contexts[i]));
    r.row(static_cast<long long>(i)) = ref.p.row(ref.context_row(contexts[i]));
  }
  return average_l1_error(e, r);
}

double ktilde_prior_prob_one(double gamma_j, double phi, int j, const Eigen::VectorXi& counts,
                             int C0, KMode mode) {
  if (!(gamma_j > 0.0)) throw ValidationError("gamma must be positive");
  if (counts.size() != C0) throw ValidationError("dimension error: counts length != C0");
  for (int r = 0; r < C0; ++r)
    if (counts[r] < 0) throw ValidationError("counts must be nonnegative");
  const Eigen::VectorXd p0 = lag_prior_pmf(phi, j, C0);
  Eigen::VectorXd terms(C0);
  for (int k = 1; k <= C0; ++k) {
    double lt = std::log(p0[k - 1]) + std::log(static_cast<double>(k));
    for (int r = 0; r < C0; ++r) {
      const int n = counts[r];
      if (n == 0) continue;
      if (mode == KMode::exact) {
        lt += log_rising(gamma_j, n) - log_rising(k * gamma_j, n);
      } else {
        lt += (1.0 - k) * gamma_j * std::log(static_cast<double>(n)) + std::lgamma(k * gamma_j) -
              std::lgamma(gamma_j);
      }
    }
    terms[k - 1] = lt;
  }
  return std::exp(log_sum_exp(terms));
}

}  // namespace ctf
