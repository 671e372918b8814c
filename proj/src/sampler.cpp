#include "ctf/sampler.hpp"

#include <cmath>

#include "ctf/inference.hpp"
#include "ctf/logmath.hpp"

namespace ctf {

UTable utable_for_counts(const Eigen::VectorXi& counts, double gamma_j, double phi, int j, int C0) {
  if (counts.size() != C0) throw ValidationError("dimension error: lag counts length != C0");
  const Eigen::VectorXd p0 = lag_prior_pmf(phi, j, C0);
  UTable t;
  t.log_terms.resize(C0);
  for (int k = 1; k <= C0; ++k) {
    double lt = std::log(p0[k - 1]);
    for (int r = 0; r < C0; ++r) {
      if (counts[r] == 0) continue;
      lt += std::lgamma(k * gamma_j) - std::lgamma(k * gamma_j + counts[r]);
    }
    t.log_terms[k - 1] = lt;
  }
  t.log_u.resize(C0);
  for (int z = C0; z >= 1; --z) {
    if (z == C0) {
      t.log_u[z - 1] = t.log_terms[z - 1];
    } else {
      const double a = t.log_u[z];
      const double b = t.log_terms[z - 1];
      const double m = std::max(a, b);
      t.log_u[z - 1] = m + std::log(std::exp(a - m) + std::exp(b - m));
    }
  }
  return t;
}

std::vector<UTable> precompute_u_tables(const SequenceData& data, const Hyperparams& hyper) {
  if (data.q < 1) throw ValidationError("lag design missing; call build_lag_design first");
  std::vector<UTable> tables;
  tables.reserve(static_cast<std::size_t>(data.q));
  for (int j = 1; j <= data.q; ++j)
    tables.push_back(utable_for_counts(data.n_counts.row(j - 1).transpose(), hyper.gamma[j - 1], hyper.phi, j, data.C0));
  return tables;
}

Eigen::MatrixXi grid_counts(const LatentState& s, const SequenceData& data) {
  const GridIndexer gi(s.k);
  Eigen::MatrixXi n = Eigen::MatrixXi::Zero(gi.size, s.C0);
  const int npos = data.n_modeled();
  for (int i = 0; i < npos; ++i) {
    long long idx = 0;
    for (int j = 0; j < s.q; ++j) idx += static_cast<long long>(s.z(j, i) - 1) * gi.stride[static_cast<std::size_t>(j)];
    n(idx, data.y[data.t_star + i - 1] - 1) += 1;
  }
  return n;
}

SweepStats sweep_stats(const LatentState& s, const SequenceData& data) {
  SweepStats st;
  st.n_h_y = grid_counts(s, data);
  st.n_star = Eigen::VectorXi::Zero(s.L);
  st.n_star_y = Eigen::MatrixXi::Zero(s.L, s.C0);
  for (long long idx = 0; idx < static_cast<long long>(s.zstar.size()); ++idx) {
    const int lab = s.zstar[static_cast<std::size_t>(idx)] - 1;
    st.n_star[lab] += 1;
    st.n_star_y.row(lab) += st.n_h_y.row(idx);
  }
  return st;
}

Eigen::MatrixXi lag_class_counts(const LatentState& s, const SequenceData& data, int j) {
  Eigen::MatrixXi n = Eigen::MatrixXi::Zero(s.C0, s.k[j - 1]);
  const int npos = data.n_modeled();
  for (int i = 0; i < npos; ++i) n(data.w(j - 1, i) - 1, s.z(j - 1, i) - 1) += 1;
  return n;
}

void step_zstar(LatentState& s, const Eigen::MatrixXi& n_h_y, RngStream& rng) {
  const long long grid = s.grid_size();
  if (n_h_y.rows() != grid) throw Error("grid count table does not match the grid");
  Eigen::VectorXd log_pi_star(s.L);
  Eigen::VectorXd cum(s.L);
  double run = 0.0;
  for (int l = 0; l < s.L; ++l) {
    log_pi_star[l] = std::log(s.pi_star[l]);
    run += s.pi_star[l];
    cum[l] = run;
  }
  Eigen::MatrixXd log_lambda(s.L, s.C0);
  for (int l = 0; l < s.L; ++l)
    for (int c = 0; c < s.C0; ++c) log_lambda(l, c) = std::log(s.lambda_star[static_cast<std::size_t>(l)][c]);

  std::vector<double> logw(static_cast<std::size_t>(s.L));
  const std::span<const double> cum_span(cum.data(), static_cast<std::size_t>(s.L));
  for (long long idx = 0; idx < grid; ++idx) {
    if (n_h_y.row(idx).sum() == 0) {
      // No data attached: the conditional is the stick weights themselves.
      s.zstar[static_cast<std::size_t>(idx)] = rng.categorical_cdf(cum_span) + 1;
      continue;
    }
    for (int l = 0; l < s.L; ++l) {
      double lw = log_pi_star[l];
      for (int c = 0; c < s.C0; ++c) {
        const int n = n_h_y(idx, c);
        if (n > 0) lw += n * log_lambda(l, c);
      }
      logw[static_cast<std::size_t>(l)] = lw;
    }
    s.zstar[static_cast<std::size_t>(idx)] = rng.categorical_logits(logw) + 1;
  }
}

void step_sticks(LatentState& s, const Eigen::VectorXi& n_star, double alpha0, RngStream& rng) {
  Eigen::VectorXi tail(s.L);
  int run = 0;
  for (int l = s.L - 1; l >= 0; --l) {
    tail[l] = run;
    run += n_star[l];
  }
  double remaining = 1.0;
  for (int l = 0; l < s.L; ++l) {
    if (l == s.L - 1)
      s.V[l] = 1.0;
    else
      s.V[l] = rng.beta(1.0 + n_star[l], alpha0 + tail[l]);
    s.pi_star[l] = s.V[l] * remaining;
    remaining *= 1.0 - s.V[l];
  }
}

void step_lambda(LatentState& s, const Eigen::MatrixXi& n_star_y, double alpha, RngStream& rng) {
  Eigen::VectorXd conc(s.C0);
  for (int l = 0; l < s.L; ++l) {
    for (int c = 0; c < s.C0; ++c) conc[c] = alpha + n_star_y(l, c);
    s.lambda_star[static_cast<std::size_t>(l)] = rng.dirichlet(conc);
  }
}

void step_pi(LatentState& s, const SequenceData& data, const Eigen::VectorXd& gamma, RngStream& rng) {
  for (int j = 1; j <= s.q; ++j) {
    const int kj = s.k[j - 1];
    if (kj == 1) {
      for (int c = 0; c < s.C0; ++c) s.pi[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(c)] = Eigen::VectorXd::Ones(1);
      continue;
    }
    const Eigen::MatrixXi counts = lag_class_counts(s, data, j);
    Eigen::VectorXd conc(kj);
    for (int c = 0; c < s.C0; ++c) {
      for (int h = 0; h < kj; ++h) conc[h] = gamma[j - 1] + counts(c, h);
      s.pi[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(c)] = rng.dirichlet(conc);
    }
  }
}

void step_z(LatentState& s, const SequenceData& data, RngStream& rng) {
  const GridIndexer gi(s.k);
  const int npos = data.n_modeled();
  // Flat grid index of every position's current allocation column.
  std::vector<long long> idx(static_cast<std::size_t>(npos), 0);
  for (int i = 0; i < npos; ++i)
    for (int j = 0; j < s.q; ++j) idx[static_cast<std::size_t>(i)] += static_cast<long long>(s.z(j, i) - 1) * gi.stride[static_cast<std::size_t>(j)];

  std::vector<double> w(static_cast<std::size_t>(s.C0));
  for (int j = 1; j <= s.q; ++j) {
    const int kj = s.k[j - 1];
    if (kj == 1) continue;
    const long long stride = gi.stride[static_cast<std::size_t>(j - 1)];
    for (int i = 0; i < npos; ++i) {
      const int cur = s.z(j - 1, i);
      const long long base = idx[static_cast<std::size_t>(i)] - static_cast<long long>(cur - 1) * stride;
      const auto& weights = s.pi[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(data.w(j - 1, i) - 1)];
      const int yc = data.y[data.t_star + i - 1] - 1;
      for (int h = 1; h <= kj; ++h) {
        const int lab = s.zstar[static_cast<std::size_t>(base + static_cast<long long>(h - 1) * stride)];
        w[static_cast<std::size_t>(h - 1)] = weights[h - 1] * s.lambda_star[static_cast<std::size_t>(lab - 1)][yc];
      }
      const int pick = rng.categorical(std::span<const double>(w.data(), static_cast<std::size_t>(kj))) + 1;
      s.z(j - 1, i) = pick;
      idx[static_cast<std::size_t>(i)] = base + static_cast<long long>(pick - 1) * stride;
    }
  }
}

Eigen::VectorXd k_conditional_pmf(int maxz, const UTable& table) {
  const int C0 = static_cast<int>(table.log_terms.size());
  if (maxz < 1 || maxz > C0) throw Error("level support start outside 1..C0");
  Eigen::VectorXd p = Eigen::VectorXd::Zero(C0);
  for (int k = maxz; k <= C0; ++k) p[k - 1] = std::exp(table.log_terms[k - 1] - table.log_u[maxz - 1]);
  return p;
}

Eigen::VectorXd k_conditional_pmf_stirling(int maxz, const Eigen::VectorXi& counts, double gamma_j,
                                           double phi, int j, int C0) {
  if (maxz < 1 || maxz > C0) throw Error("level support start outside 1..C0");
  const Eigen::VectorXd p0 = lag_prior_pmf(phi, j, C0);
  double logsum = 0.0;
  for (int r = 0; r < C0; ++r)
    if (counts[r] > 0) logsum += std::log(static_cast<double>(counts[r]));
  Eigen::VectorXd logb = Eigen::VectorXd::Constant(C0, -std::numeric_limits<double>::infinity());
  for (int k = maxz; k <= C0; ++k) logb[k - 1] = std::log(p0[k - 1]) - k * gamma_j * logsum;
  const double norm = log_sum_exp(logb);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(C0);
  for (int k = maxz; k <= C0; ++k) p[k - 1] = std::exp(logb[k - 1] - norm);
  return p;
}

Eigen::VectorXi step_k(const LatentState& s, const SequenceData& data, const std::vector<UTable>& utables,
                       const Hyperparams& hyper, KMode mode, RngStream& rng) {
  Eigen::VectorXi k_new(s.q);
  for (int j = 1; j <= s.q; ++j) {
    int maxz = 1;
    for (int i = 0; i < s.z.cols(); ++i) maxz = std::max(maxz, s.z(j - 1, i));
    if (maxz > s.C0) throw Error("allocation exceeds the category count");
    const Eigen::VectorXd pmf =
        mode == KMode::exact
            ? k_conditional_pmf(maxz, utables[static_cast<std::size_t>(j - 1)])
            : k_conditional_pmf_stirling(maxz, data.n_counts.row(j - 1).transpose(), hyper.gamma[j - 1],
                                         hyper.phi, j, s.C0);
    k_new[j - 1] = rng.categorical(std::span<const double>(pmf.data(), static_cast<std::size_t>(s.C0))) + 1;
  }
  return k_new;
}

void resize_after_k(LatentState& s, const Eigen::VectorXi& k_new, const SequenceData& data,
                    const Eigen::VectorXd& gamma, RngStream& rng) {
  if (k_new.size() != s.q) throw Error("level vector has wrong length");
  if ((k_new.array() == s.k.array()).all()) return;

  const GridIndexer old_gi(s.k);
  const GridIndexer new_gi(k_new);
  std::vector<int> new_zstar(static_cast<std::size_t>(new_gi.size));
  Eigen::VectorXd cum(s.L);
  double run = 0.0;
  for (int l = 0; l < s.L; ++l) {
    run += s.pi_star[l];
    cum[l] = run;
  }
  const std::span<const double> cum_span(cum.data(), static_cast<std::size_t>(s.L));

  Eigen::VectorXi h = Eigen::VectorXi::Ones(s.q);
  for (long long idx = 0;; ++idx) {
    bool existed = true;
    for (int j = 0; j < s.q; ++j)
      if (h[j] > s.k[j]) {
        existed = false;
        break;
      }
    if (existed) {
      new_zstar[static_cast<std::size_t>(idx)] = s.zstar[static_cast<std::size_t>(old_gi.flat(h))];
    } else {
      new_zstar[static_cast<std::size_t>(idx)] = rng.categorical_cdf(cum_span) + 1;
    }
    if (idx + 1 == new_gi.size) break;
    int j = s.q - 1;
    while (h[j] == k_new[j]) {
      h[j] = 1;
      --j;
    }
    ++h[j];
  }

  const Eigen::VectorXi k_old = s.k;
  s.zstar = std::move(new_zstar);
  s.k = k_new;
  for (int j = 1; j <= s.q; ++j) {
    if (k_new[j - 1] == k_old[j - 1]) continue;
    const int kj = k_new[j - 1];
    if (kj == 1) {
      for (int c = 0; c < s.C0; ++c) s.pi[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(c)] = Eigen::VectorXd::Ones(1);
      continue;
    }
    const Eigen::MatrixXi counts = lag_class_counts(s, data, j);
    Eigen::VectorXd conc(kj);
    for (int c = 0; c < s.C0; ++c) {
      for (int hh = 0; hh < kj; ++hh) conc[hh] = gamma[j - 1] + counts(c, hh);
      s.pi[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(c)] = rng.dirichlet(conc);
    }
  }
}

double collapsed_loglik(const Eigen::MatrixXi& n_h_y, double alpha) {
  const int C0 = static_cast<int>(n_h_y.cols());
  const double lg_alpha = std::lgamma(alpha);
  const double lg_total = std::lgamma(C0 * alpha);
  double ll = 0.0;
  for (long long idx = 0; idx < n_h_y.rows(); ++idx) {
    const int tot = n_h_y.row(idx).sum();
    if (tot == 0) continue;
    double cell = lg_total - std::lgamma(C0 * alpha + tot);
    for (int c = 0; c < C0; ++c) {
      const int n = n_h_y(idx, c);
      if (n > 0) cell += std::lgamma(alpha + n) - lg_alpha;
    }
    ll += cell;
  }
  return ll;
}

double collapsed_loglik(const LatentState& s, const SequenceData& data, double alpha) {
  return collapsed_loglik(grid_counts(s, data), alpha);
}

PosteriorChain run_chain(const SequenceData& data, const Hyperparams& hyper, const LatentState& init,
                         std::uint64_t seed, const RunOptions& options) {
  hyper.validate(data.C0, data.q);
  if (data.q < 1) throw ValidationError("lag design missing; call build_lag_design first");
  for (const auto& ctx : options.snapshot_contexts)
    if (ctx.size() != data.q) throw ValidationError("dimension error: snapshot context length != q");

  LatentState s = init;
  if (options.audit) s.check_invariants();
  const auto utables = precompute_u_tables(data, hyper);

  RngStream base(seed);
  RngStream rng_zstar = base.split("zstar");
  RngStream rng_sticks = base.split("sticks");
  RngStream rng_lambda = base.split("lambda");
  RngStream rng_pi = base.split("pi");
  RngStream rng_z = base.split("z");
  RngStream rng_k = base.split("k");
  RngStream rng_resize = base.split("resize");

  PosteriorChain chain;
  chain.C0 = data.C0;
  chain.q = data.q;
  chain.seed = seed;
  chain.schedule = hyper.schedule;
  chain.snapshot_contexts = options.snapshot_contexts;

  const Schedule& sched = hyper.schedule;
  for (int iter = 1; iter <= sched.n_iter; ++iter) {
    SweepStats st;
    st.n_h_y = grid_counts(s, data);
    step_zstar(s, st.n_h_y, rng_zstar);
    st.n_star = Eigen::VectorXi::Zero(s.L);
    st.n_star_y = Eigen::MatrixXi::Zero(s.L, s.C0);
    for (long long idx = 0; idx < static_cast<long long>(s.zstar.size()); ++idx) {
      const int lab = s.zstar[static_cast<std::size_t>(idx)] - 1;
      st.n_star[lab] += 1;
      st.n_star_y.row(lab) += st.n_h_y.row(idx);
    }
    step_sticks(s, st.n_star, hyper.alpha0, rng_sticks);
    step_lambda(s, st.n_star_y, hyper.alpha, rng_lambda);
    step_pi(s, data, hyper.gamma, rng_pi);
    step_z(s, data, rng_z);
    const Eigen::VectorXi k_new = step_k(s, data, utables, hyper, options.kmode, rng_k);
    resize_after_k(s, k_new, data, hyper.gamma, rng_resize);
    if (options.audit) s.check_invariants();

    if (iter > sched.n_burn && (iter - sched.n_burn) % sched.thin == 0) {
      ChainSample sample;
      sample.iter = iter;
      sample.k = s.k;
      sample.ktilde = ktilde_of(s.z);
      sample.loglik = collapsed_loglik(s, data, hyper.alpha);
      if (!options.snapshot_contexts.empty()) {
        sample.snapshots.resize(static_cast<long long>(options.snapshot_contexts.size()), data.C0);
        for (std::size_t i = 0; i < options.snapshot_contexts.size(); ++i)
          sample.snapshots.row(static_cast<long long>(i)) =
              evaluate_transition(s, options.snapshot_contexts[i]).transpose();
      }
      chain.samples.push_back(std::move(sample));
    }
  }
  return chain;
}

LatentState make_initial_state(const SequenceData& data, const Hyperparams& hyper,
                               const Eigen::MatrixXi& z, const Eigen::VectorXi& k, RngStream& rng) {
  hyper.validate(data.C0, data.q);
  LatentState s;
  s.C0 = data.C0;
  s.q = data.q;
  s.L = hyper.L;
  s.k = k;
  s.z = z;
  if (k.size() != data.q || z.rows() != data.q || z.cols() != data.n_modeled())
    throw ValidationError("dimension error: allocations or levels do not match the lag design");
  for (int j = 0; j < data.q; ++j) {
    if (k[j] < 1 || k[j] > data.C0) throw ValidationError("level outside 1..C0");
    for (int i = 0; i < z.cols(); ++i)
      if (z(j, i) < 1 || z(j, i) > k[j]) throw ValidationError("allocation outside 1..k_j");
  }

  s.V.resize(s.L);
  s.pi_star.resize(s.L);
  double remaining = 1.0;
  for (int l = 0; l < s.L; ++l) {
    s.V[l] = (l == s.L - 1) ? 1.0 : rng.beta(1.0, hyper.alpha0);
    s.pi_star[l] = s.V[l] * remaining;
    remaining *= 1.0 - s.V[l];
  }
  s.lambda_star.resize(static_cast<std::size_t>(s.L));
  const Eigen::VectorXd conc0 = Eigen::VectorXd::Constant(data.C0, hyper.alpha);
  for (int l = 0; l < s.L; ++l) s.lambda_star[static_cast<std::size_t>(l)] = rng.dirichlet(conc0);

  const GridIndexer gi(k);
  s.zstar.resize(static_cast<std::size_t>(gi.size));
  Eigen::VectorXd cum(s.L);
  double run = 0.0;
  for (int l = 0; l < s.L; ++l) {
    run += s.pi_star[l];
    cum[l] = run;
  }
  const std::span<const double> cum_span(cum.data(), static_cast<std::size_t>(s.L));
  for (long long idx = 0; idx < gi.size; ++idx) s.zstar[static_cast<std::size_t>(idx)] = rng.categorical_cdf(cum_span) + 1;

  s.pi.assign(static_cast<std::size_t>(data.q), std::vector<Eigen::VectorXd>(static_cast<std::size_t>(data.C0)));
  for (int j = 1; j <= data.q; ++j) {
    const int kj = k[j - 1];
    if (kj == 1) {
      for (int c = 0; c < data.C0; ++c) s.pi[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(c)] = Eigen::VectorXd::Ones(1);
      continue;
    }
    const Eigen::MatrixXi counts = lag_class_counts(s, data, j);
    Eigen::VectorXd conc(kj);
    for (int c = 0; c < data.C0; ++c) {
      for (int h = 0; h < kj; ++h) conc[h] = hyper.gamma[j - 1] + counts(c, h);
      s.pi[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(c)] = rng.dirichlet(conc);
    }
  }
  return s;
}

LatentState make_flat_state(const SequenceData& data, const Hyperparams& hyper, RngStream& rng) {
  const Eigen::VectorXi k = Eigen::VectorXi::Ones(data.q);
  const Eigen::MatrixXi z = Eigen::MatrixXi::Ones(data.q, data.n_modeled());
  return make_initial_state(data, hyper, z, k, rng);
}

LatentState draw_state_from_prior(const SequenceData& data, const Hyperparams& hyper, RngStream& rng) {
  Eigen::VectorXi k(data.q);
  for (int j = 1; j <= data.q; ++j) {
    const Eigen::VectorXd p0 = lag_prior_pmf(hyper.phi, j, data.C0);
    k[j - 1] = rng.categorical(std::span<const double>(p0.data(), static_cast<std::size_t>(data.C0))) + 1;
  }
  LatentState s;
  s.C0 = data.C0;
  s.q = data.q;
  s.L = hyper.L;
  s.k = k;
  s.z = Eigen::MatrixXi::Ones(data.q, data.n_modeled());
  s.V.resize(s.L);
  s.pi_star.resize(s.L);
  double remaining = 1.0;
  for (int l = 0; l < s.L; ++l) {
    s.V[l] = (l == s.L - 1) ? 1.0 : rng.beta(1.0, hyper.alpha0);
    s.pi_star[l] = s.V[l] * remaining;
    remaining *= 1.0 - s.V[l];
  }
  s.lambda_star.resize(static_cast<std::size_t>(s.L));
  const Eigen::VectorXd conc0 = Eigen::VectorXd::Constant(data.C0, hyper.alpha);
  for (int l = 0; l < s.L; ++l) s.lambda_star[static_cast<std::size_t>(l)] = rng.dirichlet(conc0);
  const GridIndexer gi(k);
  s.zstar.resize(static_cast<std::size_t>(gi.size));
  Eigen::VectorXd cum(s.L);
  double run = 0.0;
  for (int l = 0; l < s.L; ++l) {
    run += s.pi_star[l];
    cum[l] = run;
  }
  const std::span<const double> cum_span(cum.data(), static_cast<std::size_t>(s.L));
  for (long long idx = 0; idx < gi.size; ++idx) s.zstar[static_cast<std::size_t>(idx)] = rng.categorical_cdf(cum_span) + 1;
  s.pi.assign(static_cast<std::size_t>(data.q), std::vector<Eigen::VectorXd>(static_cast<std::size_t>(data.C0)));
  for (int j = 1; j <= data.q; ++j) {
    const int kj = k[j - 1];
    for (int c = 0; c < data.C0; ++c) {
      if (kj == 1) {
        s.pi[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(c)] = Eigen::VectorXd::Ones(1);
      } else {
        s.pi[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(c)] =
            rng.dirichlet(Eigen::VectorXd::Constant(kj, hyper.gamma[j - 1]));
      }
    }
  }
  return s;
}

SequenceData draw_data_and_allocations(LatentState& s, SequenceData data, RngStream& rng) {
  const GridIndexer gi(s.k);
  const int npos = data.n_modeled();
  std::vector<double> w(static_cast<std::size_t>(s.C0));
  for (int i = 0; i < npos; ++i) {
    const int t = data.t_star + i;  // 1-based time of the value being drawn
    long long idx = 0;
    for (int j = 1; j <= s.q; ++j) {
      const int wv = data.y[t - 1 - j];
      const auto& weights = s.pi[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(wv - 1)];
      int h = 1;
      if (s.k[j - 1] > 1)
        h = rng.categorical(std::span<const double>(weights.data(), static_cast<std::size_t>(s.k[j - 1]))) + 1;
      s.z(j - 1, i) = h;
      idx += static_cast<long long>(h - 1) * gi.stride[static_cast<std::size_t>(j - 1)];
    }
    const auto& kernel = s.lambda_star[static_cast<std::size_t>(s.zstar[static_cast<std::size_t>(idx)] - 1)];
    for (int c = 0; c < s.C0; ++c) w[static_cast<std::size_t>(c)] = kernel[c];
    data.y[t - 1] = rng.categorical(std::span<const double>(w.data(), static_cast<std::size_t>(s.C0))) + 1;
  }
  const int q = data.q;
  return build_lag_design(std::move(data), q);
}

}  // namespace ctf
