#include "ctf/simgen.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>
#include <unordered_map>

#include "ctf/chain.hpp"
#include "ctf/inference.hpp"
#include "ctf/init_approx.hpp"
#include "ctf/sampler.hpp"

namespace ctf {

namespace {

void validate_lags(int C0, const std::vector<int>& lags) {
  if (C0 < 2) throw ValidationError("true process needs C0 >= 2");
  if (lags.empty()) throw ValidationError("true process needs at least one lag");
  for (std::size_t i = 0; i < lags.size(); ++i) {
    if (lags[i] < 1) throw ValidationError("lags are 1-based");
    if (i > 0 && lags[i] <= lags[i - 1]) throw ValidationError("lags must be strictly increasing");
  }
}

}  // namespace

long long LagTensor::row_of(const Eigen::VectorXi& lag_values) const {
  if (lag_values.size() != static_cast<int>(lags.size()))
    throw ValidationError("dimension error: lag value vector length mismatch");
  long long row = 0;
  for (int i = 0; i < lag_values.size(); ++i) {
    if (lag_values[i] < 1 || lag_values[i] > C0) throw ValidationError("lag value outside 1..C0");
    row = row * C0 + (lag_values[i] - 1);
  }
  return row;
}

Eigen::VectorXd LagTensor::row_for_context(const Eigen::VectorXi& full_context) const {
  Eigen::VectorXi vals(static_cast<int>(lags.size()));
  for (std::size_t i = 0; i < lags.size(); ++i) {
    if (lags[i] > full_context.size()) throw ValidationError("dimension error: context shorter than max lag");
    vals[static_cast<int>(i)] = full_context[lags[i] - 1];
  }
  return p.row(row_of(vals)).transpose();
}

TransitionTensor LagTensor::lift(int q, long long cap) const {
  if (q < lags.back()) throw ValidationError("dimension error: q below the max lag");
  const double rows_f = std::pow(static_cast<double>(C0), q);
  if (rows_f > static_cast<double>(cap))
    throw ValidationError("size error: C0^q exceeds cap " + std::to_string(cap));
  long long rows = 1;
  for (int j = 0; j < q; ++j) rows *= C0;
  TransitionTensor t;
  t.C0 = C0;
  t.q = q;
  t.p.resize(rows, C0);
  Eigen::VectorXi ctx = Eigen::VectorXi::Ones(q);
  for (long long r = 0;; ++r) {
    t.p.row(r) = row_for_context(ctx).transpose();
    if (r + 1 == rows) break;
    int j = q - 1;
    while (ctx[j] == C0) {
      ctx[j] = 1;
      --j;
    }
    ++ctx[j];
  }
  return t;
}

TrueProcess generate_true_tensor(int C0, const std::vector<int>& lags, RngStream& rng) {
  validate_lags(C0, lags);
  TrueProcess proc;
  proc.tensor.C0 = C0;
  proc.tensor.lags = lags;
  proc.q = lags.back() + 2;
  long long rows = 1;
  for (std::size_t i = 0; i < lags.size(); ++i) rows *= C0;
  proc.tensor.p.resize(rows, C0);
  auto squash = [](double u) { return u * u / (u * u + (1.0 - u) * (1.0 - u)); };
  for (long long r = 0; r < rows; ++r) {
    double used = 0.0;
    for (int c = 0; c < C0 - 1; ++c) {
      const double f = squash(rng.uniform());
      const double mass = (c == 0) ? f : f * (1.0 - used);
      proc.tensor.p(r, c) = mass;
      used += mass;
    }
    proc.tensor.p(r, C0 - 1) = 1.0 - used;
  }
  return proc;
}

Eigen::VectorXi simulate_chain(const TrueProcess& proc, int n_total, RngStream& rng, int warmup) {
  if (n_total < 1) throw ValidationError("simulation length must be positive");
  if (warmup < 0) throw ValidationError("warmup must be nonnegative");
  const int q = proc.q;
  const int C0 = proc.tensor.C0;
  const int total = q + warmup + n_total;
  Eigen::VectorXi buf(total);
  for (int t = 0; t < q; ++t) buf[t] = rng.uniform_int(C0) + 1;
  Eigen::VectorXi ctx(q);
  std::vector<double> w(static_cast<std::size_t>(C0));
  for (int t = q; t < total; ++t) {
    for (int j = 1; j <= q; ++j) ctx[j - 1] = buf[t - j];
    const Eigen::VectorXd row = proc.tensor.row_for_context(ctx);
    for (int c = 0; c < C0; ++c) w[static_cast<std::size_t>(c)] = row[c];
    buf[t] = rng.categorical(std::span<const double>(w.data(), w.size())) + 1;
  }
  return buf.tail(n_total);
}

SequenceData seq_from_codes(const Eigen::VectorXi& codes, int C0) {
  if (codes.size() == 0) throw ValidationError("input error: empty code sequence");
  std::vector<std::string> symbols;
  for (int c = 1; c <= C0; ++c) symbols.push_back(std::to_string(c));
  SequenceData seq;
  seq.alphabet = Alphabet(symbols);
  seq.C0 = C0;
  seq.T = static_cast<int>(codes.size());
  seq.y = codes;
  for (int t = 0; t < seq.T; ++t)
    if (codes[t] < 1 || codes[t] > C0) throw ValidationError("code outside 1..C0");
  return seq;
}

LagTensor mle_oracle(const SequenceData& data, const std::vector<int>& lag_set, double smoothing) {
  if (data.q < 1) throw ValidationError("lag design missing; call build_lag_design first");
  validate_lags(data.C0, lag_set);
  if (lag_set.back() > data.q) throw ValidationError("lag set exceeds the design order q");
  if (smoothing < 0.0) throw ValidationError("smoothing must be nonnegative");
  LagTensor t;
  t.C0 = data.C0;
  t.lags = lag_set;
  long long rows = 1;
  for (std::size_t i = 0; i < lag_set.size(); ++i) rows *= data.C0;
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(rows, data.C0);
  Eigen::VectorXi vals(static_cast<int>(lag_set.size()));
  for (int i = 0; i < data.n_modeled(); ++i) {
    for (std::size_t m = 0; m < lag_set.size(); ++m) vals[static_cast<int>(m)] = data.w(lag_set[m] - 1, i);
    counts(t.row_of(vals), data.y[data.t_star + i - 1] - 1) += 1.0;
  }
  t.p.resize(rows, data.C0);
  for (long long r = 0; r < rows; ++r) {
    const double tot = counts.row(r).sum();
    if (tot + data.C0 * smoothing == 0.0) {
      t.p.row(r).setConstant(1.0 / data.C0);
    } else {
      for (int c = 0; c < data.C0; ++c) t.p(r, c) = (counts(r, c) + smoothing) / (tot + data.C0 * smoothing);
    }
  }
  return t;
}

CaseSpec parse_case(const std::string& text) {
  const std::string s = [&] {
    std::string out;
    for (char c : text)
      if (!std::isspace(static_cast<unsigned char>(c))) out += c;
    return out;
  }();
  if (s.size() == 1) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    static const std::vector<std::pair<int, std::vector<int>>> table = {
        {4, {1, 2, 3}}, {3, {1, 2, 3}}, {4, {1, 2, 4}}, {3, {1, 2, 4}},
        {4, {1, 3, 5}}, {3, {1, 3, 5}}, {3, {1, 4, 8}}, {2, {1, 4, 8}},
    };
    if (c < 'A' || c > 'H') throw ValidationError("unknown case '" + text + "' (expected A..H or [C0,{...}])");
    CaseSpec cs;
    cs.name = std::string(1, c);
    cs.C0 = table[static_cast<std::size_t>(c - 'A')].first;
    cs.lags = table[static_cast<std::size_t>(c - 'A')].second;
    cs.q = cs.lags.back() + 2;
    return cs;
  }
  if (s.size() < 6 || s.front() != '[' || s.back() != ']')
    throw ValidationError("unknown case '" + text + "' (expected A..H or [C0,{...}])");
  const auto comma = s.find(',');
  const auto lbrace = s.find('{');
  const auto rbrace = s.find('}');
  if (comma == std::string::npos || lbrace == std::string::npos || rbrace == std::string::npos ||
      !(comma < lbrace && lbrace < rbrace) || rbrace + 1 != s.size() - 1)
    throw ValidationError("malformed case '" + text + "'");
  CaseSpec cs;
  cs.name = s;
  try {
    cs.C0 = std::stoi(s.substr(1, comma - 1));
    std::string body = s.substr(lbrace + 1, rbrace - lbrace - 1);
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) throw ValidationError("malformed case '" + text + "'");
      cs.lags.push_back(std::stoi(item));
    }
  } catch (const std::invalid_argument&) {
    throw ValidationError("malformed case '" + text + "'");
  } catch (const std::out_of_range&) {
    throw ValidationError("malformed case '" + text + "'");
  }
  if (cs.lags.empty()) throw ValidationError("malformed case '" + text + "'");
  validate_lags(cs.C0, cs.lags);
  cs.q = cs.lags.back() + 2;
  return cs;
}

namespace {

struct RepOutcome {
  ExperimentRow ctf;
  ExperimentRow mle;
};

RepOutcome run_replicate(const ExperimentConfig& cfg, int rep) {
  const CaseSpec& cs = cfg.cs;
  RngStream master(cfg.seed);
  RngStream rep_rng = master.split("rep").split(static_cast<std::uint64_t>(rep));
  const std::uint64_t rep_seed = rep_rng.seed();

  RngStream rng_truth = rep_rng.split("truth");
  const TrueProcess truth = generate_true_tensor(cs.C0, cs.lags, rng_truth);
  RngStream rng_sim = rep_rng.split("sim");
  const Eigen::VectorXi full = simulate_chain(truth, cfg.T + cfg.N, rng_sim);

  SequenceData train = build_lag_design(seq_from_codes(full.head(cfg.T), cs.C0), cs.q);

  std::vector<Eigen::VectorXi> contexts;
  Eigen::MatrixXd truth_rows(cfg.N, cs.C0);
  Eigen::VectorXi actual(cfg.N);
  for (int m = 0; m < cfg.N; ++m) {
    const int t = cfg.T + 1 + m;  // 1-based position in the full run
    Eigen::VectorXi ctx(cs.q);
    for (int j = 1; j <= cs.q; ++j) ctx[j - 1] = full[t - 1 - j];
    truth_rows.row(m) = truth.tensor.row_for_context(ctx).transpose();
    actual[m] = full[t - 1];
    contexts.push_back(std::move(ctx));
  }
  // Snapshot each distinct context once.
  std::vector<Eigen::VectorXi> distinct;
  std::vector<int> ctx_slot(static_cast<std::size_t>(cfg.N));
  {
    std::unordered_map<std::string, int> seen;
    for (int m = 0; m < cfg.N; ++m) {
      std::string key;
      for (int j = 0; j < cs.q; ++j) key += std::to_string(contexts[static_cast<std::size_t>(m)][j]) + ",";
      auto [it, fresh] = seen.try_emplace(key, static_cast<int>(distinct.size()));
      if (fresh) distinct.push_back(contexts[static_cast<std::size_t>(m)]);
      ctx_slot[static_cast<std::size_t>(m)] = it->second;
    }
  }

  Hyperparams hyper = Hyperparams::defaults(cs.C0, cs.q);
  hyper.schedule = cfg.schedule;

  const auto t0 = std::chrono::steady_clock::now();
  RngStream rng_init = rep_rng.split("init");
  const InitResult init = init_two_stage(train, hyper, cfg.init_iters, rng_init);
  RngStream rng_state = rep_rng.split("state");
  const LatentState state0 = make_initial_state(train, hyper, init.z, init.k, rng_state);
  RunOptions opts;
  opts.snapshot_contexts = distinct;
  opts.kmode = cfg.kmode;
  const PosteriorChain chain = run_chain(train, hyper, state0, rep_rng.split("chain").seed(), opts);
  const Eigen::MatrixXd pm = posterior_mean_transition(chain, distinct);
  Eigen::MatrixXd est(cfg.N, cs.C0);
  for (int m = 0; m < cfg.N; ++m) est.row(m) = pm.row(ctx_slot[static_cast<std::size_t>(m)]);
  const auto t1 = std::chrono::steady_clock::now();

  RepOutcome out;
  out.ctf.case_name = cs.name;
  out.ctf.T = cfg.T;
  out.ctf.rep = rep;
  out.ctf.seed = rep_seed;
  out.ctf.method = "ctf";
  out.ctf.avg_l1 = average_l1_error(est, truth_rows);
  int miss = 0;
  for (int m = 0; m < cfg.N; ++m)
    if (predict_one_step(est.row(m).transpose()) != actual[m]) ++miss;
  out.ctf.class_err = static_cast<double>(miss) / cfg.N;
  out.ctf.wall_secs = std::chrono::duration<double>(t1 - t0).count();

  const auto t2 = std::chrono::steady_clock::now();
  std::vector<int> all_lags(static_cast<std::size_t>(cs.q));
  for (int j = 1; j <= cs.q; ++j) all_lags[static_cast<std::size_t>(j - 1)] = j;
  const LagTensor oracle = mle_oracle(train, all_lags, 0.5);
  Eigen::MatrixXd est_o(cfg.N, cs.C0);
  for (int m = 0; m < cfg.N; ++m) est_o.row(m) = oracle.row_for_context(contexts[static_cast<std::size_t>(m)]).transpose();
  const auto t3 = std::chrono::steady_clock::now();

  out.mle = out.ctf;
  out.mle.method = "mle";
  out.mle.avg_l1 = average_l1_error(est_o, truth_rows);
  miss = 0;
  for (int m = 0; m < cfg.N; ++m)
    if (predict_one_step(est_o.row(m).transpose()) != actual[m]) ++miss;
  out.mle.class_err = static_cast<double>(miss) / cfg.N;
  out.mle.wall_secs = std::chrono::duration<double>(t3 - t2).count();
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.n_reps < 1) throw ValidationError("replicate count must be positive");
  if (cfg.T < 1 || cfg.N < 1) throw ValidationError("T and N must be positive");
  if (cfg.threads < 1) throw ValidationError("thread count must be positive");
  Hyperparams::defaults(cfg.cs.C0, cfg.cs.q).validate(cfg.cs.C0, cfg.cs.q);

  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(cfg.n_reps));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.n_reps));
  const int workers = std::min(cfg.threads, cfg.n_reps);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int rep = w; rep < cfg.n_reps; rep += workers) {
        try {
          outcomes[static_cast<std::size_t>(rep)] = run_replicate(cfg, rep);
        } catch (...) {
          errors[static_cast<std::size_t>(rep)] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  ExperimentResult res;
  for (const auto& o : outcomes) {
    res.rows.push_back(o.ctf);
    res.rows.push_back(o.mle);
  }
  return res;
}

MethodSummary summarize_method(const ExperimentResult& res, const std::string& method) {
  std::vector<double> l1, err, wall;
  for (const auto& r : res.rows) {
    if (r.method != method) continue;
    l1.push_back(r.avg_l1);
    err.push_back(r.class_err);
    wall.push_back(r.wall_secs);
  }
  if (l1.empty()) throw ValidationError("no rows for method '" + method + "'");
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto se = [&](const std::vector<double>& v, double m) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / (static_cast<double>(v.size() - 1) * static_cast<double>(v.size())));
  };
  MethodSummary s;
  s.l1_mean = mean(l1);
  s.l1_se = se(l1, s.l1_mean);
  s.err_mean = mean(err);
  s.err_se = se(err, s.err_mean);
  s.wall_mean = mean(wall);
  return s;
}

void write_metrics_csv(const ExperimentResult& res, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write '" + file.string() + "'");
  out << "case,T,rep,seed,method,avg_l1,class_err,wall_secs\n";
  for (const auto& r : res.rows) {
    out << r.case_name << "," << r.T << "," << r.rep << "," << r.seed << "," << r.method << ","
        << format_double(r.avg_l1) << "," << format_double(r.class_err) << "," << format_double(r.wall_secs)
        << "\n";
  }
}

}  // namespace ctf
