// Command line front end: fit, test, predict, diagnose, simulate.
//
// Option precedence is command line over --config file over built-in
// defaults. All validation and sampling happen before any output file is
// created, so a failed run leaves no partial artifacts. Reruns with the
// same inputs and seed write byte-identical files except run_log.txt and
// the wall_secs timing column.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ctf/chain.hpp"
#include "ctf/error.hpp"
#include "ctf/inference.hpp"
#include "ctf/init_approx.hpp"
#include "ctf/model.hpp"
#include "ctf/sampler.hpp"
#include "ctf/seq_data.hpp"
#include "ctf/simgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string iso_now() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunLog {
  std::string command;
  std::string started = iso_now();
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  void write(const fs::path& dir) const {
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream out(dir / "run_log.txt", std::ios::trunc);
    out << "command: " << command << "\n"
        << "started: " << started << "\n"
        << "finished: " << iso_now() << "\n"
        << "elapsed_secs: " << ctf::format_double(secs) << "\n";
  }
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ctf::IoError("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ctf::ValidationError("config error: " + std::string(e.what()));
  }
}

void check_config_keys(const json& cfg, const std::vector<std::string>& allowed) {
  for (const auto& [key, value] : cfg.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ctf::ValidationError("config error: unknown key '" + key + "'");
  }
}

// Fills value from the config file when the command line left it alone.
template <class T>
void merge(const CLI::Option* opt, const json& cfg, const char* key, T& value) {
  if (opt != nullptr && opt->count() > 0) return;
  if (!cfg.contains(key)) return;
  try {
    value = cfg.at(key).get<T>();
  } catch (const json::exception&) {
    throw ctf::ValidationError(std::string("config error: bad value for '") + key + "'");
  }
}

ctf::Schedule parse_schedule(const std::string& text) {
  if (text == "desk") return {10000, 2000, 5};
  if (text == "paper") return {50000, 10000, 5};
  ctf::Schedule s;
  char extra = 0;
  if (std::sscanf(text.c_str(), "%d,%d,%d%c", &s.n_iter, &s.n_burn, &s.thin, &extra) != 3)
    throw ctf::ValidationError("bad schedule '" + text +
                               "' (expected desk, paper, or n_iter,n_burn,thin)");
  return s;
}

ctf::Schedule schedule_from(const CLI::Option* opt, const json& cfg, const std::string& cli_text,
                            ctf::Schedule fallback) {
  if (opt != nullptr && opt->count() > 0) return parse_schedule(cli_text);
  if (cfg.contains("schedule")) {
    const json& s = cfg.at("schedule");
    if (s.is_string()) return parse_schedule(s.get<std::string>());
    if (s.is_object())
      return {s.value("n_iter", fallback.n_iter), s.value("n_burn", fallback.n_burn),
              s.value("thin", fallback.thin)};
    throw ctf::ValidationError("config error: bad value for 'schedule'");
  }
  return fallback;
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');)
    if (!part.empty()) out.push_back(part);
  return out;
}

json schedule_json(const ctf::Schedule& s) {
  return {{"n_iter", s.n_iter}, {"n_burn", s.n_burn}, {"thin", s.thin}};
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw ctf::IoError("cannot write '" + file.string() + "'");
  out << text;
}

// ---------------------------------------------------------------- fit --

struct FitArgs {
  std::string config, data, format = "plain", alphabet, out = "ctf_fit", schedule_text;
  int q = 0, L = 100, init_iters = 100, holdout = 0, batch_len = 100;
  double alpha = 0.0, alpha0 = 1.0, gamma = 0.0, phi = 0.5;
  std::uint64_t seed = 1;
  bool stirling = false, full_snapshots = false;

  struct Opts {
    CLI::Option *data = nullptr, *format = nullptr, *alphabet = nullptr, *q = nullptr,
                *alpha = nullptr, *alpha0 = nullptr, *gamma = nullptr, *phi = nullptr, *L = nullptr,
                *schedule = nullptr, *seed = nullptr, *out = nullptr, *stirling = nullptr,
                *init_iters = nullptr, *holdout = nullptr, *full_snapshots = nullptr,
                *batch_len = nullptr;
  } opt;
};

void add_fit_options(CLI::App* cmd, FitArgs& a) {
  cmd->add_option("--config", a.config, "JSON config file; flags override it");
  a.opt.data = cmd->add_option("--data", a.data, "input sequence file");
  a.opt.format = cmd->add_option("--format", a.format, "plain, csv, or fasta");
  a.opt.alphabet = cmd->add_option("--alphabet", a.alphabet, "comma-separated symbols in category order");
  a.opt.q = cmd->add_option("--q", a.q, "maximal order (number of candidate lags)");
  a.opt.alpha = cmd->add_option("--alpha", a.alpha, "kernel Dirichlet parameter (default 1/C0)");
  a.opt.alpha0 = cmd->add_option("--alpha0", a.alpha0, "stick-breaking concentration");
  a.opt.gamma = cmd->add_option("--gamma", a.gamma, "weight Dirichlet parameter (default 1/C0)");
  a.opt.phi = cmd->add_option("--phi", a.phi, "level prior decay rate");
  a.opt.L = cmd->add_option("--L", a.L, "kernel truncation level");
  a.opt.schedule = cmd->add_option("--schedule", a.schedule_text, "desk, paper, or n_iter,n_burn,thin");
  a.opt.seed = cmd->add_option("--seed", a.seed, "master seed");
  a.opt.out = cmd->add_option("--out", a.out, "output directory");
  a.opt.stirling = cmd->add_flag("--stirling", a.stirling, "approximate level conditionals");
  a.opt.init_iters = cmd->add_option("--init-iters", a.init_iters, "partition search sweeps; 0 starts flat");
  a.opt.holdout = cmd->add_option("--holdout", a.holdout, "trailing values withheld for prediction");
  a.opt.full_snapshots = cmd->add_flag("--full-snapshots", a.full_snapshots,
                                       "record every context (subject to the size cap)");
  a.opt.batch_len = cmd->add_option("--batch-len", a.batch_len, "batch length for the mean error");
}

int cmd_fit(FitArgs a) {
  RunLog log;
  log.command = "fit";
  json cfg = load_config(a.config);
  check_config_keys(cfg, {"data", "format", "alphabet", "q", "alpha", "alpha0", "gamma", "phi", "L",
                          "schedule", "seed", "out", "stirling", "init_iters", "holdout",
                          "full_snapshots", "batch_len"});
  merge(a.opt.data, cfg, "data", a.data);
  merge(a.opt.format, cfg, "format", a.format);
  merge(a.opt.q, cfg, "q", a.q);
  merge(a.opt.alpha0, cfg, "alpha0", a.alpha0);
  merge(a.opt.phi, cfg, "phi", a.phi);
  merge(a.opt.L, cfg, "L", a.L);
  merge(a.opt.seed, cfg, "seed", a.seed);
  merge(a.opt.out, cfg, "out", a.out);
  merge(a.opt.stirling, cfg, "stirling", a.stirling);
  merge(a.opt.init_iters, cfg, "init_iters", a.init_iters);
  merge(a.opt.holdout, cfg, "holdout", a.holdout);
  merge(a.opt.full_snapshots, cfg, "full_snapshots", a.full_snapshots);
  merge(a.opt.batch_len, cfg, "batch_len", a.batch_len);

  std::optional<std::vector<std::string>> alphabet;
  if (a.opt.alphabet->count() > 0)
    alphabet = split_commas(a.alphabet);
  else if (cfg.contains("alphabet"))
    alphabet = cfg.at("alphabet").get<std::vector<std::string>>();

  if (a.data.empty()) throw ctf::ValidationError("no input sequence given (--data or config)");
  if (a.q < 1) throw ctf::ValidationError("maximal order q must be at least 1");
  if (a.holdout < 0) throw ctf::ValidationError("holdout must be nonnegative");
  if (a.init_iters < 0) throw ctf::ValidationError("init-iters must be nonnegative");

  ctf::SequenceData full = ctf::load_sequence(a.data, ctf::parse_seq_format(a.format), alphabet);
  const int T_train = full.T - a.holdout;
  if (T_train <= a.q)
    throw ctf::ValidationError("insufficient data: T=" + std::to_string(full.T) + " minus holdout " +
                               std::to_string(a.holdout) + " leaves no modeled positions for q=" +
                               std::to_string(a.q));
  std::vector<std::string> tokens = ctf::decode_sequence(full);
  tokens.resize(static_cast<std::size_t>(T_train));
  ctf::SequenceData train =
      ctf::build_lag_design(ctf::make_sequence(tokens, full.alphabet.symbols()), a.q);

  ctf::Hyperparams hyper = ctf::Hyperparams::defaults(train.C0, a.q);
  hyper.alpha0 = a.alpha0;
  hyper.phi = a.phi;
  hyper.L = a.L;
  if (a.opt.alpha->count() > 0)
    hyper.alpha = a.alpha;
  else if (cfg.contains("alpha"))
    hyper.alpha = cfg.at("alpha").get<double>();
  if (a.opt.gamma->count() > 0)
    hyper.gamma.setConstant(a.gamma);
  else if (cfg.contains("gamma")) {
    const json& g = cfg.at("gamma");
    if (g.is_number())
      hyper.gamma.setConstant(g.get<double>());
    else
      for (int j = 0; j < a.q; ++j) hyper.gamma[j] = g.at(static_cast<std::size_t>(j)).get<double>();
  }
  hyper.schedule = schedule_from(a.opt.schedule, cfg, a.schedule_text, hyper.schedule);
  hyper.validate(train.C0, a.q);
  const ctf::KMode kmode = a.stirling ? ctf::KMode::stirling : ctf::KMode::exact;

  // snapshot contexts: held-out contexts, or everything, or the trailing one
  std::vector<Eigen::VectorXi> contexts;
  if (a.full_snapshots) {
    double total = std::pow(static_cast<double>(train.C0), a.q);
    if (total > static_cast<double>(ctf::kDefaultTensorCap))
      throw ctf::ValidationError("size error: full snapshots need " + std::to_string(total) +
                                 " contexts, above the cap");
    ctf::GridIndexer gi(Eigen::VectorXi::Constant(a.q, train.C0));
    for (long long i = 0; i < gi.size; ++i) contexts.push_back(gi.digits(i));
  } else if (a.holdout > 0) {
    std::vector<std::string> seen;
    for (int t = T_train + 1; t <= full.T; ++t) {
      Eigen::VectorXi ctx(a.q);
      for (int j = 1; j <= a.q; ++j) ctx[j - 1] = full.y[t - j - 1];
      std::string key;
      for (int j = 0; j < a.q; ++j) key += std::to_string(ctx[j]) + ",";
      if (std::find(seen.begin(), seen.end(), key) == seen.end()) {
        seen.push_back(key);
        contexts.push_back(ctx);
      }
    }
  } else {
    Eigen::VectorXi ctx(a.q);
    for (int j = 1; j <= a.q; ++j) ctx[j - 1] = train.y[T_train - j];
    contexts.push_back(ctx);
  }

  ctf::RngStream master(a.seed);
  ctf::InitResult init;
  if (a.init_iters > 0) {
    ctf::RngStream init_rng = master.split("init");
    init = ctf::init_two_stage(train, hyper, a.init_iters, init_rng);
  } else {
    init.k = Eigen::VectorXi::Ones(a.q);
    init.z = Eigen::MatrixXi::Ones(a.q, train.n_modeled());
    init.partition = ctf::HardPartition::trivial(a.q, train.C0);
    init.loglik = ctf::partition_marginal_loglik(train, init.partition, hyper.alpha);
  }
  ctf::RngStream state_rng = master.split("state");
  ctf::LatentState start = ctf::make_initial_state(train, hyper, init.z, init.k, state_rng);

  ctf::RunOptions run_opts;
  run_opts.snapshot_contexts = contexts;
  run_opts.kmode = kmode;
  ctf::PosteriorChain chain = ctf::run_chain(train, hyper, start, master.split("chain").seed(), run_opts);

  // posterior summaries
  Eigen::VectorXd inclusion = ctf::lag_inclusion(chain);
  Eigen::VectorXd order_pmf = ctf::maximal_order_distribution(chain);
  Eigen::VectorXd prior_one(a.q);
  for (int j = 1; j <= a.q; ++j)
    prior_one[j - 1] = ctf::ktilde_prior_prob_one(hyper.gamma[j - 1], hyper.phi, j,
                                                  train.n_counts.row(j - 1).transpose(), train.C0, kmode);
  Eigen::VectorXd k_mean = Eigen::VectorXd::Zero(a.q);
  Eigen::VectorXd kt_mean = Eigen::VectorXd::Zero(a.q);
  std::vector<double> logliks;
  for (const auto& s : chain.samples) {
    k_mean += s.k.cast<double>();
    kt_mean += s.ktilde.cast<double>();
    logliks.push_back(s.loglik);
  }
  k_mean /= static_cast<double>(chain.samples.size());
  kt_mean /= static_cast<double>(chain.samples.size());

  json summary;
  summary["C0"] = train.C0;
  summary["q"] = a.q;
  summary["T"] = full.T;
  summary["T_train"] = T_train;
  summary["holdout"] = a.holdout;
  summary["seed"] = a.seed;
  summary["kmode"] = a.stirling ? "stirling" : "exact";
  summary["schedule"] = schedule_json(hyper.schedule);
  summary["alphabet"] = full.alphabet.symbols();
  summary["n_samples"] = chain.samples.size();
  summary["inclusion"] = vec_json(inclusion);
  summary["order_pmf"] = vec_json(order_pmf);
  summary["prior_one"] = vec_json(prior_one);
  summary["k_mean"] = vec_json(k_mean);
  summary["ktilde_mean"] = vec_json(kt_mean);
  if (static_cast<int>(logliks.size()) >= 2 * a.batch_len)
    summary["loglik_mcse"] = ctf::batch_means_mcse(logliks, a.batch_len);
  else
    summary["loglik_mcse"] = nullptr;
  summary["init"] = {{"loglik", init.loglik}, {"accepted", init.accepted}, {"proposals", init.proposals}};
  summary["tests"] = json::array();

  // all computation done; now touch the file system
  fs::path out(a.out);
  fs::create_directories(out / "diagnostics");
  ctf::write_chain_jsonl(chain, out / "chain.jsonl");
  ctf::write_snapshots_csv(chain, out / "snapshots.csv");
  ctf::write_init_json(init, out / "init.json");
  write_text(out / "summary.json", summary.dump(2) + "\n");

  if (a.holdout > 0) {
    std::ostringstream held;
    held << "position";
    for (int j = 1; j <= a.q; ++j) held << ",w" << j;
    held << ",y\n";
    for (int t = T_train + 1; t <= full.T; ++t) {
      held << t;
      for (int j = 1; j <= a.q; ++j) held << "," << full.y[t - j - 1];
      held << "," << full.y[t - 1] << "\n";
    }
    write_text(out / "heldout.csv", held.str());
  }

  {
    std::ostringstream trace, kt;
    trace << "iter,loglik\n";
    kt << "iter";
    for (int j = 1; j <= a.q; ++j) kt << ",ktilde" << j;
    kt << "\n";
    for (const auto& s : chain.samples) {
      trace << s.iter << "," << ctf::format_double(s.loglik) << "\n";
      kt << s.iter;
      for (int j = 0; j < a.q; ++j) kt << "," << s.ktilde[j];
      kt << "\n";
    }
    write_text(out / "diagnostics" / "loglik_trace.csv", trace.str());
    write_text(out / "diagnostics" / "ktilde_trace.csv", kt.str());

    Eigen::MatrixXd quant = ctf::running_quantiles(logliks, {0.05, 0.5, 0.95});
    std::ostringstream qs;
    qs << "n,q05,q50,q95\n";
    for (int i = 0; i < quant.rows(); ++i)
      qs << (i + 1) << "," << ctf::format_double(quant(i, 0)) << "," << ctf::format_double(quant(i, 1))
         << "," << ctf::format_double(quant(i, 2)) << "\n";
    write_text(out / "diagnostics" / "loglik_quantiles.csv", qs.str());
  }
  log.write(out);

  std::cout << "fit: " << chain.samples.size() << " samples kept (schedule " << hyper.schedule.n_iter
            << "/" << hyper.schedule.n_burn << "/" << hyper.schedule.thin << ")\n";
  std::cout << "lag inclusion:";
  for (int j = 0; j < a.q; ++j) std::cout << " " << ctf::format_double(inclusion[j]);
  std::cout << "\noutputs in " << out.string() << "\n";
  return 0;
}

// --------------------------------------------------------------- test --

struct TestArgs {
  std::string config, fit_dir, hypotheses, out;
};

struct ParsedLine {
  std::string name, h0, h1;
  bool complement = false;
  bool explicit_priors = false;
  double p0 = 0.0, p1 = 0.0;
};

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<ParsedLine> parse_hypotheses_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ctf::IoError("cannot open hypotheses file '" + file.string() + "'");
  std::vector<ParsedLine> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    auto fail = [&](const std::string& why) {
      throw ctf::ValidationError("hypotheses file line " + std::to_string(lineno) + ": " + why);
    };
    auto colon = text.find(':');
    if (colon == std::string::npos) fail("expected 'name: H0 vs H1'");
    ParsedLine p;
    p.name = trim(text.substr(0, colon));
    if (p.name.empty()) fail("empty test name");
    std::string rest = text.substr(colon + 1);
    auto vs = rest.find(" vs ");
    if (vs == std::string::npos) fail("expected ' vs ' between the hypotheses");
    p.h0 = trim(rest.substr(0, vs));
    std::string tail = trim(rest.substr(vs + 4));
    auto at = tail.find('@');
    if (at != std::string::npos) {
      std::string priors = trim(tail.substr(at + 1));
      tail = trim(tail.substr(0, at));
      std::istringstream ps(priors);
      if (!(ps >> p.p0 >> p.p1)) fail("bad prior pair after '@'");
      p.explicit_priors = true;
    }
    if (tail.empty()) fail("missing alternative hypothesis");
    if (tail == "complement")
      p.complement = true;
    else
      p.h1 = tail;
    out.push_back(std::move(p));
  }
  if (out.empty()) throw ctf::ValidationError("hypotheses file holds no tests");
  return out;
}

int cmd_test(TestArgs a) {
  RunLog log;
  log.command = "test";
  json cfg = load_config(a.config);
  check_config_keys(cfg, {"fit", "hypotheses", "out"});
  if (a.fit_dir.empty() && cfg.contains("fit")) a.fit_dir = cfg.at("fit").get<std::string>();
  if (a.hypotheses.empty() && cfg.contains("hypotheses"))
    a.hypotheses = cfg.at("hypotheses").get<std::string>();
  if (a.fit_dir.empty()) throw ctf::ValidationError("no fit directory given (--fit)");
  if (a.hypotheses.empty()) throw ctf::ValidationError("no hypotheses file given (--hypotheses)");
  fs::path fit_dir(a.fit_dir);
  fs::path out_dir = a.out.empty() ? fit_dir : fs::path(a.out);

  std::ifstream sin(fit_dir / "summary.json");
  if (!sin) throw ctf::IoError("cannot open '" + (fit_dir / "summary.json").string() + "'");
  json summary = json::parse(sin);
  const int q = summary.at("q").get<int>();
  Eigen::VectorXd prior_one(q);
  for (int j = 0; j < q; ++j) {
    double p = summary.at("prior_one").at(static_cast<std::size_t>(j)).get<double>();
    prior_one[j] = std::min(1.0 - 1e-10, std::max(1e-10, p));
  }
  ctf::PosteriorChain chain = ctf::read_chain_jsonl(fit_dir / "chain.jsonl");

  std::vector<ParsedLine> lines = parse_hypotheses_file(a.hypotheses);
  struct Outcome {
    ParsedLine line;
    ctf::BayesTest bt;
    std::string h0_text, h1_text;
  };
  std::vector<Outcome> outcomes;
  for (const auto& p : lines) {
    ctf::Hypothesis h0 = [&] {
      try {
        return ctf::Hypothesis::parse(p.h0, q);
      } catch (const ctf::Error& e) {
        throw ctf::ValidationError("test '" + p.name + "': " + e.what());
      }
    }();
    std::optional<ctf::Hypothesis> h1;
    if (!p.complement) {
      try {
        h1 = ctf::Hypothesis::parse(p.h1, q);
      } catch (const ctf::Error& e) {
        throw ctf::ValidationError("test '" + p.name + "': " + e.what());
      }
    }
    double p0 = p.p0, p1 = p.p1;
    if (!p.explicit_priors) {
      p0 = ctf::hypothesis_prior_from_lag_probs(h0, prior_one);
      p1 = h1 ? ctf::hypothesis_prior_from_lag_probs(*h1, prior_one) : 1.0 - p0;
      p0 = std::min(1.0 - 1e-10, std::max(1e-10, p0));
      p1 = std::min(1.0 - 1e-10, std::max(1e-10, p1));
    }
    Outcome o;
    o.line = p;
    try {
      o.bt = ctf::bayes_factor(chain, h0, h1, p0, p1);
    } catch (const ctf::Error& e) {
      throw ctf::ValidationError("test '" + p.name + "': " + e.what());
    }
    o.h0_text = h0.text();
    o.h1_text = h1 ? h1->text() : "complement";
    outcomes.push_back(std::move(o));
  }

  json tests = json::array();
  for (const auto& o : outcomes) {
    json t;
    t["name"] = o.line.name;
    t["h0"] = o.h0_text;
    t["h1"] = o.h1_text;
    t["prior0"] = o.bt.prior0;
    t["prior1"] = o.bt.prior1;
    t["post0"] = o.bt.post0;
    t["post1"] = o.bt.post1;
    t["infinite"] = o.bt.infinite;
    if (o.bt.infinite)
      t["bf10"] = nullptr;
    else
      t["bf10"] = o.bt.bf10;
    tests.push_back(std::move(t));
  }
  fs::create_directories(out_dir);
  write_text(out_dir / "tests.json", tests.dump(2) + "\n");
  log.write(out_dir);

  for (const auto& o : outcomes) {
    std::cout << o.line.name << ": post(H0)=" << ctf::format_double(o.bt.post0)
              << " post(H1)=" << ctf::format_double(o.bt.post1) << " BF10=";
    if (o.bt.infinite)
      std::cout << "inf";
    else
      std::cout << ctf::format_double(o.bt.bf10);
    std::cout << "\n";
  }
  return 0;
}

// ------------------------------------------------------------ predict --

struct PredictArgs {
  std::string config, fit_dir, out;
};

int cmd_predict(PredictArgs a) {
  RunLog log;
  log.command = "predict";
  json cfg = load_config(a.config);
  check_config_keys(cfg, {"fit", "out"});
  if (a.fit_dir.empty() && cfg.contains("fit")) a.fit_dir = cfg.at("fit").get<std::string>();
  if (a.fit_dir.empty()) throw ctf::ValidationError("no fit directory given (--fit)");
  fs::path fit_dir(a.fit_dir);
  fs::path out_dir = a.out.empty() ? fit_dir : fs::path(a.out);

  std::ifstream sin(fit_dir / "summary.json");
  if (!sin) throw ctf::IoError("cannot open '" + (fit_dir / "summary.json").string() + "'");
  json summary = json::parse(sin);
  const int q = summary.at("q").get<int>();
  const int C0 = summary.at("C0").get<int>();
  const int t_train = summary.at("T_train").get<int>();

  ctf::PosteriorChain chain = ctf::read_chain_jsonl(fit_dir / "chain.jsonl");
  ctf::read_snapshots_csv(chain, fit_dir / "snapshots.csv");

  struct Target {
    int position;
    Eigen::VectorXi ctx;
    int truth = 0;  // 0 when unknown
  };
  std::vector<Target> targets;
  fs::path held = fit_dir / "heldout.csv";
  if (fs::exists(held)) {
    std::ifstream in(held);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      std::stringstream ss(line);
      std::string cell;
      Target t;
      t.ctx.resize(q);
      std::getline(ss, cell, ',');
      t.position = std::stoi(cell);
      for (int j = 0; j < q; ++j) {
        std::getline(ss, cell, ',');
        t.ctx[j] = std::stoi(cell);
      }
      std::getline(ss, cell, ',');
      t.truth = std::stoi(cell);
      targets.push_back(std::move(t));
    }
    if (targets.empty()) throw ctf::ValidationError("heldout.csv holds no positions");
  } else {
    if (chain.snapshot_contexts.empty())
      throw ctf::ValidationError("fit recorded no snapshot contexts to predict from");
    Target t;
    t.position = t_train + 1;
    t.ctx = chain.snapshot_contexts.front();
    targets.push_back(std::move(t));
  }

  std::vector<Eigen::VectorXi> ctxs;
  for (const auto& t : targets) ctxs.push_back(t.ctx);
  Eigen::MatrixXd probs = ctf::posterior_mean_transition(chain, ctxs);

  const bool scored = fs::exists(held);
  std::ostringstream csv;
  csv << "position,pred";
  for (int c = 1; c <= C0; ++c) csv << ",p" << c;
  if (scored) csv << ",y,correct";
  csv << "\n";
  int wrong = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    Eigen::VectorXd row = probs.row(static_cast<int>(i)).transpose();
    int pred = ctf::predict_one_step(row);
    csv << targets[i].position << "," << pred;
    for (int c = 0; c < C0; ++c) csv << "," << ctf::format_double(row[c]);
    if (scored) {
      bool ok = pred == targets[i].truth;
      if (!ok) wrong++;
      csv << "," << targets[i].truth << "," << (ok ? 1 : 0);
    }
    csv << "\n";
  }
  fs::create_directories(out_dir);
  write_text(out_dir / "predictions.csv", csv.str());
  log.write(out_dir);

  if (scored) {
    double err = static_cast<double>(wrong) / static_cast<double>(targets.size());
    std::cout << "classification error: " << ctf::format_double(err) << " over " << targets.size()
              << " held-out positions\n";
  } else {
    std::cout << "next-symbol prediction written for position " << targets.front().position << "\n";
  }
  return 0;
}

// ----------------------------------------------------------- diagnose --

struct DiagnoseArgs {
  std::string config, fit_dir, out;
  int batch_len = 100;
};

int cmd_diagnose(DiagnoseArgs a) {
  RunLog log;
  log.command = "diagnose";
  json cfg = load_config(a.config);
  check_config_keys(cfg, {"fit", "out", "batch_len"});
  if (a.fit_dir.empty() && cfg.contains("fit")) a.fit_dir = cfg.at("fit").get<std::string>();
  if (a.fit_dir.empty()) throw ctf::ValidationError("no fit directory given (--fit)");
  if (cfg.contains("batch_len") && a.batch_len == 100) a.batch_len = cfg.at("batch_len").get<int>();
  fs::path fit_dir(a.fit_dir);
  fs::path out_dir = a.out.empty() ? fit_dir : fs::path(a.out);

  ctf::PosteriorChain chain = ctf::read_chain_jsonl(fit_dir / "chain.jsonl");
  const int q = chain.q;
  std::vector<double> logliks;
  for (const auto& s : chain.samples) logliks.push_back(s.loglik);

  std::ostringstream trace, kt;
  trace << "iter,loglik\n";
  kt << "iter";
  for (int j = 1; j <= q; ++j) kt << ",ktilde" << j;
  kt << "\n";
  for (const auto& s : chain.samples) {
    trace << s.iter << "," << ctf::format_double(s.loglik) << "\n";
    kt << s.iter;
    for (int j = 0; j < q; ++j) kt << "," << s.ktilde[j];
    kt << "\n";
  }
  Eigen::MatrixXd quant = ctf::running_quantiles(logliks, {0.05, 0.5, 0.95});
  std::ostringstream qs;
  qs << "n,q05,q50,q95\n";
  for (int i = 0; i < quant.rows(); ++i)
    qs << (i + 1) << "," << ctf::format_double(quant(i, 0)) << "," << ctf::format_double(quant(i, 1))
       << "," << ctf::format_double(quant(i, 2)) << "\n";

  json mcse;
  mcse["batch_len"] = a.batch_len;
  if (static_cast<int>(logliks.size()) >= 2 * a.batch_len)
    mcse["loglik_mcse"] = ctf::batch_means_mcse(logliks, a.batch_len);
  else
    mcse["loglik_mcse"] = nullptr;
  Eigen::VectorXd kt_mean = Eigen::VectorXd::Zero(q);
  for (const auto& s : chain.samples) kt_mean += s.ktilde.cast<double>();
  kt_mean /= static_cast<double>(chain.samples.size());
  mcse["ktilde_mean"] = vec_json(kt_mean);

  fs::create_directories(out_dir / "diagnostics");
  write_text(out_dir / "diagnostics" / "loglik_trace.csv", trace.str());
  write_text(out_dir / "diagnostics" / "ktilde_trace.csv", kt.str());
  write_text(out_dir / "diagnostics" / "loglik_quantiles.csv", qs.str());
  write_text(out_dir / "diagnostics" / "mcse.json", mcse.dump(2) + "\n");
  log.write(out_dir);

  std::cout << "diagnostics for " << chain.samples.size() << " samples written to "
            << (out_dir / "diagnostics").string() << "\n";
  return 0;
}

// ----------------------------------------------------------- simulate --

struct SimArgs {
  std::string config, case_text, out = "ctf_sim", schedule_text;
  int T = 500, N = 500, reps = 10, threads = 1, init_iters = 100;
  std::uint64_t seed = 1;
  bool stirling = false;

  struct Opts {
    CLI::Option *case_text = nullptr, *T = nullptr, *N = nullptr, *reps = nullptr,
                *threads = nullptr, *init_iters = nullptr, *seed = nullptr, *out = nullptr,
                *schedule = nullptr, *stirling = nullptr;
  } opt;
};

int cmd_simulate(SimArgs a) {
  RunLog log;
  log.command = "simulate";
  json cfg = load_config(a.config);
  check_config_keys(cfg, {"case", "T", "N", "reps", "threads", "init_iters", "seed", "out",
                          "schedule", "stirling"});
  merge(a.opt.case_text, cfg, "case", a.case_text);
  merge(a.opt.T, cfg, "T", a.T);
  merge(a.opt.N, cfg, "N", a.N);
  merge(a.opt.reps, cfg, "reps", a.reps);
  merge(a.opt.threads, cfg, "threads", a.threads);
  merge(a.opt.init_iters, cfg, "init_iters", a.init_iters);
  merge(a.opt.seed, cfg, "seed", a.seed);
  merge(a.opt.out, cfg, "out", a.out);
  merge(a.opt.stirling, cfg, "stirling", a.stirling);
  if (a.case_text.empty()) throw ctf::ValidationError("no case given (--case)");

  ctf::ExperimentConfig ec;
  ec.cs = ctf::parse_case(a.case_text);
  ec.T = a.T;
  ec.N = a.N;
  ec.n_reps = a.reps;
  ec.schedule = schedule_from(a.opt.schedule, cfg, a.schedule_text, {10000, 2000, 5});
  ec.seed = a.seed;
  ec.threads = a.threads;
  ec.kmode = a.stirling ? ctf::KMode::stirling : ctf::KMode::exact;
  ec.init_iters = a.init_iters;
  if (ec.T <= ec.cs.q) throw ctf::ValidationError("T must exceed the maximal order " + std::to_string(ec.cs.q));
  if (ec.N < 1) throw ctf::ValidationError("N must be positive");
  if (ec.n_reps < 1) throw ctf::ValidationError("reps must be positive");
  if (ec.threads < 1) throw ctf::ValidationError("threads must be positive");

  ctf::ExperimentResult res = ctf::run_experiment(ec);
  ctf::MethodSummary mm = ctf::summarize_method(res, "ctf");
  ctf::MethodSummary mo = ctf::summarize_method(res, "mle");

  json agg;
  agg["case"] = ec.cs.name;
  agg["C0"] = ec.cs.C0;
  agg["lags"] = ec.cs.lags;
  agg["q"] = ec.cs.q;
  agg["T"] = ec.T;
  agg["N"] = ec.N;
  agg["reps"] = ec.n_reps;
  agg["schedule"] = schedule_json(ec.schedule);
  agg["kmode"] = a.stirling ? "stirling" : "exact";
  auto method_json = [](const ctf::MethodSummary& m) {
    return json{{"avg_l1_mean", m.l1_mean},
                {"avg_l1_se", m.l1_se},
                {"class_err_mean", m.err_mean},
                {"class_err_se", m.err_se},
                {"wall_mean", m.wall_mean}};
  };
  agg["ctf"] = method_json(mm);
  agg["mle"] = method_json(mo);

  fs::path out(a.out);
  fs::create_directories(out);
  ctf::write_metrics_csv(res, out / "metrics.csv");
  write_text(out / "aggregate.json", agg.dump(2) + "\n");
  log.write(out);

  std::cout << "case " << ec.cs.name << ": ctf avg_l1 " << ctf::format_double(mm.l1_mean) << " (se "
            << ctf::format_double(mm.l1_se) << "), mle avg_l1 " << ctf::format_double(mo.l1_mean)
            << " (se " << ctf::format_double(mo.l1_se) << ")\n";
  std::cout << "classification error: ctf " << ctf::format_double(mm.err_mean) << ", mle "
            << ctf::format_double(mo.err_mean) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor-factorized higher-order Markov chains"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit = app.add_subcommand("fit", "Fit the model to one sequence");
  add_fit_options(fit, fit_args);

  TestArgs test_args;
  CLI::App* test = app.add_subcommand("test", "Bayes-factor hypothesis tests on a fitted chain");
  test->add_option("--config", test_args.config, "JSON config file");
  test->add_option("--fit", test_args.fit_dir, "directory written by fit");
  test->add_option("--hypotheses", test_args.hypotheses,
                   "file of lines 'name: H0 vs H1 [@ p0 p1]', H1 may be 'complement'");
  test->add_option("--out", test_args.out, "output directory (default: the fit directory)");

  PredictArgs pred_args;
  CLI::App* pred = app.add_subcommand("predict", "One-step-ahead prediction from a fitted chain");
  pred->add_option("--config", pred_args.config, "JSON config file");
  pred->add_option("--fit", pred_args.fit_dir, "directory written by fit");
  pred->add_option("--out", pred_args.out, "output directory (default: the fit directory)");

  DiagnoseArgs diag_args;
  CLI::App* diag = app.add_subcommand("diagnose", "Recompute chain diagnostics");
  diag->add_option("--config", diag_args.config, "JSON config file");
  diag->add_option("--fit", diag_args.fit_dir, "directory written by fit");
  diag->add_option("--batch-len", diag_args.batch_len, "batch length for the mean error");
  diag->add_option("--out", diag_args.out, "output directory (default: the fit directory)");

  SimArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "Replicate study against the frequency oracle");
  sim->add_option("--config", sim_args.config, "JSON config file");
  sim_args.opt.case_text = sim->add_option("--case", sim_args.case_text,
                                           "design label A..H or literal [C0,{j1,j2,...}]");
  sim_args.opt.T = sim->add_option("--T", sim_args.T, "training length");
  sim_args.opt.N = sim->add_option("--N", sim_args.N, "evaluation contexts per replicate");
  sim_args.opt.reps = sim->add_option("--reps", sim_args.reps, "replicates");
  sim_args.opt.threads = sim->add_option("--threads", sim_args.threads, "worker threads");
  sim_args.opt.init_iters = sim->add_option("--init-iters", sim_args.init_iters, "partition search sweeps");
  sim_args.opt.seed = sim->add_option("--seed", sim_args.seed, "master seed");
  sim_args.opt.out = sim->add_option("--out", sim_args.out, "output directory");
  sim_args.opt.schedule = sim->add_option("--schedule", sim_args.schedule_text,
                                          "desk, paper, or n_iter,n_burn,thin");
  sim_args.opt.stirling = sim->add_flag("--stirling", sim_args.stirling, "approximate level conditionals");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (fit->parsed()) return cmd_fit(std::move(fit_args));
    if (test->parsed()) return cmd_test(std::move(test_args));
    if (pred->parsed()) return cmd_predict(std::move(pred_args));
    if (diag->parsed()) return cmd_diagnose(std::move(diag_args));
    if (sim->parsed()) return cmd_simulate(std::move(sim_args));
  } catch (const ctf::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ctf::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
