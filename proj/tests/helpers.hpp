#pragma once

#include <Eigen/Dense>
#include <initializer_list>
#include <string>
#include <vector>

#include "ctf/model.hpp"
#include "ctf/rng.hpp"
#include "ctf/seq_data.hpp"

namespace testutil {

// Runs f and hands back the exception text, empty when nothing threw.
template <class F>
std::string thrown(F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

inline bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

inline Eigen::VectorXi veci(std::initializer_list<int> v) {
  Eigen::VectorXi out(static_cast<int>(v.size()));
  int i = 0;
  for (int x : v) out[i++] = x;
  return out;
}

inline Eigen::VectorXd vecd(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// Uniform random sequence over categories 1..C0, already lag-designed.
inline ctf::SequenceData random_sequence(int C0, int T, int q, ctf::RngStream& rng) {
  std::vector<std::string> symbols, tokens;
  for (int c = 1; c <= C0; ++c) symbols.push_back(std::to_string(c));
  for (int t = 0; t < T; ++t) tokens.push_back(symbols[static_cast<std::size_t>(rng.uniform_int(C0))]);
  return ctf::build_lag_design(ctf::make_sequence(tokens, symbols), q);
}

// Fully populated state with random parameters at the given levels. The
// allocation matrix is sized for data when n_modeled > 0.
inline ctf::LatentState random_state(int C0, int q, const Eigen::VectorXi& k, int L, ctf::RngStream& rng,
                                     int n_modeled = 0) {
  ctf::LatentState s;
  s.C0 = C0;
  s.q = q;
  s.L = L;
  s.k = k;
  s.z.resize(q, n_modeled);
  for (int j = 0; j < q; ++j)
    for (int i = 0; i < n_modeled; ++i) s.z(j, i) = rng.uniform_int(k[j]) + 1;
  s.V.resize(L);
  s.pi_star.resize(L);
  double remaining = 1.0;
  for (int l = 0; l < L; ++l) {
    s.V[l] = (l == L - 1) ? 1.0 : rng.uniform();
    s.pi_star[l] = s.V[l] * remaining;
    remaining *= 1.0 - s.V[l];
  }
  const Eigen::VectorXd conc = Eigen::VectorXd::Ones(C0);
  s.lambda_star.resize(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) s.lambda_star[static_cast<std::size_t>(l)] = rng.dirichlet(conc);
  ctf::GridIndexer gi(k);
  s.zstar.resize(static_cast<std::size_t>(gi.size));
  for (long long idx = 0; idx < gi.size; ++idx) s.zstar[static_cast<std::size_t>(idx)] = rng.uniform_int(L) + 1;
  s.pi.assign(static_cast<std::size_t>(q), std::vector<Eigen::VectorXd>(static_cast<std::size_t>(C0)));
  for (int j = 0; j < q; ++j)
    for (int c = 0; c < C0; ++c)
      s.pi[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)] = rng.dirichlet(Eigen::VectorXd::Ones(k[j]));
  return s;
}

}  // namespace testutil
