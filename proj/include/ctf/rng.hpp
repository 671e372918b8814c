#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string_view>

#include "ctf/error.hpp"

namespace ctf {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_tag(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(splitmix64(seed) ^ splitmix64(tag));
}

}  // namespace detail

// Splittable stream of randomness. A single user seed fans out into
// independent named streams via splitmix64 hashing; every stochastic
// operation takes one of these explicitly, so reruns with the same seed
// reproduce the chain bit for bit. All variate generation is implemented
// here rather than with std:: distributions, whose output is not pinned
// across standard library versions.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(detail::splitmix64(seed)) {}

  RngStream split(std::uint64_t tag) const { return RngStream(detail::mix_tag(seed_, tag)); }
  RngStream split(std::string_view name) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : name) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
    return split(h);
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t raw() { return engine_(); }

  // Uniform on [0,1), 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1], for safe logs.
  double uniform_pos() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

  // Box-Muller without the cached second draw: two uniforms per variate,
  // no hidden state.
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Marsaglia-Tsang; shape < 1 boosted through gamma(shape+1).
  double gamma(double shape) {
    if (!(shape > 0.0)) throw Error("gamma shape must be positive");
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      return g * std::pow(uniform_pos(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

  Eigen::VectorXd dirichlet(const Eigen::VectorXd& conc) {
    Eigen::VectorXd out(conc.size());
    for (Eigen::Index i = 0; i < conc.size(); ++i) out[i] = gamma(conc[i]);
    const double s = out.sum();
    if (s <= 0.0) {
      // Possible only when every gamma draw underflows; fall back to the
      // largest component to keep the simplex constraint.
      Eigen::Index imax = 0;
      conc.maxCoeff(&imax);
      out.setZero();
      out[imax] = 1.0;
      return out;
    }
    out /= s;
    return out;
  }

  // Categorical draw from unnormalized log weights: shift by the max,
  // exponentiate, then invert the cumulative sum. Ties and boundary hits
  // resolve toward the smaller index.
  int categorical_logits(std::span<const double> logw) {
    if (logw.empty()) throw Error("categorical over empty support");
    double m = -std::numeric_limits<double>::infinity();
    for (double v : logw)
      if (v > m) m = v;
    if (!std::isfinite(m)) throw Error("categorical with no finite log weight");
    double total = 0.0;
    for (double v : logw) total += std::exp(v - m);
    const double u = uniform() * total;
    double cum = 0.0;
    for (std::size_t i = 0; i < logw.size(); ++i) {
      cum += std::exp(logw[i] - m);
      if (u <= cum) return static_cast<int>(i);
    }
    return static_cast<int>(logw.size() - 1);
  }

  // Same inversion on plain nonnegative weights.
  int categorical(std::span<const double> w) {
    if (w.empty()) throw Error("categorical over empty support");
    double total = 0.0;
    for (double v : w) total += v;
    if (!(total > 0.0)) throw Error("categorical with zero total weight");
    const double u = uniform() * total;
    double cum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      cum += w[i];
      if (u <= cum) return static_cast<int>(i);
    }
    return static_cast<int>(w.size() - 1);
  }

  // Inversion against a precomputed inclusive cumulative-sum table.
  int categorical_cdf(std::span<const double> cum) {
    if (cum.empty()) throw Error("categorical over empty support");
    const double total = cum.back();
    if (!(total > 0.0)) throw Error("categorical with zero total weight");
    const double u = uniform() * total;
    const auto it = std::lower_bound(cum.begin(), cum.end(), u);
    if (it == cum.end()) return static_cast<int>(cum.size() - 1);
    return static_cast<int>(it - cum.begin());
  }

  int uniform_int(int n) {
    if (n <= 0) throw Error("uniform_int over empty range");
    return static_cast<int>(engine_() % static_cast<std::uint64_t>(n));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace ctf
