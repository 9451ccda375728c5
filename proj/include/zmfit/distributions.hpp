#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "zmfit/corpus.hpp"
#include "zmfit/error.hpp"
#include "zmfit/specfun.hpp"

namespace zmfit {

// Zipf-Mandelbrot law: P(k) proportional to (k + t)^-gamma for k = 1, 2, ...
struct ZMParams {
  double gamma = 2.0;
  double t = 0.0;

  friend bool operator==(const ZMParams&, const ZMParams&) = default;
};

// Evert distribution on frequencies 1..f_max: P(f) proportional to B(f + 1 - alpha, alpha).
struct EvertParams {
  double alpha = 1.5;
  std::uint64_t f_max = 1;
};

inline constexpr double kDefaultTailEpsilon = 1e-9;

struct SampleSpec {
  ZMParams params;
  std::uint64_t n_draws = 1;
  std::uint64_t seed = 0;
  double tail_epsilon = kDefaultTailEpsilon;
};

// Throws unless gamma > 1 and t >= 0 (a normalizable law).
inline void validate(const ZMParams& p) {
  if (!std::isfinite(p.gamma) || p.gamma <= 1.0)
    throw DomainError("Zipf-Mandelbrot gamma must be > 1 (sum diverges otherwise), got " +
                      std::to_string(p.gamma));
  if (!std::isfinite(p.t) || p.t < 0.0)
    throw DomainError("Zipf-Mandelbrot shift t must be >= 0, got " + std::to_string(p.t));
}

inline void validate(const EvertParams& p) {
  if (!std::isfinite(p.alpha) || p.alpha <= 1.0 || p.alpha >= 2.0)
    throw DomainError("Evert alpha must lie in (1, 2), got " + std::to_string(p.alpha));
  if (p.f_max < 1) throw DomainError("Evert f_max must be >= 1");
}

inline void validate(const SampleSpec& s) {
  validate(s.params);
  if (s.n_draws < 1) throw DomainError("sample size must be >= 1");
  if (!(s.tail_epsilon > 0.0 && s.tail_epsilon <= 1e-6))
    throw DomainError("tail_epsilon must lie in (0, 1e-6]");
}

// Unnormalized log weight -gamma * ln(k + t). Only requires gamma > 0 so the
// plain Zipf case gamma = 1 can be evaluated too.
inline double zm_log_weight(std::uint64_t k, const ZMParams& p) {
  if (k < 1) throw DomainError("zm_log_weight: rank must be >= 1");
  if (!(p.gamma > 0.0) || !(p.t >= 0.0)) throw DomainError("zm_log_weight: need gamma > 0, t >= 0");
  return -p.gamma * std::log(static_cast<double>(k) + p.t);
}

namespace detail {

// Smallest x = k + t at which the Euler-Maclaurin tail below is used.
inline double zm_tail_switch(double gamma) { return std::max(1024.0, 32.0 * (gamma + 6.0)); }

// Weight of rank k relative to rank 1, ((k + t) / (1 + t))^-gamma. Working
// relative to rank 1 keeps steep laws with a large shift from underflowing.
inline double zm_scaled_weight(double k, const ZMParams& p) {
  return std::pow((k + p.t) / (1.0 + p.t), -p.gamma);
}

// sum_{k > a} of the scaled weights via Euler-Maclaurin: the integral from a,
// minus half the endpoint value, plus B2/B4/B6 derivative corrections. With
// a + t >= zm_tail_switch(gamma) the first omitted term is below 1e-20 relative.
inline double zm_tail_sum(double a, const ZMParams& p) {
  const double g = p.gamma;
  const double x = a + p.t;
  const double fx = zm_scaled_weight(a, p);
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double d1 = g * inv;                                   // -f'/f
  const double d3 = g * (g + 1.0) * (g + 2.0) * inv * inv2;     // -f'''/f
  const double d5 = d3 * (g + 3.0) * (g + 4.0) * inv2;          // -f^(5)/f
  return fx * (x / (g - 1.0) - 0.5 + d1 / 12.0 - d3 / 720.0 + d5 / 30240.0);
}

// sum_{k >= 1} ((k + t) / (1 + t))^-gamma, to ~1e-15 relative.
inline double zm_scaled_weight_sum(const ZMParams& p) {
  validate(p);
  const double x_switch = zm_tail_switch(p.gamma);
  CompensatedSum sum;
  std::uint64_t k = 0;
  while (static_cast<double>(k) + p.t < x_switch) {
    ++k;
    const double w = zm_scaled_weight(static_cast<double>(k), p);
    sum.add(w);
    // Integral bound on what is left; once negligible there is nothing to add.
    if (w * (static_cast<double>(k) + p.t) / (p.gamma - 1.0) < 1e-18 * sum.value())
      return sum.value();
  }
  sum.add(zm_tail_sum(static_cast<double>(k), p));
  return sum.value();
}

} // namespace detail

// ln C with C * sum_{k >= 1} (k + t)^-gamma = 1.
inline double zm_log_normalizer(const ZMParams& p) {
  return p.gamma * std::log1p(p.t) - std::log(detail::zm_scaled_weight_sum(p));
}

inline double zm_normalizer(const ZMParams& p) { return std::exp(zm_log_normalizer(p)); }

// sum_{k >= 1} (k + t)^-gamma. Underflows for steep laws with a large shift,
// where zm_log_normalizer stays finite.
inline double zm_weight_sum(const ZMParams& p) { return std::exp(-zm_log_normalizer(p)); }

// ln sum_{f=1}^{f_max} B(f + 1 - alpha, alpha), using the telescoping identity
// sum = B(2 - alpha, alpha - 1) - B(f_max + 2 - alpha, alpha - 1).
inline double evert_log_weight_sum(const EvertParams& p) {
  validate(p);
  const double a = p.alpha;
  return log_diff_exp(log_beta(2.0 - a, a - 1.0),
                      log_beta(static_cast<double>(p.f_max) + 2.0 - a, a - 1.0));
}

inline double evert_log_pmf(std::uint64_t f, const EvertParams& p) {
  validate(p);
  if (f < 1 || f > p.f_max)
    throw DomainError("evert_log_pmf: frequency " + std::to_string(f) + " outside [1, " +
                      std::to_string(p.f_max) + "]");
  return log_beta(static_cast<double>(f) + 1.0 - p.alpha, p.alpha) - evert_log_weight_sum(p);
}

// Ascending j-th (M+1)-quantile, j = 1..M, of the continuous power law with
// density proportional to x^-alpha (alpha = 1 + 1/gamma) on (1, ((t + M + 1)/t)^gamma).
// Computed by inverting that law's CDF; the closed form it should agree with
// is ((t + M + 1 - j) / (t + M + 1))^-gamma.
inline double bounded_power_law_quantile(double gamma, double t, std::uint64_t m, std::uint64_t j) {
  if (!(gamma > 0.0) || !(t > 0.0)) throw DomainError("bounded_power_law_quantile: need gamma > 0, t > 0");
  if (j < 1 || j > m) throw DomainError("bounded_power_law_quantile: j must lie in [1, M]");
  const double upper = std::pow(t / (t + static_cast<double>(m) + 1.0), -gamma);
  // CDF F(x) = (1 - x^(1-alpha)) / (1 - upper^(1-alpha)); here 1 - alpha = -1/gamma.
  const double expo = -1.0 / gamma;
  const double p = static_cast<double>(j) / (static_cast<double>(m) + 1.0);
  const double base = 1.0 - p * (1.0 - std::pow(upper, expo));
  return std::pow(base, 1.0 / expo);
}

// Category counts from one sampling run, sorted by category (1-based, innate rank).
using CategoryCounts = std::vector<std::pair<std::uint64_t, std::uint64_t>>;

// Inverse-CDF sampler for the Zipf-Mandelbrot law truncated at the smallest L
// whose tail mass sum_{k > L} P(k) is below tail_epsilon.
//
// Ranks up to kHeadSize are resolved by binary search in a cumulative table;
// deeper ranks by bisection on the closed-form tail sum. Uniforms are built
// from the top 53 bits of std::mt19937_64, so a seed fixes the output.
class ZmSampler {
public:
  static constexpr std::uint64_t kHeadSize = std::uint64_t{1} << 20;
  static constexpr std::uint64_t kMaxTruncation = std::uint64_t{1} << 62;

  explicit ZmSampler(ZMParams params, double tail_epsilon = kDefaultTailEpsilon)
      : params_(params) {
    validate(SampleSpec{params, 1, 0, tail_epsilon});
    const double total = detail::zm_scaled_weight_sum(params_);
    const double mass_eps = tail_epsilon * total;

    if (static_cast<double>(kHeadSize) + params_.t >= detail::zm_tail_switch(params_.gamma) &&
        tail(kHeadSize) >= mass_eps) {
      // Deep truncation: L > kHeadSize, located on the closed-form tail.
      // Laws with gamma close to 1 can need L beyond 64 bits; L is capped at
      // kMaxTruncation and the larger tail mass is reported by tail_mass().
      std::uint64_t lo = kHeadSize;
      std::uint64_t hi = 2 * kHeadSize;
      while (hi < kMaxTruncation && tail(hi) >= mass_eps) {
        lo = hi;
        hi *= 2;
      }
      if (tail(hi) >= mass_eps) {
        truncation_ = hi;
      } else {
        while (hi - lo > 1) {
          const std::uint64_t mid = lo + (hi - lo) / 2;
          (tail(mid) >= mass_eps ? lo : hi) = mid;
        }
        truncation_ = hi;
      }
      build_head(kHeadSize);
      head_tail_ = tail(kHeadSize);
      mass_ = cum_.back() + (head_tail_ - tail(truncation_));
      tail_mass_ = tail(truncation_) / total;
    } else {
      // Shallow truncation: find L from exact backward tail sums over the head.
      std::vector<double> weights(kHeadSize);
      for (std::uint64_t k = 1; k <= kHeadSize; ++k)
        weights[k - 1] = detail::zm_scaled_weight(static_cast<double>(k), params_);
      CompensatedSum rest;
      if (static_cast<double>(kHeadSize) + params_.t >= detail::zm_tail_switch(params_.gamma))
        rest.add(tail(kHeadSize));
      std::uint64_t limit = kHeadSize;
      for (std::uint64_t k = kHeadSize; k >= 1; --k) {
        // rest = sum_{j > k} w_j
        if (rest.value() >= mass_eps) break;
        limit = k;
        rest.add(weights[k - 1]);
      }
      truncation_ = limit;
      build_head(limit);
      head_tail_ = 0.0;
      mass_ = cum_.back();
    }
  }

  const ZMParams& params() const { return params_; }
  // Largest rank that can be drawn.
  std::uint64_t truncation() const { return truncation_; }
  // Probability mass beyond L, below tail_epsilon unless L hit kMaxTruncation.
  double tail_mass() const { return tail_mass_; }

  CategoryCounts draw(std::uint64_t n, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::vector<std::uint64_t> head(cum_.size(), 0);
    std::map<std::uint64_t, std::uint64_t> deep;
    for (std::uint64_t i = 0; i < n; ++i) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      const double w = u * mass_;
      if (w < cum_.back() || head_tail_ == 0.0) {
        auto it = std::upper_bound(cum_.begin(), cum_.end(), w);
        auto idx = static_cast<std::size_t>(it - cum_.begin());
        ++head[std::min(idx, cum_.size() - 1)];
      } else {
        ++deep[locate_deep(head_tail_ - (w - cum_.back()))];
      }
    }
    CategoryCounts out;
    for (std::size_t i = 0; i < head.size(); ++i)
      if (head[i]) out.emplace_back(i + 1, head[i]);
    for (const auto& kv : deep) out.push_back(kv);
    return out;
  }

private:
  double tail(std::uint64_t k) const { return detail::zm_tail_sum(static_cast<double>(k), params_); }

  void build_head(std::uint64_t size) {
    cum_.resize(size);
    CompensatedSum acc;
    for (std::uint64_t k = 1; k <= size; ++k) {
      acc.add(detail::zm_scaled_weight(static_cast<double>(k), params_));
      cum_[k - 1] = acc.value();
    }
  }

  // Smallest k in (head, L] with tail(k) < target.
  std::uint64_t locate_deep(double target) const {
    std::uint64_t lo = cum_.size();  // tail(lo) >= target
    std::uint64_t hi = truncation_;
    while (hi - lo > 1) {
      const std::uint64_t mid = lo + (hi - lo) / 2;
      (tail(mid) < target ? hi : lo) = mid;
    }
    return hi;
  }

  ZMParams params_;
  std::uint64_t truncation_ = 1;
  std::vector<double> cum_;   // cum_[k-1] = sum_{j <= k} w_j, weights relative to rank 1
  double head_tail_ = 0.0;    // sum_{j > head} w_j, zero when L fits in the head
  double mass_ = 0.0;         // sum_{j <= L} w_j
  double tail_mass_ = 0.0;
};

inline CategoryCounts sample_zm_categories(const SampleSpec& spec) {
  validate(spec);
  return ZmSampler(spec.params, spec.tail_epsilon).draw(spec.n_draws, spec.seed);
}

inline FrequencyTable frequency_table(const CategoryCounts& counts) {
  std::vector<std::uint64_t> freqs;
  freqs.reserve(counts.size());
  for (const auto& [category, count] : counts) freqs.push_back(count);
  return FrequencyTable::from_unsorted(std::move(freqs));
}

// Observed rank-frequency table of n_draws samples.
inline FrequencyTable sample_zm(const SampleSpec& spec) {
  return frequency_table(sample_zm_categories(spec));
}

} // namespace zmfit
