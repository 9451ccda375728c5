#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "zmfit/corpus.hpp"
#include "zmfit/distributions.hpp"
#include "zmfit/error.hpp"
#include "zmfit/specfun.hpp"

namespace zmfit {

enum class FitMethod { mle, chisq };

inline const char* to_string(FitMethod m) { return m == FitMethod::mle ? "mle" : "chisq"; }

struct FitResult {
  FitMethod method = FitMethod::mle;
  double alpha = 0.0;
  double gamma = 0.0;
  double t = 0.0;
  std::optional<double> log_likelihood;   // mle
  std::optional<double> chisq_statistic;  // chisq
  std::uint32_t chisq_bins = 0;           // spectrum bins K entering the statistic
  std::uint64_t outliers_removed = 0;
  bool boundary = false;    // optimum sits on the edge of the search domain
  bool multimodal = false;  // competing non-adjacent maximum in the alpha grid

  friend bool operator==(const FitResult&, const FitResult&) = default;
};

struct SpectrumExpectation {
  ZMParams params;
  std::uint64_t n_total = 0;
  std::vector<double> expected;  // expected[f - 1] = E[#F^-1(f)], f = 1..f_cut
  double expected_types = 0.0;   // E[V] = sum_l (1 - exp(-mu_l)), distinct messages seen

  double at(std::uint64_t f) const { return expected.at(f - 1); }
};

// Open interval searched for alpha.
inline constexpr double kAlphaLo = 1.0 + 1e-6;
inline constexpr double kAlphaHi = 2.0 - 1e-6;

inline double gamma_from_alpha(double alpha) {
  if (!(alpha > 1.0 && alpha < 2.0))
    throw DomainError("gamma_from_alpha: alpha must lie in (1, 2), got " + std::to_string(alpha));
  return 1.0 / (alpha - 1.0);
}

// Shift t = (M + 1) / (F_max^(1/gamma) - 1): the smallest bounded power law
// domain on which the observed maximum frequency is still attainable.
inline double shift_from_prop2(double gamma, std::uint64_t m, std::uint64_t f_max) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw DomainError("shift_from_prop2: gamma must be > 0");
  if (f_max < 2) throw DomainError("shift_from_prop2: F_max must be >= 2");
  if (m < 1) throw DomainError("shift_from_prop2: M must be >= 1");
  return (static_cast<double>(m) + 1.0) / std::expm1(std::log(static_cast<double>(f_max)) / gamma);
}

namespace detail {

// Log-likelihood of a spectrum under the Evert law truncated at f_max.
inline double evert_loglik(double alpha, const LegomenaSpectrum& spectrum, std::uint64_t m,
                           std::uint64_t f_max) {
  const double log_norm = evert_log_weight_sum(EvertParams{alpha, f_max});
  CompensatedSum sum;
  for (const auto& [f, count] : spectrum)
    sum.add(static_cast<double>(count) * log_beta(static_cast<double>(f) + 1.0 - alpha, alpha));
  return sum.value() - static_cast<double>(m) * log_norm;
}

} // namespace detail

// M ln C^alpha + sum_k ln B(F_k + 1 - alpha, alpha), with the Evert law truncated at the table's F_max.
inline double evert_loglik(double alpha, const FrequencyTable& table) {
  validate(EvertParams{alpha, table.f_max()});
  return detail::evert_loglik(alpha, legomena(table), table.m_distinct(), table.f_max());
}

struct AlphaEstimate {
  double alpha = 0.0;
  double log_likelihood = 0.0;
  bool boundary = false;
  bool multimodal = false;
};

inline constexpr int kAlphaGridPoints = 200;

// Maximizes evert_loglik over (kAlphaLo, kAlphaHi): a 200-point grid scan,
// then golden-section search on the two grid cells around the best point.
inline AlphaEstimate fit_alpha_mle(const FrequencyTable& table, double tol = 1e-8) {
  if (!(tol > 0.0 && tol <= 1e-3)) throw DomainError("fit_alpha_mle: tol must lie in (0, 1e-3]");
  if (table.m_distinct() < 2)
    throw DegenerateFit("fit_alpha_mle: need at least 2 distinct messages, got " +
                        std::to_string(table.m_distinct()));

  const auto spectrum = legomena(table);
  const auto m = table.m_distinct();
  const auto f_max = table.f_max();
  auto loglik = [&](double a) { return detail::evert_loglik(a, spectrum, m, f_max); };

  std::array<double, kAlphaGridPoints> grid{};
  std::array<double, kAlphaGridPoints> values{};
  int best = 0;
  for (int i = 0; i < kAlphaGridPoints; ++i) {
    grid[i] = kAlphaLo + (kAlphaHi - kAlphaLo) * i / (kAlphaGridPoints - 1);
    values[i] = loglik(grid[i]);
    if (values[i] > values[best]) best = i;
  }

  AlphaEstimate est;
  for (int i = 0; i < kAlphaGridPoints; ++i) {
    const bool left_ok = i == 0 || values[i] >= values[i - 1];
    const bool right_ok = i == kAlphaGridPoints - 1 || values[i] >= values[i + 1];
    if (left_ok && right_ok && std::abs(i - best) > 1 && values[i] >= values[best] - 1e-6)
      est.multimodal = true;
  }

  double lo = grid[std::max(best - 1, 0)];
  double hi = grid[std::min(best + 1, kAlphaGridPoints - 1)];
  constexpr double inv_phi = 0.61803398874989484820;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = loglik(x1);
  double f2 = loglik(x2);
  while (hi - lo > tol) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = loglik(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = loglik(x1);
    }
  }

  est.alpha = grid[best];
  est.log_likelihood = values[best];
  for (auto [a, v] : {std::pair{x1, f1}, std::pair{x2, f2}}) {
    if (v > est.log_likelihood) {
      est.alpha = a;
      est.log_likelihood = v;
    }
  }
  est.boundary = est.alpha - kAlphaLo <= 2.0 * tol || kAlphaHi - est.alpha <= 2.0 * tol;
  return est;
}

// Evert MLE for alpha, gamma = 1/(alpha - 1), and the shift from the
// bounded continuous power law argument. Throws DegenerateFit when F_max < 2
// (the shift is unbounded there).
inline FitResult fit_mle(const FrequencyTable& table, double tol = 1e-8) {
  const auto est = fit_alpha_mle(table, tol);
  if (table.f_max() < 2)
    throw DegenerateFit("fit_mle: F_max = 1 leaves the shift t undefined (alpha search hit " +
                        std::string(est.boundary ? "the boundary" : "an interior point") + ")");
  FitResult r;
  r.method = FitMethod::mle;
  r.alpha = est.alpha;
  r.gamma = gamma_from_alpha(est.alpha);
  r.t = shift_from_prop2(r.gamma, table.m_distinct(), table.f_max());
  r.log_likelihood = est.log_likelihood;
  r.boundary = est.boundary;
  r.multimodal = est.multimodal;
  return r;
}

namespace detail {

// Lower incomplete gamma function gamma(s, y) for s > 0, by its power series
// y^s e^-y sum_n y^n / (s (s+1) ... (s+n)). Returned in log space.
inline double log_lower_incomplete_gamma(double s, double y) {
  if (y <= 0.0) return -std::numeric_limits<double>::infinity();
  double term = 1.0 / s;
  double sum = term;
  for (int n = 1; n < 100000; ++n) {
    term *= y / (s + n);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return s * std::log(y) - y + std::log(sum);
}

} // namespace detail

// Expected number of f-legomena, f = 1..f_cut, among N draws from a
// Zipf-Mandelbrot law, treating each message's count as Poisson with mean
// mu_l = N C (l + t)^-gamma:
//
//   E[#F^-1(f)] = sum_l mu_l^f exp(-mu_l) / f!
//
// Terms are summed explicitly while l + t is small against gamma * (f_cut + mu);
// the rest of the sum is the integral (a lower incomplete gamma function)
// plus Euler-Maclaurin corrections through the third derivative.
inline SpectrumExpectation expected_spectrum(const ZMParams& params, std::uint64_t n_total,
                                             std::uint64_t f_cut) {
  validate(params);
  if (n_total < 1) throw DomainError("expected_spectrum: N must be >= 1");
  if (f_cut < 1) throw DomainError("expected_spectrum: f_cut must be >= 1");

  const double g = params.gamma;
  const double t = params.t;
  const double log_nc = std::log(static_cast<double>(n_total)) + zm_log_normalizer(params);
  if (!std::isfinite(log_nc)) throw DomainError("expected_spectrum: normalizer is not finite");
  const auto fc = static_cast<std::size_t>(f_cut);
  const double f_cut_d = static_cast<double>(f_cut);

  std::vector<double> log_fact(fc + 1);
  for (std::size_t f = 0; f <= fc; ++f) log_fact[f] = log_gamma(static_cast<double>(f) + 1.0);

  std::vector<CompensatedSum> sums(fc);
  CompensatedSum types;
  std::vector<double> terms(fc);

  // Poisson probabilities P(X = f), f = 1..f_cut, for mean exp(log_mu).
  auto poisson_terms = [&](double log_mu) {
    const double mu = std::exp(log_mu);
    double lp = log_mu - mu;  // ln P(X = 1)
    if (lp > -700.0) {
      double p = std::exp(lp);
      for (std::size_t f = 1; f <= fc; ++f) {
        terms[f - 1] = p;
        p *= mu / static_cast<double>(f + 1);
      }
    } else {
      for (std::size_t f = 1; f <= fc; ++f)
        terms[f - 1] = std::exp(static_cast<double>(f) * log_mu - mu - log_fact[f]);
    }
  };

  double a = 0.0;  // terms l = 1..a have been summed
  bool negligible_rest = false;
  for (;;) {
    const double x = a + t;
    if (x > 0.0) {
      const double log_mu = log_nc - g * std::log(x);
      const double mu = std::exp(log_mu);
      if (x >= 64.0 * g * (f_cut_d + mu)) break;
      // The remaining sum is bounded by the integral of mu(x) from here.
      if (mu < 1.0) {
        const double bound = mu * x / (g - 1.0);
        double smallest = std::numeric_limits<double>::infinity();
        for (const auto& s : sums) smallest = std::min(smallest, s.value());
        if (bound < 1e-300 || bound < 1e-17 * smallest) {
          negligible_rest = true;
          break;
        }
      }
    }
    a += 1.0;
    const double log_mu = log_nc - g * std::log(a + t);
    poisson_terms(log_mu);
    for (std::size_t i = 0; i < fc; ++i) sums[i].add(terms[i]);
    types.add(-std::expm1(-std::exp(log_mu)));
  }

  if (!negligible_rest) {
    const double x = a + t;
    const double log_x = std::log(x);
    const double log_mu = log_nc - g * log_x;
    const double mu = std::exp(log_mu);
    poisson_terms(log_mu);
    for (std::size_t i = 0; i < fc; ++i) {
      const double f = static_cast<double>(i + 1);
      // Integral from a to infinity via y = mu(x).
      const double s = f - 1.0 / g;
      const double integral =
          std::exp(log_nc / g - std::log(g) - log_fact[i + 1] +
                   detail::log_lower_incomplete_gamma(s, mu));
      // x^k d^k/dx^k P(f; mu(x)) through the operator theta = mu d/dmu.
      const double h1 = f - mu;
      const double h2 = h1 * h1 - mu;
      const double h3 = -mu * (2.0 * h1 + 1.0) + h2 * h1;
      const double p = terms[i];
      const double d1 = -g * h1 * p / x;
      const double d3 = (-g * g * g * h3 - 3.0 * g * g * h2 - 2.0 * g * h1) * p / (x * x * x);
      sums[i].add(integral - 0.5 * p - d1 / 12.0 + d3 / 720.0);
    }

    // Same scheme for E[V] with P(seen) = 1 - exp(-mu): theta^k of it is
    // mu q, mu q (1 - mu), mu q ((1 - mu)^2 - mu) with q = exp(-mu).
    const double q = std::exp(-mu);
    const double seen = -std::expm1(-mu);
    const double s = 1.0 - 1.0 / g;
    // Integral of (1 - e^-y) y^(-1/gamma - 1), by parts.
    const double log_scale = log_nc / g;
    const double integral = std::exp(log_scale) * (std::exp(detail::log_lower_incomplete_gamma(s, mu)) -
                                                   seen * std::exp(-log_mu / g));
    const double k1 = mu * q;
    const double k2 = k1 * (1.0 - mu);
    const double k3 = k1 * ((1.0 - mu) * (1.0 - mu) - mu);
    const double d1 = -g * k1 / x;
    const double d3 = (-g * g * g * k3 - 3.0 * g * g * k2 - 2.0 * g * k1) / (x * x * x);
    types.add(integral - 0.5 * seen - d1 / 12.0 + d3 / 720.0);
  }

  SpectrumExpectation out;
  out.params = params;
  out.n_total = n_total;
  out.expected.resize(fc);
  for (std::size_t i = 0; i < fc; ++i) out.expected[i] = std::max(0.0, sums[i].value());
  out.expected_types = std::max(0.0, types.value());
  return out;
}

inline constexpr std::size_t kChisqMaxBins = 15;
inline constexpr std::size_t kChisqMinBins = 6;

struct ChisqValue {
  double statistic = 0.0;
  std::uint32_t bins = 0;  // K
};

// Pearson statistic over the partition {f = 1}, ..., {f = K}, {f > K} of the
// observed message classes. K is the largest f <= 15 with expected count
// >= 5, clamped to [6, 15]. observed[f - 1] is the observed number of
// f-legomena (entries past the end count as zero); observed_types is M.
inline ChisqValue chisq_statistic(std::span<const double> observed, double observed_types,
                                  const ZMParams& params, std::uint64_t n_total) {
  const auto exp = expected_spectrum(params, n_total, kChisqMaxBins);
  std::size_t bins = 0;
  for (std::size_t f = 1; f <= kChisqMaxBins; ++f)
    if (exp.expected[f - 1] >= 5.0) bins = f;
  bins = std::clamp(bins, kChisqMinBins, kChisqMaxBins);
  const auto k = static_cast<std::uint32_t>(bins);

  CompensatedSum stat;
  double obs_head = 0.0;
  double exp_head = 0.0;
  auto add_cell = [&](double o, double e) {
    if (e > 0.0)
      stat.add((o - e) * (o - e) / e);
    else if (o > 0.0)
      stat.add(std::numeric_limits<double>::infinity());
  };
  for (std::size_t f = 1; f <= bins; ++f) {
    const double e = exp.expected[f - 1];
    const double o = f <= observed.size() ? observed[f - 1] : 0.0;
    add_cell(o, e);
    obs_head += o;
    exp_head += e;
  }
  add_cell(std::max(0.0, observed_types - obs_head), std::max(0.0, exp.expected_types - exp_head));
  return {stat.value(), k};
}

namespace detail {

// Nelder-Mead simplex minimization in two dimensions.
template <class F>
std::pair<std::array<double, 2>, double> nelder_mead_2d(F&& objective, std::array<double, 2> start,
                                                        std::array<double, 2> step, int max_iter,
                                                        double x_tol) {
  using Point = std::array<double, 2>;
  std::array<Point, 3> pts = {start, Point{start[0] + step[0], start[1]},
                              Point{start[0], start[1] + step[1]}};
  std::array<double, 3> vals{};
  for (int i = 0; i < 3; ++i) vals[i] = objective(pts[i]);

  auto combine = [](const Point& a, const Point& b, double w) {
    return Point{a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])};
  };

  for (int iter = 0; iter < max_iter; ++iter) {
    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int i, int j) { return vals[i] < vals[j]; });
    const int b = order[0], m = order[1], w = order[2];

    double size = 0.0;
    for (int i : {m, w})
      size = std::max({size, std::abs(pts[i][0] - pts[b][0]) / step[0],
                       std::abs(pts[i][1] - pts[b][1]) / step[1]});
    if (size < x_tol) break;

    const Point centroid = combine(pts[b], pts[m], 0.5);
    const Point refl = combine(centroid, pts[w], -1.0);
    const double f_refl = objective(refl);
    if (f_refl < vals[b]) {
      const Point expd = combine(centroid, pts[w], -2.0);
      const double f_expd = objective(expd);
      if (f_expd < f_refl) {
        pts[w] = expd;
        vals[w] = f_expd;
      } else {
        pts[w] = refl;
        vals[w] = f_refl;
      }
    } else if (f_refl < vals[m]) {
      pts[w] = refl;
      vals[w] = f_refl;
    } else {
      const bool outside = f_refl < vals[w];
      const Point contr = outside ? combine(centroid, refl, 0.5) : combine(centroid, pts[w], 0.5);
      const double f_contr = objective(contr);
      if (f_contr < (outside ? f_refl : vals[w])) {
        pts[w] = contr;
        vals[w] = f_contr;
      } else {
        for (int i : {m, w}) {
          pts[i] = combine(pts[b], pts[i], 0.5);
          vals[i] = objective(pts[i]);
        }
      }
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  return {pts[best], vals[best]};
}

} // namespace detail

// Grid used to seed the chi-squared search.
inline std::vector<double> chisq_alpha_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 49; ++i) g.push_back(1.0 + 0.02 * i);
  return g;
}

inline std::vector<double> chisq_shift_grid() {
  std::vector<double> g{0.0};
  for (int i = 0; i <= 28; ++i) g.push_back(0.25 * std::pow(2.0, 0.5 * i));
  return g;
}

// Joint (alpha, t) minimization of chisq_statistic. observed[f - 1] holds
// the observed number of f-legomena and observed_types the number of
// distinct messages M. Coarse grid, then Nelder-Mead restarted from its own
// optimum until it stops improving.
inline FitResult fit_chisq_spectrum(std::span<const double> observed, double observed_types,
                                    std::uint64_t n_total) {
  std::size_t nonempty = 0;
  for (std::size_t f = 1; f <= std::min(observed.size(), kChisqMaxBins); ++f)
    if (observed[f - 1] > 0.0) ++nonempty;
  if (nonempty < 4)
    throw DegenerateFit("fit_chisq: need at least 4 non-empty spectrum bins in f = 1..15, got " +
                        std::to_string(nonempty));
  if (n_total < 1) throw DomainError("fit_chisq: N must be >= 1");

  auto objective = [&](const std::array<double, 2>& p) {
    const double alpha = p[0];
    const double t = p[1];
    if (!(alpha >= kAlphaLo && alpha <= kAlphaHi) || !(t >= 0.0) || !std::isfinite(t))
      return std::numeric_limits<double>::infinity();
    return chisq_statistic(observed, observed_types, ZMParams{gamma_from_alpha(alpha), t}, n_total)
        .statistic;
  };

  std::array<double, 2> best{1.5, 1.0};
  double best_val = std::numeric_limits<double>::infinity();
  for (double alpha : chisq_alpha_grid()) {
    for (double t : chisq_shift_grid()) {
      const double v = objective({alpha, t});
      if (v < best_val) {
        best_val = v;
        best = {alpha, t};
      }
    }
  }

  for (int round = 0; round < 8; ++round) {
    const std::array<double, 2> step = {0.01, std::max(0.5, 0.1 * best[1])};
    auto [pt, val] = detail::nelder_mead_2d(objective, best, step, 2000, 1e-10);
    const bool improved = val < best_val - 1e-12 * (1.0 + best_val);
    if (val <= best_val) {
      best = pt;
      best_val = val;
    }
    if (!improved) break;
  }

  const ZMParams params{gamma_from_alpha(best[0]), best[1]};
  const auto value = chisq_statistic(observed, observed_types, params, n_total);

  FitResult r;
  r.method = FitMethod::chisq;
  r.alpha = best[0];
  r.gamma = params.gamma;
  r.t = best[1];
  r.chisq_statistic = value.statistic;
  r.chisq_bins = value.bins;
  // Nelder-Mead stops on a simplex size, so the edge margin is wider than for the MLE
  r.boundary = best[0] - kAlphaLo <= 1e-4 || kAlphaHi - best[0] <= 1e-4;
  return r;
}

inline FitResult fit_chisq(const FrequencyTable& table, std::uint64_t n_total) {
  if (table.m_distinct() < 4)
    throw DegenerateFit("fit_chisq: need at least 4 distinct messages, got " +
                        std::to_string(table.m_distinct()));
  const auto spectrum = legomena(table);
  std::vector<double> observed(kChisqMaxBins, 0.0);
  for (std::size_t f = 1; f <= kChisqMaxBins; ++f)
    observed[f - 1] = static_cast<double>(spectrum.count(f));
  return fit_chisq_spectrum(observed, static_cast<double>(table.m_distinct()), n_total);
}

inline FitResult fit_chisq(const FrequencyTable& table) { return fit_chisq(table, table.n_total()); }

} // namespace zmfit
