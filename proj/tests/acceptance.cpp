// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Every tolerance and time limit is fixed here.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "zmfit/zmfit.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// 1. Shift from the maximum frequency on two corpus summaries.
constexpr double kShiftTol = 0.2;

Outcome shift_consistency() {
  struct Case {
    double alpha;
    std::uint64_t m, f_max;
    double expected;
  };
  const Case cases[] = {{1.216, 572, 702102, 33.1}, {1.165, 283, 179624, 44.7}};
  Outcome o{true, ""};
  for (const auto& c : cases) {
    const double t = zmfit::shift_from_prop2(zmfit::gamma_from_alpha(c.alpha), c.m, c.f_max);
    o.pass = o.pass && std::fabs(t - c.expected) <= kShiftTol;
    o.detail += fmt("t=%.4f ", t) + fmt("(want %.1f) ", c.expected);
  }
  return o;
}

// 2. Closed-form Evert normalizer against a direct log-space sum.
constexpr double kNormalizerRelTol = 1e-9;

Outcome evert_identity() {
  double worst = 0.0;
  for (double alpha : {1.1, 1.3, 1.5, 1.7, 1.9}) {
    for (std::uint64_t f_max : {std::uint64_t{100}, std::uint64_t{10000}}) {
      const double closed = zmfit::evert_log_weight_sum({alpha, f_max});
      // log-sum-exp, with the largest term (f = 1) as the pivot
      const double pivot = zmfit::log_beta(2.0 - alpha, alpha);
      zmfit::CompensatedSum s;
      for (std::uint64_t f = 1; f <= f_max; ++f)
        s.add(std::exp(zmfit::log_beta(static_cast<double>(f) + 1.0 - alpha, alpha) - pivot));
      const double direct = pivot + std::log(s.value());
      worst = std::max(worst, std::fabs(std::expm1(closed - direct)));
    }
  }
  return {worst <= kNormalizerRelTol, fmt("max rel diff %.3e", worst)};
}

// 3. Expected spectrum is proportional to B(f + 1 - alpha, alpha).
constexpr double kShapeSpread = 0.05;

Outcome spectrum_shape() {
  const zmfit::ZMParams p{2.0, 5.0};
  const double alpha = 1.0 + 1.0 / p.gamma;
  const auto e = zmfit::expected_spectrum(p, 10'000'000, 6);
  double lo = INFINITY, hi = 0.0;
  for (std::uint64_t f = 1; f <= 6; ++f) {
    const double r = e.at(f) / std::exp(zmfit::log_beta(static_cast<double>(f) + 1.0 - alpha, alpha));
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  const double spread = (hi - lo) / lo;
  return {spread <= kShapeSpread, fmt("relative spread %.3e", spread)};
}

// 4. Monte-Carlo legomena means against the expected spectrum.
constexpr int kMcSamples = 200;
constexpr std::uint64_t kMcDraws = 100'000;
constexpr double kMcSigmas = 3.0;

Outcome monte_carlo_spectrum() {
  const zmfit::ZMParams p{2.0, 5.0};
  const zmfit::ZmSampler sampler(p);
  std::vector<double> sum(6, 0.0), sum_sq(6, 0.0);
  for (int s = 0; s < kMcSamples; ++s) {
    const auto table = zmfit::frequency_table(sampler.draw(kMcDraws, 1000 + static_cast<std::uint64_t>(s)));
    const auto spec = zmfit::legomena(table);
    for (std::uint64_t f = 1; f <= 6; ++f) {
      const double c = static_cast<double>(spec.count(f));
      sum[f - 1] += c;
      sum_sq[f - 1] += c * c;
    }
  }
  const auto e = zmfit::expected_spectrum(p, kMcDraws, 6);
  Outcome o{true, "z:"};
  for (std::size_t i = 0; i < 6; ++i) {
    const double n = kMcSamples;
    const double mean = sum[i] / n;
    const double var = (sum_sq[i] - n * mean * mean) / (n - 1.0);
    const double z = (mean - e.expected[i]) / std::sqrt(var / n);
    o.pass = o.pass && std::fabs(z) <= kMcSigmas;
    o.detail += fmt(" %+.2f", z);
  }
  return o;
}

// 5. Parameter recovery on ZM(6.3, 60), n = 10^6.
constexpr double kRecoveryAlpha = 1.1587;
constexpr double kMleTol = 0.03;
constexpr double kMeanBiasTol = 0.02;
constexpr double kChisqTol = 0.05;
constexpr int kRecoverySeeds = 20;

Outcome parameter_recovery() {
  const zmfit::ZMParams truth{6.3, 60.0};
  const double alpha_true = 1.0 + 1.0 / truth.gamma;
  const zmfit::ZmSampler sampler(truth);
  const auto fixture = zmfit::frequency_table(sampler.draw(1'000'000, 1));

  const double mle = zmfit::fit_mle(fixture).alpha;
  const double chisq = zmfit::fit_chisq(fixture).alpha;

  double abs_bias = 0.0, signed_bias = 0.0;
  for (int s = 1; s <= kRecoverySeeds; ++s) {
    const auto table = zmfit::frequency_table(sampler.draw(1'000'000, static_cast<std::uint64_t>(s)));
    const double a = zmfit::fit_mle(table).alpha;
    abs_bias += std::fabs(a - alpha_true);
    signed_bias += a - alpha_true;
  }
  abs_bias /= kRecoverySeeds;
  signed_bias /= kRecoverySeeds;

  const bool ok = std::fabs(mle - kRecoveryAlpha) <= kMleTol && abs_bias < kMeanBiasTol &&
                  std::fabs(chisq - kRecoveryAlpha) <= kChisqTol;
  return {ok, fmt("mle alpha %.5f", mle) + fmt(", chisq alpha %.5f", chisq) +
                  fmt(", mean |bias| %.5f", abs_bias) + fmt(", mean bias %+.5f", signed_bias)};
}

// 6. Spectrum sums recover M and N on random tables.
Outcome structural_invariants() {
  std::mt19937_64 rng(20240601);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto m = std::uniform_int_distribution<std::size_t>(1, 2000)(rng);
    // heavy-tailed counts, up to ~10^6
    std::uniform_real_distribution<double> u(0.0, 6.0);
    std::vector<std::uint64_t> freqs(m);
    for (auto& f : freqs) f = static_cast<std::uint64_t>(std::pow(10.0, u(rng)));
    const auto table = zmfit::FrequencyTable::from_unsorted(freqs);
    std::uint64_t types = 0, tokens = 0;
    for (const auto& [f, c] : zmfit::legomena(table)) {
      types += c;
      tokens += f * c;
    }
    if (types != table.m_distinct() || tokens != table.n_total()) ++bad;
  }
  return {bad == 0, std::to_string(bad) + " of 1000 tables violate the sums"};
}

// 7. Shipped rule sets: NameError canonicalization and fixed points.
Outcome sanitizer_golden() {
  const fs::path rules_dir = fs::path(ZMFIT_SOURCE_DIR) / "rules";
  const auto python = zmfit::load_ruleset((rules_dir / "python.json").string());
  const auto a = zmfit::sanitize_message("NameError: name 'x' is not defined", python);
  const auto b = zmfit::sanitize_message("NameError: name 'sum' is not defined", python);
  bool ok = a && b && *a == *b;
  std::size_t vectors = 0, broken = 0;
  for (const auto& entry : fs::directory_iterator(rules_dir)) {
    if (entry.path().extension() != ".json") continue;
    const auto rules = zmfit::load_ruleset(entry.path().string());
    for (const auto& tv : rules.tests()) {
      ++vectors;
      const auto once = zmfit::sanitize_message(tv.input, rules);
      const auto twice = once ? zmfit::sanitize_message(*once, rules) : std::nullopt;
      if (once && twice != once) ++broken;
    }
  }
  ok = ok && broken == 0 && vectors > 0;
  return {ok, "class \"" + a.value_or("<dropped>") + "\", " + std::to_string(vectors) + " vectors, " +
                  std::to_string(broken) + " not fixed points"};
}

// 8. sample -> fit through the CLI twice, reports compared byte for byte.
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome cli_reproducible() {
  const fs::path dir = fs::temp_directory_path() / ("zmfit_accept_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  std::vector<std::string> reports;
  for (int run = 0; run < 2; ++run) {
    const auto counts = dir / "counts.txt";
    const auto report = dir / ("report" + std::to_string(run) + ".json");
    const std::string cli = ZMFIT_CLI_PATH;
    const std::string sample = "\"" + cli + "\" sample --gamma 6.3 --t 60 --n 200000 --seed 42 --output \"" +
                               counts.string() + "\"";
    const std::string fit = "\"" + cli + "\" fit --method both --input \"" + counts.string() + "\" --output \"" +
                            report.string() + "\"";
    if (std::system(sample.c_str()) != 0 || std::system(fit.c_str()) != 0) {
      fs::remove_all(dir);
      return {false, "CLI invocation failed"};
    }
    reports.push_back(slurp(report));
  }
  const auto& r0 = reports[0];
  const auto& r1 = reports[1];
  fs::remove_all(dir);
  return {!r0.empty() && r0 == r1, std::to_string(r0.size()) + " bytes, " + (r0 == r1 ? "identical" : "differ")};
}

} // namespace

int main() {
  struct Criterion {
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"1 shift from F_max", 1.0, shift_consistency},
      {"2 Evert normalizer identity", 10.0, evert_identity},
      {"3 expected spectrum shape", 30.0, spectrum_shape},
      {"4 Monte-Carlo spectrum", 300.0, monte_carlo_spectrum},
      {"5 parameter recovery", 300.0, parameter_recovery},
      {"6 spectrum invariants", 10.0, structural_invariants},
      {"7 sanitizer golden", 1.0, sanitizer_golden},
      {"8 CLI reproducibility", 120.0, cli_reproducible},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("[%s] %-30s %7.2fs (limit %gs%s)  %s\n", pass ? "PASS" : "FAIL", c.name, secs, c.limit_s,
                in_time ? "" : ", exceeded", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
