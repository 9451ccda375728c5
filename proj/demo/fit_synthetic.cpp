// Draws a synthetic corpus from a Zipf-Mandelbrot law and fits it back with
// both estimators.
//
//   fit_synthetic [gamma] [t] [n] [seed]

#include <cstdint>
#include <cstdio>
#include <cstdlib>

#include "zmfit/zmfit.hpp"

int main(int argc, char** argv) {
  const double gamma = argc > 1 ? std::atof(argv[1]) : 6.3;
  const double t = argc > 2 ? std::atof(argv[2]) : 60.0;
  const auto n = static_cast<std::uint64_t>(argc > 3 ? std::atof(argv[3]) : 1e6);
  const auto seed = static_cast<std::uint64_t>(argc > 4 ? std::atoll(argv[4]) : 1);

  const auto table = zmfit::sample_zm({{gamma, t}, n, seed});
  std::printf("N = %llu, M = %llu, F_max = %llu, entropy = %.4f bits\n",
              static_cast<unsigned long long>(table.n_total()),
              static_cast<unsigned long long>(table.m_distinct()),
              static_cast<unsigned long long>(table.f_max()), zmfit::entropy(table));

  const auto spectrum = zmfit::legomena(table);
  std::printf("f-legomena, f = 1..6:");
  for (std::uint64_t f = 1; f <= 6; ++f) std::printf(" %llu", static_cast<unsigned long long>(spectrum.count(f)));
  std::printf("\n");

  std::printf("true:  alpha = %.4f, gamma = %.4f, t = %.2f\n", 1.0 + 1.0 / gamma, gamma, t);
  for (const auto& r : {zmfit::fit_mle(table), zmfit::fit_chisq(table)})
    std::printf("%-5s  alpha = %.4f, gamma = %.4f, t = %.2f\n", zmfit::to_string(r.method), r.alpha, r.gamma, r.t);
}
