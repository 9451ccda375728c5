#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zmfit/corpus.hpp"
#include "zmfit/distributions.hpp"
#include "zmfit/fitting.hpp"
#include "zmfit/version.hpp"

namespace zmfit {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr std::uint64_t kSpectrumHead = 6;

enum class MethodChoice { mle, chisq, both };

inline const char* to_string(MethodChoice m) {
  switch (m) {
    case MethodChoice::mle: return "mle";
    case MethodChoice::chisq: return "chisq";
    case MethodChoice::both: return "both";
  }
  return "both";
}

struct CorpusSummary {
  std::uint64_t n_total = 0;
  std::uint64_t m_distinct = 0;
  std::uint64_t f_max = 0;
  double entropy_bits = 0.0;
};

inline CorpusSummary summarize(const FrequencyTable& table) {
  return {table.n_total(), table.m_distinct(), table.f_max(), entropy(table)};
}

struct FitReport {
  nlohmann::json config;  // echo of everything needed to rerun
  CorpusSummary corpus;
  CorpusSummary fitted;   // after drop_top
  std::vector<std::pair<std::uint64_t, std::uint64_t>> spectrum_head;  // (f, #F^-1(f)), f = 1..6
  std::vector<FitResult> fits;
};

// Applies drop_top, then runs the requested fitter(s).
inline FitReport build_fit_report(const FrequencyTable& table, MethodChoice method,
                                  std::uint64_t drop_top_count, double tol, nlohmann::json config) {
  FitReport rep;
  rep.config = std::move(config);
  rep.corpus = summarize(table);
  const auto spectrum = legomena(table);
  for (std::uint64_t f = 1; f <= kSpectrumHead; ++f) rep.spectrum_head.emplace_back(f, spectrum.count(f));

  const auto fitted = drop_top(table, drop_top_count);
  rep.fitted = summarize(fitted);
  if (method != MethodChoice::chisq) {
    auto r = fit_mle(fitted, tol);
    r.outliers_removed = drop_top_count;
    rep.fits.push_back(r);
  }
  if (method != MethodChoice::mle) {
    auto r = fit_chisq(fitted);
    r.outliers_removed = drop_top_count;
    rep.fits.push_back(r);
  }
  return rep;
}

inline nlohmann::json to_json(const CorpusSummary& s) {
  return {{"N", s.n_total}, {"M", s.m_distinct}, {"F_max", s.f_max}, {"entropy_bits", s.entropy_bits}};
}

inline nlohmann::json to_json(const FitResult& r) {
  nlohmann::json j;
  j["method"] = to_string(r.method);
  j["alpha"] = r.alpha;
  j["gamma"] = r.gamma;
  j["t"] = r.t;
  if (r.log_likelihood) j["log_likelihood"] = *r.log_likelihood;
  if (r.chisq_statistic) {
    j["chisq_statistic"] = *r.chisq_statistic;
    j["chisq_bins"] = r.chisq_bins;
  }
  j["outliers_removed"] = r.outliers_removed;
  j["boundary"] = r.boundary;
  j["multimodal"] = r.multimodal;
  return j;
}

inline nlohmann::json to_json(const FitReport& rep) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["tool"] = "zmfit";
  j["version"] = kVersion;
  j["config"] = rep.config;
  j["corpus"] = to_json(rep.corpus);
  j["fitted_corpus"] = to_json(rep.fitted);
  auto head = nlohmann::json::array();
  for (const auto& [f, c] : rep.spectrum_head) head.push_back({{"f", f}, {"count", c}});
  j["spectrum_head"] = head;
  auto fits = nlohmann::json::array();
  for (const auto& r : rep.fits) fits.push_back(to_json(r));
  j["fits"] = fits;
  return j;
}

// Reads the first fit of a report back as (gamma, t).
inline ZMParams params_from_report(const nlohmann::json& report) {
  if (!report.contains("fits") || !report["fits"].is_array() || report["fits"].empty())
    throw std::invalid_argument("report has no fits");
  const auto& fit = report["fits"][0];
  return {fit.at("gamma").get<double>(), fit.at("t").get<double>()};
}

// Shifted log-log plot data.
struct PlotRow {
  std::uint64_t k = 0;
  std::uint64_t f = 0;
  double x = 0.0;      // ln(k + t)
  double y = 0.0;      // ln F_k
  double y_fit = 0.0;  // a - gamma x, a fitted by least squares with gamma fixed
};

inline std::vector<PlotRow> plot_rows(const FrequencyTable& table, double gamma, double t) {
  if (!std::isfinite(gamma) || !std::isfinite(t) || t < 0.0)
    throw DomainError("plot: gamma must be finite and t >= 0");
  std::vector<PlotRow> rows;
  rows.reserve(table.m_distinct());
  CompensatedSum offset;
  for (std::size_t k = 1; k <= table.m_distinct(); ++k) {
    PlotRow r;
    r.k = k;
    r.f = table.at_rank(k);
    r.x = std::log(static_cast<double>(k) + t);
    r.y = std::log(static_cast<double>(r.f));
    offset.add(r.y + gamma * r.x);
    rows.push_back(r);
  }
  // With the slope fixed, the least-squares intercept is mean(y + gamma x).
  const double a = offset.value() / static_cast<double>(rows.size());
  for (auto& r : rows) r.y_fit = a - gamma * r.x;
  return rows;
}

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_plot_csv(std::ostream& out, std::span<const PlotRow> rows) {
  out << "k,f,x,y,y_fit\n";
  for (const auto& r : rows)
    out << r.k << ',' << r.f << ',' << format_number(r.x) << ',' << format_number(r.y) << ','
        << format_number(r.y_fit) << '\n';
}

// Minimal standalone SVG: observed points and the fitted line.
inline void write_plot_svg(std::ostream& out, std::span<const PlotRow> rows, double gamma, double t) {
  constexpr double width = 640, height = 480, margin = 56;
  double x_lo = rows.front().x, x_hi = rows.front().x;
  double y_lo = rows.front().y, y_hi = rows.front().y;
  for (const auto& r : rows) {
    x_lo = std::min(x_lo, r.x);
    x_hi = std::max(x_hi, r.x);
    y_lo = std::min({y_lo, r.y, r.y_fit});
    y_hi = std::max({y_hi, r.y, r.y_fit});
  }
  if (x_hi - x_lo < 1e-9) x_hi = x_lo + 1.0;
  if (y_hi - y_lo < 1e-9) y_hi = y_lo + 1.0;
  auto px = [&](double x) { return margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin); };
  auto py = [&](double y) { return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
      << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
      << height - margin << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 16
      << "\" text-anchor=\"middle\" font-size=\"14\">ln(k + " << format_number(t) << ")</text>\n";
  out << "<text x=\"16\" y=\"" << height / 2 << "\" text-anchor=\"middle\" font-size=\"14\" "
      << "transform=\"rotate(-90 16 " << height / 2 << ")\">ln F_k</text>\n";
  out << "<text x=\"" << width - margin << "\" y=\"" << margin - 16
      << "\" text-anchor=\"end\" font-size=\"14\">slope -" << format_number(gamma) << "</text>\n";
  for (const auto& r : rows)
    out << "<circle cx=\"" << format_number(px(r.x)) << "\" cy=\"" << format_number(py(r.y))
        << "\" r=\"2\" fill=\"#c0392b\"/>\n";
  out << "<line x1=\"" << format_number(px(rows.front().x)) << "\" y1=\""
      << format_number(py(rows.front().y_fit)) << "\" x2=\"" << format_number(px(rows.back().x))
      << "\" y2=\"" << format_number(py(rows.back().y_fit)) << "\" stroke=\"#2471a3\" stroke-width=\"1.5\"/>\n";
  out << "</svg>\n";
}

// Spectrum rows "f count", ascending f.
inline void write_spectrum(std::ostream& out, const LegomenaSpectrum& spectrum) {
  for (const auto& [f, c] : spectrum) out << f << ' ' << c << '\n';
}

// Counts file for a synthetic sample; categories are labelled zm-<innate rank>.
inline void write_sample(std::ostream& out, const SampleSpec& spec, std::uint64_t truncation,
                         const CategoryCounts& counts) {
  out << "# zmfit " << kVersion << " sample gamma=" << format_number(spec.params.gamma)
      << " t=" << format_number(spec.params.t) << " n=" << spec.n_draws << " seed=" << spec.seed
      << " tail_epsilon=" << format_number(spec.tail_epsilon) << " truncation=" << truncation << '\n';
  std::vector<MessageCount> records;
  records.reserve(counts.size());
  for (const auto& [category, count] : counts) records.push_back({"zm-" + std::to_string(category), count});
  write_counts(out, rank_messages(records));
}

} // namespace zmfit
