#include <cmath>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "zmfit/report.hpp"

using zmfit::FrequencyTable;

TEST(PlotRows, TwoRankExample) {
  const auto rows = zmfit::plot_rows(FrequencyTable({8, 1}), 2.0, 0.0);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].k, 1u);
  EXPECT_EQ(rows[0].f, 8u);
  EXPECT_NEAR(rows[0].x, 0.0, 1e-15);
  EXPECT_NEAR(rows[0].y, std::log(8.0), 1e-15);
  EXPECT_NEAR(rows[1].x, std::log(2.0), 1e-15);
  EXPECT_NEAR(rows[1].y, 0.0, 1e-15);
  // slope fixed at -2: intercept is the mean of y + 2x
  const double a = 0.5 * (std::log(8.0) + 2.0 * std::log(2.0));
  EXPECT_NEAR(rows[0].y_fit, a, 1e-14);
  EXPECT_NEAR(rows[1].y_fit, a - 2.0 * std::log(2.0), 1e-14);
}

TEST(PlotRows, ObservedColumnNonIncreasing) {
  const auto table = zmfit::sample_zm({{2.0, 5.0}, 20000, 4});
  const auto rows = zmfit::plot_rows(table, 2.0, 5.0);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(rows[i].y, rows[i - 1].y);
}

TEST(PlotRows, SyntheticMiddleRanksFollowTheLine) {
  const auto table = zmfit::sample_zm({{6.3, 60.0}, 1'000'000, 1});
  const auto rows = zmfit::plot_rows(table, 6.3, 60.0);
  // ranks with single-digit counts scatter by whole log steps, so only well-populated ranks are checked
  double worst = 0.0;
  std::size_t checked = 0;
  for (const auto& r : rows)
    if (r.f >= 100) {
      worst = std::max(worst, std::fabs(r.y - r.y_fit));
      ++checked;
    }
  EXPECT_GT(checked, 50u);
  EXPECT_LE(worst, 0.25);
}

TEST(PlotRows, RejectsBadParameters) {
  EXPECT_THROW(zmfit::plot_rows(FrequencyTable({2, 1}), 2.0, -1.0), zmfit::DomainError);
}

TEST(PlotCsv, HeaderAndRows) {
  std::ostringstream out;
  zmfit::write_plot_csv(out, zmfit::plot_rows(FrequencyTable({8, 1}), 2.0, 0.0));
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "k,f,x,y,y_fit");
  EXPECT_NE(out.str().find("\n1,8,0,2.07944154168,"), std::string::npos) << out.str();
}

TEST(PlotSvg, IsStandaloneSvg) {
  std::ostringstream out;
  zmfit::write_plot_svg(out, zmfit::plot_rows(FrequencyTable({8, 4, 2, 1}), 1.0, 0.0), 1.0, 0.0);
  EXPECT_EQ(out.str().rfind("<svg", 0), 0u);
  EXPECT_NE(out.str().find("</svg>"), std::string::npos);
  EXPECT_EQ(out.str().find("nan"), std::string::npos);
}

TEST(FitReport, ContainsSummarySpectrumAndFits) {
  const auto table = zmfit::sample_zm({{6.3, 60.0}, 200000, 2});
  const auto rep = zmfit::build_fit_report(table, zmfit::MethodChoice::both, 3, 1e-8, {{"drop_top", 3}});
  const auto j = zmfit::to_json(rep);
  EXPECT_EQ(j["schema_version"], zmfit::kReportSchemaVersion);
  EXPECT_EQ(j["corpus"]["N"], table.n_total());
  EXPECT_EQ(j["corpus"]["M"], table.m_distinct());
  EXPECT_EQ(j["corpus"]["F_max"], table.f_max());
  EXPECT_TRUE(j["corpus"]["entropy_bits"].is_number());
  EXPECT_EQ(j["fitted_corpus"]["M"], table.m_distinct() - 3);
  EXPECT_EQ(j["spectrum_head"].size(), zmfit::kSpectrumHead);
  ASSERT_EQ(j["fits"].size(), 2u);
  EXPECT_EQ(j["fits"][0]["method"], "mle");
  EXPECT_EQ(j["fits"][1]["method"], "chisq");
  EXPECT_EQ(j["fits"][0]["outliers_removed"], 3);
  EXPECT_EQ(j["config"]["drop_top"], 3);

  const auto p = zmfit::params_from_report(j);
  EXPECT_EQ(p.gamma, rep.fits[0].gamma);
  EXPECT_EQ(p.t, rep.fits[0].t);
  EXPECT_THROW(zmfit::params_from_report(nlohmann::json::object()), std::invalid_argument);
}

TEST(WriteSpectrum, Rows) {
  std::ostringstream out;
  zmfit::write_spectrum(out, zmfit::legomena(FrequencyTable({5, 3, 1, 1})));
  EXPECT_EQ(out.str(), "1 2\n3 1\n5 1\n");
}
