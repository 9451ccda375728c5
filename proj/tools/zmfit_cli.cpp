// zmfit command-line front end.
//
// Exit status: 0 success, 1 degenerate/statistical failure, 2 usage or I/O failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "zmfit/zmfit.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDegenerate = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Input stream: a file, or stdin for "-".
class Input {
public:
  explicit Input(const std::string& path) {
    if (path == "-") return;
    file_ = std::make_unique<std::ifstream>(path, std::ios::binary);
    if (!*file_) throw UsageError("cannot open input '" + path + "'");
  }
  std::istream& stream() { return file_ ? *file_ : std::cin; }

private:
  std::unique_ptr<std::ifstream> file_;
};

class Output {
public:
  explicit Output(const std::string& path) {
    if (path == "-") return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    if (!*file_) throw UsageError("cannot open output '" + path + "'");
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void finish() {
    stream().flush();
    if (!stream()) throw UsageError("write failed");
  }

private:
  std::unique_ptr<std::ofstream> file_;
};

struct Options {
  std::string input = "-";
  std::string output = "-";
  std::string rules;
  std::string profile;
  std::string method = "both";
  std::string from_report;
  std::string svg;
  std::uint64_t drop_top = 0;
  std::optional<double> gamma;
  std::optional<double> t;
  std::uint64_t n = 0;
  std::optional<std::uint64_t> seed;
  double tol = 1e-8;
  double tail_epsilon = zmfit::kDefaultTailEpsilon;
};

zmfit::MethodChoice parse_method(const std::string& m) {
  if (m == "mle") return zmfit::MethodChoice::mle;
  if (m == "chisq") return zmfit::MethodChoice::chisq;
  if (m == "both") return zmfit::MethodChoice::both;
  throw UsageError("--method must be mle, chisq or both");
}

zmfit::FrequencyTable read_table(const std::string& path) {
  Input in(path);
  const auto counts = zmfit::ingest_counts(in.stream());
  if (counts.empty()) throw UsageError("input '" + path + "' holds no records");
  return zmfit::rank_frequencies(counts);
}

// Splits transcripts on blank lines.
std::vector<std::string> read_transcripts(std::istream& in) {
  std::vector<std::string> out;
  std::string line, current;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
      continue;
    }
    current += line;
    current += '\n';
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

int cmd_sanitize(const Options& o) {
  if (o.rules.empty()) throw UsageError("sanitize needs --rules");
  const auto rules = zmfit::load_ruleset(o.rules);
  std::optional<zmfit::LanguageProfile> profile;
  if (!o.profile.empty()) profile = zmfit::load_profile(o.profile);

  Input in(o.input);
  Output out(o.output);
  std::uint64_t kept = 0, dropped = 0;
  auto emit = [&](const std::optional<std::string>& msg) {
    if (!msg) {
      ++dropped;
      return;
    }
    if (auto clean = zmfit::sanitize_message(*msg, rules)) {
      out.stream() << *clean << '\n';
      ++kept;
    } else {
      ++dropped;
    }
  };
  if (profile) {
    for (const auto& transcript : read_transcripts(in.stream()))
      emit(zmfit::first_error(transcript, *profile));
  } else {
    std::string line;
    while (std::getline(in.stream(), line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      emit(line);
    }
  }
  out.finish();
  std::cerr << "sanitize: kept " << kept << ", dropped " << dropped << '\n';
  return kExitOk;
}

int cmd_count(const Options& o) {
  Input in(o.input);
  const auto counts = zmfit::ingest_lines(in.stream());
  Output out(o.output);
  zmfit::write_counts(out.stream(), zmfit::rank_messages(counts));
  out.finish();
  return kExitOk;
}

int cmd_spectrum(const Options& o) {
  const auto table = read_table(o.input);
  Output out(o.output);
  zmfit::write_spectrum(out.stream(), zmfit::legomena(table));
  out.finish();
  return kExitOk;
}

nlohmann::json fit_config(const char* command, const Options& o) {
  return {{"command", command}, {"input", o.input},       {"method", o.method},
          {"drop_top", o.drop_top}, {"tol", o.tol}};
}

int run_fit_report(const char* command, const Options& o, bool full) {
  const auto method = parse_method(o.method);
  const auto table = read_table(o.input);
  if (o.drop_top >= table.m_distinct())
    throw UsageError("--drop-top " + std::to_string(o.drop_top) + " must be below M = " +
                     std::to_string(table.m_distinct()));
  const auto report = zmfit::build_fit_report(table, method, o.drop_top, o.tol, fit_config(command, o));
  auto doc = zmfit::to_json(report);
  if (full) {
    auto spectrum = nlohmann::json::array();
    for (const auto& [f, c] : zmfit::legomena(table)) spectrum.push_back({{"f", f}, {"count", c}});
    doc["spectrum"] = spectrum;
    Input in(o.input);
    const auto ranked = zmfit::rank_messages(zmfit::ingest_counts(in.stream()));
    auto top = nlohmann::json::array();
    for (std::size_t i = 0; i < ranked.size() && i < 10; ++i)
      top.push_back({{"rank", i + 1}, {"count", ranked[i].count}, {"message", ranked[i].text}});
    doc["top_messages"] = top;
  }
  Output out(o.output);
  out.stream() << doc.dump(2) << '\n';
  out.finish();
  return kExitOk;
}

int cmd_sample(const Options& o) {
  if (!o.gamma || !o.t) throw UsageError("sample needs --gamma and --t");
  if (!o.seed) throw UsageError("sample needs --seed");
  if (o.n < 1) throw UsageError("sample needs --n >= 1");
  const zmfit::SampleSpec spec{{*o.gamma, *o.t}, o.n, *o.seed, o.tail_epsilon};
  zmfit::validate(spec);
  const zmfit::ZmSampler sampler(spec.params, spec.tail_epsilon);
  const auto counts = sampler.draw(spec.n_draws, spec.seed);
  Output out(o.output);
  zmfit::write_sample(out.stream(), spec, sampler.truncation(), counts);
  out.finish();
  return kExitOk;
}

int cmd_plot(const Options& o) {
  zmfit::ZMParams params;
  if (!o.from_report.empty()) {
    std::ifstream in(o.from_report);
    if (!in) throw UsageError("cannot open report '" + o.from_report + "'");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
      params = zmfit::params_from_report(doc);
    } catch (const std::exception& e) {
      throw UsageError("bad report '" + o.from_report + "': " + e.what());
    }
  } else if (o.gamma && o.t) {
    params = {*o.gamma, *o.t};
  } else {
    throw UsageError("plot needs --gamma and --t, or --from-report");
  }
  const auto table = read_table(o.input);
  const auto rows = zmfit::plot_rows(table, params.gamma, params.t);
  Output out(o.output);
  zmfit::write_plot_csv(out.stream(), rows);
  out.finish();
  if (!o.svg.empty()) {
    Output svg(o.svg);
    zmfit::write_plot_svg(svg.stream(), rows, params.gamma, params.t);
    svg.finish();
  }
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"zmfit: error-message frequency tables and Zipf-Mandelbrot fitting"};
  app.set_version_flag("--version", zmfit::kVersion);
  app.require_subcommand(1);
  Options o;

  auto* sanitize = app.add_subcommand("sanitize", "canonicalize raw messages with a rule set");
  sanitize->add_option("--input", o.input, "raw messages, one per line ('-' for stdin)");
  sanitize->add_option("--rules", o.rules, "rule file (JSON)");
  sanitize->add_option("--profile", o.profile, "language profile; input is then blank-line separated transcripts");
  sanitize->add_option("--output", o.output, "output path ('-' for stdout)");

  auto* count = app.add_subcommand("count", "count identical lines into a counts file");
  count->add_option("--input", o.input, "raw or sanitized messages, one per line");
  count->add_option("--output", o.output, "counts file");

  auto* spectrum = app.add_subcommand("spectrum", "print the frequency spectrum (f, #messages seen f times)");
  spectrum->add_option("--input", o.input, "counts file");
  spectrum->add_option("--output", o.output, "output path");

  auto* fit = app.add_subcommand("fit", "fit a Zipf-Mandelbrot law to a counts file");
  auto* report = app.add_subcommand("report", "summary, spectrum and fits in one document");
  for (auto* sub : {fit, report}) {
    sub->add_option("--input", o.input, "counts file");
    sub->add_option("--method", o.method, "mle, chisq or both")->capture_default_str();
    sub->add_option("--drop-top", o.drop_top, "treat the N most common messages as outliers");
    sub->add_option("--tol", o.tol, "alpha tolerance of the likelihood search")->capture_default_str();
    sub->add_option("--output", o.output, "report path");
  }

  auto* sample = app.add_subcommand("sample", "draw a synthetic counts file from a Zipf-Mandelbrot law");
  sample->add_option("--gamma", o.gamma, "exponent (> 1)");
  sample->add_option("--t,-t", o.t, "shift (>= 0)");
  sample->add_option("--n", o.n, "number of draws");
  sample->add_option("--seed", o.seed, "64-bit seed");
  sample->add_option("--tail-epsilon", o.tail_epsilon, "truncation tail mass")->capture_default_str();
  sample->add_option("--output", o.output, "counts file");

  auto* plot = app.add_subcommand("plot", "shifted log-log rank-frequency data (CSV, optional SVG)");
  plot->add_option("--input", o.input, "counts file");
  plot->add_option("--gamma", o.gamma, "exponent");
  plot->add_option("--t,-t", o.t, "shift");
  plot->add_option("--from-report", o.from_report, "take gamma and t from the first fit of a report");
  plot->add_option("--output", o.output, "CSV path");
  plot->add_option("--svg", o.svg, "also write an SVG rendering here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*sanitize) return cmd_sanitize(o);
    if (*count) return cmd_count(o);
    if (*spectrum) return cmd_spectrum(o);
    if (*fit) return run_fit_report("fit", o, false);
    if (*report) return run_fit_report("report", o, true);
    if (*sample) return cmd_sample(o);
    if (*plot) return cmd_plot(o);
  } catch (const zmfit::DegenerateFit& e) {
    std::cerr << "zmfit: degenerate fit: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const zmfit::RuleLoadError& e) {
    std::cerr << "zmfit: rules: " << e.what() << '\n';
    return kExitUsage;
  } catch (const zmfit::ParseError& e) {
    std::cerr << "zmfit: input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const zmfit::DomainError& e) {
    std::cerr << "zmfit: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "zmfit: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "zmfit: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
