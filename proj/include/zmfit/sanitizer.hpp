#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace zmfit {

enum class RuleAction { replace, drop };

// One rewrite step. Patterns use the ECMAScript dialect of std::regex;
// replacement templates use $1..$99, $& and $$.
struct Rule {
  std::string pattern_text;
  std::regex pattern;
  RuleAction action = RuleAction::replace;
  std::string replacement;
};

// A message and the canonical form the full rule set must give it
// (nullopt: the message must be dropped).
struct RuleTestVector {
  std::string input;
  std::optional<std::string> expected;
};

class RuleLoadError : public std::runtime_error {
public:
  enum class Kind { io, parse, compile, test_mismatch, idempotence };

  RuleLoadError(Kind kind, std::optional<std::size_t> rule_index, const std::string& what)
      : std::runtime_error(what), kind_(kind), rule_index_(rule_index) {}

  Kind kind() const { return kind_; }
  // 0-based index of the offending rule, when one is to blame.
  std::optional<std::size_t> rule_index() const { return rule_index_; }

private:
  Kind kind_;
  std::optional<std::size_t> rule_index_;
};

class RuleSet {
public:
  RuleSet() = default;
  RuleSet(std::vector<Rule> rules, bool ascii_only, std::vector<RuleTestVector> tests = {},
          std::string name = {})
      : rules_(std::move(rules)), tests_(std::move(tests)), name_(std::move(name)),
        ascii_only_(ascii_only) {}

  const std::vector<Rule>& rules() const { return rules_; }
  const std::vector<RuleTestVector>& tests() const { return tests_; }
  const std::string& name() const { return name_; }
  bool ascii_only() const { return ascii_only_; }
  std::size_t size() const { return rules_.size(); }

private:
  std::vector<Rule> rules_;
  std::vector<RuleTestVector> tests_;
  std::string name_;
  bool ascii_only_ = false;
};

inline bool has_non_ascii(std::string_view s) {
  for (unsigned char c : s)
    if (c >= 0x80) return true;
  return false;
}

// Canonical message class for msg, or nullopt when the message is dropped
// (non-ASCII under ascii_only, a matching drop rule, or nothing left).
inline std::optional<std::string> sanitize_message(std::string_view msg, const RuleSet& rules) {
  if (rules.ascii_only() && has_non_ascii(msg)) return std::nullopt;
  std::string out(msg);
  for (const auto& rule : rules.rules()) {
    if (rule.action == RuleAction::drop) {
      if (std::regex_search(out, rule.pattern)) return std::nullopt;
    } else {
      out = std::regex_replace(out, rule.pattern, rule.replacement);
    }
  }
  for (char& c : out)
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  if (out.empty()) return std::nullopt;
  return out;
}

namespace detail {

// Highest capture group referenced by an ECMAScript replacement template.
inline unsigned max_group_reference(std::string_view tmpl, unsigned mark_count) {
  unsigned highest = 0;
  for (std::size_t i = 0; i + 1 < tmpl.size(); ++i) {
    if (tmpl[i] != '$') continue;
    const char c = tmpl[i + 1];
    if (c == '$') {
      ++i;
      continue;
    }
    if (c < '0' || c > '9') continue;
    unsigned n = static_cast<unsigned>(c - '0');
    if (i + 2 < tmpl.size() && tmpl[i + 2] >= '0' && tmpl[i + 2] <= '9') {
      const unsigned two = n * 10 + static_cast<unsigned>(tmpl[i + 2] - '0');
      if (two <= mark_count) n = two;
    }
    highest = std::max(highest, n);
  }
  return highest;
}

inline std::regex compile_pattern(const std::string& text, std::optional<std::size_t> index,
                                  const char* what) {
  try {
    return std::regex(text, std::regex::ECMAScript);
  } catch (const std::regex_error& e) {
    std::string where = index ? "rule " + std::to_string(*index) : std::string(what);
    throw RuleLoadError(RuleLoadError::Kind::compile, index,
                        where + ": bad pattern '" + text + "': " + e.what());
  }
}

inline void read_test_vectors(const nlohmann::json& arr, std::optional<std::size_t> index,
                              std::vector<RuleTestVector>& out) {
  auto fail = [&](const std::string& msg) {
    std::string where = index ? "rule " + std::to_string(*index) : "tests";
    throw RuleLoadError(RuleLoadError::Kind::parse, index, where + ": " + msg);
  };
  if (!arr.is_array()) fail("'tests' must be an array");
  for (const auto& tv : arr) {
    if (!tv.is_object() || !tv.contains("in") || !tv["in"].is_string())
      fail("test vector needs a string 'in'");
    RuleTestVector v{tv["in"].get<std::string>(), std::nullopt};
    if (!tv.contains("out")) fail("test vector needs 'out' (string or null)");
    if (tv["out"].is_string())
      v.expected = tv["out"].get<std::string>();
    else if (!tv["out"].is_null())
      fail("test vector 'out' must be a string or null");
    out.push_back(std::move(v));
  }
}

inline std::string quote(std::string_view s) { return nlohmann::json(std::string(s)).dump(); }

} // namespace detail

// Runs every embedded test vector: the rule set must map 'in' to 'out', and
// the result must be a fixed point of the rule set.
inline void verify_ruleset(const RuleSet& rules) {
  for (const auto& tv : rules.tests()) {
    const auto got = sanitize_message(tv.input, rules);
    if (got != tv.expected)
      throw RuleLoadError(RuleLoadError::Kind::test_mismatch, std::nullopt,
                          "test vector " + detail::quote(tv.input) + ": expected " +
                              (tv.expected ? detail::quote(*tv.expected) : "null") + ", got " +
                              (got ? detail::quote(*got) : "null"));
    if (got) {
      const auto again = sanitize_message(*got, rules);
      if (again != got)
        throw RuleLoadError(RuleLoadError::Kind::idempotence, std::nullopt,
                            "idempotence violation: test vector " + detail::quote(tv.input) +
                                " sanitizes to " + detail::quote(*got) + " but that maps to " +
                                (again ? detail::quote(*again) : "null"));
    }
  }
}

// Rule document:
//   { "name": "...", "ascii_only": true,
//     "rules": [ { "pattern": "...", "action": "replace"|"drop",
//                  "replacement": "...", "tests": [ {"in": "...", "out": "..."|null} ] } ],
//     "tests": [ ... ] }
// A bare array of rule objects is also accepted (ascii_only = false).
inline RuleSet parse_ruleset(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw RuleLoadError(RuleLoadError::Kind::parse, std::nullopt,
                        std::string("rule file is not valid JSON: ") + e.what());
  }

  bool ascii_only = false;
  std::string name;
  std::vector<RuleTestVector> tests;
  const nlohmann::json* rule_array = &doc;
  if (doc.is_object()) {
    if (doc.contains("ascii_only")) {
      if (!doc["ascii_only"].is_boolean())
        throw RuleLoadError(RuleLoadError::Kind::parse, std::nullopt, "'ascii_only' must be a boolean");
      ascii_only = doc["ascii_only"].get<bool>();
    }
    if (doc.contains("name") && doc["name"].is_string()) name = doc["name"].get<std::string>();
    if (!doc.contains("rules"))
      throw RuleLoadError(RuleLoadError::Kind::parse, std::nullopt, "missing 'rules' array");
    rule_array = &doc["rules"];
    if (doc.contains("tests")) detail::read_test_vectors(doc["tests"], std::nullopt, tests);
  }
  if (!rule_array->is_array())
    throw RuleLoadError(RuleLoadError::Kind::parse, std::nullopt, "'rules' must be an array");

  std::vector<Rule> rules;
  for (std::size_t i = 0; i < rule_array->size(); ++i) {
    const auto& obj = (*rule_array)[i];
    auto fail = [&](const std::string& msg) {
      throw RuleLoadError(RuleLoadError::Kind::parse, i, "rule " + std::to_string(i) + ": " + msg);
    };
    if (!obj.is_object()) fail("must be an object");
    if (!obj.contains("pattern") || !obj["pattern"].is_string()) fail("needs a string 'pattern'");

    Rule rule;
    rule.pattern_text = obj["pattern"].get<std::string>();
    const std::string action = obj.value("action", std::string("replace"));
    if (action == "drop") {
      rule.action = RuleAction::drop;
    } else if (action == "replace") {
      rule.action = RuleAction::replace;
      if (!obj.contains("replacement") || !obj["replacement"].is_string())
        fail("replace rule needs a string 'replacement'");
      rule.replacement = obj["replacement"].get<std::string>();
    } else {
      fail("unknown action '" + action + "'");
    }
    rule.pattern = detail::compile_pattern(rule.pattern_text, i, "rule");
    if (rule.action == RuleAction::replace) {
      const auto groups = static_cast<unsigned>(rule.pattern.mark_count());
      const auto used = detail::max_group_reference(rule.replacement, groups);
      if (used > groups)
        throw RuleLoadError(RuleLoadError::Kind::compile, i,
                            "rule " + std::to_string(i) + ": replacement references group $" +
                                std::to_string(used) + " but pattern '" + rule.pattern_text +
                                "' has " + std::to_string(groups));
    }
    if (obj.contains("tests")) detail::read_test_vectors(obj["tests"], i, tests);
    rules.push_back(std::move(rule));
  }

  RuleSet set(std::move(rules), ascii_only, std::move(tests), std::move(name));
  verify_ruleset(set);
  return set;
}

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuleLoadError(RuleLoadError::Kind::io, std::nullopt, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace detail

inline RuleSet load_ruleset(const std::string& path) { return parse_ruleset(detail::read_file(path)); }

// Locates the first error message in multi-line tool output.
struct LanguageProfile {
  std::string name;
  std::string matcher_text;
  std::regex error_line_matcher;
};

inline LanguageProfile make_profile(std::string name, const std::string& matcher) {
  return {std::move(name), matcher, detail::compile_pattern(matcher, std::nullopt, "error_line_matcher")};
}

// Profile document: { "name": "...", "error_line_matcher": "..." }
inline LanguageProfile parse_profile(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw RuleLoadError(RuleLoadError::Kind::parse, std::nullopt,
                        std::string("profile is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("name") || !doc["name"].is_string() ||
      !doc.contains("error_line_matcher") || !doc["error_line_matcher"].is_string())
    throw RuleLoadError(RuleLoadError::Kind::parse, std::nullopt,
                        "profile needs string fields 'name' and 'error_line_matcher'");
  return make_profile(doc["name"].get<std::string>(), doc["error_line_matcher"].get<std::string>());
}

inline LanguageProfile load_profile(const std::string& path) { return parse_profile(detail::read_file(path)); }

// First line of raw_output matched by the profile. When the matcher has
// capture groups, the first group that participated is returned instead of
// the whole line.
inline std::optional<std::string> first_error(std::string_view raw_output, const LanguageProfile& profile) {
  std::size_t pos = 0;
  while (pos <= raw_output.size()) {
    auto nl = raw_output.find('\n', pos);
    if (nl == std::string_view::npos) nl = raw_output.size();
    std::string line(raw_output.substr(pos, nl - pos));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (std::regex_search(line, m, profile.error_line_matcher)) {
      for (std::size_t g = 1; g < m.size(); ++g)
        if (m[g].matched) return m[g].str();
      return line;
    }
    if (nl == raw_output.size()) break;
    pos = nl + 1;
  }
  return std::nullopt;
}

} // namespace zmfit
