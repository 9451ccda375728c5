#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "zmfit/error.hpp"

namespace zmfit {

// One canonical message class and how often it occurred.
struct MessageCount {
  std::string text;
  std::uint64_t count = 0;

  friend bool operator==(const MessageCount&, const MessageCount&) = default;
};

// Rank-frequency vector F_1 >= F_2 >= ... >= F_M with its totals.
//
// Construction validates the invariants; a FrequencyTable is immutable
// afterwards, so every table in circulation satisfies them.
class FrequencyTable {
public:
  explicit FrequencyTable(std::vector<std::uint64_t> freqs) : freqs_(std::move(freqs)) {
    if (freqs_.empty()) throw std::invalid_argument("FrequencyTable: empty frequency vector");
    for (std::size_t i = 0; i < freqs_.size(); ++i) {
      if (freqs_[i] == 0) throw std::invalid_argument("FrequencyTable: frequencies must be >= 1");
      if (i > 0 && freqs_[i] > freqs_[i - 1])
        throw std::invalid_argument("FrequencyTable: frequencies must be non-increasing");
      n_total_ += freqs_[i];
    }
  }

  // Sorts an arbitrary multiset of positive counts into rank order.
  static FrequencyTable from_unsorted(std::vector<std::uint64_t> freqs) {
    std::sort(freqs.begin(), freqs.end(), std::greater<>());
    return FrequencyTable(std::move(freqs));
  }

  std::span<const std::uint64_t> freqs() const { return freqs_; }
  // 1-based rank accessor.
  std::uint64_t at_rank(std::size_t k) const { return freqs_.at(k - 1); }
  std::uint64_t n_total() const { return n_total_; }
  std::uint64_t m_distinct() const { return freqs_.size(); }
  std::uint64_t f_max() const { return freqs_.front(); }

  friend bool operator==(const FrequencyTable&, const FrequencyTable&) = default;

private:
  std::vector<std::uint64_t> freqs_;
  std::uint64_t n_total_ = 0;
};

// Frequency spectrum: f -> number of message classes seen exactly f times.
class LegomenaSpectrum {
public:
  using Bins = std::map<std::uint64_t, std::uint64_t>;

  LegomenaSpectrum() = default;
  explicit LegomenaSpectrum(Bins bins) : bins_(std::move(bins)) {}

  std::uint64_t count(std::uint64_t f) const {
    auto it = bins_.find(f);
    return it == bins_.end() ? 0 : it->second;
  }
  const Bins& bins() const { return bins_; }
  auto begin() const { return bins_.begin(); }
  auto end() const { return bins_.end(); }

  friend bool operator==(const LegomenaSpectrum&, const LegomenaSpectrum&) = default;

private:
  Bins bins_;
};

namespace detail {

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

// Accumulates counts keyed by message, remembering first-seen order.
class CountMerger {
public:
  void add(std::string text, std::uint64_t count) {
    auto [it, inserted] = index_.try_emplace(text, records_.size());
    if (inserted)
      records_.push_back({std::move(text), count});
    else
      records_[it->second].count += count;
  }

  std::vector<MessageCount> take() && { return std::move(records_); }

private:
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<MessageCount> records_;
};

} // namespace detail

// Reads "count<TAB>message" records. Lines starting with '#' and empty lines
// are skipped. Duplicate messages are merged; output keeps first-seen order.
inline std::vector<MessageCount> ingest_counts(std::istream& in) {
  detail::CountMerger merger;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty() || line.front() == '#') continue;

    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("expected count<TAB>message", line_no);
    const std::string_view digits(line.data(), tab);
    std::uint64_t count = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), count);
    if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size())
      throw ParseError("malformed count '" + std::string(digits) + "'", line_no);
    if (count == 0) throw ParseError("count must be positive", line_no);
    std::string text = line.substr(tab + 1);
    if (text.empty()) throw ParseError("empty message", line_no);
    if (text.find('\t') != std::string::npos) throw ParseError("message contains a tab", line_no);
    merger.add(std::move(text), count);
  }
  return std::move(merger).take();
}

// Counts identical raw lines; blank lines are skipped.
inline std::vector<MessageCount> ingest_lines(std::istream& in) {
  detail::CountMerger merger;
  std::string line;
  while (std::getline(in, line)) {
    detail::strip_cr(line);
    if (line.empty()) continue;
    merger.add(std::move(line), 1);
  }
  return std::move(merger).take();
}

// Merges duplicates and orders by count descending, then message ascending.
inline std::vector<MessageCount> rank_messages(std::span<const MessageCount> counts) {
  detail::CountMerger merger;
  for (const auto& mc : counts) merger.add(mc.text, mc.count);
  auto ranked = std::move(merger).take();
  std::sort(ranked.begin(), ranked.end(), [](const MessageCount& a, const MessageCount& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.text < b.text;
  });
  return ranked;
}

inline FrequencyTable rank_frequencies(std::span<const MessageCount> counts) {
  if (counts.empty()) throw std::invalid_argument("rank_frequencies: no messages");
  const auto ranked = rank_messages(counts);
  std::vector<std::uint64_t> freqs;
  freqs.reserve(ranked.size());
  for (const auto& mc : ranked) freqs.push_back(mc.count);
  return FrequencyTable(std::move(freqs));
}

inline LegomenaSpectrum legomena(const FrequencyTable& table) {
  LegomenaSpectrum::Bins bins;
  for (auto f : table.freqs()) ++bins[f];
  return LegomenaSpectrum(std::move(bins));
}

// Removes the j highest-ranked frequencies (ties are removed one at a time).
inline FrequencyTable drop_top(const FrequencyTable& table, std::uint64_t j) {
  if (j >= table.m_distinct())
    throw std::invalid_argument("drop_top: cannot remove " + std::to_string(j) + " of " +
                                std::to_string(table.m_distinct()) + " messages");
  auto rest = table.freqs().subspan(j);
  return FrequencyTable(std::vector<std::uint64_t>(rest.begin(), rest.end()));
}

// Shannon entropy of the empirical distribution, in bits.
inline double entropy(const FrequencyTable& table) {
  const double n = static_cast<double>(table.n_total());
  double h = 0.0;
  for (auto f : table.freqs()) {
    const double p = static_cast<double>(f) / n;
    h -= p * std::log2(p);
  }
  return h == 0.0 ? 0.0 : h;
}

// Writes records as "count<TAB>message" lines in the given order.
inline void write_counts(std::ostream& out, std::span<const MessageCount> records) {
  for (const auto& mc : records) out << mc.count << '\t' << mc.text << '\n';
}

} // namespace zmfit
