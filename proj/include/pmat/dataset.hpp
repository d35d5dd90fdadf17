#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <utility>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pmat/core.hpp"
#include "pmat/random.hpp"

namespace pmat {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& column)
      : std::runtime_error("missing required column: " + column), column_(column) {}
  const std::string& column() const { return column_; }

 private:
  std::string column_;
};

struct RatingTriple {
  std::string user_id;
  std::string item_id;
  double rating = 0.0;

  friend bool operator==(const RatingTriple&, const RatingTriple&) = default;
};

// Sparse user-item-rating records plus dense index maps. Indices are assigned
// in first-appearance order, so parsing is reproducible. Immutable once built.
struct Dataset {
  std::vector<RatingTriple> triples;
  std::unordered_map<std::string, std::uint32_t> user_index;
  std::unordered_map<std::string, std::uint32_t> item_index;
  double r_max = 0.0;
  double r_min = 0.0;
  // Rows dropped by tolerant parsers (sentinel or malformed rows).
  std::size_t skipped_rows = 0;

  std::size_t n_users() const { return user_index.size(); }
  std::size_t n_items() const { return item_index.size(); }

  std::uint32_t user_of(const std::string& external_id) const {
    auto it = user_index.find(external_id);
    if (it == user_index.end()) throw std::out_of_range("Dataset: unknown user id " + external_id);
    return it->second;
  }
  std::uint32_t item_of(const std::string& external_id) const {
    auto it = item_index.find(external_id);
    if (it == item_index.end()) throw std::out_of_range("Dataset: unknown item id " + external_id);
    return it->second;
  }
};

namespace detail {

inline std::uint32_t index_of(std::unordered_map<std::string, std::uint32_t>& index,
                              const std::string& key) {
  auto [it, inserted] = index.emplace(key, static_cast<std::uint32_t>(index.size()));
  return it->second;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

inline std::vector<std::string> split(std::string_view line, char delim) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

inline std::vector<std::string> split_double_colon(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find("::", start);
    if (pos == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, pos - start));
    start = pos + 2;
  }
  return fields;
}

inline bool parse_double(std::string_view s, double& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end && !s.empty();
}

inline bool parse_int(std::string_view s, long& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end && !s.empty();
}

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Shortest decimal string that round-trips the value.
inline std::string format_shortest(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

}  // namespace detail

// MovieLens 1M ratings.dat: UserID::MovieID::Rating::Timestamp, integer
// ratings 1..5. Timestamps are discarded. Strict: any malformed line is an
// error carrying its line number.
inline Dataset parse_movielens_1m(std::istream& in) {
  Dataset ds;
  ds.r_min = 1.0;
  ds.r_max = 5.0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    auto fields = detail::split_double_colon(line);
    if (fields.size() != 4)
      throw ParseError(line_no, "expected UserID::MovieID::Rating::Timestamp");
    if (fields[0].empty() || fields[1].empty())
      throw ParseError(line_no, "empty user or item id");
    long rating = 0;
    if (!detail::parse_int(fields[2], rating))
      throw ParseError(line_no, "rating is not an integer: '" + fields[2] + "'");
    if (rating < 1 || rating > 5)
      throw ParseError(line_no, "rating out of range [1,5]: " + std::to_string(rating));
    detail::index_of(ds.user_index, fields[0]);
    detail::index_of(ds.item_index, fields[1]);
    ds.triples.push_back({fields[0], fields[1], static_cast<double>(rating)});
  }
  if (ds.triples.empty()) throw std::runtime_error("empty dataset");
  return ds;
}

// LDOS-CoMoDa: comma-delimited with a header naming at least userID, itemID
// and rating; extra context columns are parsed past. Rows whose rating falls
// outside [1,5] (missing-value sentinels such as -1) or that do not parse are
// skipped and counted rather than failing the load.
inline Dataset parse_comoda(std::istream& in) {
  Dataset ds;
  ds.r_min = 1.0;
  ds.r_max = 5.0;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty dataset");
  detail::strip_cr(line);
  auto header = detail::split(line, ',');
  auto find_column = [&](const std::string& name) -> std::size_t {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (detail::lower(header[c]) == detail::lower(name)) return c;
    throw SchemaError(name);
  };
  std::size_t user_col = find_column("userID");
  std::size_t item_col = find_column("itemID");
  std::size_t rating_col = find_column("rating");
  std::size_t needed = std::max({user_col, item_col, rating_col}) + 1;

  while (std::getline(in, line)) {
    detail::strip_cr(line);
    if (line.empty()) continue;
    auto fields = detail::split(line, ',');
    double rating = 0.0;
    if (fields.size() < needed || fields[user_col].empty() || fields[item_col].empty() ||
        !detail::parse_double(fields[rating_col], rating) || rating < 1.0 || rating > 5.0) {
      ++ds.skipped_rows;
      continue;
    }
    detail::index_of(ds.user_index, fields[user_col]);
    detail::index_of(ds.item_index, fields[item_col]);
    ds.triples.push_back({fields[user_col], fields[item_col], rating});
  }
  if (ds.triples.empty()) throw std::runtime_error("empty dataset");
  return ds;
}

// Generic "user,item,rating" CSV. The rating bounds are inferred from the
// data, so a written dataset re-parses to the same bounds.
inline Dataset parse_generic_csv(std::istream& in) {
  Dataset ds;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty dataset");
  detail::strip_cr(line);
  if (line != "user,item,rating")
    throw SchemaError("user,item,rating header (got '" + line + "')");
  std::size_t line_no = 1;
  double max_rating = -std::numeric_limits<double>::infinity();
  double min_rating = std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++line_no;
    detail::strip_cr(line);
    if (line.empty()) continue;
    auto fields = detail::split(line, ',');
    if (fields.size() != 3) throw ParseError(line_no, "expected user,item,rating");
    if (fields[0].empty() || fields[1].empty())
      throw ParseError(line_no, "empty user or item id");
    double rating = 0.0;
    if (!detail::parse_double(fields[2], rating))
      throw ParseError(line_no, "rating is not a number: '" + fields[2] + "'");
    detail::index_of(ds.user_index, fields[0]);
    detail::index_of(ds.item_index, fields[1]);
    ds.triples.push_back({fields[0], fields[1], rating});
    max_rating = std::max(max_rating, rating);
    min_rating = std::min(min_rating, rating);
  }
  if (ds.triples.empty()) throw std::runtime_error("empty dataset");
  ds.r_max = max_rating;
  ds.r_min = min_rating;
  return ds;
}

// Inverse of parse_generic_csv for datasets whose max rating equals r_max.
inline void write_generic_csv(const Dataset& ds, std::ostream& out) {
  out << "user,item,rating\n";
  for (const auto& t : ds.triples)
    out << t.user_id << ',' << t.item_id << ',' << detail::format_shortest(t.rating) << '\n';
}

// Pre-noise rating assigned to an item of popularity rank k (1 = most
// popular): round(1 + 4/k) clipped to [1,5].
inline double synth_rating_for_rank(std::size_t rank) {
  double r = std::round(1.0 + 4.0 / static_cast<double>(rank));
  return std::clamp(r, 1.0, 5.0);
}

// Synthetic popularity-skewed dataset: every user rates ratings_per_user
// distinct items drawn from Zipf(s=1) over item ranks 1..n_items. Popular
// items receive higher ratings; 20% of ratings get +/-1 noise. Item id "i<k>"
// has true rank k.
inline Dataset synth_zipf_dataset(std::size_t n_users, std::size_t n_items,
                                  std::size_t ratings_per_user, std::uint64_t seed) {
  if (n_users == 0 || n_items == 0 || ratings_per_user == 0)
    throw std::invalid_argument("synth_zipf_dataset: counts must be positive");
  if (ratings_per_user > n_items)
    throw std::invalid_argument("synth_zipf_dataset: ratings_per_user exceeds n_items");

  Dataset ds;
  ds.r_min = 1.0;
  ds.r_max = 5.0;
  SplitMix64 rng(seed);
  ZipfSampler zipf(n_items, 1.0);
  std::vector<bool> seen(n_items + 1);
  std::vector<std::size_t> ranks;
  ranks.reserve(ratings_per_user);

  for (std::size_t u = 0; u < n_users; ++u) {
    std::string user_id = "u" + std::to_string(u + 1);
    ranks.clear();
    std::fill(seen.begin(), seen.end(), false);
    while (ranks.size() < ratings_per_user) {
      std::size_t rank = zipf.draw(rng);
      if (!seen[rank]) {
        seen[rank] = true;
        ranks.push_back(rank);
      }
    }
    for (std::size_t rank : ranks) {
      double rating = synth_rating_for_rank(rank);
      if (rng.bernoulli(0.2)) rating += rng.bernoulli(0.5) ? 1.0 : -1.0;
      rating = std::clamp(rating, 1.0, 5.0);
      std::string item_id = "i" + std::to_string(rank);
      detail::index_of(ds.user_index, user_id);
      detail::index_of(ds.item_index, item_id);
      ds.triples.push_back({user_id, item_id, rating});
    }
  }
  return ds;
}

// Seeded per-rating Bernoulli split. Both halves share the parent's index
// maps and rating bounds, so dense indices stay valid across the split.
inline std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double test_fraction,
                                                    std::uint64_t seed) {
  if (ds.triples.empty()) throw std::invalid_argument("train_test_split: empty dataset");
  if (!(test_fraction > 0.0) || !(test_fraction < 1.0))
    throw std::invalid_argument("train_test_split: test_fraction must lie in (0,1)");

  Dataset train, test;
  for (Dataset* part : {&train, &test}) {
    part->user_index = ds.user_index;
    part->item_index = ds.item_index;
    part->r_max = ds.r_max;
    part->r_min = ds.r_min;
  }
  SplitMix64 rng(seed);
  for (const auto& t : ds.triples) {
    if (rng.uniform01() < test_fraction)
      test.triples.push_back(t);
    else
      train.triples.push_back(t);
  }
  if (train.triples.empty() || test.triples.empty())
    throw std::runtime_error("degenerate split");
  return {std::move(train), std::move(test)};
}

}  // namespace pmat
