#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "geotweet/geo.hpp"

namespace geotweet {

using CountryCode = std::string;

struct RawTweet {
  std::string id;  // tweet id, may be empty
  std::string user_id;
  std::string content;
  std::string description;
  std::string name;
  std::string uloc;
  std::string ulang;
  std::string tlang;
  std::string tz;
  std::optional<int> offset;  // seconds from UTC
  std::optional<geo::GeoPoint> coords;

  friend bool operator==(const RawTweet&, const RawTweet&) = default;
};

struct LabeledTweet {
  RawTweet tweet;
  CountryCode country;

  friend bool operator==(const LabeledTweet&, const LabeledTweet&) = default;
};

}  // namespace geotweet

namespace geotweet::corpus {

// One JSON-lines record in Twitter v1.1 field layout. line_no only feeds
// error messages. Throws ParseError, or RejectError when user.id_str is absent.
RawTweet parse_tweet(std::string_view line, std::size_t line_no = 0);

// Labeled variant: the same record plus a `country_code` field.
LabeledTweet parse_labeled(std::string_view line, std::size_t line_no = 0);

std::string to_json_line(const RawTweet& tweet);
std::string to_json_line(const LabeledTweet& tweet);

// Whole-file readers. Malformed lines abort with ParseError.
std::vector<RawTweet> load_tweets(const std::filesystem::path& path);
std::vector<LabeledTweet> load_labeled(const std::filesystem::path& path);
void save_labeled(const std::filesystem::path& path, std::span<const LabeledTweet> tweets);

using UserSet = std::unordered_set<std::string>;

// One tweet per user. Each (seed, user_id, occurrence) gets a hashed key and
// the occurrence with the smallest key survives, which is a uniform pick that
// does not depend on how the input was chunked. Survivors keep the order of
// their user's first appearance.
std::vector<RawTweet> deduplicate_users(std::span<const RawTweet> tweets, std::uint64_t seed,
                                        const UserSet* exclude_users = nullptr);

enum class MissingCoords { drop, abort };

struct DropRecord {
  std::size_t index;  // 0-based position in the input
  std::string reason;
};

struct LabelResult {
  std::vector<LabeledTweet> labeled;
  std::size_t dropped = 0;
  std::vector<DropRecord> drops;
};

// Throws ParseError for a tweet without coordinates when policy is abort.
LabelResult label_tweets(std::span<const RawTweet> tweets, const geo::CountryTable& table,
                         double fallback_km = geo::kDefaultFallbackKm,
                         MissingCoords policy = MissingCoords::drop);

struct SplitConfig {
  std::size_t runs = 10;
  double train_frac = 0.50;
  double dev_frac = 0.25;
  double test_frac = 0.25;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DatasetSplit {
  std::vector<std::size_t> train, dev, test;
  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

// Shuffle, then floor(n*train_frac) train, floor(n*dev_frac) dev, rest test.
// Each run shuffles independently from a stream derived from (seed, run).
std::vector<DatasetSplit> make_splits(std::size_t n, const SplitConfig& config);

std::string splits_to_json(const std::vector<DatasetSplit>& splits, const SplitConfig& config);
std::vector<DatasetSplit> splits_from_json(std::string_view json);

using CountryCounts = std::map<CountryCode, std::size_t, std::less<>>;

CountryCounts country_distribution(std::span<const LabeledTweet> tweets);

// Pearson r over the union of both key sets (missing counts are 0).
// Throws Error if either side is constant over that universe.
double distribution_correlation(const CountryCounts& a, const CountryCounts& b);

}  // namespace geotweet::corpus
