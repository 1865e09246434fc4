#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace geotweet::geo {

struct GazetteerEntry {
  std::string canonical_name;
  std::vector<std::string> alternate_names;
  std::string country;
  std::uint64_t population = 0;
};

enum class LookupMode { population, relevance };

LookupMode parse_lookup_mode(std::string_view s);
std::string_view to_string(LookupMode mode) noexcept;

// Case-fold, fold Latin diacritics to ASCII, punctuation to space, collapse
// whitespace.
std::string normalize_place(std::string_view text);

// Resemblance of a normalized query to a normalized name:
//   3     exact match
//   2     one token sequence contained in the other
//   (0,1) token Jaccard overlap, squeezed below 1
//   0     no shared token
double relevance_score(std::string_view normalized_query, std::string_view normalized_name);

// Minimum score for an entry to count as a match at all.
inline constexpr double kMinMatchScore = 0.5;

// Reference implementation: scans every entry.
std::string gazetteer_lookup(std::string_view query, std::span<const GazetteerEntry> gaz,
                             LookupMode mode, std::string_view majority);

// Same results as gazetteer_lookup, with a token index so that lookups only
// score entries sharing at least one token with the query.
class Gazetteer {
 public:
  explicit Gazetteer(std::vector<GazetteerEntry> entries);

  std::string lookup(std::string_view query, LookupMode mode, std::string_view majority) const;
  std::span<const GazetteerEntry> entries() const noexcept { return entries_; }

 private:
  std::vector<GazetteerEntry> entries_;
  // Normalized names per entry, canonical first.
  std::vector<std::vector<std::string>> names_;
  std::unordered_map<std::string, std::vector<std::uint32_t>> by_token_;
};

// TSV: canonical_name<TAB>alternate_names (comma-sep)<TAB>iso2<TAB>population
std::vector<GazetteerEntry> parse_gazetteer(std::string_view tsv);
std::vector<GazetteerEntry> load_gazetteer(const std::filesystem::path& path);

}  // namespace geotweet::geo
