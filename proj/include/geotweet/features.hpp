#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "geotweet/corpus.hpp"

namespace geotweet::features {

// Canonical order; block offsets follow it.
enum class FeatureKind : std::uint8_t { uloc, ulang, tz, tlang, offset, name, description, content };

inline constexpr std::size_t kNumKinds = 8;
inline constexpr std::array<FeatureKind, kNumKinds> kAllKinds = {
    FeatureKind::uloc, FeatureKind::ulang,  FeatureKind::tz,          FeatureKind::tlang,
    FeatureKind::offset, FeatureKind::name, FeatureKind::description, FeatureKind::content};

std::string_view to_string(FeatureKind kind) noexcept;
std::optional<FeatureKind> parse_kind(std::string_view name) noexcept;

// uloc, name, description and content are bags of words; the rest are
// single categorical values.
constexpr bool is_bag_of_words(FeatureKind kind) noexcept {
  return kind == FeatureKind::uloc || kind == FeatureKind::name || kind == FeatureKind::description ||
         kind == FeatureKind::content;
}

// Non-empty subset of the eight kinds.
class FeatureCombination {
 public:
  FeatureCombination() = delete;
  explicit FeatureCombination(std::uint8_t mask);
  FeatureCombination(std::initializer_list<FeatureKind> kinds);

  // "content-tz" style; any order and separator '-' or ','.
  static FeatureCombination parse(std::string_view text);

  std::uint8_t mask() const noexcept { return mask_; }
  bool has(FeatureKind kind) const noexcept { return mask_ & bit(kind); }
  std::size_t size() const noexcept;
  std::vector<FeatureKind> kinds() const;  // canonical order
  bool is_subset_of(FeatureCombination other) const noexcept { return (mask_ & ~other.mask_) == 0; }

  // Kinds joined by '-' in canonical order.
  std::string label() const;

  friend bool operator==(FeatureCombination, FeatureCombination) = default;

  static constexpr std::uint8_t bit(FeatureKind k) noexcept {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(k));
  }

 private:
  std::uint8_t mask_;
};

// All 255 non-empty subsets: by size, then lexicographic over canonical
// kind positions. The first is {uloc}.
std::vector<FeatureCombination> enumerate_combinations();
std::vector<FeatureCombination> singleton_combinations();

// Case-folded tokens. Whitespace-delimited chunks starting with http:// or
// https:// are dropped; punctuation splits, except '#' and '@' which open a
// new token and stay as its prefix.
std::vector<std::string> tokenize(std::string_view text);

// Raw value of a categorical kind ("" when absent).
std::string categorical_value(const RawTweet& tweet, FeatureKind kind);
const std::string& bag_text(const RawTweet& tweet, FeatureKind kind);

struct VocabOptions {
  // Minimum number of distinct training tweets a token must occur in,
  // indexed by FeatureKind. Categorical kinds ignore this.
  std::array<std::uint32_t, kNumKinds> min_df{1, 1, 1, 1, 1, 1, 2, 2};
  // Bag-of-words values: presence (1.0) or raw counts.
  bool binary = true;
  // Give empty fields an explicit "missing" entry instead of no feature.
  bool missing_indicator = false;

  friend bool operator==(const VocabOptions&, const VocabOptions&) = default;
};

inline constexpr std::string_view kMissingToken = "\x01missing";

class Vocabulary {
 public:
  FeatureCombination kinds() const noexcept { return kinds_; }
  const VocabOptions& options() const noexcept { return options_; }
  std::size_t total_dims() const noexcept { return total_dims_; }

  // Block of a kind in the concatenated space. Throws ContractError if the
  // kind is not part of this vocabulary.
  std::size_t block_offset(FeatureKind kind) const;
  std::size_t block_size(FeatureKind kind) const;
  // Index within the kind's block.
  std::optional<std::uint32_t> index_of(FeatureKind kind, std::string_view token) const;
  // Entries of a block, by index.
  const std::vector<std::string>& block_entries(FeatureKind kind) const;

  // Versioned text format: header lines, then `kind<TAB>token<TAB>index`.
  std::string serialize() const;
  static Vocabulary deserialize(std::string_view text);
  // FNV-1a of serialize(); binds models to vocabularies.
  std::uint64_t fingerprint() const;

 private:
  friend Vocabulary build_vocabulary(std::span<const LabeledTweet>, FeatureCombination, const VocabOptions&);
  friend Vocabulary build_vocabulary(std::span<const RawTweet>, FeatureCombination, const VocabOptions&);
  Vocabulary(FeatureCombination kinds, VocabOptions options) : kinds_(kinds), options_(options) {}
  void finalize();

  struct Block {
    std::vector<std::string> entries;  // sorted; position = index
    std::unordered_map<std::string, std::uint32_t> index;
    std::size_t offset = 0;
  };

  FeatureCombination kinds_;
  VocabOptions options_;
  std::array<Block, kNumKinds> blocks_{};
  std::size_t total_dims_ = 0;
};

// Throws Error for an empty training set.
Vocabulary build_vocabulary(std::span<const LabeledTweet> train, FeatureCombination kinds,
                            const VocabOptions& options = {});
Vocabulary build_vocabulary(std::span<const RawTweet> train, FeatureCombination kinds,
                            const VocabOptions& options = {});

struct FeatureVector {
  std::vector<std::pair<std::uint32_t, double>> entries;  // strictly increasing index
  std::size_t dims = 0;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

// Throws ContractError if kinds differ from the vocabulary's kinds.
FeatureVector featurize(const RawTweet& tweet, FeatureCombination kinds, const Vocabulary& vocab);

}  // namespace geotweet::features
