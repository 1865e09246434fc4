#include "geotweet/features.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <set>

#include "geotweet/error.hpp"
#include "geotweet/io.hpp"
#include "geotweet/rng.hpp"
#include "geotweet/text.hpp"

namespace geotweet::features {

namespace {

constexpr std::string_view kVocabMagic = "geotweet-vocab";
constexpr int kVocabVersion = 1;

std::size_t kind_index(FeatureKind k) noexcept { return static_cast<std::size_t>(k); }

bool starts_with_url(std::string_view chunk) {
  const auto ci_prefix = [&](std::string_view p) {
    if (chunk.size() < p.size()) return false;
    for (std::size_t i = 0; i < p.size(); ++i) {
      char c = chunk[i];
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 0x20);
      if (c != p[i]) return false;
    }
    return true;
  };
  return ci_prefix("http://") || ci_prefix("https://");
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string unescape(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out.push_back(s[i]);
      continue;
    }
    switch (s[++i]) {
      case 't': out.push_back('\t'); break;
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      default: out.push_back(s[i]);
    }
  }
  return out;
}

// Distinct keys a tweet contributes to one block, before vocabulary filtering.
std::vector<std::string> raw_keys(const RawTweet& t, FeatureKind kind, const VocabOptions& opt) {
  std::vector<std::string> keys;
  if (is_bag_of_words(kind)) {
    keys = tokenize(bag_text(t, kind));
  } else if (auto v = categorical_value(t, kind); !v.empty()) {
    keys.push_back(std::move(v));
  }
  if (keys.empty() && opt.missing_indicator) keys.emplace_back(kMissingToken);
  return keys;
}

}  // namespace

std::string_view to_string(FeatureKind kind) noexcept {
  static constexpr std::array<std::string_view, kNumKinds> kNames = {
      "uloc", "ulang", "tz", "tlang", "offset", "name", "description", "content"};
  return kNames[kind_index(kind)];
}

std::optional<FeatureKind> parse_kind(std::string_view name) noexcept {
  for (auto k : kAllKinds) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

FeatureCombination::FeatureCombination(std::uint8_t mask) : mask_(mask) {
  if (mask == 0) throw ContractError("feature combination must be non-empty");
}

FeatureCombination::FeatureCombination(std::initializer_list<FeatureKind> kinds) : mask_(0) {
  for (auto k : kinds) mask_ |= bit(k);
  if (mask_ == 0) throw ContractError("feature combination must be non-empty");
}

FeatureCombination FeatureCombination::parse(std::string_view text) {
  std::uint8_t mask = 0;
  std::string norm(text);
  std::replace(norm.begin(), norm.end(), ',', '-');
  for (auto part : io::split(norm, '-')) {
    part = io::trim(part);
    if (part.empty()) continue;
    const auto k = parse_kind(part);
    if (!k) throw ConfigError("unknown feature '" + std::string(part) + "'");
    mask |= bit(*k);
  }
  if (mask == 0) throw ConfigError("empty feature combination '" + std::string(text) + "'");
  return FeatureCombination(mask);
}

std::size_t FeatureCombination::size() const noexcept { return static_cast<std::size_t>(std::popcount(mask_)); }

std::vector<FeatureKind> FeatureCombination::kinds() const {
  std::vector<FeatureKind> out;
  for (auto k : kAllKinds) {
    if (has(k)) out.push_back(k);
  }
  return out;
}

std::string FeatureCombination::label() const {
  std::string out;
  for (auto k : kinds()) {
    if (!out.empty()) out.push_back('-');
    out.append(to_string(k));
  }
  return out;
}

std::vector<FeatureCombination> enumerate_combinations() {
  std::vector<std::uint8_t> masks;
  for (unsigned m = 1; m < 256; ++m) masks.push_back(static_cast<std::uint8_t>(m));
  // Lexicographic order on the sorted position tuple == descending order of
  // the bit-reversed mask, within a size class.
  const auto positions = [](std::uint8_t m) {
    std::vector<int> p;
    for (int i = 0; i < 8; ++i) {
      if (m & (1u << i)) p.push_back(i);
    }
    return p;
  };
  std::stable_sort(masks.begin(), masks.end(), [&](std::uint8_t a, std::uint8_t b) {
    const int pa = std::popcount(a), pb = std::popcount(b);
    if (pa != pb) return pa < pb;
    return positions(a) < positions(b);
  });
  std::vector<FeatureCombination> out;
  out.reserve(masks.size());
  for (auto m : masks) out.emplace_back(m);
  return out;
}

std::vector<FeatureCombination> singleton_combinations() {
  std::vector<FeatureCombination> out;
  for (auto k : kAllKinds) out.push_back(FeatureCombination{k});
  return out;
}

std::vector<std::string> tokenize(std::string_view input) {
  std::vector<std::string> tokens;
  std::string current;
  const auto flush = [&] {
    if (!current.empty() && current != "#" && current != "@") tokens.push_back(current);
    current.clear();
  };

  std::size_t pos = 0;
  while (pos < input.size()) {
    // Skip whitespace to the next chunk.
    std::size_t probe = pos;
    if (text::is_space(text::decode_utf8(input, probe))) {
      pos = probe;
      continue;
    }
    std::size_t end = pos;
    while (end < input.size()) {
      std::size_t next = end;
      if (text::is_space(text::decode_utf8(input, next))) break;
      end = next;
    }
    const std::string_view chunk = input.substr(pos, end - pos);
    pos = end;
    if (starts_with_url(chunk)) continue;

    std::size_t cpos = 0;
    while (cpos < chunk.size()) {
      const char32_t cp = text::fold_case(text::decode_utf8(chunk, cpos));
      if (cp == '#' || cp == '@') {
        flush();
        current.push_back(static_cast<char>(cp));
      } else if (text::is_punct(cp)) {
        flush();
      } else {
        text::append_utf8(current, cp);
      }
    }
    flush();
  }
  return tokens;
}

std::string categorical_value(const RawTweet& t, FeatureKind kind) {
  switch (kind) {
    case FeatureKind::ulang: return t.ulang;
    case FeatureKind::tz: return t.tz;
    case FeatureKind::tlang: return t.tlang;
    case FeatureKind::offset: return t.offset ? std::to_string(*t.offset) : std::string{};
    default: throw ContractError(std::string(to_string(kind)) + " is not categorical");
  }
}

const std::string& bag_text(const RawTweet& t, FeatureKind kind) {
  switch (kind) {
    case FeatureKind::uloc: return t.uloc;
    case FeatureKind::name: return t.name;
    case FeatureKind::description: return t.description;
    case FeatureKind::content: return t.content;
    default: throw ContractError(std::string(to_string(kind)) + " is not a bag of words");
  }
}

std::size_t Vocabulary::block_offset(FeatureKind kind) const {
  if (!kinds_.has(kind)) throw ContractError(std::string(to_string(kind)) + " is not in this vocabulary");
  return blocks_[kind_index(kind)].offset;
}

std::size_t Vocabulary::block_size(FeatureKind kind) const {
  if (!kinds_.has(kind)) throw ContractError(std::string(to_string(kind)) + " is not in this vocabulary");
  return blocks_[kind_index(kind)].entries.size();
}

const std::vector<std::string>& Vocabulary::block_entries(FeatureKind kind) const {
  if (!kinds_.has(kind)) throw ContractError(std::string(to_string(kind)) + " is not in this vocabulary");
  return blocks_[kind_index(kind)].entries;
}

std::optional<std::uint32_t> Vocabulary::index_of(FeatureKind kind, std::string_view token) const {
  if (!kinds_.has(kind)) return std::nullopt;
  const auto& idx = blocks_[kind_index(kind)].index;
  const auto it = idx.find(std::string(token));
  if (it == idx.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::finalize() {
  total_dims_ = 0;
  for (auto k : kinds_.kinds()) {
    Block& b = blocks_[kind_index(k)];
    b.index.clear();
    for (std::uint32_t i = 0; i < b.entries.size(); ++i) b.index.emplace(b.entries[i], i);
    b.offset = total_dims_;
    total_dims_ += b.entries.size();
  }
}

Vocabulary build_vocabulary(std::span<const RawTweet> train, FeatureCombination kinds, const VocabOptions& opt) {
  if (train.empty()) throw Error("cannot build a vocabulary from an empty training set");
  Vocabulary vocab(kinds, opt);
  for (auto k : kinds.kinds()) {
    std::map<std::string, std::uint32_t> df;
    for (const auto& t : train) {
      auto keys = raw_keys(t, k, opt);
      std::sort(keys.begin(), keys.end());
      keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
      for (auto& key : keys) ++df[std::move(key)];
    }
    const std::uint32_t min_df = is_bag_of_words(k) ? std::max<std::uint32_t>(1, opt.min_df[kind_index(k)]) : 1;
    auto& entries = vocab.blocks_[kind_index(k)].entries;
    for (auto& [key, count] : df) {
      if (count >= min_df) entries.push_back(key);
    }
  }
  vocab.finalize();
  return vocab;
}

Vocabulary build_vocabulary(std::span<const LabeledTweet> train, FeatureCombination kinds, const VocabOptions& opt) {
  std::vector<RawTweet> raw;
  raw.reserve(train.size());
  for (const auto& t : train) raw.push_back(t.tweet);
  return build_vocabulary(std::span<const RawTweet>(raw), kinds, opt);
}

std::string Vocabulary::serialize() const {
  std::string out;
  out += std::string(kVocabMagic) + "\t" + std::to_string(kVocabVersion) + "\n";
  out += "kinds\t" + kinds_.label() + "\n";
  out += "min_df\t";
  for (std::size_t i = 0; i < kNumKinds; ++i) {
    if (i) out += ',';
    out += std::to_string(options_.min_df[i]);
  }
  out += "\n";
  out += std::string("binary\t") + (options_.binary ? "1" : "0") + "\n";
  out += std::string("missing_indicator\t") + (options_.missing_indicator ? "1" : "0") + "\n";
  out += "total_dims\t" + std::to_string(total_dims_) + "\n";
  for (auto k : kinds_.kinds()) {
    const auto& entries = blocks_[kind_index(k)].entries;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      out += std::string(to_string(k)) + "\t" + escape(entries[i]) + "\t" + std::to_string(i) + "\n";
    }
  }
  return out;
}

Vocabulary Vocabulary::deserialize(std::string_view text) {
  std::optional<FeatureCombination> kinds;
  VocabOptions opt;
  std::optional<std::size_t> total;
  std::array<std::vector<std::string>, kNumKinds> entries;
  bool header_seen = false;

  io::for_each_line(text, [&](std::size_t n, std::string_view line) {
    if (line.empty()) return;
    const auto fail = [n](const std::string& why) { return LoadError("vocabulary line " + std::to_string(n) + ": " + why); };
    const auto cols = io::split(line, '\t');
    if (!header_seen) {
      if (cols.size() != 2 || cols[0] != kVocabMagic) throw fail("not a vocabulary file");
      if (io::parse_int(cols[1]) != kVocabVersion) throw fail("unsupported version");
      header_seen = true;
      return;
    }
    if (cols.size() == 2) {
      if (cols[0] == "kinds") {
        kinds = FeatureCombination::parse(cols[1]);
      } else if (cols[0] == "min_df") {
        const auto parts = io::split(cols[1], ',');
        if (parts.size() != kNumKinds) throw fail("min_df needs 8 values");
        for (std::size_t i = 0; i < kNumKinds; ++i) {
          const auto v = io::parse_int(parts[i]);
          if (!v || *v < 0) throw fail("bad min_df");
          opt.min_df[i] = static_cast<std::uint32_t>(*v);
        }
      } else if (cols[0] == "binary") {
        opt.binary = cols[1] == "1";
      } else if (cols[0] == "missing_indicator") {
        opt.missing_indicator = cols[1] == "1";
      } else if (cols[0] == "total_dims") {
        const auto v = io::parse_int(cols[1]);
        if (!v || *v < 0) throw fail("bad total_dims");
        total = static_cast<std::size_t>(*v);
      } else {
        throw fail("unknown header '" + std::string(cols[0]) + "'");
      }
      return;
    }
    if (cols.size() != 3) throw fail("expected kind<TAB>token<TAB>index");
    const auto k = parse_kind(cols[0]);
    if (!k) throw fail("unknown kind");
    const auto idx = io::parse_int(cols[2]);
    auto& block = entries[kind_index(*k)];
    if (!idx || static_cast<std::size_t>(*idx) != block.size()) throw fail("indices must be dense and ordered");
    block.push_back(unescape(cols[1]));
  });

  if (!header_seen || !kinds || !total) throw LoadError("vocabulary: incomplete header");
  Vocabulary vocab(*kinds, opt);
  for (auto k : kAllKinds) {
    if (!kinds->has(k) && !entries[kind_index(k)].empty()) {
      throw LoadError("vocabulary: entries for kind outside the header's kinds");
    }
    vocab.blocks_[kind_index(k)].entries = std::move(entries[kind_index(k)]);
  }
  vocab.finalize();
  if (vocab.total_dims_ != *total) throw LoadError("vocabulary: total_dims does not match entries");
  return vocab;
}

std::uint64_t Vocabulary::fingerprint() const { return fnv1a64(serialize()); }

FeatureVector featurize(const RawTweet& tweet, FeatureCombination kinds, const Vocabulary& vocab) {
  if (kinds != vocab.kinds()) {
    throw ContractError("featurize: combination " + kinds.label() + " does not match vocabulary " +
                        vocab.kinds().label());
  }
  FeatureVector v;
  v.dims = vocab.total_dims();
  for (auto k : kinds.kinds()) {
    const std::size_t offset = vocab.block_offset(k);
    std::map<std::uint32_t, double> hits;
    for (const auto& key : raw_keys(tweet, k, vocab.options())) {
      if (auto idx = vocab.index_of(k, key)) {
        hits[static_cast<std::uint32_t>(offset + *idx)] += 1.0;
      }
    }
    for (auto [idx, count] : hits) {
      v.entries.emplace_back(idx, vocab.options().binary ? 1.0 : count);
    }
  }
  return v;
}

}  // namespace geotweet::features
