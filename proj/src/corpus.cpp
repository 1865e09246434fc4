#include "geotweet/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "geotweet/error.hpp"
#include "geotweet/io.hpp"
#include "geotweet/rng.hpp"
#include "geotweet/text.hpp"

namespace geotweet::corpus {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

std::string get_text(const json& obj, const char* key, std::size_t line_no) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) throw ParseError(line_no, std::string("field '") + key + "' is not a string");
  auto s = it->get<std::string>();
  if (!text::is_valid_utf8(s)) throw ParseError(line_no, std::string("field '") + key + "' is not valid UTF-8");
  return s;
}

// Ids arrive either as `id_str` or as a numeric/string `id`.
std::string get_id(const json& obj) {
  if (auto it = obj.find("id_str"); it != obj.end() && it->is_string()) return it->get<std::string>();
  if (auto it = obj.find("id"); it != obj.end()) {
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_unsigned()) return std::to_string(it->get<std::uint64_t>());
    if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
  }
  return {};
}

json parse_object(std::string_view line, std::size_t line_no) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(line_no, std::string("malformed record: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError(line_no, "record is not a JSON object");
  return doc;
}

RawTweet tweet_from_json(const json& doc, std::size_t line_no) {
  RawTweet t;
  t.id = get_id(doc);
  t.content = get_text(doc, "text", line_no);
  if (t.content.empty()) t.content = get_text(doc, "full_text", line_no);
  t.tlang = get_text(doc, "lang", line_no);

  if (auto it = doc.find("coordinates"); it != doc.end() && !it->is_null()) {
    const json* pair = it->is_object() && it->contains("coordinates") ? &(*it)["coordinates"] : nullptr;
    if (!pair || !pair->is_array() || pair->size() != 2 || !(*pair)[0].is_number() ||
        !(*pair)[1].is_number()) {
      throw ParseError(line_no, "coordinates.coordinates must be [longitude, latitude]");
    }
    geo::GeoPoint p{(*pair)[1].get<double>(), (*pair)[0].get<double>()};
    if (!p.valid()) throw ParseError(line_no, "coordinates out of range");
    t.coords = p;
  }

  const auto uit = doc.find("user");
  if (uit == doc.end() || !uit->is_object()) throw RejectError(line_no, "missing user object");
  const json& user = *uit;
  t.user_id = get_id(user);
  if (t.user_id.empty()) throw RejectError(line_no, "missing user.id_str");
  t.name = get_text(user, "name", line_no);
  t.description = get_text(user, "description", line_no);
  t.uloc = get_text(user, "location", line_no);
  t.ulang = get_text(user, "lang", line_no);
  t.tz = get_text(user, "time_zone", line_no);
  if (auto it = user.find("utc_offset"); it != user.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw ParseError(line_no, "user.utc_offset is not an integer");
    const auto off = it->get<std::int64_t>();
    if (off < -86400 || off > 86400) throw ParseError(line_no, "user.utc_offset out of range");
    t.offset = static_cast<int>(off);
  }
  return t;
}

json tweet_to_json(const RawTweet& t) {
  json user = json::object();
  user["id_str"] = t.user_id;
  user["name"] = t.name;
  user["description"] = t.description;
  user["location"] = t.uloc;
  user["lang"] = t.ulang;
  user["time_zone"] = t.tz.empty() ? json(nullptr) : json(t.tz);
  user["utc_offset"] = t.offset ? json(*t.offset) : json(nullptr);

  json doc = json::object();
  doc["id_str"] = t.id;
  doc["text"] = t.content;
  doc["lang"] = t.tlang;
  if (t.coords) {
    doc["coordinates"] = {{"type", "Point"}, {"coordinates", {t.coords->lon, t.coords->lat}}};
  } else {
    doc["coordinates"] = nullptr;
  }
  doc["user"] = std::move(user);
  return doc;
}

}  // namespace

RawTweet parse_tweet(std::string_view line, std::size_t line_no) {
  return tweet_from_json(parse_object(line, line_no), line_no);
}

LabeledTweet parse_labeled(std::string_view line, std::size_t line_no) {
  const json doc = parse_object(line, line_no);
  LabeledTweet out{tweet_from_json(doc, line_no), get_text(doc, "country_code", line_no)};
  if (out.country.empty()) throw ParseError(line_no, "missing country_code");
  return out;
}

std::string to_json_line(const RawTweet& tweet) { return tweet_to_json(tweet).dump(); }

std::string to_json_line(const LabeledTweet& tweet) {
  auto doc = tweet_to_json(tweet.tweet);
  doc["country_code"] = tweet.country;
  return doc.dump();
}

std::vector<RawTweet> load_tweets(const std::filesystem::path& path) {
  std::vector<RawTweet> out;
  io::for_each_line(io::read_file(path), [&](std::size_t n, std::string_view line) {
    if (!io::trim(line).empty()) out.push_back(parse_tweet(line, n));
  });
  return out;
}

std::vector<LabeledTweet> load_labeled(const std::filesystem::path& path) {
  std::vector<LabeledTweet> out;
  io::for_each_line(io::read_file(path), [&](std::size_t n, std::string_view line) {
    if (!io::trim(line).empty()) out.push_back(parse_labeled(line, n));
  });
  return out;
}

void save_labeled(const std::filesystem::path& path, std::span<const LabeledTweet> tweets) {
  std::string buf;
  for (const auto& t : tweets) {
    buf += to_json_line(t);
    buf += '\n';
  }
  io::write_file(path, buf);
}

std::vector<RawTweet> deduplicate_users(std::span<const RawTweet> tweets, std::uint64_t seed,
                                        const UserSet* exclude_users) {
  struct Pick {
    std::size_t first_seen;
    std::size_t occurrences = 0;
    std::uint64_t best_key = 0;
    std::size_t best_index = 0;
  };
  const std::uint64_t seed_mix = splitmix64(seed);
  std::unordered_map<std::string_view, Pick> picks;
  std::vector<std::string_view> order;
  for (std::size_t i = 0; i < tweets.size(); ++i) {
    const auto& uid = tweets[i].user_id;
    if (exclude_users && exclude_users->contains(uid)) continue;
    auto [it, fresh] = picks.try_emplace(uid, Pick{order.size()});
    if (fresh) order.push_back(uid);
    Pick& p = it->second;
    const std::uint64_t key = splitmix64(splitmix64(seed_mix ^ fnv1a64(uid)) + p.occurrences);
    if (p.occurrences == 0 || key < p.best_key) {
      p.best_key = key;
      p.best_index = i;
    }
    ++p.occurrences;
  }
  std::vector<RawTweet> out;
  out.reserve(order.size());
  for (auto uid : order) out.push_back(tweets[picks.at(uid).best_index]);
  return out;
}

LabelResult label_tweets(std::span<const RawTweet> tweets, const geo::CountryTable& table,
                         double fallback_km, MissingCoords policy) {
  LabelResult result;
  for (std::size_t i = 0; i < tweets.size(); ++i) {
    const auto& t = tweets[i];
    if (!t.coords) {
      if (policy == MissingCoords::abort) throw ParseError(i + 1, "tweet has no coordinates");
      result.drops.push_back({i, "no coordinates"});
      continue;
    }
    auto code = geo::reverse_geocode(*t.coords, table, fallback_km);
    if (!code) {
      result.drops.push_back({i, "coordinates resolve to no country"});
      continue;
    }
    result.labeled.push_back({t, std::move(*code)});
  }
  result.dropped = result.drops.size();
  return result;
}

void SplitConfig::validate() const {
  if (runs < 1) throw ConfigError("split runs must be >= 1");
  for (double f : {train_frac, dev_frac, test_frac}) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("split fractions must lie in [0, 1]");
  }
  if (std::abs(train_frac + dev_frac + test_frac - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
}

std::vector<DatasetSplit> make_splits(std::size_t n, const SplitConfig& config) {
  config.validate();
  if (n < 4) throw ContractError("need at least 4 items to split, got " + std::to_string(n));
  const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * config.train_frac));
  const auto n_dev = static_cast<std::size_t>(std::floor(static_cast<double>(n) * config.dev_frac));

  std::vector<DatasetSplit> out;
  out.reserve(config.runs);
  for (std::size_t run = 0; run < config.runs; ++run) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    SplitMix rng(splitmix64(config.seed) ^ splitmix64(0xa5a5a5a5ULL + run));
    fisher_yates(std::span(idx), rng);
    DatasetSplit s;
    s.train.assign(idx.begin(), idx.begin() + n_train);
    s.dev.assign(idx.begin() + n_train, idx.begin() + n_train + n_dev);
    s.test.assign(idx.begin() + n_train + n_dev, idx.end());
    out.push_back(std::move(s));
  }
  return out;
}

std::string splits_to_json(const std::vector<DatasetSplit>& splits, const SplitConfig& config) {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["config"] = {{"runs", config.runs},
                   {"train_frac", config.train_frac},
                   {"dev_frac", config.dev_frac},
                   {"test_frac", config.test_frac},
                   {"seed", config.seed}};
  json runs = json::array();
  for (const auto& s : splits) runs.push_back({{"train", s.train}, {"dev", s.dev}, {"test", s.test}});
  doc["runs"] = std::move(runs);
  return doc.dump(1);
}

std::vector<DatasetSplit> splits_from_json(std::string_view text) {
  std::vector<DatasetSplit> out;
  try {
    const json doc = json::parse(text);
    if (doc.at("format_version").get<int>() != kFormatVersion) throw LoadError("unsupported splits format version");
    for (const auto& r : doc.at("runs")) {
      out.push_back({r.at("train").get<std::vector<std::size_t>>(), r.at("dev").get<std::vector<std::size_t>>(),
                     r.at("test").get<std::vector<std::size_t>>()});
    }
  } catch (const json::exception& e) {
    throw LoadError(std::string("splits: ") + e.what());
  }
  return out;
}

CountryCounts country_distribution(std::span<const LabeledTweet> tweets) {
  CountryCounts counts;
  for (const auto& t : tweets) ++counts[t.country];
  return counts;
}

double distribution_correlation(const CountryCounts& a, const CountryCounts& b) {
  CountryCounts universe = a;
  for (const auto& [code, _] : b) universe.try_emplace(code, 0);
  const auto lookup = [](const CountryCounts& m, const std::string& code) -> double {
    const auto it = m.find(code);
    return it == m.end() ? 0.0 : static_cast<double>(it->second);
  };
  const double n = static_cast<double>(universe.size());
  double mean_a = 0, mean_b = 0;
  for (const auto& [code, _] : universe) {
    mean_a += lookup(a, code);
    mean_b += lookup(b, code);
  }
  mean_a /= n;
  mean_b /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (const auto& [code, _] : universe) {
    const double da = lookup(a, code) - mean_a;
    const double db = lookup(b, code) - mean_b;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (universe.empty() || saa == 0.0 || sbb == 0.0) {
    throw Error("correlation undefined: a distribution is constant");
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace geotweet::corpus
