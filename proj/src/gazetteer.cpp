#include "geotweet/gazetteer.hpp"

#include <algorithm>
#include <set>

#include "geotweet/error.hpp"
#include "geotweet/geo.hpp"
#include "geotweet/io.hpp"
#include "geotweet/text.hpp"

namespace geotweet::geo {

namespace {

std::vector<std::string_view> tokens_of(std::string_view normalized) {
  std::vector<std::string_view> out;
  if (normalized.empty()) return out;
  for (auto tok : io::split(normalized, ' ')) out.push_back(tok);
  return out;
}

bool contains_run(const std::vector<std::string_view>& hay, const std::vector<std::string_view>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

struct Candidate {
  const GazetteerEntry* entry = nullptr;
  double score = 0.0;
};

// True if a should be ranked ahead of b under mode.
bool ranks_ahead(const Candidate& a, const Candidate& b, LookupMode mode) {
  const auto& ea = *a.entry;
  const auto& eb = *b.entry;
  if (mode == LookupMode::relevance) {
    if (a.score != b.score) return a.score > b.score;
    if (ea.population != eb.population) return ea.population > eb.population;
  } else {
    if (ea.population != eb.population) return ea.population > eb.population;
    if (a.score != b.score) return a.score > b.score;
  }
  return ea.canonical_name < eb.canonical_name;
}

double best_score(std::string_view query, const std::vector<std::string>& names) {
  double best = 0.0;
  for (const auto& n : names) best = std::max(best, relevance_score(query, n));
  return best;
}

std::vector<std::string> normalized_names(const GazetteerEntry& e) {
  std::vector<std::string> names;
  names.push_back(normalize_place(e.canonical_name));
  for (const auto& alt : e.alternate_names) {
    auto n = normalize_place(alt);
    if (!n.empty()) names.push_back(std::move(n));
  }
  return names;
}

}  // namespace

LookupMode parse_lookup_mode(std::string_view s) {
  if (s == "population") return LookupMode::population;
  if (s == "relevance") return LookupMode::relevance;
  throw ConfigError("unknown lookup mode '" + std::string(s) + "' (population|relevance)");
}

std::string_view to_string(LookupMode mode) noexcept {
  return mode == LookupMode::population ? "population" : "relevance";
}

std::string normalize_place(std::string_view input) {
  std::string out;
  out.reserve(input.size());
  bool pending_space = false;
  std::size_t pos = 0;
  while (pos < input.size()) {
    const char32_t cp = text::fold_case(text::decode_utf8(input, pos));
    if (text::is_space(cp) || text::is_punct(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    if (auto ascii = text::strip_diacritic(cp); !ascii.empty()) {
      out.append(ascii);
    } else {
      text::append_utf8(out, cp);
    }
  }
  return out;
}

double relevance_score(std::string_view query, std::string_view name) {
  if (query.empty() || name.empty()) return 0.0;
  if (query == name) return 3.0;
  const auto qt = tokens_of(query);
  const auto nt = tokens_of(name);
  if (contains_run(qt, nt) || contains_run(nt, qt)) return 2.0;
  const std::set<std::string_view> qs(qt.begin(), qt.end());
  const std::set<std::string_view> ns(nt.begin(), nt.end());
  std::size_t shared = 0;
  for (auto t : qs) shared += ns.count(t);
  if (shared == 0) return 0.0;
  const double jaccard = static_cast<double>(shared) / static_cast<double>(qs.size() + ns.size() - shared);
  return 0.999 * jaccard;
}

std::string gazetteer_lookup(std::string_view query, std::span<const GazetteerEntry> gaz,
                             LookupMode mode, std::string_view majority) {
  const auto q = normalize_place(query);
  if (q.empty()) return std::string(majority);
  Candidate best;
  for (const auto& e : gaz) {
    const Candidate c{&e, best_score(q, normalized_names(e))};
    if (c.score < kMinMatchScore) continue;
    if (!best.entry || ranks_ahead(c, best, mode)) best = c;
  }
  return best.entry ? best.entry->country : std::string(majority);
}

Gazetteer::Gazetteer(std::vector<GazetteerEntry> entries) : entries_(std::move(entries)) {
  names_.reserve(entries_.size());
  for (std::uint32_t id = 0; id < entries_.size(); ++id) {
    names_.push_back(normalized_names(entries_[id]));
    std::set<std::string_view> seen;
    for (const auto& n : names_.back()) {
      for (auto tok : tokens_of(n)) {
        if (seen.insert(tok).second) by_token_[std::string(tok)].push_back(id);
      }
    }
  }
}

std::string Gazetteer::lookup(std::string_view query, LookupMode mode, std::string_view majority) const {
  const auto q = normalize_place(query);
  if (q.empty()) return std::string(majority);
  std::vector<std::uint32_t> ids;
  for (auto tok : tokens_of(q)) {
    if (auto it = by_token_.find(std::string(tok)); it != by_token_.end()) {
      ids.insert(ids.end(), it->second.begin(), it->second.end());
    }
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  Candidate best;
  for (auto id : ids) {
    const Candidate c{&entries_[id], best_score(q, names_[id])};
    if (c.score < kMinMatchScore) continue;
    if (!best.entry || ranks_ahead(c, best, mode)) best = c;
  }
  return best.entry ? best.entry->country : std::string(majority);
}

std::vector<GazetteerEntry> parse_gazetteer(std::string_view tsv) {
  std::vector<GazetteerEntry> out;
  io::for_each_line(tsv, [&](std::size_t line_no, std::string_view line) {
    if (io::trim(line).empty()) return;
    const auto cols = io::split(line, '\t');
    if (cols.size() != 4) throw LoadError("gazetteer line " + std::to_string(line_no) + ": expected 4 columns");
    const auto pop = io::parse_int(cols[3]);
    if (line_no == 1 && !pop) return;  // header
    GazetteerEntry e;
    e.canonical_name = std::string(io::trim(cols[0]));
    if (e.canonical_name.empty()) {
      throw LoadError("gazetteer line " + std::to_string(line_no) + ": empty canonical name");
    }
    if (!io::trim(cols[1]).empty()) {
      for (auto alt : io::split(cols[1], ',')) {
        if (auto t = io::trim(alt); !t.empty()) e.alternate_names.emplace_back(t);
      }
    }
    e.country = std::string(io::trim(cols[2]));
    if (!is_country_code(e.country)) {
      throw LoadError("gazetteer line " + std::to_string(line_no) + ": bad country code '" + e.country + "'");
    }
    if (!pop || *pop < 0) {
      throw LoadError("gazetteer line " + std::to_string(line_no) + ": bad population");
    }
    e.population = static_cast<std::uint64_t>(*pop);
    out.push_back(std::move(e));
  });
  return out;
}

std::vector<GazetteerEntry> load_gazetteer(const std::filesystem::path& path) {
  return parse_gazetteer(io::read_file(path));
}

}  // namespace geotweet::geo
