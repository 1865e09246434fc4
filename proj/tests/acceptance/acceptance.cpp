// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails. The paper-reproduction check needs
// the hydrated tweet corpora and runs only when GEOTWEET_PAPER_CONFIG names an
// experiment config for them; otherwise it reports SKIP.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "geotweet/error.hpp"
#include "geotweet/eval.hpp"
#include "geotweet/geo.hpp"
#include "geotweet/harness.hpp"
#include "geotweet/io.hpp"
#include "geotweet/model.hpp"
#include "support/synth.hpp"

using namespace geotweet;
using geotweet::testing::country_word;
using geotweet::testing::make_corpus;
using geotweet::testing::synth_codes;
using geotweet::testing::synth_table;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  bool skipped = false;
};

using Clock = std::chrono::steady_clock;

char buf[512];

template <class... Args>
std::string fmt(const char* f, Args... args) {
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::size_t worker_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("geotweet-acceptance-" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

// Term-by-term haversine in long double, written independently of the library.
long double haversine_oracle(long double lat1, long double lon1, long double lat2, long double lon2) {
  const long double rad = std::numbers::pi_v<long double> / 180.0L;
  const long double s1 = std::sin((lat2 - lat1) * rad / 2.0L);
  const long double s2 = std::sin((lon2 - lon1) * rad / 2.0L);
  const long double h = s1 * s1 + std::cos(lat1 * rad) * std::cos(lat2 * rad) * s2 * s2;
  return 2.0L * 6371.0L * std::asin(std::sqrt(std::min(1.0L, h)));
}

Outcome geodesic_oracle() {
  std::mt19937_64 rng(20140101);
  std::uniform_real_distribution<double> lat(-90, 90), lon(-180, 180);
  double worst = 0.0;
  bool symmetric = true;
  for (int i = 0; i < 10000; ++i) {
    const geo::GeoPoint a{lat(rng), lon(rng)}, b{lat(rng), lon(rng)};
    const double d = geo::haversine_km(a, b);
    const auto ref = static_cast<double>(haversine_oracle(a.lat, a.lon, b.lat, b.lon));
    if (ref > 0) worst = std::max(worst, std::abs(d - ref) / ref);
    symmetric = symmetric && std::abs(d - geo::haversine_km(b, a)) <= 1e-6;
  }
  bool identity = true;
  for (int i = 0; i < 1000; ++i) {
    const geo::GeoPoint a{lat(rng), lon(rng)};
    identity = identity && geo::haversine_km(a, a) <= 1e-6;
  }
  const double antipodal = geo::haversine_km({0, 0}, {0, 180});
  const double anti2 = geo::haversine_km({30, 40}, {-30, -140});
  const bool anti_ok = std::abs(antipodal - std::numbers::pi * 6371.0) <= 1e-6 &&
                       std::abs(anti2 - std::numbers::pi * 6371.0) <= 1e-6 && std::abs(antipodal - 20015.087) < 1e-3;
  return {worst < 1e-6 && symmetric && identity && anti_ok,
          fmt("max rel err %.3g, symmetric %d, identity %d, antipodal %.6f km", worst, symmetric, identity, antipodal)};
}

Outcome gradient_check() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0, 1);
  std::uniform_real_distribution<double> w(0.2, 3.0);
  const std::size_t K = 3, D = 5;
  double worst = 0.0;
  for (int point = 0; point < 10; ++point) {
    std::vector<model::Example> batch;
    for (int i = 0; i < 25; ++i) {
      model::Example ex;
      ex.x.dims = D;
      for (std::uint32_t j = 0; j < D; ++j) ex.x.entries.emplace_back(j, g(rng));
      ex.label = static_cast<std::uint32_t>(rng() % K);
      ex.weight = w(rng);
      batch.push_back(std::move(ex));
    }
    model::Parameters p(K, D);
    for (auto& v : p.weights) v = g(rng);
    for (auto& v : p.biases) v = g(rng);
    const double l2 = point % 2 ? 0.5 : 0.0;
    const auto analytic = model::nll_and_gradient(p, batch, l2).gradient;
    const double h = 1e-5;
    const auto probe = [&](double& coord, double exact) {
      const double saved = coord;
      coord = saved + h;
      const double up = model::nll_and_gradient(p, batch, l2).value;
      coord = saved - h;
      const double down = model::nll_and_gradient(p, batch, l2).value;
      coord = saved;
      const double numeric = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(exact - numeric) / std::max({std::abs(exact), std::abs(numeric), 1e-6}));
    };
    for (std::size_t i = 0; i < p.weights.size(); ++i) probe(p.weights[i], analytic.weights[i]);
    for (std::size_t i = 0; i < p.biases.size(); ++i) probe(p.biases[i], analytic.biases[i]);
  }
  return {worst < 1e-4, fmt("max rel err %.3g over 10 points", worst)};
}

Outcome metric_identities() {
  std::mt19937_64 rng(99);
  const auto codes = synth_codes(6);
  const std::size_t n = 1000;
  std::vector<std::vector<CountryCode>> preds(4);
  std::vector<CountryCode> truth;
  for (std::size_t i = 0; i < n; ++i) truth.push_back(codes[rng() % 6]);
  for (auto& p : preds)
    for (std::size_t i = 0; i < n; ++i) p.push_back(rng() % 3 == 0 ? truth[i] : codes[rng() % 6]);

  bool ok = true;
  double macro_err = 0.0, weighted_err = 0.0, best_micro = 0.0;
  for (const auto& p : preds) {
    const auto m = eval::confusion(p, truth, codes);
    const double micro = eval::micro_accuracy(p, truth);
    ok = ok && micro == static_cast<double>(m.trace()) / static_cast<double>(n);
    best_micro = std::max(best_micro, micro);
    double sum_recall = 0.0, weighted = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < codes.size(); ++c) {
      std::size_t n_c = 0, hit = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (truth[i] != codes[c]) continue;
        ++n_c;
        hit += p[i] == truth[i];
      }
      if (n_c == 0) continue;
      ++present;
      const double recall = static_cast<double>(hit) / static_cast<double>(n_c);
      sum_recall += recall;
      weighted += static_cast<double>(n_c) / static_cast<double>(n) * recall;
    }
    macro_err = std::max(macro_err, std::abs(eval::macro_accuracy(p, truth) - sum_recall / present));
    weighted_err = std::max(weighted_err, std::abs(micro - weighted));
  }
  const double oracle = eval::oracle_union_accuracy(preds, truth);
  ok = ok && macro_err <= 1e-12 && weighted_err <= 1e-12 && oracle >= best_micro;
  return {ok, fmt("trace identity exact, macro err %.2g, weighted err %.2g, oracle %.3f >= %.3f", macro_err,
                  weighted_err, oracle, best_micro)};
}

harness::ExperimentConfig base_config(std::size_t runs, std::uint64_t seed) {
  harness::ExperimentConfig cfg;
  cfg.split.runs = runs;
  cfg.split.seed = seed;
  cfg.train.seed = seed;
  cfg.threads = worker_threads();
  return cfg;
}

Outcome separable_end_to_end() {
  const auto codes = synth_codes(5);
  const auto corpus = make_corpus(5000, codes, {1, 1, 1, 1, 1}, 2014, [](RawTweet& t, std::size_t c, std::mt19937_64& rng) {
    t.content = country_word(c, rng() % 20) + " " + country_word(c, rng() % 20) + " " + country_word(c, rng() % 20);
    t.tz = "Zone " + std::to_string(c);
    t.offset = -10800;  // identical everywhere: no signal
  });
  auto cfg = base_config(10, 1);
  cfg.combinations = {"content-tz", "offset"};
  const auto data = harness::prepare_experiment_data(corpus, synth_table(codes), cfg.split);
  const auto result = harness::run_sweep(cfg, data);
  double min_micro = 1.0, min_macro = 1.0, max_offset_macro = 0.0;
  std::size_t counted = 0;
  for (const auto& r : result.records) {
    if (r.error) return {false, "run failed: " + *r.error};
    if (r.combination == "tz-content") {
      min_micro = std::min(min_micro, r.test.micro_accuracy);
      min_macro = std::min(min_macro, r.test.macro_accuracy);
      ++counted;
    } else {
      max_offset_macro = std::max(max_offset_macro, r.test.macro_accuracy);
    }
  }
  const bool ok = counted == 10 && min_micro >= 0.98 && min_macro >= 0.98 && max_offset_macro <= 1.0 / 5 + 0.1;
  return {ok, fmt("{content,tz} min micro %.4f, min macro %.4f over %zu runs; {offset} max macro %.4f", min_micro,
                  min_macro, counted, max_offset_macro)};
}

Outcome class_weighting_effect() {
  const auto codes = synth_codes(2);
  // Ten shared tokens; each class prefers its own half, so the classes overlap.
  const auto corpus = make_corpus(4000, codes, {19, 1}, 55, [](RawTweet& t, std::size_t c, std::mt19937_64& rng) {
    std::bernoulli_distribution own(0.7);
    for (int i = 0; i < 3; ++i) {
      const bool home = own(rng);
      const std::size_t half = home ? c : 1 - c;
      t.content += "tok" + std::to_string(half * 5 + rng() % 5) + " ";
    }
  });
  auto weighted = base_config(1, 3);
  weighted.l2_grid = {0.0};
  auto unweighted = weighted;
  unweighted.train.class_weighting = false;
  const auto data = harness::prepare_experiment_data(corpus, synth_table(codes), weighted.split);
  const features::FeatureCombination combo{features::FeatureKind::content};
  const auto a = harness::run_single(weighted, data, combo, 0);
  const auto b = harness::run_single(unweighted, data, combo, 0);
  const double ra = a.per_country.at("XB").recall, rb = b.per_country.at("XB").recall;
  const double gain = a.test.macro_accuracy - b.test.macro_accuracy;
  return {ra > rb && gain >= 0.05, fmt("minority recall %.3f vs %.3f unweighted; macro %.3f vs %.3f (gain %.3f)", ra, rb,
                                       a.test.macro_accuracy, b.test.macro_accuracy, gain)};
}

Outcome combination_beats_single() {
  const auto codes = synth_codes(4);
  // uloc, tz and ulang each name the true country 55% of the time and a
  // uniformly random country otherwise, independently.
  const auto corpus = make_corpus(3000, codes, {1, 1, 1, 1}, 77, [](RawTweet& t, std::size_t c, std::mt19937_64& rng) {
    std::bernoulli_distribution truthful(0.55);
    const auto noisy = [&] { return truthful(rng) ? c : static_cast<std::size_t>(rng() % 4); };
    t.uloc = "City" + std::to_string(noisy());
    t.tz = "Zone" + std::to_string(noisy());
    t.ulang = "lang" + std::to_string(noisy());
  });
  auto cfg = base_config(3, 11);
  cfg.combinations = {"uloc", "tz", "ulang", "uloc-tz", "uloc-ulang", "tz-ulang", "uloc-tz-ulang"};
  const auto data = harness::prepare_experiment_data(corpus, synth_table(codes), cfg.split);
  const auto result = harness::run_sweep(cfg, data);
  if (result.failures) return {false, "sweep had failures"};
  double best_single = 0.0, best_multi = 0.0;
  std::string single_name, multi_name;
  for (const auto& s : result.summaries) {
    const bool multi = s.combination.find('-') != std::string::npos;
    double& best = multi ? best_multi : best_single;
    if (s.mean_test.macro_accuracy > best) {
      best = s.mean_test.macro_accuracy;
      (multi ? multi_name : single_name) = s.combination;
    }
  }
  return {best_multi - best_single >= 0.05, fmt("best multi %s %.3f vs best single %s %.3f", multi_name.c_str(),
                                                best_multi, single_name.c_str(), best_single)};
}

Outcome sweep_integrity() {
  const auto codes = synth_codes(4);
  const auto corpus = make_corpus(500, codes, {4, 3, 2, 1}, 500, [](RawTweet& t, std::size_t c, std::mt19937_64& rng) {
    const auto maybe = [&](std::size_t other) { return rng() % 3 ? c : other; };
    t.uloc = "City" + std::to_string(maybe(rng() % 4));
    t.ulang = "l" + std::to_string(maybe(0));
    t.tz = "Zone" + std::to_string(maybe(rng() % 4));
    t.tlang = "l" + std::to_string(maybe(1));
    t.offset = static_cast<int>(3600 * maybe(2));
    t.name = "name" + std::to_string(rng() % 7);
    t.description = country_word(maybe(3), rng() % 4) + " bio";
    t.content = country_word(c, rng() % 8) + " " + country_word(rng() % 4, rng() % 8);
  });
  auto cfg = base_config(3, 42);
  cfg.l2_grid = {0.0, 0.1};
  const auto data = harness::prepare_experiment_data(corpus, synth_table(codes), cfg.split);

  const auto first = harness::run_sweep(cfg, data);
  const auto second = harness::run_sweep(cfg, data);
  const auto d1 = scratch("sweep-a"), d2 = scratch("sweep-b");
  harness::persist_sweep(cfg, first, d1);
  harness::persist_sweep(cfg, second, d2);

  bool identical = true;
  std::size_t files = 0;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(d1)) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const auto rel = std::filesystem::relative(entry.path(), d1);
    identical = identical && std::filesystem::exists(d2 / rel) && io::read_file(entry.path()) == io::read_file(d2 / rel);
  }

  // Re-scan: recompute each combination's mean test metrics from the stored
  // per-run records and re-rank them independently.
  bool rankings_ok = first.summaries.size() == 255;
  for (const auto metric : {harness::Metric::micro, harness::Metric::macro, harness::Metric::mse}) {
    std::vector<std::pair<double, std::size_t>> rescan;
    for (std::size_t s = 0; s < first.summaries.size(); ++s) {
      double sum = 0.0;
      std::size_t runs = 0;
      for (const auto& r : first.records) {
        if (r.combination != first.summaries[s].combination || r.error) continue;
        sum += metric == harness::Metric::micro   ? r.test.micro_accuracy
               : metric == harness::Metric::macro ? r.test.macro_accuracy
                                                  : -r.test.mse_km2;
        ++runs;
      }
      if (runs) rescan.emplace_back(sum / static_cast<double>(runs), s);
    }
    std::stable_sort(rescan.begin(), rescan.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    const auto& order = first.rankings.at(metric);
    rankings_ok = rankings_ok && order.size() == rescan.size();
    for (std::size_t i = 0; rankings_ok && i < order.size(); ++i) {
      // Positions may swap only between (numerically) tied means.
      rankings_ok = std::abs(rescan[i].first - [&] {
                      const auto& m = first.summaries[order[i]].mean_test;
                      return metric == harness::Metric::micro   ? m.micro_accuracy
                             : metric == harness::Metric::macro ? m.macro_accuracy
                                                                : -m.mse_km2;
                    }()) <= 1e-9 * std::max(1.0, std::abs(rescan[i].first));
    }
  }
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
  const bool ok = first.records.size() == 765 && first.failures == 0 && identical && rankings_ok;
  return {ok, fmt("%zu records, %zu failures, %zu persisted files byte-identical: %d, rankings re-scan: %d",
                  first.records.size(), first.failures, files, identical, rankings_ok)};
}

Outcome baseline_contract() {
  // Two hand-built ambiguous names: each matches a small place exactly and a
  // larger place by containment, so the modes pick different countries.
  const geo::Gazetteer gaz({
      {"Springfield", {}, "XA", 1'000},
      {"Springfield Heights", {}, "XB", 500'000},
      {"Paris", {}, "XC", 2'000'000},
      {"Greater Paris Metro", {}, "XD", 10'000'000},
      {"Alpha", {}, "XA", 50'000},
      {"Bravo", {}, "XB", 60'000},
      {"Charlie Town", {}, "XC", 70'000},
  });
  const std::vector<std::string> queries = {"Alpha", "springfield", "Bravo", "Charlie Town", "PARIS", "alpha", "bravo"};
  const std::set<std::size_t> ambiguous = {1, 4};
  std::set<std::size_t> disagree;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (gaz.lookup(queries[i], geo::LookupMode::population, "XA") !=
        gaz.lookup(queries[i], geo::LookupMode::relevance, "XA"))
      disagree.insert(i);
  }

  const auto codes = synth_codes(4);
  const auto table = synth_table(codes);
  const auto blank = [](RawTweet&, std::size_t, std::mt19937_64&) {};
  const auto train = make_corpus(400, codes, {5, 3, 1, 1}, 1, blank);
  const auto test = make_corpus(300, codes, {2, 5, 2, 1}, 2, blank);
  const auto majority = harness::majority_country(train);
  const auto r = harness::baseline_on(train, test, gaz, geo::LookupMode::relevance, table);
  const auto hits = std::count_if(test.begin(), test.end(), [&](const auto& t) { return t.country == majority; });
  const double expected = static_cast<double>(hits) / static_cast<double>(test.size());
  const bool ok = disagree == ambiguous && r.micro_accuracy == expected;
  return {ok, fmt("modes disagree on %zu/%zu queries (expected exactly the %zu ambiguous); empty-uloc micro %.6f vs "
                  "majority frequency %.6f",
                  disagree.size(), queries.size(), ambiguous.size(), r.micro_accuracy, expected)};
}

Outcome paper_reproduction() {
  const char* path = std::getenv("GEOTWEET_PAPER_CONFIG");
  if (!path || !std::filesystem::exists(path)) {
    return {false, "set GEOTWEET_PAPER_CONFIG to an experiment config over the hydrated corpora", true};
  }
  auto cfg = harness::ExperimentConfig::load(path);
  cfg.threads = std::max(cfg.threads, worker_threads());
  const auto data = harness::load_experiment_data(cfg);
  if (!data.test_era) return {false, "config must name the later-era corpus as test_corpus"};
  const auto gazetteer = geo::Gazetteer(geo::load_gazetteer(cfg.gazetteer));

  const auto baseline = harness::run_baseline(cfg, data, gazetteer, geo::LookupMode::relevance);

  cfg.combinations = {"all"};
  cfg.top_k.reset();
  const auto all = harness::run_sweep(cfg, data);
  const auto& best_micro = all.summaries[all.rankings.at(harness::Metric::micro).front()].mean_test;
  const auto& best_macro = all.summaries[all.rankings.at(harness::Metric::macro).front()].mean_test;

  auto top = cfg;
  top.top_k = 25;
  const auto top25 = harness::run_sweep(top, data);
  const auto& top_macro = top25.summaries[top25.rankings.at(harness::Metric::macro).front()].mean_test;

  std::vector<LabeledTweet> era_a = data.corpus;
  const double r = corpus::distribution_correlation(corpus::country_distribution(era_a),
                                                    corpus::country_distribution(*data.test_era));
  const bool ok = std::abs(baseline.micro_accuracy - 0.504) <= 0.05 && std::abs(best_micro.micro_accuracy - 0.889) <= 0.05 &&
                  std::abs(best_macro.macro_accuracy - 0.452) <= 0.07 &&
                  std::abs(top_macro.macro_accuracy - 0.858) <= 0.07 && std::abs(r - 0.982) <= 0.01;
  return {ok, fmt("baseline micro %.3f, best micro %.3f, best macro %.3f, top-25 macro %.3f, era correlation %.4f",
                  baseline.micro_accuracy, best_micro.micro_accuracy, best_macro.macro_accuracy,
                  top_macro.macro_accuracy, r)};
}

struct Criterion {
  int number;
  const char* name;
  double budget_s;
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "geodesic oracle", 1.0, geodesic_oracle},
      {2, "gradient check", 5.0, gradient_check},
      {3, "metric identities", 1.0, metric_identities},
      {4, "separable synthetic end-to-end", 120.0, separable_end_to_end},
      {5, "class weighting effect", 30.0, class_weighting_effect},
      {6, "combination beats single feature", 120.0, combination_beats_single},
      {7, "sweep integrity", 600.0, sweep_integrity},
      {8, "baseline contract", 1.0, baseline_contract},
      {9, "paper reproduction", 1e9, paper_reproduction},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto start = Clock::now();
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    const bool in_budget = secs <= c.budget_s;
    const char* verdict = o.skipped ? "SKIP" : (o.pass && in_budget ? "PASS" : "FAIL");
    if (!o.skipped && !(o.pass && in_budget)) ++failed;
    std::printf("%s [%d] %s: %s (%.2f s%s)\n", verdict, c.number, c.name, o.detail.c_str(), secs,
                in_budget ? "" : ", over time budget");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
