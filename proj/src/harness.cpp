#include "geotweet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "geotweet/error.hpp"
#include "geotweet/io.hpp"

namespace geotweet::harness {

namespace {

using nlohmann::json;
using features::FeatureCombination;

std::vector<CountryCode> countries_of(std::span<const LabeledTweet> tweets) {
  std::vector<CountryCode> out;
  out.reserve(tweets.size());
  for (const auto& t : tweets) out.push_back(t.country);
  return out;
}

std::vector<LabeledTweet> pick(std::span<const LabeledTweet> corpus, const std::vector<std::size_t>& idx) {
  std::vector<LabeledTweet> out;
  out.reserve(idx.size());
  for (auto i : idx) {
    if (i >= corpus.size()) throw ContractError("split index out of range");
    out.push_back(corpus[i]);
  }
  return out;
}

std::vector<CountryCode> predict_all(const model::MaxEntModel& m, const features::Vocabulary& vocab,
                                     std::span<const LabeledTweet> tweets) {
  std::vector<CountryCode> out;
  out.reserve(tweets.size());
  for (const auto& t : tweets) out.push_back(model::predict(m, features::featurize(t.tweet, vocab.kinds(), vocab)).label);
  return out;
}

json report_json(const eval::EvalReport& r) {
  return {{"micro_accuracy", r.micro_accuracy},
          {"macro_accuracy", r.macro_accuracy},
          {"macro_accuracy_with_other", r.macro_accuracy_with_other},
          {"mse_km2", r.mse_km2},
          {"n", r.n}};
}

std::string path_string(const std::filesystem::path& p) { return p.generic_string(); }

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

// Best-effort id for an error line: the record's id if the line is at least
// a JSON object carrying one, otherwise the line number.
std::string error_key(std::string_view line, std::size_t line_no) {
  const auto doc = nlohmann::json::parse(line, nullptr, false);
  if (doc.is_object()) {
    for (const char* key : {"id_str", "id"}) {
      const auto it = doc.find(key);
      if (it == doc.end()) continue;
      if (it->is_string() && !it->get<std::string>().empty()) return sanitize(it->get<std::string>());
      if (it->is_number_unsigned()) return std::to_string(it->get<std::uint64_t>());
    }
  }
  return std::to_string(line_no);
}

}  // namespace

Metric parse_metric(std::string_view s) {
  if (s == "micro") return Metric::micro;
  if (s == "macro") return Metric::macro;
  if (s == "mse") return Metric::mse;
  throw ConfigError("unknown metric '" + std::string(s) + "' (micro|macro|mse)");
}

std::string_view to_string(Metric m) noexcept {
  switch (m) {
    case Metric::micro: return "micro";
    case Metric::macro: return "macro";
    case Metric::mse: return "mse";
  }
  return "?";
}

bool better(const eval::EvalReport& a, const eval::EvalReport& b, Metric m) noexcept {
  switch (m) {
    case Metric::micro: return a.micro_accuracy > b.micro_accuracy;
    case Metric::macro: return a.macro_accuracy > b.macro_accuracy;
    case Metric::mse: return a.mse_km2 < b.mse_km2;
  }
  return false;
}

void ExperimentConfig::validate() const {
  split.validate();
  train.validate();
  if (l2_grid.empty()) throw ConfigError("l2_grid must not be empty");
  for (double l : l2_grid) {
    if (!(l >= 0.0)) throw ConfigError("l2_grid values must be >= 0");
  }
  if (top_k && *top_k < 2) throw ConfigError("top_k must be >= 2");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (resolved_combinations().empty()) throw ConfigError("no feature combinations selected");
}

std::vector<FeatureCombination> ExperimentConfig::resolved_combinations() const {
  std::vector<FeatureCombination> out;
  const auto push = [&](FeatureCombination c) {
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  };
  for (const auto& spec : combinations) {
    if (spec == "all") {
      for (auto c : features::enumerate_combinations()) push(c);
    } else if (spec == "singletons") {
      for (auto c : features::singleton_combinations()) push(c);
    } else {
      push(FeatureCombination::parse(spec));
    }
  }
  return out;
}

ExperimentConfig ExperimentConfig::from_json(std::string_view text, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "train_corpus") c.train_corpus = resolve(base_dir, v.get<std::string>());
      else if (key == "test_corpus") {
        if (!v.is_null()) c.test_corpus = resolve(base_dir, v.get<std::string>());
      } else if (key == "centroids") c.centroids = resolve(base_dir, v.get<std::string>());
      else if (key == "boundaries") c.boundaries = resolve(base_dir, v.get<std::string>());
      else if (key == "gazetteer") c.gazetteer = resolve(base_dir, v.get<std::string>());
      else if (key == "out") c.out_dir = resolve(base_dir, v.get<std::string>());
      else if (key == "runs") c.split.runs = v.get<std::size_t>();
      else if (key == "train_frac") c.split.train_frac = v.get<double>();
      else if (key == "dev_frac") c.split.dev_frac = v.get<double>();
      else if (key == "test_frac") c.split.test_frac = v.get<double>();
      else if (key == "seed") c.split.seed = v.get<std::uint64_t>();
      else if (key == "l2_grid") c.l2_grid = v.get<std::vector<double>>();
      else if (key == "max_epochs") c.train.max_epochs = v.get<std::size_t>();
      else if (key == "tol") c.train.tol = v.get<double>();
      else if (key == "learning_rate") c.train.learning_rate = v.get<double>();
      else if (key == "class_weighting") c.train.class_weighting = v.get<bool>();
      else if (key == "binary") c.vocab.binary = v.get<bool>();
      else if (key == "missing_indicator") c.vocab.missing_indicator = v.get<bool>();
      else if (key == "min_df") {
        for (const auto& [kind, n] : v.items()) {
          const auto k = features::parse_kind(kind);
          if (!k) throw ConfigError("config: unknown feature '" + kind + "' in min_df");
          c.vocab.min_df[static_cast<std::size_t>(*k)] = n.get<std::uint32_t>();
        }
      } else if (key == "combinations") {
        c.combinations = v.is_string() ? std::vector<std::string>{v.get<std::string>()} : v.get<std::vector<std::string>>();
      } else if (key == "top_k") {
        if (!v.is_null()) c.top_k = v.get<std::size_t>();
      } else if (key == "selection_metric") c.selection = parse_metric(v.get<std::string>());
      else if (key == "threads") c.threads = v.get<std::size_t>();
      else if (key == "format_version") {
        if (v.get<int>() != kFormatVersion) throw ConfigError("config: unsupported format_version");
      } else {
        throw ConfigError("config: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.train.seed = c.split.seed;
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  return from_json(io::read_file(path), path.parent_path());
}

std::string ExperimentConfig::to_json() const {
  json min_df = json::object();
  for (auto k : features::kAllKinds) min_df[std::string(features::to_string(k))] = vocab.min_df[static_cast<std::size_t>(k)];
  json doc = {{"format_version", kFormatVersion},
              {"train_corpus", path_string(train_corpus)},
              {"test_corpus", test_corpus ? json(path_string(*test_corpus)) : json(nullptr)},
              {"centroids", path_string(centroids)},
              {"boundaries", path_string(boundaries)},
              {"gazetteer", path_string(gazetteer)},
              {"out", path_string(out_dir)},
              {"runs", split.runs},
              {"train_frac", split.train_frac},
              {"dev_frac", split.dev_frac},
              {"test_frac", split.test_frac},
              {"seed", split.seed},
              {"l2_grid", l2_grid},
              {"max_epochs", train.max_epochs},
              {"tol", train.tol},
              {"learning_rate", train.learning_rate},
              {"class_weighting", train.class_weighting},
              {"binary", vocab.binary},
              {"missing_indicator", vocab.missing_indicator},
              {"min_df", min_df},
              {"combinations", combinations},
              {"top_k", top_k ? json(*top_k) : json(nullptr)},
              {"selection_metric", std::string(to_string(selection))},
              {"threads", threads}};
  return doc.dump(2);
}

ExperimentData prepare_experiment_data(std::vector<LabeledTweet> corpus, geo::CountryTable table,
                                       const corpus::SplitConfig& split,
                                       std::optional<std::vector<LabeledTweet>> test_era) {
  const auto check = [&](const std::vector<LabeledTweet>& tweets, const char* which) {
    for (const auto& t : tweets) {
      if (!table.contains(t.country)) {
        throw LookupError(std::string(which) + " corpus label " + t.country + " is not in the country table");
      }
    }
  };
  check(corpus, "training");
  if (test_era) check(*test_era, "test-era");
  ExperimentData data;
  data.splits = corpus::make_splits(corpus.size(), split);
  data.corpus = std::move(corpus);
  data.test_era = std::move(test_era);
  data.table = std::move(table);
  return data;
}

ExperimentData load_experiment_data(const ExperimentConfig& config) {
  if (config.centroids.empty()) throw ConfigError("centroids path is required");
  auto table = config.boundaries.empty() ? geo::parse_centroids(io::read_file(config.centroids))
                                         : geo::load_country_table(config.centroids, config.boundaries);
  std::optional<std::vector<LabeledTweet>> era;
  if (config.test_corpus) era = corpus::load_labeled(*config.test_corpus);
  return prepare_experiment_data(corpus::load_labeled(config.train_corpus), std::move(table), config.split,
                                 std::move(era));
}

std::vector<LabeledTweet> relabel_outside(std::span<const LabeledTweet> tweets, std::span<const CountryCode> kept) {
  const std::set<std::string_view> keep(kept.begin(), kept.end());
  std::vector<LabeledTweet> out(tweets.begin(), tweets.end());
  for (auto& t : out) {
    if (!keep.contains(t.country)) t.country = std::string(eval::kOtherLabel);
  }
  return out;
}

TopKResult restrict_topk(std::span<const LabeledTweet> train, std::span<const LabeledTweet> test, std::size_t k) {
  const auto counts = corpus::country_distribution(train);
  if (k > counts.size()) {
    throw ConfigError("top_k = " + std::to_string(k) + " exceeds the " + std::to_string(counts.size()) +
                      " distinct training countries");
  }
  std::vector<std::pair<CountryCode, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  TopKResult r;
  for (std::size_t i = 0; i < k; ++i) r.kept.push_back(ranked[i].first);
  const std::set<std::string_view> keep(r.kept.begin(), r.kept.end());
  for (const auto& t : train) {
    if (keep.contains(t.country)) r.train.push_back(t);
  }
  r.test = relabel_outside(test, r.kept);
  r.test_countries = countries_of(test);
  return r;
}

std::string RunRecord::to_json() const {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["combination"] = combination;
  doc["run"] = run;
  if (error) {
    doc["error"] = *error;
    return doc.dump(1) + "\n";
  }
  doc["chosen_l2"] = chosen_l2;
  doc["vocab_dims"] = vocab_dims;
  doc["dev"] = report_json(dev);
  doc["test"] = report_json(test);
  doc["test_era"] = test_era ? report_json(*test_era) : json(nullptr);
  json pc = json::object();
  for (const auto& [code, s] : per_country) {
    pc[code] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}};
  }
  doc["per_country"] = std::move(pc);
  return doc.dump(1) + "\n";
}

TrainedRun train_and_evaluate(const ExperimentConfig& config, const ExperimentData& data,
                              FeatureCombination combination, std::size_t run) {
  if (run >= data.splits.size()) throw ContractError("run index out of range");
  const auto& split = data.splits[run];
  auto train = pick(data.corpus, split.train);
  auto dev = pick(data.corpus, split.dev);
  auto test = pick(data.corpus, split.test);
  const auto dev_countries = countries_of(dev);
  const auto test_countries = countries_of(test);
  std::optional<std::vector<LabeledTweet>> era = data.test_era;
  std::optional<std::vector<CountryCode>> era_countries;
  if (era) era_countries = countries_of(*era);

  if (config.top_k) {
    auto r = restrict_topk(train, test, *config.top_k);
    train = std::move(r.train);
    test = std::move(r.test);
    dev = relabel_outside(dev, r.kept);
    if (era) era = relabel_outside(*era, r.kept);
  }

  auto vocab = features::build_vocabulary(std::span<const LabeledTweet>(train), combination, config.vocab);
  const auto fingerprint = vocab.fingerprint();
  std::vector<model::LabeledVector> train_vectors;
  train_vectors.reserve(train.size());
  for (const auto& t : train) train_vectors.push_back({features::featurize(t.tweet, combination, vocab), t.country});

  std::optional<model::MaxEntModel> best;
  eval::EvalReport best_dev;
  for (double l2 : config.l2_grid) {
    auto cfg = config.train;
    cfg.l2_lambda = l2;
    auto m = model::train(train_vectors, cfg, fingerprint);
    if (dev.empty()) {
      best = std::move(m);
      break;
    }
    const auto preds = predict_all(m, vocab, dev);
    const auto report = eval::evaluate(preds, countries_of(dev), dev_countries, data.table);
    if (!best || better(report, best_dev, config.selection)) {
      best = std::move(m);
      best_dev = report;
    }
  }

  RunRecord rec;
  rec.combination = combination.label();
  rec.run = run;
  rec.chosen_l2 = best->config.l2_lambda;
  rec.dev = best_dev;
  rec.vocab_dims = vocab.total_dims();

  rec.test_predictions = predict_all(*best, vocab, test);
  const auto test_truth = countries_of(test);
  rec.test = eval::evaluate(rec.test_predictions, test_truth, test_countries, data.table);
  rec.per_country = eval::per_country_prf(rec.test_predictions, test_truth);
  std::set<CountryCode> classes(test_truth.begin(), test_truth.end());
  classes.insert(best->classes.begin(), best->classes.end());
  rec.confusion = eval::confusion(rec.test_predictions, test_truth, {classes.begin(), classes.end()});

  if (era && !era->empty()) {
    const auto preds = predict_all(*best, vocab, *era);
    rec.test_era = eval::evaluate(preds, countries_of(*era), *era_countries, data.table);
  }
  return {std::move(vocab), std::move(*best), std::move(rec)};
}

RunRecord run_single(const ExperimentConfig& config, const ExperimentData& data, FeatureCombination combination,
                     std::size_t run) {
  try {
    return train_and_evaluate(config, data, combination, run).record;
  } catch (const std::exception& e) {
    throw Error("combination " + combination.label() + ", run " + std::to_string(run) + ": " + e.what());
  }
}

SweepResult run_sweep(const ExperimentConfig& config, const ExperimentData& data) {
  config.validate();
  const auto combos = config.resolved_combinations();
  const std::size_t runs = data.splits.size();
  const std::size_t jobs = combos.size() * runs;

  SweepResult result;
  result.records.resize(jobs);
  std::vector<std::vector<CountryCode>> truths(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    auto test = pick(data.corpus, data.splits[r].test);
    if (config.top_k) {
      // Same relabeling the runs apply. A k that is too large fails every run anyway.
      const auto train = pick(data.corpus, data.splits[r].train);
      if (*config.top_k <= corpus::country_distribution(train).size()) {
        test = restrict_topk(train, test, *config.top_k).test;
      }
    }
    truths[r] = countries_of(test);
  }

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < jobs; i = next++) {
      const auto combo = combos[i / runs];
      const std::size_t run = i % runs;
      try {
        result.records[i] = run_single(config, data, combo, run);
      } catch (const std::exception& e) {
        RunRecord failed;
        failed.combination = combo.label();
        failed.run = run;
        failed.error = e.what();
        result.records[i] = std::move(failed);
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t n_threads = std::min(config.threads, std::max<std::size_t>(jobs, 1));
    for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }

  // Oracle union per run, over every combination that finished that run.
  for (std::size_t r = 0; r < runs; ++r) {
    std::vector<std::vector<CountryCode>> sets;
    for (std::size_t c = 0; c < combos.size(); ++c) {
      auto& rec = result.records[c * runs + r];
      if (!rec.error) sets.push_back(rec.test_predictions);
    }
    result.oracle_union.push_back(sets.empty() ? 0.0 : eval::oracle_union_accuracy(sets, truths[r]));
  }

  std::set<CountryCode> all_classes;
  for (const auto& rec : result.records) {
    if (rec.confusion) all_classes.insert(rec.confusion->classes().begin(), rec.confusion->classes().end());
  }
  for (auto& rec : result.records) {
    if (rec.error) {
      ++result.failures;
      continue;
    }
    auto m = rec.confusion->reindexed({all_classes.begin(), all_classes.end()});
    if (result.aggregate_confusion) {
      *result.aggregate_confusion += m;
    } else {
      result.aggregate_confusion = std::move(m);
    }
    rec.test_predictions.clear();
    rec.test_predictions.shrink_to_fit();
  }

  for (std::size_t c = 0; c < combos.size(); ++c) {
    CombinationSummary s;
    s.combination = combos[c].label();
    std::vector<eval::EvalReport> dev, test, era;
    std::map<CountryCode, std::pair<double, std::size_t>, std::less<>> f1;
    for (std::size_t r = 0; r < runs; ++r) {
      const auto& rec = result.records[c * runs + r];
      if (rec.error) continue;
      ++s.ok_runs;
      dev.push_back(rec.dev);
      test.push_back(rec.test);
      if (rec.test_era) era.push_back(*rec.test_era);
      for (const auto& [code, sc] : rec.per_country) {
        if (sc.support == 0 || code == eval::kOtherLabel) continue;
        f1[code].first += sc.f1;
        ++f1[code].second;
      }
    }
    s.mean_dev = eval::mean_report(dev);
    s.mean_test = eval::mean_report(test);
    if (!era.empty()) s.mean_test_era = eval::mean_report(era);
    for (const auto& [code, acc] : f1) s.mean_f1[code] = acc.first / static_cast<double>(acc.second);
    result.summaries.push_back(std::move(s));
  }

  for (auto metric : {Metric::micro, Metric::macro, Metric::mse}) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < result.summaries.size(); ++i) {
      if (result.summaries[i].ok_runs > 0) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return better(result.summaries[a].mean_test, result.summaries[b].mean_test, metric);
    });
    result.rankings[metric] = std::move(order);
  }

  for (const auto& s : result.summaries) {
    for (const auto& [code, f] : s.mean_f1) {
      auto it = result.best_per_country.find(code);
      if (it == result.best_per_country.end() || f > it->second.second) {
        result.best_per_country[code] = {s.combination, f};
      }
    }
  }
  return result;
}

std::string summary_csv(const SweepResult& result) {
  std::string out = "combination,ok_runs,micro_accuracy,macro_accuracy,mse_km2,macro_accuracy_with_other,"
                    "era_micro_accuracy,era_macro_accuracy,era_mse_km2\n";
  for (const auto& s : result.summaries) {
    const auto& t = s.mean_test;
    out += s.combination + "," + std::to_string(s.ok_runs) + "," + io::format_double(t.micro_accuracy) + "," +
           io::format_double(t.macro_accuracy) + "," + io::format_double(t.mse_km2) + "," +
           io::format_double(t.macro_accuracy_with_other);
    if (s.mean_test_era) {
      out += "," + io::format_double(s.mean_test_era->micro_accuracy) + "," +
             io::format_double(s.mean_test_era->macro_accuracy) + "," + io::format_double(s.mean_test_era->mse_km2);
    } else {
      out += ",,,";
    }
    out += "\n";
  }
  return out;
}

void persist_sweep(const ExperimentConfig& config, const SweepResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json combos = json::array();
  for (const auto& s : result.summaries) combos.push_back(s.combination);
  json manifest = {{"format_version", kFormatVersion},
                   {"code_version", std::string(kCodeVersion)},
                   {"config", json::parse(config.to_json())},
                   {"combinations", combos},
                   {"runs", config.split.runs},
                   {"records", result.records.size()},
                   {"failures", result.failures},
                   {"macro_accuracy_excludes", std::string(eval::kOtherLabel)}};
  io::write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  std::string failures;
  for (const auto& rec : result.records) {
    io::write_file(dir / "results" / rec.combination / (std::to_string(rec.run) + ".json"), rec.to_json());
    if (rec.error) failures += rec.combination + "\t" + std::to_string(rec.run) + "\t" + sanitize(*rec.error) + "\n";
  }
  io::write_file(dir / "summary.csv", summary_csv(result));
  io::write_file(dir / "failures.tsv", "combination\trun\terror\n" + failures);

  json rankings = {{"format_version", kFormatVersion}};
  for (const auto& [metric, order] : result.rankings) {
    json list = json::array();
    for (auto i : order) list.push_back(result.summaries[i].combination);
    rankings[std::string(to_string(metric))] = std::move(list);
  }
  io::write_file(dir / "rankings.json", rankings.dump(1) + "\n");

  std::string best = "country,combination,F1\n";
  for (const auto& [code, cf] : result.best_per_country) {
    best += code + "," + cf.first + "," + io::format_double(cf.second) + "\n";
  }
  io::write_file(dir / "best_per_country.csv", best);

  double mean = 0.0;
  for (double v : result.oracle_union) mean += v;
  if (!result.oracle_union.empty()) mean /= static_cast<double>(result.oracle_union.size());
  io::write_file(dir / "oracle_union.json",
                 json({{"format_version", kFormatVersion}, {"per_run", result.oracle_union}, {"mean", mean}}).dump(1) +
                     "\n");
  if (result.aggregate_confusion) io::write_file(dir / "confusion.csv", result.aggregate_confusion->to_csv());
}

CountryCode majority_country(std::span<const LabeledTweet> tweets) {
  const auto counts = corpus::country_distribution(tweets);
  if (counts.empty()) throw Error("majority of an empty set");
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

eval::EvalReport baseline_on(std::span<const LabeledTweet> train, std::span<const LabeledTweet> test,
                             const geo::Gazetteer& gazetteer, geo::LookupMode mode, const geo::CountryTable& table) {
  const auto majority = majority_country(train);
  std::vector<CountryCode> preds;
  preds.reserve(test.size());
  for (const auto& t : test) preds.push_back(gazetteer.lookup(t.tweet.uloc, mode, majority));
  return eval::evaluate(preds, countries_of(test), table);
}

eval::EvalReport run_baseline(const ExperimentConfig& config, const ExperimentData& data,
                              const geo::Gazetteer& gazetteer, geo::LookupMode mode) {
  (void)config;
  std::vector<eval::EvalReport> reports;
  for (const auto& split : data.splits) {
    reports.push_back(baseline_on(pick(data.corpus, split.train), pick(data.corpus, split.test), gazetteer, mode,
                                  data.table));
  }
  return eval::mean_report(reports);
}

StreamStats classify_stream(const model::MaxEntModel& m, const features::Vocabulary& vocab, std::istream& in,
                            std::ostream& out) {
  if (m.vocab_fingerprint != vocab.fingerprint()) throw LoadError("model and vocabulary do not match");
  StreamStats stats;
  std::string line;
  std::size_t line_no = 0;
  char prob[32];
  while (std::getline(in, line)) {
    ++line_no;
    if (io::trim(line).empty()) continue;
    try {
      const auto tweet = corpus::parse_tweet(line, line_no);
      const auto p = model::predict(m, features::featurize(tweet, vocab.kinds(), vocab));
      std::snprintf(prob, sizeof prob, "%.6f", p.probabilities[p.label_index]);
      out << (tweet.id.empty() ? std::to_string(line_no) : sanitize(tweet.id)) << '\t' << p.label << '\t' << prob
          << '\n';
      ++stats.classified;
    } catch (const Error& e) {
      out << error_key(line, line_no) << "\tERROR\t" << sanitize(e.what()) << '\n';
      ++stats.errors;
    }
  }
  out.flush();
  return stats;
}

std::string report_to_json(const eval::EvalReport& r) { return report_json(r).dump(1); }

}  // namespace geotweet::harness
