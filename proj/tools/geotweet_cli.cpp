// geotweet: command-line front end for labeling, splitting, training,
// evaluating, sweeping, baselines, streaming classification and reports.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "geotweet/corpus.hpp"
#include "geotweet/error.hpp"
#include "geotweet/eval.hpp"
#include "geotweet/features.hpp"
#include "geotweet/gazetteer.hpp"
#include "geotweet/geo.hpp"
#include "geotweet/harness.hpp"
#include "geotweet/io.hpp"
#include "geotweet/model.hpp"

namespace fs = std::filesystem;
using namespace geotweet;
using json = nlohmann::json;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out;
};

harness::ExperimentConfig load_config(const Globals& g) {
  harness::ExperimentConfig cfg;
  if (!g.config.empty()) cfg = harness::ExperimentConfig::load(g.config);
  if (g.seed) {
    cfg.split.seed = *g.seed;
    cfg.train.seed = *g.seed;
  }
  if (g.threads) cfg.threads = *g.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : *g.threads;
  if (!g.out.empty()) cfg.out_dir = g.out;
  return cfg;
}

// Writes to --out when given, otherwise to stdout.
void emit(const Globals& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
  } else {
    io::write_file(g.out, text);
  }
}

geo::CountryTable load_table(const fs::path& centroids, const fs::path& boundaries) {
  if (centroids.empty()) throw ConfigError("a centroid file is required (--centroids or config)");
  return boundaries.empty() ? geo::parse_centroids(io::read_file(centroids))
                            : geo::load_country_table(centroids, boundaries);
}

struct ModelFiles {
  features::Vocabulary vocab;
  model::MaxEntModel model;
};

ModelFiles load_model_dir(const fs::path& dir) {
  auto vocab = features::Vocabulary::deserialize(io::read_file(dir / "vocab.tsv"));
  auto m = model::load_model(io::read_file(dir / "model.json"), vocab);
  return {std::move(vocab), std::move(m)};
}

std::string record_summary(const harness::RunRecord& r) {
  json doc = json::parse(r.to_json());
  return doc.dump(2) + "\n";
}

int cmd_label(const Globals& g, const std::string& input, const std::string& centroids, const std::string& boundaries,
              double fallback_km, const std::string& policy, bool dedup) {
  const auto cfg = load_config(g);
  const auto table = load_table(centroids.empty() ? cfg.centroids : fs::path(centroids),
                                boundaries.empty() ? cfg.boundaries : fs::path(boundaries));
  if (table.entries().end() ==
      std::find_if(table.entries().begin(), table.entries().end(), [](const auto& e) { return !e.second.rings.empty(); }))
    throw ConfigError("labeling needs country boundaries (--boundaries or config)");
  if (policy != "drop" && policy != "abort") throw ConfigError("--missing must be drop or abort");
  auto tweets = corpus::load_tweets(input);
  const std::size_t read = tweets.size();
  if (dedup) tweets = corpus::deduplicate_users(tweets, cfg.split.seed);
  const auto result = corpus::label_tweets(tweets, table, fallback_km,
                                           policy == "abort" ? corpus::MissingCoords::abort : corpus::MissingCoords::drop);
  if (g.out.empty()) {
    for (const auto& t : result.labeled) std::cout << corpus::to_json_line(t) << '\n';
  } else {
    corpus::save_labeled(g.out, result.labeled);
  }
  std::cerr << "read " << read << ", kept " << tweets.size() << " after dedup, labeled " << result.labeled.size()
            << ", dropped " << result.dropped << '\n';
  for (const auto& d : result.drops) std::cerr << "drop\t" << d.index << '\t' << d.reason << '\n';
  return 0;
}

int cmd_split(const Globals& g, const std::string& corpus_path) {
  const auto cfg = load_config(g);
  const auto path = corpus_path.empty() ? cfg.train_corpus : fs::path(corpus_path);
  if (path.empty()) throw ConfigError("a labeled corpus is required (--corpus or config)");
  const auto tweets = corpus::load_labeled(path);
  emit(g, corpus::splits_to_json(corpus::make_splits(tweets.size(), cfg.split), cfg.split));
  return 0;
}

int cmd_train(const Globals& g, const std::string& combination, std::size_t run) {
  const auto cfg = load_config(g);
  cfg.validate();
  if (g.out.empty()) throw ConfigError("train needs --out <model directory>");
  const auto data = harness::load_experiment_data(cfg);
  const auto combo = features::FeatureCombination::parse(combination);
  const auto trained = harness::train_and_evaluate(cfg, data, combo, run);
  const fs::path dir = g.out;
  io::write_file(dir / "vocab.tsv", trained.vocab.serialize());
  io::write_file(dir / "model.json", model::save_model(trained.model));
  io::write_file(dir / "run.json", record_summary(trained.record));
  std::cout << record_summary(trained.record);
  return 0;
}

int cmd_evaluate(const Globals& g, const std::string& model_dir, const std::string& corpus_path,
                 const std::string& centroids) {
  const auto cfg = load_config(g);
  const auto files = load_model_dir(model_dir);
  const auto table = load_table(centroids.empty() ? cfg.centroids : fs::path(centroids), {});
  const auto tweets = corpus::load_labeled(corpus_path);
  if (tweets.empty()) throw Error("evaluation corpus is empty");
  const std::vector<CountryCode> kept = files.model.classes;
  std::vector<CountryCode> pred, truth, real;
  for (const auto& t : harness::relabel_outside(tweets, kept)) {
    pred.push_back(model::predict(files.model, features::featurize(t.tweet, files.vocab.kinds(), files.vocab)).label);
    truth.push_back(t.country);
  }
  for (const auto& t : tweets) real.push_back(t.country);
  const auto report = eval::evaluate(pred, truth, real, table);
  json doc = json::parse(harness::report_to_json(report));
  doc["per_country"] = json::object();
  for (const auto& [code, s] : eval::per_country_prf(pred, truth)) {
    doc["per_country"][code] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}};
  }
  emit(g, doc.dump(2) + "\n");
  return 0;
}

int cmd_sweep(const Globals& g) {
  const auto cfg = load_config(g);
  cfg.validate();
  const auto data = harness::load_experiment_data(cfg);
  const auto result = harness::run_sweep(cfg, data);
  harness::persist_sweep(cfg, result, cfg.out_dir);
  std::cerr << result.records.size() << " runs, " << result.failures << " failed; results in " << cfg.out_dir.string()
            << '\n';
  if (!result.rankings.empty()) {
    for (const auto metric : {harness::Metric::micro, harness::Metric::macro, harness::Metric::mse}) {
      const auto& order = result.rankings.at(metric);
      if (order.empty()) continue;
      const auto& best = result.summaries[order.front()];
      std::cerr << "best by " << harness::to_string(metric) << ": " << best.combination << '\n';
    }
  }
  return result.failures == 0 ? 0 : 1;
}

int cmd_baseline(const Globals& g, const std::string& mode) {
  const auto cfg = load_config(g);
  if (cfg.gazetteer.empty()) throw ConfigError("baseline needs a gazetteer path in the config");
  const auto data = harness::load_experiment_data(cfg);
  const geo::Gazetteer gazetteer(geo::load_gazetteer(cfg.gazetteer));
  const auto lookup_mode = geo::parse_lookup_mode(mode);
  json doc = json::parse(harness::report_to_json(harness::run_baseline(cfg, data, gazetteer, lookup_mode)));
  doc["mode"] = std::string(geo::to_string(lookup_mode));
  emit(g, doc.dump(2) + "\n");
  return 0;
}

int cmd_classify(const std::string& model_dir) {
  const auto files = load_model_dir(model_dir);
  std::ios::sync_with_stdio(false);
  const auto stats = harness::classify_stream(files.model, files.vocab, std::cin, std::cout);
  return stats.errors == 0 ? 0 : 2;
}

int cmd_report(const Globals& g, const std::string& sweep_dir, std::size_t top, const std::vector<std::string>& correlate,
               const std::string& coverage) {
  std::string out;
  if (!sweep_dir.empty()) {
    const auto rankings = json::parse(io::read_file(fs::path(sweep_dir) / "rankings.json"));
    std::map<std::string, std::vector<std::string>> summary_rows;
    const auto csv = io::read_file(fs::path(sweep_dir) / "summary.csv");
    std::string header;
    io::for_each_line(csv, [&](std::size_t line_no, std::string_view line) {
      if (line_no == 1) {
        header = line;
        return;
      }
      const auto cells = io::split(line, ',');
      if (!cells.empty()) summary_rows[std::string(cells[0])] = {std::string(line)};
    });
    for (const char* metric : {"micro", "macro", "mse"}) {
      if (!rankings.contains(metric)) continue;
      out += "top " + std::to_string(top) + " by " + metric + "\n" + header + "\n";
      std::size_t shown = 0;
      for (const auto& combo : rankings[metric]) {
        if (shown++ == top) break;
        const auto it = summary_rows.find(combo.get<std::string>());
        if (it != summary_rows.end()) out += it->second.front() + "\n";
      }
      out += "\n";
    }
  }
  if (!correlate.empty()) {
    if (correlate.size() != 2) throw ConfigError("--correlate takes two labeled corpora");
    const auto a = corpus::country_distribution(corpus::load_labeled(correlate[0]));
    const auto b = corpus::country_distribution(corpus::load_labeled(correlate[1]));
    char r[64];
    std::snprintf(r, sizeof r, "%.6f", corpus::distribution_correlation(a, b));
    out += std::string("country distribution correlation r = ") + r + "\n";
  }
  if (!coverage.empty()) {
    // Which features a corpus can support: share of tweets with a non-empty value.
    const auto tweets = corpus::load_labeled(coverage);
    out += "feature,non_empty_fraction\n";
    for (const auto kind : features::kAllKinds) {
      std::size_t present = 0;
      for (const auto& t : tweets) {
        present += features::is_bag_of_words(kind) ? !features::bag_text(t.tweet, kind).empty()
                                                   : !features::categorical_value(t.tweet, kind).empty();
      }
      char frac[32];
      std::snprintf(frac, sizeof frac, "%.4f", tweets.empty() ? 0.0 : static_cast<double>(present) / tweets.size());
      out += std::string(features::to_string(kind)) + "," + frac + "\n";
    }
  }
  if (out.empty()) throw ConfigError("report needs --sweep, --correlate or --coverage");
  emit(g, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Country-level tweet geolocation: labeling, training, evaluation and streaming classification"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Override the split/training seed");
  app.add_option("--threads", g.threads, "Worker threads for sweeps (0 = all cores)");
  app.add_option("--out", g.out, "Output file or directory (meaning depends on the subcommand)");

  std::string input, centroids, boundaries, policy = "drop", corpus_path, combination = "content", model_dir, mode,
                                           sweep_dir, coverage;
  double fallback_km = geo::kDefaultFallbackKm;
  bool dedup = false;
  std::size_t run = 0, top = 10;
  std::vector<std::string> correlate;

  auto* label = app.add_subcommand("label", "Assign countries to geotagged tweets by reverse geocoding");
  label->add_option("input", input, "Tweet JSON lines")->required()->check(CLI::ExistingFile);
  label->add_option("--centroids", centroids, "Centroid CSV (iso2,lat,lon)");
  label->add_option("--boundaries", boundaries, "Country boundaries GeoJSON");
  label->add_option("--fallback-km", fallback_km, "Nearest-vertex fallback radius for points outside every polygon");
  label->add_option("--missing", policy, "Tweets without coordinates: drop or abort");
  label->add_flag("--dedup", dedup, "Keep one tweet per user, chosen by the seed");

  auto* split = app.add_subcommand("split", "Write train/dev/test index splits for a labeled corpus");
  split->add_option("--corpus", corpus_path, "Labeled JSON lines (default: config train_corpus)");

  auto* train = app.add_subcommand("train", "Train one model on one run's training fold");
  train->add_option("--combination", combination, "Feature combination, e.g. content-tz")->capture_default_str();
  train->add_option("--run", run, "Split run index")->capture_default_str();

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a trained model on a labeled corpus");
  evaluate->add_option("--model", model_dir, "Directory written by train")->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--corpus", corpus_path, "Labeled JSON lines")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--centroids", centroids, "Centroid CSV (default: config)");

  auto* sweep = app.add_subcommand("sweep", "Evaluate feature combinations over all runs and persist the results");

  auto* baseline = app.add_subcommand("baseline", "Gazetteer lookup of the user location field");
  baseline->add_option("--mode", mode, "population or relevance")->required();

  auto* classify = app.add_subcommand("classify", "Classify tweet JSON lines from stdin into TSV on stdout");
  classify->add_option("--model", model_dir, "Directory written by train")->required()->check(CLI::ExistingDirectory);

  auto* report = app.add_subcommand("report", "Summaries of sweep results and corpora");
  report->add_option("--sweep", sweep_dir, "Sweep output directory")->check(CLI::ExistingDirectory);
  report->add_option("--top", top, "Rows per ranking")->capture_default_str();
  report->add_option("--correlate", correlate, "Two labeled corpora: Pearson r of country counts")->expected(2);
  report->add_option("--coverage", coverage, "Labeled corpus: which features carry values")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*label) return cmd_label(g, input, centroids, boundaries, fallback_km, policy, dedup);
    if (*split) return cmd_split(g, corpus_path);
    if (*train) return cmd_train(g, combination, run);
    if (*evaluate) return cmd_evaluate(g, model_dir, corpus_path, centroids);
    if (*sweep) return cmd_sweep(g);
    if (*baseline) return cmd_baseline(g, mode);
    if (*classify) return cmd_classify(model_dir);
    if (*report) return cmd_report(g, sweep_dir, top, correlate, coverage);
  } catch (const std::exception& e) {
    std::cerr << "geotweet: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
