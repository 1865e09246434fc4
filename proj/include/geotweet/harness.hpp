#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geotweet/corpus.hpp"
#include "geotweet/eval.hpp"
#include "geotweet/features.hpp"
#include "geotweet/gazetteer.hpp"
#include "geotweet/geo.hpp"
#include "geotweet/model.hpp"

namespace geotweet::harness {

inline constexpr int kFormatVersion = 1;
inline constexpr std::string_view kCodeVersion = "geotweet 1.0.0";

enum class Metric { micro, macro, mse };
Metric parse_metric(std::string_view s);
std::string_view to_string(Metric m) noexcept;

// True if report a is better than b under metric m (strictly).
bool better(const eval::EvalReport& a, const eval::EvalReport& b, Metric m) noexcept;

struct ExperimentConfig {
  std::filesystem::path train_corpus;  // labeled JSON lines
  std::optional<std::filesystem::path> test_corpus;  // later-era corpus, evaluated with the same models
  std::filesystem::path centroids;
  std::filesystem::path boundaries;  // optional: only needed for labeling
  std::filesystem::path gazetteer;   // optional: only needed for baselines
  std::filesystem::path out_dir = "sweep-out";

  corpus::SplitConfig split;
  model::TrainConfig train;
  std::vector<double> l2_grid{0.0, 0.01, 0.1, 1.0};
  features::VocabOptions vocab;
  // "all", "singletons", or an explicit list of labels like "content-tz".
  std::vector<std::string> combinations{"all"};
  std::optional<std::size_t> top_k;
  Metric selection = Metric::macro;
  std::size_t threads = 1;

  void validate() const;
  std::vector<features::FeatureCombination> resolved_combinations() const;

  // Relative paths in the document resolve against base_dir.
  static ExperimentConfig from_json(std::string_view json, const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
  std::string to_json() const;
};

// Everything a run needs, loaded once and shared read-only across jobs.
struct ExperimentData {
  std::vector<LabeledTweet> corpus;
  std::optional<std::vector<LabeledTweet>> test_era;
  geo::CountryTable table;
  std::vector<corpus::DatasetSplit> splits;
};

ExperimentData load_experiment_data(const ExperimentConfig& config);
// For callers that already hold the corpus in memory.
ExperimentData prepare_experiment_data(std::vector<LabeledTweet> corpus, geo::CountryTable table,
                                       const corpus::SplitConfig& split,
                                       std::optional<std::vector<LabeledTweet>> test_era = std::nullopt);

struct TopKResult {
  std::vector<LabeledTweet> train;
  std::vector<LabeledTweet> test;       // non-top-k truth relabeled to OTHER
  std::vector<CountryCode> test_countries;  // original truth, aligned with test
  std::vector<CountryCode> kept;        // the k countries, most frequent first
};

// Keeps the k most frequent training countries (ties by code). Throws
// ConfigError if k exceeds the number of distinct training countries.
TopKResult restrict_topk(std::span<const LabeledTweet> train, std::span<const LabeledTweet> test, std::size_t k);
std::vector<LabeledTweet> relabel_outside(std::span<const LabeledTweet> tweets, std::span<const CountryCode> kept);

struct RunRecord {
  std::string combination;
  std::size_t run = 0;
  std::optional<std::string> error;

  double chosen_l2 = 0.0;
  eval::EvalReport dev;
  eval::EvalReport test;
  std::optional<eval::EvalReport> test_era;
  eval::PerCountryReport per_country;
  std::optional<eval::ConfusionMatrix> confusion;
  std::vector<CountryCode> test_predictions;
  std::size_t vocab_dims = 0;

  std::string to_json() const;  // excludes the confusion matrix and raw predictions
};

struct TrainedRun {
  features::Vocabulary vocab;
  model::MaxEntModel model;
  RunRecord record;
};

// Per-run vocabulary from the training fold, grid search over l2 on dev,
// test (and test-era) evaluation of the chosen model.
TrainedRun train_and_evaluate(const ExperimentConfig& config, const ExperimentData& data,
                              features::FeatureCombination combination, std::size_t run);
RunRecord run_single(const ExperimentConfig& config, const ExperimentData& data,
                     features::FeatureCombination combination, std::size_t run);

struct CombinationSummary {
  std::string combination;
  std::size_t ok_runs = 0;
  eval::EvalReport mean_dev;
  eval::EvalReport mean_test;
  std::optional<eval::EvalReport> mean_test_era;
  std::map<CountryCode, double, std::less<>> mean_f1;
};

struct SweepResult {
  std::vector<RunRecord> records;  // combination-major, run-minor
  std::vector<CombinationSummary> summaries;
  // Indices into summaries, best first. Only combinations with ok runs.
  std::map<Metric, std::vector<std::size_t>> rankings;
  // country -> (combination, mean F1)
  std::map<CountryCode, std::pair<std::string, double>, std::less<>> best_per_country;
  std::vector<double> oracle_union;  // per run
  std::optional<eval::ConfusionMatrix> aggregate_confusion;
  std::size_t failures = 0;
};

SweepResult run_sweep(const ExperimentConfig& config, const ExperimentData& data);
// Writes manifest.json, results/<combo>/<run>.json, summary.csv and friends.
void persist_sweep(const ExperimentConfig& config, const SweepResult& result, const std::filesystem::path& dir);
std::string summary_csv(const SweepResult& result);

// Mean over runs of the gazetteer baseline on each test fold. Empty uloc
// falls back to the training fold's majority country.
eval::EvalReport run_baseline(const ExperimentConfig& config, const ExperimentData& data,
                              const geo::Gazetteer& gazetteer, geo::LookupMode mode);
eval::EvalReport baseline_on(std::span<const LabeledTweet> train, std::span<const LabeledTweet> test,
                             const geo::Gazetteer& gazetteer, geo::LookupMode mode, const geo::CountryTable& table);
CountryCode majority_country(std::span<const LabeledTweet> tweets);

struct StreamStats {
  std::size_t classified = 0;
  std::size_t errors = 0;
};

// One output line per non-blank input line, in input order:
//   tweet_id<TAB>country<TAB>probability
//   tweet_id_or_lineno<TAB>ERROR<TAB>reason
StreamStats classify_stream(const model::MaxEntModel& model, const features::Vocabulary& vocab, std::istream& in,
                            std::ostream& out);

std::string report_to_json(const eval::EvalReport& r);

}  // namespace geotweet::harness
