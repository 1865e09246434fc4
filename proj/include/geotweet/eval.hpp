#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geotweet/corpus.hpp"
#include "geotweet/geo.hpp"

namespace geotweet::eval {

// Test-set label for tweets outside a top-k restriction. Never predicted.
inline constexpr std::string_view kOtherLabel = "OTHER";

using Labels = std::span<const CountryCode>;

// Fraction of exact matches. Throws ContractError on length mismatch or n = 0.
double micro_accuracy(Labels pred, Labels truth);

// Mean recall over classes of class_universe that occur in truth. Throws
// ContractError for an empty truth or a truth label outside the universe.
double macro_accuracy(Labels pred, Labels truth, std::span<const CountryCode> class_universe);
// Same, with the universe being the distinct truth labels.
double macro_accuracy(Labels pred, Labels truth);

// Mean squared centroid distance, km^2. Throws LookupError naming an
// unresolvable code.
double mse_km2(Labels pred, Labels truth, const geo::CountryTable& table);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // occurrences in truth
};

using PerCountryReport = std::map<CountryCode, ClassScores, std::less<>>;

// One-vs-rest scores for every label seen in pred or truth. Undefined
// precision or recall is reported as 0.
PerCountryReport per_country_prf(Labels pred, Labels truth);

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<CountryCode> classes);

  // Throws ContractError for labels outside the class list.
  void add(std::string_view truth, std::string_view pred, std::uint64_t count = 1);
  // Throws ContractError if class orderings differ.
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  const std::vector<CountryCode>& classes() const noexcept { return classes_; }
  std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts_[truth * classes_.size() + pred]; }
  std::uint64_t trace() const noexcept;
  std::uint64_t total() const noexcept;
  std::uint64_t row_sum(std::size_t truth) const;

  // Same counts over a superset class list. Throws ContractError if a class
  // with non-zero counts is missing.
  ConfusionMatrix reindexed(std::vector<CountryCode> classes) const;

  std::string to_csv() const;
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t index_of(std::string_view code) const;

  std::vector<CountryCode> classes_;
  std::map<CountryCode, std::size_t, std::less<>> index_;
  std::vector<std::uint64_t> counts_;  // row = truth, column = prediction
};

ConfusionMatrix confusion(Labels pred, Labels truth, std::vector<CountryCode> classes);
ConfusionMatrix aggregate(std::span<const ConfusionMatrix> matrices);

// Fraction of instances that at least one prediction set gets right.
double oracle_union_accuracy(std::span<const std::vector<CountryCode>> prediction_sets, Labels truth);

struct EvalReport {
  double micro_accuracy = 0.0;
  double macro_accuracy = 0.0;
  double mse_km2 = 0.0;
  std::size_t n = 0;
  // Macro-accuracy with OTHER counted as a class (equals macro_accuracy when
  // no OTHER label is present).
  double macro_accuracy_with_other = 0.0;
};

// Metrics for one prediction run. `truth` may carry kOtherLabel; MSE then
// uses `true_countries` (each tweet's real country), which must align with
// truth. OTHER is left out of macro_accuracy but counted in micro and MSE.
EvalReport evaluate(Labels pred, Labels truth, Labels true_countries, const geo::CountryTable& table);
EvalReport evaluate(Labels pred, Labels truth, const geo::CountryTable& table);

// Field-wise mean.
EvalReport mean_report(std::span<const EvalReport> reports);

std::string per_country_csv(const PerCountryReport& report);

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) noexcept;
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace geotweet::eval
