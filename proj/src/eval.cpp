#include "geotweet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "geotweet/error.hpp"
#include "geotweet/io.hpp"

namespace geotweet::eval {

namespace {

void check_lengths(Labels pred, Labels truth, const char* what) {
  if (pred.size() != truth.size()) {
    throw ContractError(std::string(what) + ": " + std::to_string(pred.size()) + " predictions for " +
                        std::to_string(truth.size()) + " truth labels");
  }
  if (truth.empty()) throw ContractError(std::string(what) + ": empty input");
}

}  // namespace

void CompensatedSum::add(double v) noexcept {
  const double t = sum_ + v;
  if (std::abs(sum_) >= std::abs(v)) {
    comp_ += (sum_ - t) + v;
  } else {
    comp_ += (v - t) + sum_;
  }
  sum_ = t;
}

double micro_accuracy(Labels pred, Labels truth) {
  check_lengths(pred, truth, "micro_accuracy");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += pred[i] == truth[i];
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

double macro_accuracy(Labels pred, Labels truth, std::span<const CountryCode> class_universe) {
  check_lengths(pred, truth, "macro_accuracy");
  const std::set<std::string_view> universe(class_universe.begin(), class_universe.end());
  std::map<std::string_view, std::pair<std::size_t, std::size_t>> tally;  // correct, total
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!universe.contains(truth[i])) {
      throw ContractError("macro_accuracy: truth label " + truth[i] + " is outside the class universe");
    }
    auto& [correct, total] = tally[truth[i]];
    correct += pred[i] == truth[i];
    ++total;
  }
  double sum = 0.0;
  for (const auto& [_, ct] : tally) sum += static_cast<double>(ct.first) / static_cast<double>(ct.second);
  return sum / static_cast<double>(tally.size());
}

double macro_accuracy(Labels pred, Labels truth) {
  std::vector<CountryCode> universe(truth.begin(), truth.end());
  std::sort(universe.begin(), universe.end());
  universe.erase(std::unique(universe.begin(), universe.end()), universe.end());
  return macro_accuracy(pred, truth, universe);
}

double mse_km2(Labels pred, Labels truth, const geo::CountryTable& table) {
  check_lengths(pred, truth, "mse_km2");
  CompensatedSum sum;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = geo::country_distance_km(pred[i], truth[i], table);
    sum.add(d * d);
  }
  return sum.value() / static_cast<double>(truth.size());
}

PerCountryReport per_country_prf(Labels pred, Labels truth) {
  check_lengths(pred, truth, "per_country_prf");
  struct Tally {
    std::size_t tp = 0, predicted = 0, actual = 0;
  };
  std::map<CountryCode, Tally, std::less<>> tally;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++tally[truth[i]].actual;
    ++tally[pred[i]].predicted;
    if (pred[i] == truth[i]) ++tally[truth[i]].tp;
  }
  PerCountryReport out;
  for (const auto& [code, t] : tally) {
    ClassScores s;
    s.support = t.actual;
    s.precision = t.predicted ? static_cast<double>(t.tp) / static_cast<double>(t.predicted) : 0.0;
    s.recall = t.actual ? static_cast<double>(t.tp) / static_cast<double>(t.actual) : 0.0;
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    out.emplace(code, s);
  }
  return out;
}

ConfusionMatrix::ConfusionMatrix(std::vector<CountryCode> classes)
    : classes_(std::move(classes)), counts_(classes_.size() * classes_.size(), 0) {
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (!index_.emplace(classes_[i], i).second) throw ContractError("duplicate class " + classes_[i]);
  }
}

std::size_t ConfusionMatrix::index_of(std::string_view code) const {
  const auto it = index_.find(code);
  if (it == index_.end()) throw ContractError("label " + std::string(code) + " is not in the confusion matrix");
  return it->second;
}

void ConfusionMatrix::add(std::string_view truth, std::string_view pred, std::uint64_t count) {
  counts_[index_of(truth) * classes_.size() + index_of(pred)] += count;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) throw ContractError("cannot aggregate confusion matrices with different classes");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < classes_.size(); ++i) t += at(i, i);
  return t;
}

std::uint64_t ConfusionMatrix::total() const noexcept {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::uint64_t t = 0;
  for (std::size_t j = 0; j < classes_.size(); ++j) t += at(truth, j);
  return t;
}

ConfusionMatrix ConfusionMatrix::reindexed(std::vector<CountryCode> classes) const {
  ConfusionMatrix out(std::move(classes));
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    for (std::size_t j = 0; j < classes_.size(); ++j) {
      if (const auto c = at(i, j)) out.add(classes_[i], classes_[j], c);
    }
  }
  return out;
}

std::string ConfusionMatrix::to_csv() const {
  std::string out = "truth\\pred";
  for (const auto& c : classes_) out += "," + c;
  out += "\n";
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    out += classes_[i];
    for (std::size_t j = 0; j < classes_.size(); ++j) out += "," + std::to_string(at(i, j));
    out += "\n";
  }
  return out;
}

ConfusionMatrix confusion(Labels pred, Labels truth, std::vector<CountryCode> classes) {
  check_lengths(pred, truth, "confusion");
  ConfusionMatrix m(std::move(classes));
  for (std::size_t i = 0; i < truth.size(); ++i) m.add(truth[i], pred[i]);
  return m;
}

ConfusionMatrix aggregate(std::span<const ConfusionMatrix> matrices) {
  if (matrices.empty()) throw ContractError("aggregate: no matrices");
  ConfusionMatrix out = matrices.front();
  for (std::size_t i = 1; i < matrices.size(); ++i) out += matrices[i];
  return out;
}

double oracle_union_accuracy(std::span<const std::vector<CountryCode>> prediction_sets, Labels truth) {
  if (prediction_sets.empty()) throw ContractError("oracle_union_accuracy: no prediction sets");
  for (const auto& p : prediction_sets) check_lengths(p, truth, "oracle_union_accuracy");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    hit += std::any_of(prediction_sets.begin(), prediction_sets.end(),
                       [&](const std::vector<CountryCode>& p) { return p[i] == truth[i]; });
  }
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

EvalReport evaluate(Labels pred, Labels truth, Labels true_countries, const geo::CountryTable& table) {
  check_lengths(pred, truth, "evaluate");
  check_lengths(true_countries, truth, "evaluate");
  EvalReport r;
  r.n = truth.size();
  r.micro_accuracy = micro_accuracy(pred, truth);
  r.mse_km2 = mse_km2(pred, true_countries, table);
  r.macro_accuracy_with_other = macro_accuracy(pred, truth);

  std::vector<CountryCode> p, t;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == kOtherLabel) continue;
    p.push_back(pred[i]);
    t.push_back(truth[i]);
  }
  r.macro_accuracy = t.empty() ? 0.0 : macro_accuracy(p, t);
  return r;
}

EvalReport evaluate(Labels pred, Labels truth, const geo::CountryTable& table) {
  return evaluate(pred, truth, truth, table);
}

EvalReport mean_report(std::span<const EvalReport> reports) {
  EvalReport m;
  if (reports.empty()) return m;
  for (const auto& r : reports) {
    m.micro_accuracy += r.micro_accuracy;
    m.macro_accuracy += r.macro_accuracy;
    m.mse_km2 += r.mse_km2;
    m.macro_accuracy_with_other += r.macro_accuracy_with_other;
    m.n += r.n;
  }
  const double k = static_cast<double>(reports.size());
  m.micro_accuracy /= k;
  m.macro_accuracy /= k;
  m.mse_km2 /= k;
  m.macro_accuracy_with_other /= k;
  m.n /= reports.size();
  return m;
}

std::string per_country_csv(const PerCountryReport& report) {
  std::string out = "country,P,R,F1,support\n";
  for (const auto& [code, s] : report) {
    out += code + "," + io::format_double(s.precision) + "," + io::format_double(s.recall) + "," +
           io::format_double(s.f1) + "," + std::to_string(s.support) + "\n";
  }
  return out;
}

}  // namespace geotweet::eval
