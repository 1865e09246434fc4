#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geotweet/features.hpp"

namespace geotweet::model {

using features::FeatureVector;

struct TrainConfig {
  double l2_lambda = 0.0;
  std::size_t max_epochs = 50;
  double tol = 1e-4;             // relative objective improvement to keep going
  double learning_rate = 0.1;    // base step of the per-coordinate adaptive rule
  std::uint64_t seed = 0;        // recorded for provenance; full-batch training draws no randomness
  bool class_weighting = true;   // weight classes by inverse training frequency

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// K rows of D weights (row-major) plus K biases.
struct Parameters {
  std::size_t classes = 0;
  std::size_t dims = 0;
  std::vector<double> weights;
  std::vector<double> biases;

  Parameters() = default;
  Parameters(std::size_t k, std::size_t d) : classes(k), dims(d), weights(k * d, 0.0), biases(k, 0.0) {}

  double& w(std::size_t c, std::size_t j) { return weights[c * dims + j]; }
  double w(std::size_t c, std::size_t j) const { return weights[c * dims + j]; }
  friend bool operator==(const Parameters&, const Parameters&) = default;
};

struct Example {
  FeatureVector x;
  std::uint32_t label = 0;  // index into the class list
  double weight = 1.0;
};

struct ObjectiveAndGradient {
  double value = 0.0;
  Parameters gradient;
};

// sum_i weight_i * -log p(label_i | x_i) + (l2_lambda / 2) * ||weights||^2,
// biases unregularized, with its exact gradient. Throws ContractError on a
// dimension or label mismatch.
ObjectiveAndGradient nll_and_gradient(const Parameters& params, std::span<const Example> batch, double l2_lambda);

// w_c = N / (K * n_c). Throws Error on a zero count or fewer than 2 classes.
std::map<CountryCode, double, std::less<>> class_weights(const std::map<CountryCode, std::size_t, std::less<>>& counts);

struct OptimizeResult {
  Parameters params;
  std::vector<double> objective_trace;
};

// The optimizer behind train(), on already-indexed, already-weighted examples.
OptimizeResult optimize(std::span<const Example> examples, std::size_t classes, std::size_t dims,
                        const TrainConfig& config);

struct LabeledVector {
  FeatureVector x;
  CountryCode label;
};

struct MaxEntModel {
  std::vector<CountryCode> classes;  // descending training frequency, then code
  Parameters params;
  std::uint64_t vocab_fingerprint = 0;
  TrainConfig config;
  std::vector<double> objective_trace;  // initial value, then one entry per accepted step

  std::size_t dims() const noexcept { return params.dims; }
};

// Full-batch descent with AdaGrad-style per-coordinate steps. A step that
// raises the objective is retried at half the learning rate, so the trace is
// non-increasing. Stops after max_epochs steps or when the relative
// improvement drops below tol. Throws Error for single-class data and
// DivergenceError for a non-finite objective.
MaxEntModel train(std::span<const LabeledVector> dataset, const TrainConfig& config,
                  std::uint64_t vocab_fingerprint = 0);

struct Prediction {
  CountryCode label;
  std::vector<double> probabilities;  // aligned with model.classes
  std::size_t label_index = 0;
};

// Softmax over class scores; ties go to the lowest class index.
Prediction predict(const MaxEntModel& model, const FeatureVector& v);

std::string save_model(const MaxEntModel& model);
// Throws LoadError if the file is malformed or was trained against a
// different vocabulary.
MaxEntModel load_model(std::string_view text, const features::Vocabulary& vocab);
MaxEntModel load_model_unchecked(std::string_view text);

}  // namespace geotweet::model
