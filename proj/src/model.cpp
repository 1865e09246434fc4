#include "geotweet/model.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "geotweet/error.hpp"

namespace geotweet::model {

namespace {

constexpr int kModelVersion = 1;
constexpr std::size_t kMaxHalvings = 40;

void check_vector(const FeatureVector& x, std::size_t dims) {
  if (x.dims != dims) {
    throw ContractError("feature vector has " + std::to_string(x.dims) + " dims, model expects " +
                        std::to_string(dims));
  }
  for (const auto& [idx, _] : x.entries) {
    if (idx >= dims) throw ContractError("feature index out of range");
  }
}

void scores(const Parameters& p, const FeatureVector& x, std::vector<double>& out) {
  out.assign(p.biases.begin(), p.biases.end());
  for (std::size_t c = 0; c < p.classes; ++c) {
    const double* row = p.weights.data() + c * p.dims;
    double s = 0.0;
    for (const auto& [idx, val] : x.entries) s += row[idx] * val;
    out[c] += s;
  }
}

// In-place softmax; returns log-sum-exp of the input scores.
double softmax(std::vector<double>& s) {
  const double m = *std::max_element(s.begin(), s.end());
  double z = 0.0;
  for (double& v : s) {
    v = std::exp(v - m);
    z += v;
  }
  for (double& v : s) v /= z;
  return m + std::log(z);
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace

void TrainConfig::validate() const {
  if (!(l2_lambda >= 0.0) || !std::isfinite(l2_lambda)) throw ConfigError("l2_lambda must be >= 0");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (!(tol > 0.0)) throw ConfigError("tol must be > 0");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
}

ObjectiveAndGradient nll_and_gradient(const Parameters& params, std::span<const Example> batch, double l2_lambda) {
  ObjectiveAndGradient out{0.0, Parameters(params.classes, params.dims)};
  Parameters& g = out.gradient;
  std::vector<double> s;
  double data = 0.0;
  for (const auto& ex : batch) {
    check_vector(ex.x, params.dims);
    if (ex.label >= params.classes) throw ContractError("example label out of range");
    scores(params, ex.x, s);
    const double log_z = softmax(s);
    const double score_y = [&] {
      double v = params.biases[ex.label];
      for (const auto& [idx, val] : ex.x.entries) v += params.w(ex.label, idx) * val;
      return v;
    }();
    data += ex.weight * (log_z - score_y);
    for (std::size_t c = 0; c < params.classes; ++c) {
      const double delta = ex.weight * (s[c] - (c == ex.label ? 1.0 : 0.0));
      g.biases[c] += delta;
      double* row = g.weights.data() + c * params.dims;
      for (const auto& [idx, val] : ex.x.entries) row[idx] += delta * val;
    }
  }
  double reg = 0.0;
  if (l2_lambda > 0.0) {
    for (std::size_t i = 0; i < params.weights.size(); ++i) {
      reg += params.weights[i] * params.weights[i];
      g.weights[i] += l2_lambda * params.weights[i];
    }
  }
  out.value = data + 0.5 * l2_lambda * reg;
  return out;
}

std::map<CountryCode, double, std::less<>> class_weights(const std::map<CountryCode, std::size_t, std::less<>>& counts) {
  if (counts.size() < 2) throw Error("class weighting needs at least 2 classes");
  double total = 0.0;
  for (const auto& [code, n] : counts) {
    if (n == 0) throw Error("class " + code + " has zero examples; drop it before weighting");
    total += static_cast<double>(n);
  }
  const double k = static_cast<double>(counts.size());
  std::map<CountryCode, double, std::less<>> out;
  for (const auto& [code, n] : counts) out.emplace(code, total / (k * static_cast<double>(n)));
  return out;
}

OptimizeResult optimize(std::span<const Example> examples, std::size_t classes, std::size_t dims,
                        const TrainConfig& config) {
  config.validate();
  OptimizeResult result;
  Parameters theta(classes, dims);
  auto current = nll_and_gradient(theta, examples, config.l2_lambda);
  if (!std::isfinite(current.value)) throw DivergenceError("initial objective is not finite");
  result.objective_trace.push_back(current.value);

  Parameters accum(theta.classes, theta.dims);
  double lr = config.learning_rate;
  const auto adagrad_step = [](std::vector<double>& x, const std::vector<double>& grad, std::vector<double>& acc,
                               const std::vector<double>& base, double rate) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = acc[i] > 0.0 ? base[i] - rate * grad[i] / std::sqrt(acc[i]) : base[i];
    }
  };

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    const Parameters& grad = current.gradient;
    for (std::size_t i = 0; i < accum.weights.size(); ++i) accum.weights[i] += grad.weights[i] * grad.weights[i];
    for (std::size_t i = 0; i < accum.biases.size(); ++i) accum.biases[i] += grad.biases[i] * grad.biases[i];

    bool accepted = false;
    Parameters trial = theta;
    ObjectiveAndGradient next;
    for (std::size_t h = 0; h <= kMaxHalvings; ++h) {
      adagrad_step(trial.weights, grad.weights, accum.weights, theta.weights, lr);
      adagrad_step(trial.biases, grad.biases, accum.biases, theta.biases, lr);
      next = nll_and_gradient(trial, examples, config.l2_lambda);
      if (!std::isfinite(next.value)) {
        throw DivergenceError("objective became non-finite at epoch " + std::to_string(epoch + 1) +
                              " (learning rate " + std::to_string(lr) + ")");
      }
      if (next.value <= current.value) {
        accepted = true;
        break;
      }
      lr *= 0.5;
    }
    if (!accepted) break;

    const double improvement = (current.value - next.value) / std::max(std::abs(current.value), 1e-300);
    theta = std::move(trial);
    current = std::move(next);
    result.objective_trace.push_back(current.value);
    if (improvement < config.tol) break;
  }
  result.params = std::move(theta);
  return result;
}

MaxEntModel train(std::span<const LabeledVector> dataset, const TrainConfig& config, std::uint64_t vocab_fingerprint) {
  config.validate();
  if (dataset.empty()) throw Error("cannot train on an empty dataset");
  const std::size_t dims = dataset.front().x.dims;

  std::map<CountryCode, std::size_t, std::less<>> counts;
  for (const auto& ex : dataset) ++counts[ex.label];
  if (counts.size() < 2) throw Error("training data has a single class (" + counts.begin()->first + ")");

  MaxEntModel model;
  model.config = config;
  model.vocab_fingerprint = vocab_fingerprint;
  for (const auto& [code, _] : counts) model.classes.push_back(code);
  std::stable_sort(model.classes.begin(), model.classes.end(),
                   [&](const CountryCode& a, const CountryCode& b) { return counts.at(a) > counts.at(b); });
  std::map<CountryCode, std::uint32_t, std::less<>> class_index;
  for (std::uint32_t i = 0; i < model.classes.size(); ++i) class_index.emplace(model.classes[i], i);

  const auto weights = config.class_weighting ? class_weights(counts) : std::map<CountryCode, double, std::less<>>{};
  std::vector<Example> examples;
  examples.reserve(dataset.size());
  for (const auto& ex : dataset) {
    check_vector(ex.x, dims);
    examples.push_back({ex.x, class_index.at(ex.label), config.class_weighting ? weights.at(ex.label) : 1.0});
  }

  auto fit = optimize(examples, model.classes.size(), dims, config);
  model.params = std::move(fit.params);
  model.objective_trace = std::move(fit.objective_trace);
  return model;
}

Prediction predict(const MaxEntModel& model, const FeatureVector& v) {
  check_vector(v, model.dims());
  Prediction p;
  scores(model.params, v, p.probabilities);
  softmax(p.probabilities);
  p.label_index = static_cast<std::size_t>(
      std::max_element(p.probabilities.begin(), p.probabilities.end()) - p.probabilities.begin());
  p.label = model.classes[p.label_index];
  return p;
}

std::string save_model(const MaxEntModel& m) {
  using nlohmann::json;
  json doc;
  doc["format_version"] = kModelVersion;
  doc["classes"] = m.classes;
  doc["dims"] = m.params.dims;
  doc["vocab_fingerprint"] = hex64(m.vocab_fingerprint);
  doc["config"] = {{"l2_lambda", m.config.l2_lambda},       {"max_epochs", m.config.max_epochs},
                   {"tol", m.config.tol},                   {"learning_rate", m.config.learning_rate},
                   {"seed", m.config.seed},                 {"class_weighting", m.config.class_weighting}};
  doc["biases"] = m.params.biases;
  json rows = json::array();
  for (std::size_t c = 0; c < m.params.classes; ++c) {
    json row = json::array();
    for (std::size_t j = 0; j < m.params.dims; ++j) {
      if (const double w = m.params.w(c, j); w != 0.0) row.push_back(json::array({j, w}));
    }
    rows.push_back(std::move(row));
  }
  doc["weights"] = std::move(rows);
  doc["objective_trace"] = m.objective_trace;
  return doc.dump() + "\n";
}

MaxEntModel load_model_unchecked(std::string_view text) {
  using nlohmann::json;
  MaxEntModel m;
  try {
    const json doc = json::parse(text);
    if (doc.at("format_version").get<int>() != kModelVersion) throw LoadError("unsupported model format version");
    m.classes = doc.at("classes").get<std::vector<CountryCode>>();
    const auto dims = doc.at("dims").get<std::size_t>();
    m.params = Parameters(m.classes.size(), dims);
    m.vocab_fingerprint = std::stoull(doc.at("vocab_fingerprint").get<std::string>(), nullptr, 16);
    const auto& cfg = doc.at("config");
    m.config.l2_lambda = cfg.at("l2_lambda").get<double>();
    m.config.max_epochs = cfg.at("max_epochs").get<std::size_t>();
    m.config.tol = cfg.at("tol").get<double>();
    m.config.learning_rate = cfg.at("learning_rate").get<double>();
    m.config.seed = cfg.at("seed").get<std::uint64_t>();
    m.config.class_weighting = cfg.at("class_weighting").get<bool>();
    m.params.biases = doc.at("biases").get<std::vector<double>>();
    const auto& rows = doc.at("weights");
    if (m.classes.size() < 2 || m.params.biases.size() != m.classes.size() || rows.size() != m.classes.size()) {
      throw LoadError("model: class count mismatch");
    }
    for (std::size_t c = 0; c < rows.size(); ++c) {
      for (const auto& pair : rows[c]) {
        const auto j = pair.at(0).get<std::size_t>();
        if (j >= dims) throw LoadError("model: weight index out of range");
        m.params.w(c, j) = pair.at(1).get<double>();
      }
    }
    m.objective_trace = doc.value("objective_trace", std::vector<double>{});
  } catch (const json::exception& e) {
    throw LoadError(std::string("model: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw LoadError("model: bad vocab_fingerprint");
  }
  return m;
}

MaxEntModel load_model(std::string_view text, const features::Vocabulary& vocab) {
  auto m = load_model_unchecked(text);
  if (m.vocab_fingerprint != vocab.fingerprint()) {
    throw LoadError("model was trained against a different vocabulary (fingerprint " + hex64(m.vocab_fingerprint) +
                    ", vocabulary " + hex64(vocab.fingerprint()) + ")");
  }
  if (m.params.dims != vocab.total_dims()) throw LoadError("model dimensionality does not match vocabulary");
  return m;
}

}  // namespace geotweet::model
