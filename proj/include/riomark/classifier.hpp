// Copyright 2026 The riomark Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Built-in Rio-marker classifier: TF-IDF features over unigrams and bigrams,
// multinomial logistic regression trained with seeded mini-batch gradient
// descent, a k-fold cross-validation harness, and an adapter for externally
// produced predictions. Training is bit-deterministic given (data order,
// hyperparameters, seed).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "riomark/csv.hpp"
#include "riomark/error.hpp"
#include "riomark/ingest.hpp"
#include "riomark/rng.hpp"
#include "riomark/stats.hpp"
#include "riomark/textprep.hpp"
#include "riomark/tokenize.hpp"
#include "riomark/version.hpp"

namespace riomark {

struct FeatureVector {
  std::vector<std::uint32_t> indices;  // strictly increasing
  std::vector<double> values;          // TF-IDF weights, L2-normalized
};

struct Vocabulary {
  std::map<std::string, std::uint32_t> token_to_id;
  std::vector<double> idf;

  std::size_t size() const { return token_to_id.size(); }
};

// Unigrams plus adjacent bigrams joined with '_'.
inline std::vector<std::string> feature_terms(const std::vector<std::string>& tokens) {
  std::vector<std::string> terms = tokens;
  terms.reserve(tokens.size() * 2);
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    terms.push_back(tokens[i] + "_" + tokens[i + 1]);
  }
  return terms;
}

// Vocabulary over terms with document frequency >= min_df. Feature ids are
// assigned in lexicographic term order; idf_t = ln((1+N)/(1+df_t)) + 1.
inline Vocabulary fit_features(const std::vector<std::vector<std::string>>& corpus,
                               int min_df) {
  if (corpus.empty()) throw Error("fit_features: empty corpus");
  if (min_df < 1) throw Error("fit_features: min_df must be >= 1");
  std::map<std::string, std::size_t> df;
  for (const auto& tokens : corpus) {
    std::set<std::string> seen;
    for (auto& term : feature_terms(tokens)) seen.insert(std::move(term));
    for (const auto& term : seen) ++df[term];
  }
  Vocabulary vocab;
  const double n_docs = static_cast<double>(corpus.size());
  std::uint32_t next_id = 0;
  for (const auto& [term, count] : df) {
    if (count < static_cast<std::size_t>(min_df)) continue;
    vocab.token_to_id.emplace(term, next_id++);
    vocab.idf.push_back(std::log((1.0 + n_docs) / (1.0 + static_cast<double>(count))) +
                        1.0);
  }
  if (vocab.token_to_id.empty()) throw Error("fit_features: no features");
  return vocab;
}

inline FeatureVector vectorize(const std::vector<std::string>& tokens,
                               const Vocabulary& vocab) {
  std::map<std::uint32_t, double> counts;
  for (const auto& term : feature_terms(tokens)) {
    auto it = vocab.token_to_id.find(term);
    if (it != vocab.token_to_id.end()) counts[it->second] += 1.0;
  }
  FeatureVector fv;
  fv.indices.reserve(counts.size());
  fv.values.reserve(counts.size());
  double norm_sq = 0.0;
  for (const auto& [id, tf] : counts) {
    const double w = tf * vocab.idf[id];
    fv.indices.push_back(id);
    fv.values.push_back(w);
    norm_sq += w * w;
  }
  if (norm_sq > 0.0) {
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& v : fv.values) v *= inv;
  }
  return fv;
}

struct TrainOptions {
  double l2 = 1e-4;
  double lr = 0.5;
  int epochs = 30;
  int batch_size = 32;
  int min_df = 1;
  std::uint64_t seed = 42;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct MetricSet {
  double accuracy = 0.0;
  std::map<int, Prf> per_class;  // classes present in gold
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
};

// Precision/recall/F1 per class present in gold, macro averages over those
// classes, and accuracy. Zero denominators yield 0.
inline MetricSet metrics(const std::vector<RioMarker>& gold,
                         const std::vector<RioMarker>& pred) {
  if (gold.size() != pred.size()) throw Error("metrics: length mismatch");
  if (gold.empty()) throw Error("metrics: empty input");
  std::map<int, std::size_t> tp, fp, fn;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == pred[i]) {
      ++correct;
      ++tp[gold[i].value];
    } else {
      ++fn[gold[i].value];
      ++fp[pred[i].value];
    }
  }
  MetricSet m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());
  std::set<int> classes;
  for (const auto& g : gold) classes.insert(g.value);
  for (int c : classes) {
    const double tpc = static_cast<double>(tp.count(c) ? tp[c] : 0);
    const double fpc = static_cast<double>(fp.count(c) ? fp[c] : 0);
    const double fnc = static_cast<double>(fn.count(c) ? fn[c] : 0);
    Prf prf;
    prf.precision = tpc + fpc > 0.0 ? tpc / (tpc + fpc) : 0.0;
    prf.recall = tpc + fnc > 0.0 ? tpc / (tpc + fnc) : 0.0;
    prf.f1 = prf.precision + prf.recall > 0.0
                 ? 2.0 * prf.precision * prf.recall / (prf.precision + prf.recall)
                 : 0.0;
    m.per_class[c] = prf;
    m.macro_precision += prf.precision;
    m.macro_recall += prf.recall;
    m.macro_f1 += prf.f1;
  }
  const double nc = static_cast<double>(classes.size());
  m.macro_precision /= nc;
  m.macro_recall /= nc;
  m.macro_f1 /= nc;
  return m;
}

namespace detail {

// Stable softmax in place; returns the log of the target-class probability.
inline double softmax_log_target(std::vector<double>& scores, std::size_t target) {
  double max_s = scores[0];
  for (double s : scores) max_s = std::max(max_s, s);
  double sum = 0.0;
  for (double& s : scores) {
    s = std::exp(s - max_s);
    sum += s;
  }
  for (double& s : scores) s /= sum;
  return std::log(scores[target]);
}

inline void add_scores(std::span<const double> weights, std::span<const double> bias,
                       std::size_t num_features, const FeatureVector& fv,
                       std::vector<double>& scores) {
  const std::size_t num_classes = bias.size();
  scores.assign(bias.begin(), bias.end());
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double* row = weights.data() + c * num_features;
    double dot = 0.0;
    for (std::size_t k = 0; k < fv.indices.size(); ++k) {
      dot += row[fv.indices[k]] * fv.values[k];
    }
    scores[c] += dot;
  }
}

}  // namespace detail

// Mean cross-entropy over `examples` plus (l2/2)*||W||^2, with analytic
// gradients written to grad_w / grad_b. The bias is not regularized.
inline double loss_and_gradient(std::span<const double> weights,
                                std::span<const double> bias,
                                std::size_t num_features,
                                const std::vector<FeatureVector>& examples,
                                const std::vector<std::size_t>& class_index,
                                double l2, std::vector<double>& grad_w,
                                std::vector<double>& grad_b) {
  const std::size_t num_classes = bias.size();
  grad_w.assign(weights.size(), 0.0);
  grad_b.assign(num_classes, 0.0);
  double loss = 0.0;
  std::vector<double> scores(num_classes);
  const double inv_n = 1.0 / static_cast<double>(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const FeatureVector& fv = examples[i];
    detail::add_scores(weights, bias, num_features, fv, scores);
    loss -= detail::softmax_log_target(scores, class_index[i]);
    for (std::size_t c = 0; c < num_classes; ++c) {
      const double delta = (scores[c] - (c == class_index[i] ? 1.0 : 0.0)) * inv_n;
      grad_b[c] += delta;
      double* row = grad_w.data() + c * num_features;
      for (std::size_t k = 0; k < fv.indices.size(); ++k) {
        row[fv.indices[k]] += delta * fv.values[k];
      }
    }
  }
  loss *= inv_n;
  double reg = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    reg += weights[j] * weights[j];
    grad_w[j] += l2 * weights[j];
  }
  return loss + 0.5 * l2 * reg;
}

struct TrainedWeights {
  std::vector<RioMarker> classes;  // ascending marker value
  std::size_t num_features = 0;
  std::vector<double> weights;  // [classes x features], row-major
  std::vector<double> bias;
  std::vector<double> val_macro_f1_by_epoch;  // empty without validation set
  int best_epoch = -1;                        // 0-based; -1 without validation
};

inline std::size_t predict_index(const TrainedWeights& w, const FeatureVector& fv) {
  std::vector<double> scores;
  detail::add_scores(w.weights, w.bias, w.num_features, fv, scores);
  // First maximum wins: classes are ordered ascending, so exact ties resolve
  // to the lower marker value.
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return best;
}

inline RioMarker predict_marker(const TrainedWeights& w, const FeatureVector& fv) {
  return w.classes[predict_index(w, fv)];
}

// Multinomial logistic regression minimizing mean cross-entropy plus
// (l2/2)*||W||^2. Mini-batch gradient descent with a seeded shuffle per
// epoch; the L2 term is applied as a proximal shrink so that extreme l2
// values stay stable. When a validation set is given, the epoch with the
// best validation macro-F1 is restored at the end.
inline TrainedWeights train(const std::vector<FeatureVector>& examples,
                            const std::vector<RioMarker>& labels,
                            std::size_t num_features, const TrainOptions& opts,
                            const std::vector<FeatureVector>* val_examples = nullptr,
                            const std::vector<RioMarker>* val_labels = nullptr) {
  if (examples.size() != labels.size()) throw Error("train: length mismatch");
  if (examples.empty()) throw Error("train: no examples");
  if (opts.epochs < 1) throw Error("train: epochs must be >= 1");
  if (opts.batch_size < 1) throw Error("train: batch_size must be >= 1");
  if (!(opts.lr > 0.0)) throw Error("train: lr must be positive");
  if (opts.l2 < 0.0) throw Error("train: l2 must be >= 0");

  TrainedWeights w;
  {
    std::set<int> classes;
    for (const auto& l : labels) classes.insert(l.value);
    if (classes.size() < 2) throw Error("train: training data contains a single class");
    for (int c : classes) w.classes.push_back(RioMarker{c});
  }
  std::unordered_map<int, std::size_t> class_pos;
  for (std::size_t c = 0; c < w.classes.size(); ++c) class_pos[w.classes[c].value] = c;
  std::vector<std::size_t> class_index(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    class_index[i] = class_pos[labels[i].value];
  }

  const std::size_t num_classes = w.classes.size();
  w.num_features = num_features;
  w.weights.assign(num_classes * num_features, 0.0);
  w.bias.assign(num_classes, 0.0);

  Rng rng(substream_seed(opts.seed, "train-shuffle"));
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> scores(num_classes);
  std::vector<double> best_weights, best_bias;
  double best_f1 = -1.0;
  const double shrink = 1.0 / (1.0 + opts.lr * opts.l2);

  auto validation_f1 = [&]() {
    std::vector<RioMarker> pred;
    pred.reserve(val_examples->size());
    for (const auto& fv : *val_examples) pred.push_back(predict_marker(w, fv));
    return metrics(*val_labels, pred).macro_f1;
  };

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(opts.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(opts.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      std::vector<double> grad_w(w.weights.size(), 0.0);
      std::vector<double> grad_b(num_classes, 0.0);
      for (std::size_t p = start; p < end; ++p) {
        const std::size_t i = order[p];
        const FeatureVector& fv = examples[i];
        detail::add_scores(w.weights, w.bias, num_features, fv, scores);
        epoch_loss -= detail::softmax_log_target(scores, class_index[i]);
        for (std::size_t c = 0; c < num_classes; ++c) {
          const double delta =
              (scores[c] - (c == class_index[i] ? 1.0 : 0.0)) * inv_batch;
          grad_b[c] += delta;
          double* row = grad_w.data() + c * num_features;
          for (std::size_t k = 0; k < fv.indices.size(); ++k) {
            row[fv.indices[k]] += delta * fv.values[k];
          }
        }
      }
      for (std::size_t j = 0; j < w.weights.size(); ++j) {
        w.weights[j] = (w.weights[j] - opts.lr * grad_w[j]) * shrink;
      }
      for (std::size_t c = 0; c < num_classes; ++c) {
        w.bias[c] -= opts.lr * grad_b[c];
      }
    }
    if (!std::isfinite(epoch_loss)) throw Error("train: diverged");
    if (val_examples && val_labels && !val_examples->empty()) {
      const double f1 = validation_f1();
      w.val_macro_f1_by_epoch.push_back(f1);
      if (f1 > best_f1) {
        best_f1 = f1;
        best_weights = w.weights;
        best_bias = w.bias;
        w.best_epoch = epoch;
      }
    }
  }
  if (w.best_epoch >= 0) {
    w.weights = std::move(best_weights);
    w.bias = std::move(best_bias);
  }
  for (double v : w.weights) {
    if (!std::isfinite(v)) throw Error("train: diverged");
  }
  return w;
}

// A complete text classifier: tokenizer settings are implicit (see
// kTokenizerVersion), the vocabulary and the trained weights travel
// together.
struct LinearModel {
  Vocabulary vocab;
  TrainedWeights trained;
  int min_df = 1;

  RioMarker predict_text(std::string_view text) const {
    return predict_marker(trained, vectorize(tokenize(text), vocab));
  }
};

inline LinearModel train_text_classifier(const std::vector<std::string>& texts,
                                         const std::vector<RioMarker>& labels,
                                         const TrainOptions& opts,
                                         const std::vector<std::string>* val_texts = nullptr,
                                         const std::vector<RioMarker>* val_labels = nullptr) {
  if (texts.size() != labels.size()) throw Error("train: length mismatch");
  std::vector<std::vector<std::string>> corpus;
  corpus.reserve(texts.size());
  for (const auto& t : texts) corpus.push_back(tokenize(t));
  LinearModel model;
  model.min_df = opts.min_df;
  model.vocab = fit_features(corpus, opts.min_df);
  std::vector<FeatureVector> fvs;
  fvs.reserve(corpus.size());
  for (const auto& tokens : corpus) fvs.push_back(vectorize(tokens, model.vocab));
  std::vector<FeatureVector> val_fvs;
  if (val_texts) {
    val_fvs.reserve(val_texts->size());
    for (const auto& t : *val_texts) val_fvs.push_back(vectorize(tokenize(t), model.vocab));
  }
  model.trained = train(fvs, labels, model.vocab.size(), opts,
                        val_texts ? &val_fvs : nullptr, val_labels);
  return model;
}

struct CvReport {
  std::vector<MetricSet> per_fold;
  MetricSet mean;
  MetricSet std_dev;  // population standard deviation across folds
  std::vector<std::vector<double>> val_macro_f1_by_epoch;  // per fold
};

inline std::pair<MetricSet, MetricSet> aggregate_metrics(
    const std::vector<MetricSet>& folds) {
  auto agg = [&](auto getter) {
    std::vector<double> v;
    v.reserve(folds.size());
    for (const auto& m : folds) v.push_back(getter(m));
    return std::pair<double, double>(mean_of(v), population_std(v));
  };
  MetricSet mean, sd;
  std::tie(mean.accuracy, sd.accuracy) = agg([](const MetricSet& m) { return m.accuracy; });
  std::tie(mean.macro_precision, sd.macro_precision) =
      agg([](const MetricSet& m) { return m.macro_precision; });
  std::tie(mean.macro_recall, sd.macro_recall) =
      agg([](const MetricSet& m) { return m.macro_recall; });
  std::tie(mean.macro_f1, sd.macro_f1) = agg([](const MetricSet& m) { return m.macro_f1; });
  std::set<int> classes;
  for (const auto& m : folds) {
    for (const auto& [c, prf] : m.per_class) classes.insert(c);
  }
  for (int c : classes) {
    std::vector<double> p, r, f;
    for (const auto& m : folds) {
      auto it = m.per_class.find(c);
      if (it == m.per_class.end()) continue;
      p.push_back(it->second.precision);
      r.push_back(it->second.recall);
      f.push_back(it->second.f1);
    }
    mean.per_class[c] = {mean_of(p), mean_of(r), mean_of(f)};
    sd.per_class[c] = {population_std(p), population_std(r), population_std(f)};
  }
  return {mean, sd};
}

// Seeded shuffle, then contiguous folds whose sizes differ by at most one.
// The vocabulary is refit on each fold's training split; the held-out fold
// doubles as the validation set for per-epoch checkpointing.
inline CvReport kfold_cv(const std::vector<std::string>& texts,
                         const std::vector<RioMarker>& labels, int k,
                         const TrainOptions& opts) {
  if (k < 2) throw Error("kfold_cv: k must be >= 2");
  if (texts.size() != labels.size()) throw Error("kfold_cv: length mismatch");
  if (texts.size() < static_cast<std::size_t>(k)) {
    throw Error("kfold_cv: fewer examples than folds");
  }
  const std::size_t n = texts.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(substream_seed(opts.seed, "cv-shuffle"));
  rng.shuffle(order);

  CvReport report;
  const std::size_t base = n / static_cast<std::size_t>(k);
  const std::size_t extra = n % static_cast<std::size_t>(k);
  std::size_t start = 0;
  for (int fold = 0; fold < k; ++fold) {
    const std::size_t size = base + (static_cast<std::size_t>(fold) < extra ? 1 : 0);
    std::vector<std::string> train_texts, val_texts;
    std::vector<RioMarker> train_labels, val_labels;
    for (std::size_t p = 0; p < n; ++p) {
      const std::size_t i = order[p];
      if (p >= start && p < start + size) {
        val_texts.push_back(texts[i]);
        val_labels.push_back(labels[i]);
      } else {
        train_texts.push_back(texts[i]);
        train_labels.push_back(labels[i]);
      }
    }
    start += size;
    TrainOptions fold_opts = opts;
    fold_opts.seed = substream_seed(opts.seed, "cv-fold-" + std::to_string(fold));
    LinearModel model =
        train_text_classifier(train_texts, train_labels, fold_opts, &val_texts, &val_labels);
    std::vector<RioMarker> pred;
    pred.reserve(val_texts.size());
    for (const auto& t : val_texts) pred.push_back(model.predict_text(t));
    report.per_fold.push_back(metrics(val_labels, pred));
    report.val_macro_f1_by_epoch.push_back(model.trained.val_macro_f1_by_epoch);
  }
  std::tie(report.mean, report.std_dev) = aggregate_metrics(report.per_fold);
  return report;
}

enum class PredictionSource { builtin, external };

struct PredictionSet {
  PredictionSource source = PredictionSource::builtin;
  std::unordered_map<std::string, RioMarker> predictions;
};

struct PredictionParseResult {
  PredictionSet set;
  std::vector<RowIssue> skipped;
};

// Predictions file: `id,predicted_marker` with markers in {0,1,2,99}, as CSV
// or JSON-Lines. Out-of-range rows are rejected with their line number;
// duplicate ids are fatal.
inline PredictionParseResult load_external_predictions(std::istream& in,
                                                       RecordFormat format) {
  PredictionParseResult result;
  result.set.source = PredictionSource::external;
  auto insert = [&](const std::string& id, long marker, long line) {
    if (id.empty()) {
      result.skipped.push_back({line, "missing id"});
      return;
    }
    if (!RioMarker::valid(static_cast<int>(marker))) {
      result.skipped.push_back({line, "marker out of range"});
      return;
    }
    if (!result.set.predictions.emplace(id, RioMarker{static_cast<int>(marker)}).second) {
      throw Error("duplicate prediction for id '" + id + "' at line " +
                  std::to_string(line));
    }
  };
  if (format == RecordFormat::csv) {
    csv::Reader reader(in);
    std::vector<std::string> row;
    if (!reader.next(row)) throw Error("empty predictions file: missing header");
    if (row.size() != 2 || row[0] != "id" || row[1] != "predicted_marker") {
      throw Error("malformed predictions header: expected id,predicted_marker");
    }
    while (reader.next(row)) {
      const long line = reader.row_line();
      if (row.size() == 1 && row[0].empty()) continue;
      long marker = -1;
      if (row.size() != 2 || !detail::parse_int(row[1], marker)) {
        result.skipped.push_back({line, "malformed prediction row"});
        continue;
      }
      insert(row[0], marker, line);
    }
  } else {
    std::string line_text;
    long line = 0;
    while (std::getline(in, line_text)) {
      ++line;
      if (!line_text.empty() && line_text.back() == '\r') line_text.pop_back();
      if (trim(line_text).empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line_text, nullptr, false);
      if (j.is_discarded() || !j.is_object() || !j.contains("id") ||
          !j["id"].is_string() || !j.contains("predicted_marker") ||
          !j["predicted_marker"].is_number_integer()) {
        result.skipped.push_back({line, "malformed prediction row"});
        continue;
      }
      insert(j["id"].get<std::string>(), j["predicted_marker"].get<long>(), line);
    }
  }
  return result;
}

inline nlohmann::json model_to_json(const LinearModel& model) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["tokenizer_version"] = kTokenizerVersion;
  j["min_df"] = model.min_df;
  nlohmann::json vocab = nlohmann::json::object();
  for (const auto& [term, id] : model.vocab.token_to_id) vocab[term] = id;
  j["vocabulary"] = std::move(vocab);
  j["idf"] = model.vocab.idf;
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : model.trained.classes) classes.push_back(c.value);
  j["classes"] = std::move(classes);
  nlohmann::json weights = nlohmann::json::array();
  const std::size_t f = model.trained.num_features;
  for (std::size_t c = 0; c < model.trained.classes.size(); ++c) {
    weights.push_back(std::vector<double>(model.trained.weights.begin() + c * f,
                                          model.trained.weights.begin() + (c + 1) * f));
  }
  j["weights"] = std::move(weights);
  j["bias"] = model.trained.bias;
  return j;
}

inline LinearModel model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("format_version")) {
    throw Error("model file: not a riomark model");
  }
  if (j["format_version"].get<int>() != kModelFormatVersion) {
    throw Error("model file: unsupported format_version");
  }
  if (j["tokenizer_version"].get<std::string>() != kTokenizerVersion) {
    throw Error("model file: tokenizer_version mismatch (model: " +
                j["tokenizer_version"].get<std::string>() + ", tool: " +
                kTokenizerVersion + ")");
  }
  LinearModel model;
  model.min_df = j.value("min_df", 1);
  for (const auto& [term, id] : j["vocabulary"].items()) {
    model.vocab.token_to_id[term] = id.get<std::uint32_t>();
  }
  model.vocab.idf = j["idf"].get<std::vector<double>>();
  if (model.vocab.idf.size() != model.vocab.token_to_id.size()) {
    throw Error("model file: idf/vocabulary size mismatch");
  }
  for (int c : j["classes"].get<std::vector<int>>()) {
    model.trained.classes.push_back(RioMarker{c});
  }
  model.trained.num_features = model.vocab.size();
  model.trained.bias = j["bias"].get<std::vector<double>>();
  if (model.trained.bias.size() != model.trained.classes.size()) {
    throw Error("model file: bias/classes size mismatch");
  }
  for (const auto& row : j["weights"]) {
    auto r = row.get<std::vector<double>>();
    if (r.size() != model.trained.num_features) {
      throw Error("model file: weight row size mismatch");
    }
    model.trained.weights.insert(model.trained.weights.end(), r.begin(), r.end());
  }
  if (model.trained.weights.size() !=
      model.trained.classes.size() * model.trained.num_features) {
    throw Error("model file: weight matrix size mismatch");
  }
  return model;
}

inline void save_model(const LinearModel& model, std::ostream& out) {
  out << model_to_json(model).dump(2) << "\n";
}

inline LinearModel load_model(std::istream& in) {
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error("model file: malformed JSON");
  return model_from_json(j);
}

}  // namespace riomark
