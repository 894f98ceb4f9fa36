#pragma once

// Experiment harness: dimension sweeps, the ablation grid and an analytic
// per-inference FLOPs estimate. Reports are JSON lines: one header object,
// then one object per trained model.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypertext/classifier.hpp"
#include "hypertext/error.hpp"
#include "hypertext/model.hpp"
#include "hypertext/optim.hpp"
#include "hypertext/textcorpus.hpp"

namespace hypertext::eval {

using model::Architecture;
using model::Geometry;
using model::OutputKind;
using model::Pooling;

// Counting convention: add, subtract, multiply, divide and compare cost one
// flop each (a multiply-add is two); tanh, atanh, sqrt and exp cost
// `transcendental` flops each.
struct FlopCosts {
  double transcendental = 10.0;
};

// Per-stage counts for one inference over k pooled rows.
struct FlopBreakdown {
  double to_klein = 0;       // per-row Poincare -> Klein map, all rows
  double lorentz = 0;        // per-row Lorentz factors, all rows
  double pooling = 0;        // midpoint or mean accumulation
  double to_poincare = 0;    // Klein -> Poincare map of the pooled point
  double projection = 0;     // ball clamp of a Euclidean mean before a Mobius layer
  double output_layer = 0;   // Mobius matvec + Mobius add, or affine map
  double softmax = 0;

  double total() const { return to_klein + lorentz + pooling + to_poincare + projection + output_layer + softmax; }
};

inline FlopBreakdown flops_for(const Architecture& arch, double dim, double n_labels, double tokens,
                               const FlopCosts& costs = {}) {
  const double d = dim;
  const double n = n_labels;
  const double k = tokens;
  const double t = costs.transcendental;
  FlopBreakdown f;
  if (arch.pooling == Pooling::kEinstein) {
    f.to_klein = k * (3 * d + 2);        // |p|^2, 1 + |p|^2, 2 / (.), scale
    f.lorentz = k * (2 * d + 2 + t);     // |k|^2, 1 - |k|^2, sqrt, reciprocal
    f.pooling = 2 * k * d + k + d;       // weighted sum, sum of weights, normalize
    f.to_poincare = 3 * d + 2 + t;       // |m|^2, 1 - ., sqrt, 1 + ., divide
  } else {
    f.pooling = k * d + d;               // sum, scale by 1/k
    if (arch.output == OutputKind::kMobius) f.projection = 2 * d + t + 1;  // norm, compare
  }
  if (arch.output == OutputKind::kMobius) {
    // matvec: M x, |Mx|, |x|, sqrt(c)|x|, atanh, ratio, tanh, final scale
    const double matvec = 2 * n * d + (2 * n + t) + (2 * d + t) + 1 + t + 2 + t + (2 + n);
    // add: three inner products, alpha, beta, denominator, numerator, divide
    const double add = 6 * n + 5 + 2 + 5 + 3 * n + n;
    f.output_layer = matvec + add;
  } else {
    f.output_layer = 2 * n * d + n;
  }
  f.softmax = n * t + 2 * n;  // exp, sum, divide
  return f;
}

struct FlopsEstimate {
  double hyperbolic = 0;
  double euclidean = 0;
  double ratio = 0;
};

// Full HyperText against the fastText baseline at the same shape.
inline FlopsEstimate estimate_flops(std::size_t dim, std::size_t n_labels, double avg_tokens,
                                    const FlopCosts& costs = {}) {
  if (!(avg_tokens >= 1.0)) throw ConfigError("average token count must be >= 1");
  if (dim == 0 || n_labels == 0) throw ConfigError("model shape must be non-empty");
  FlopsEstimate e;
  e.hyperbolic = flops_for(Architecture::hypertext(), static_cast<double>(dim), static_cast<double>(n_labels), avg_tokens, costs).total();
  e.euclidean = flops_for(Architecture::fasttext(), static_cast<double>(dim), static_cast<double>(n_labels), avg_tokens, costs).total();
  e.ratio = e.hyperbolic / e.euclidean;
  return e;
}

inline constexpr double kReportedRatioLow = 4.5;
inline constexpr double kReportedRatioHigh = 6.7;

inline nlohmann::ordered_json flops_convention(const FlopCosts& costs) {
  return {{"arithmetic", 1}, {"multiply_add", 2}, {"transcendental", costs.transcendental}};
}

struct ReportRow {
  std::string dataset;
  std::string variant;  // empty for sweep rows
  Architecture arch;
  std::size_t dim = 0;
  double accuracy = 0.0;
  double train_seconds = 0.0;
  double flops_est = 0.0;
  std::string error;  // non-empty when training or testing failed

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    if (!variant.empty()) j["variant"] = variant;
    j["dataset"] = dataset;
    j["geometry"] = model::to_string(arch.geometry);
    j["dim"] = dim;
    j["pooling"] = model::to_string(arch.pooling);
    j["classifier"] = model::to_string(arch.output);
    j["accuracy"] = accuracy;
    j["train_seconds"] = train_seconds;
    j["flops_est"] = flops_est;
    if (!error.empty()) j["error"] = error;
    return j;
  }
};

struct Report {
  std::string kind;  // "sweep" or "ablation"
  std::string dataset;
  std::string config_hash;
  FlopCosts costs;
  std::vector<ReportRow> rows;

  void write_jsonl(std::ostream& out) const {
    nlohmann::ordered_json header;
    header["report"] = kind;
    header["dataset"] = dataset;
    header["config_hash"] = config_hash;
    header["flops_convention"] = flops_convention(costs);
    header["reported_flops_ratio_band"] = {kReportedRatioLow, kReportedRatioHigh};
    out << nlohmann::ordered_json{{"header", header}}.dump() << '\n';
    for (const auto& row : rows) out << row.to_json().dump() << '\n';
  }
};

struct RunOptions {
  std::string dataset = "dataset";
  // Off makes reports byte-identical across runs: train_seconds is written as 0.
  bool record_timing = true;
  FlopCosts costs;
};

inline std::string config_hash(const optim::TrainConfig& cfg) {
  char canonical[256];
  std::snprintf(canonical, sizeof canonical,
                "lr=%.17g;opt=%s;epoch=%d;thread=%d;seed=%llu;c=%.17g;ngrams=%d;bucket=%lld;mincount=%d", cfg.lr,
                optim::optimizer_name(cfg.optimizer), cfg.epochs,
                cfg.threads, static_cast<unsigned long long>(cfg.seed), cfg.arch.curvature.value(),
                cfg.corpus.word_ngrams, static_cast<long long>(cfg.corpus.bucket), cfg.corpus.min_count);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(textcorpus::fnv1a(canonical)));
  return hex;
}

// Mean number of pooled rows (words + n-grams) per document of `path`.
inline double average_pooled_rows(const TextClassifier& clf, const std::string& path) {
  std::ifstream in(path);
  std::string line;
  double total = 0;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    if (textcorpus::split_whitespace(line).empty()) continue;
    const auto doc = clf.document(line);
    total += static_cast<double>(doc.token_ids.size() + doc.ngram_ids.size());
    ++count;
  }
  return count == 0 ? 1.0 : std::max(1.0, total / static_cast<double>(count));
}

// Trains one model and tests it. Failures are recorded on the row.
inline ReportRow run_one(const std::string& train_path, const std::string& test_path, optim::TrainConfig cfg,
                         const RunOptions& opts) {
  ReportRow row;
  row.dataset = opts.dataset;
  row.arch = cfg.arch;
  row.dim = cfg.dim;
  try {
    const auto start = std::chrono::steady_clock::now();
    const auto result = optim::train(train_path, cfg);
    const auto stop = std::chrono::steady_clock::now();
    if (opts.record_timing) row.train_seconds = std::chrono::duration<double>(stop - start).count();
    std::ifstream test(test_path);
    if (!test) throw Error("cannot open test file: " + test_path);
    const auto acc = evaluate(result.classifier, test);
    if (acc.examples == 0) throw EmptyCorpus("test file has no labeled examples");
    row.accuracy = acc.value();
    row.flops_est = flops_for(cfg.arch, static_cast<double>(cfg.dim), static_cast<double>(result.classifier.vocab.n_labels()),
                              average_pooled_rows(result.classifier, test_path), opts.costs)
                        .total();
  } catch (const std::exception& e) {
    row.accuracy = 0.0;
    row.error = e.what();
  }
  return row;
}

inline Architecture architecture_for(Geometry g, const hypergeo::Curvature& c) {
  return g == Geometry::kHyperbolic ? Architecture::hypertext(c) : Architecture::fasttext();
}

// One model per (geometry, dim); rows sorted by geometry name, then dim.
inline Report run_dimension_sweep(const std::string& train_path, const std::string& test_path,
                                  const std::vector<std::size_t>& dims, const std::vector<Geometry>& geometries,
                                  const optim::TrainConfig& base, const RunOptions& opts = {}) {
  if (dims.empty()) throw ConfigError("dimension sweep needs at least one dim");
  if (geometries.empty()) throw ConfigError("dimension sweep needs at least one geometry");
  Report report{"sweep", opts.dataset, config_hash(base), opts.costs, {}};
  for (Geometry g : geometries) {
    for (std::size_t d : dims) {
      optim::TrainConfig cfg = base;
      cfg.dim = d;
      cfg.arch = architecture_for(g, base.arch.curvature);
      report.rows.push_back(run_one(train_path, test_path, cfg, opts));
    }
  }
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const ReportRow& a, const ReportRow& b) {
    const auto ga = model::to_string(a.arch.geometry);
    const auto gb = model::to_string(b.arch.geometry);
    return ga != gb ? ga < gb : a.dim < b.dim;
  });
  return report;
}

// The three ablation variants. "-PE&EM" keeps the Mobius classifier on top of
// Euclidean embeddings with mean pooling; "-ML" is the fastText baseline.
inline std::vector<std::pair<std::string, Architecture>> ablation_variants(const hypergeo::Curvature& c) {
  return {
      {"full", Architecture::hypertext(c)},
      {"-PE&EM", Architecture{Geometry::kEuclidean, Pooling::kMean, OutputKind::kMobius, c}},
      {"-ML", Architecture::fasttext()},
  };
}

inline Report run_ablations(const std::string& train_path, const std::string& test_path,
                            const optim::TrainConfig& base, const RunOptions& opts = {}) {
  Report report{"ablation", opts.dataset, config_hash(base), opts.costs, {}};
  for (const auto& [name, arch] : ablation_variants(base.arch.curvature)) {
    optim::TrainConfig cfg = base;
    cfg.arch = arch;
    auto row = run_one(train_path, test_path, cfg, opts);
    row.variant = name;
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace hypertext::eval
