#pragma once

// Training: Riemannian SGD (default) or Riemannian Adam for ball-constrained
// parameters with their Euclidean counterparts for the rest, linear
// learning-rate decay over the token budget, per-epoch shuffling and optional
// lock-free multi-threaded updates.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <memory>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "hypertext/classifier.hpp"
#include "hypertext/error.hpp"
#include "hypertext/hypergeo.hpp"
#include "hypertext/model.hpp"
#include "hypertext/textcorpus.hpp"

namespace hypertext::optim {

enum class Optimizer { kSgd, kRiemannianAdam };

inline const char* optimizer_name(Optimizer o) { return o == Optimizer::kSgd ? "sgd" : "radam"; }

inline Optimizer parse_optimizer(std::string_view s) {
  if (s == "sgd") return Optimizer::kSgd;
  if (s == "radam") return Optimizer::kRiemannianAdam;
  throw ConfigError("unknown optimizer '" + std::string(s) + "'");
}

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  double lr = 0.05;
  Optimizer optimizer = Optimizer::kSgd;
  AdamConfig adam;
  int epochs = 5;
  int threads = 1;
  std::uint64_t seed = 42;
  std::size_t dim = 10;
  model::Architecture arch = model::Architecture::hypertext();
  textcorpus::CorpusConfig corpus;
  // Progress lines go here every 1e5 tokens when non-null.
  std::ostream* progress = nullptr;

  void validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
    if (epochs < 1) throw ConfigError("epoch must be >= 1");
    if (threads < 1) throw ConfigError("thread must be >= 1");
    if (dim < 1) throw ConfigError("dim must be >= 1");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
      throw ConfigError("adam betas must lie in [0, 1)");
    }
    if (!(adam.eps > 0.0)) throw ConfigError("adam eps must be positive");
    arch.validate();
    corpus.validate();
  }
};

struct TrainState {
  double lr0 = 0.0;
  std::uint64_t tokens_processed = 0;
  std::uint64_t total_token_budget = 1;
};

// lr0 * max(0, 1 - progress).
inline double lr_at(const TrainState& state) {
  if (state.total_token_budget == 0) throw ConfigError("token budget must be positive");
  const double progress = static_cast<double>(state.tokens_processed) / static_cast<double>(state.total_token_budget);
  return state.lr0 * std::max(0.0, 1.0 - progress);
}

// One SGD step. Embedding rows of a hyperbolic table and the bias of a Mobius
// layer take a Riemannian step followed by the ball retraction; everything
// else takes a plain Euclidean step. Nothing is written when a gradient is
// not finite.
template <std::floating_point Real>
void apply_gradients(model::Model<Real>& m, const model::GradientSet& grads, double lr,
                     std::size_t example_index = 0) {
  using namespace hypergeo::kernel;
  const std::size_t d = m.dim();
  const std::size_t n = m.n_labels();
  if (grads.dim != d || grads.m.size() != n * d || grads.b.size() != n || grads.row_grads.size() != grads.rows.size() * d) {
    throw DimensionMismatch("gradient shapes do not match the model");
  }
  if (!grads.all_finite()) throw NonFiniteGradient(example_index);

  std::vector<double> v(d);
  const bool hyperbolic_rows = m.emb.geometry() == model::Geometry::kHyperbolic;
  for (std::size_t i = 0; i < grads.rows.size(); ++i) {
    const auto r = static_cast<std::size_t>(grads.rows[i]);
    const auto g = grads.row_grad(i);
    m.emb.load_row(r, v);
    auto dst = m.emb.row(r);
    if (hyperbolic_rows) {
      const double step = lr * riemannian_scale(v);
      for (std::size_t j = 0; j < d; ++j) v[j] -= step * g[j];
      model::detail::store_ball(dst, std::span<double>(v), hypergeo::kMaxNorm);
    } else {
      for (std::size_t j = 0; j < d; ++j) model::detail::store(dst[j], v[j] - lr * g[j]);
    }
  }

  for (std::size_t i = 0; i < m.out.m.size(); ++i) {
    model::detail::store(m.out.m[i], model::detail::load(m.out.m[i]) - lr * grads.m[i]);
  }

  std::vector<double> b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = model::detail::load(m.out.b[i]);
  if (m.out.kind == model::OutputKind::kMobius) {
    const auto& c = m.out.curvature;
    const double step = lr * riemannian_scale(b, c.value());
    for (std::size_t i = 0; i < n; ++i) b[i] -= step * grads.b[i];
    model::detail::store_ball(std::span<Real>(m.out.b), std::span<double>(b), c.max_norm());
  } else {
    for (std::size_t i = 0; i < n; ++i) model::detail::store(m.out.b[i], b[i] - lr * grads.b[i]);
  }
}

// Adam with Riemannian moments for ball parameters. A ball block (one
// embedding row, or the Mobius bias) keeps a moment vector over its
// Riemannian gradient and a scalar second moment over its squared Riemannian
// norm; the step direction is applied through the same retraction as SGD and
// the first moment is carried over unchanged. Euclidean parameters get
// ordinary per-coordinate Adam. State is lazy: an embedding row's moments and
// bias-correction count advance only when the row receives a gradient.
template <std::floating_point Real>
class RiemannianAdam {
 public:
  RiemannianAdam(const model::Model<Real>& m, AdamConfig cfg = {})
      : cfg_(cfg),
        dim_(m.dim()),
        hyperbolic_rows_(m.emb.geometry() == model::Geometry::kHyperbolic),
        mobius_bias_(m.out.kind == model::OutputKind::kMobius),
        row_m_(m.emb.rows() * dim_, 0.0f),
        row_v_(hyperbolic_rows_ ? m.emb.rows() : m.emb.rows() * dim_, 0.0f),
        row_t_(m.emb.rows(), 0),
        m_m_(m.out.m.size(), 0.0),
        m_v_(m.out.m.size(), 0.0),
        b_m_(m.out.b.size(), 0.0),
        b_v_(mobius_bias_ ? 1 : m.out.b.size(), 0.0) {}

  // One update; same contract as apply_gradients.
  void step(model::Model<Real>& m, const model::GradientSet& grads, double lr, std::size_t example_index = 0) {
    using namespace hypergeo::kernel;
    const std::size_t d = dim_;
    const std::size_t n = m.n_labels();
    if (m.dim() != d || m.emb.rows() != row_t_.size() || grads.dim != d || grads.m.size() != n * d ||
        grads.b.size() != n || grads.row_grads.size() != grads.rows.size() * d) {
      throw DimensionMismatch("gradient shapes do not match the optimizer state");
    }
    if (!grads.all_finite()) throw NonFiniteGradient(example_index);

    std::vector<double> x(d), mom(d);
    std::vector<double> vv(hyperbolic_rows_ ? 1 : d);
    for (std::size_t i = 0; i < grads.rows.size(); ++i) {
      const auto r = static_cast<std::size_t>(grads.rows[i]);
      const auto t = std::atomic_ref<std::uint32_t>(row_t_[r]).fetch_add(1, std::memory_order_relaxed) + 1;
      m.emb.load_row(r, x);
      for (std::size_t j = 0; j < d; ++j) mom[j] = model::detail::load(row_m_[r * d + j]);
      for (std::size_t j = 0; j < vv.size(); ++j) vv[j] = model::detail::load(row_v_[r * vv.size() + j]);
      update(x, mom, vv, grads.row_grad(i), t, lr, hyperbolic_rows_ ? 1.0 : 0.0);
      auto dst = m.emb.row(r);
      if (hyperbolic_rows_) {
        model::detail::store_ball(dst, std::span<double>(x), hypergeo::kMaxNorm);
      } else {
        for (std::size_t j = 0; j < d; ++j) model::detail::store(dst[j], x[j]);
      }
      for (std::size_t j = 0; j < d; ++j) model::detail::store(row_m_[r * d + j], mom[j]);
      for (std::size_t j = 0; j < vv.size(); ++j) model::detail::store(row_v_[r * vv.size() + j], vv[j]);
    }

    const auto t = std::atomic_ref<std::uint64_t>(out_t_).fetch_add(1, std::memory_order_relaxed) + 1;
    {
      std::vector<double> w(n * d), wm(n * d), wv(n * d);
      for (std::size_t i = 0; i < w.size(); ++i) {
        w[i] = model::detail::load(m.out.m[i]);
        wm[i] = model::detail::load(m_m_[i]);
        wv[i] = model::detail::load(m_v_[i]);
      }
      update(w, wm, wv, grads.m, t, lr, 0.0);
      for (std::size_t i = 0; i < w.size(); ++i) {
        model::detail::store(m.out.m[i], w[i]);
        model::detail::store(m_m_[i], wm[i]);
        model::detail::store(m_v_[i], wv[i]);
      }
    }

    std::vector<double> b(n), bm(n), bv(b_v_.size());
    for (std::size_t i = 0; i < n; ++i) {
      b[i] = model::detail::load(m.out.b[i]);
      bm[i] = model::detail::load(b_m_[i]);
    }
    for (std::size_t i = 0; i < bv.size(); ++i) bv[i] = model::detail::load(b_v_[i]);
    const double c = m.out.curvature.value();
    update(b, bm, bv, grads.b, t, lr, mobius_bias_ ? c : 0.0);
    if (mobius_bias_) {
      model::detail::store_ball(std::span<Real>(m.out.b), std::span<double>(b), m.out.curvature.max_norm());
    } else {
      for (std::size_t i = 0; i < n; ++i) model::detail::store(m.out.b[i], b[i]);
    }
    for (std::size_t i = 0; i < n; ++i) model::detail::store(b_m_[i], bm[i]);
    for (std::size_t i = 0; i < bv.size(); ++i) model::detail::store(b_v_[i], bv[i]);
  }

 private:
  // Updates x, its first moment and its second moment in place. curvature > 0
  // marks a ball block with one scalar second moment; 0 means Euclidean.
  // Ball blocks still need projecting by the caller.
  void update(std::span<double> x, std::span<double> mom, std::span<double> v, std::span<const double> g,
              std::uint64_t t, double lr, double curvature) const {
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t));
    if (curvature > 0.0) {
      const double s = hypergeo::kernel::riemannian_scale(x, curvature);
      double rnorm_sq = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const double rg = s * g[j];
        mom[j] = cfg_.beta1 * mom[j] + (1.0 - cfg_.beta1) * rg;
        rnorm_sq += rg * rg;
      }
      // Riemannian norm: lambda^2 |rg|^2 with lambda^2 = 1/s.
      v[0] = cfg_.beta2 * v[0] + (1.0 - cfg_.beta2) * (s > 0.0 ? rnorm_sq / s : 0.0);
      const double denom = std::sqrt(v[0] / c2) + cfg_.eps;
      for (std::size_t j = 0; j < x.size(); ++j) x[j] -= lr * (mom[j] / c1) / denom;
      return;
    }
    for (std::size_t j = 0; j < x.size(); ++j) {
      mom[j] = cfg_.beta1 * mom[j] + (1.0 - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      x[j] -= lr * (mom[j] / c1) / (std::sqrt(v[j] / c2) + cfg_.eps);
    }
  }

  AdamConfig cfg_;
  std::size_t dim_;
  bool hyperbolic_rows_;
  bool mobius_bias_;
  std::vector<float> row_m_;
  std::vector<float> row_v_;
  std::vector<std::uint32_t> row_t_;
  std::vector<double> m_m_;
  std::vector<double> m_v_;
  std::vector<double> b_m_;
  std::vector<double> b_v_;
  std::uint64_t out_t_ = 0;
};

struct EpochStats {
  double mean_loss = 0.0;
  std::size_t examples = 0;
};

// Runs cfg.epochs passes of per-example updates over `docs`, updating `m` in
// place. Returns the mean training loss of each epoch. With one thread the
// result is a pure function of (m, docs, cfg).
template <std::floating_point Real>
std::vector<EpochStats> train_documents(model::Model<Real>& m, const std::vector<textcorpus::Document>& docs,
                                        const TrainConfig& cfg) {
  cfg.validate();
  if (docs.empty()) throw EmptyCorpus("no training documents");
  for (const auto& doc : docs) {
    if (doc.label() < 0 || static_cast<std::size_t>(doc.label()) >= m.n_labels()) {
      throw NoLabel("training document without a valid label");
    }
  }

  std::uint64_t corpus_tokens = 0;
  for (const auto& doc : docs) corpus_tokens += doc.raw_tokens;
  TrainState base;
  base.lr0 = cfg.lr;
  base.total_token_budget = std::max<std::uint64_t>(1, corpus_tokens * static_cast<std::uint64_t>(cfg.epochs));

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::unique_ptr<RiemannianAdam<Real>> adam;
  if (cfg.optimizer == Optimizer::kRiemannianAdam) adam = std::make_unique<RiemannianAdam<Real>>(m, cfg.adam);

  std::atomic<std::uint64_t> tokens{0};
  std::atomic<bool> stop{false};
  const auto start_time = std::chrono::steady_clock::now();
  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), docs.size());

  std::vector<EpochStats> history;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> loss_sums(n_threads, 0.0);
    std::vector<std::exception_ptr> errors(n_threads);

    const auto worker = [&](std::size_t tid) {
      model::ForwardTrace trace;
      model::GradientSet grads;
      const std::size_t begin = order.size() * tid / n_threads;
      const std::size_t end = order.size() * (tid + 1) / n_threads;
      std::uint64_t next_report = 100'000;
      double running = 0.0;
      std::size_t seen = 0;
      try {
        for (std::size_t pos = begin; pos < end && !stop.load(std::memory_order_relaxed); ++pos) {
          const std::size_t idx = order[pos];
          const auto& doc = docs[idx];
          TrainState state = base;
          state.tokens_processed = tokens.load(std::memory_order_relaxed);
          const double lr = lr_at(state);
          model::forward(doc, m, trace);
          const double l = model::loss(trace, doc.label());
          model::backward(trace, doc.label(), m, grads);
          if (adam) {
            adam->step(m, grads, lr, idx);
          } else {
            apply_gradients(m, grads, lr, idx);
          }
          loss_sums[tid] += l;
          running += l;
          ++seen;
          const auto done = tokens.fetch_add(doc.raw_tokens, std::memory_order_relaxed) + doc.raw_tokens;
          if (tid == 0 && cfg.progress != nullptr && done >= next_report) {
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
            char buf[160];
            std::snprintf(buf, sizeof buf, "progress: %5.1f%%  tokens/sec: %9.0f  lr: %.6f  loss: %.6f\n",
                          100.0 * std::min(1.0, static_cast<double>(done) / static_cast<double>(base.total_token_budget)),
                          secs > 0 ? static_cast<double>(done) / secs : 0.0, lr, running / static_cast<double>(seen));
            *cfg.progress << buf << std::flush;
            next_report = done + 100'000;
          }
        }
      } catch (...) {
        errors[tid] = std::current_exception();
        stop = true;
      }
    };

    if (n_threads == 1) {
      worker(0);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(n_threads);
      for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
      for (auto& th : pool) th.join();
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    history.push_back({std::accumulate(loss_sums.begin(), loss_sums.end(), 0.0) / static_cast<double>(docs.size()),
                       docs.size()});
  }
  return history;
}

struct TrainResult {
  TextClassifier classifier;
  double final_loss = 0.0;  // mean loss over the last epoch
  std::vector<EpochStats> epochs;
};

inline TrainResult train(std::istream& corpus, const TrainConfig& cfg) {
  cfg.validate();
  std::stringstream buffer;
  buffer << corpus.rdbuf();
  const std::string text = buffer.str();

  TrainResult result;
  result.classifier.corpus = cfg.corpus;
  {
    std::istringstream in(text);
    result.classifier.vocab = textcorpus::Vocab::build(in, cfg.corpus);
  }
  if (result.classifier.vocab.n_labels() < 2) throw EmptyCorpus("training needs at least 2 labels");
  std::vector<textcorpus::Document> docs;
  {
    std::istringstream in(text);
    docs = textcorpus::read_documents(in, result.classifier.vocab, cfg.corpus, textcorpus::ParseMode::kTrain);
  }
  result.classifier.model = model::init_model<float>(result.classifier.vocab, cfg.corpus.bucket, cfg.dim, cfg.arch, cfg.seed);
  result.epochs = train_documents(result.classifier.model, docs, cfg);
  result.final_loss = result.epochs.back().mean_loss;
  return result;
}

inline TrainResult train(const std::string& path, const TrainConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open training file: " + path);
  return train(in, cfg);
}

}  // namespace hypertext::optim
