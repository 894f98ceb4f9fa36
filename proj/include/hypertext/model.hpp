#pragma once

// The classifier network: an embedding table pooled into one vector, an
// output layer and a softmax. The hyperbolic configuration pools Poincare
// rows through the Klein model's Einstein midpoint and classifies with a
// Mobius linear layer; the Euclidean configuration is the fastText
// mean + affine baseline. Pooling and output kind can be mixed for ablations.
//
// Parameters are stored as `Real` (float by default); every forward and
// backward computation runs in double.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hypertext/error.hpp"
#include "hypertext/hypergeo.hpp"
#include "hypertext/textcorpus.hpp"

namespace hypertext::model {

using hypergeo::Curvature;
using textcorpus::Document;

enum class Geometry : std::uint8_t { kHyperbolic = 0, kEuclidean = 1 };
enum class Pooling : std::uint8_t { kEinstein = 0, kMean = 1 };
enum class OutputKind : std::uint8_t { kMobius = 0, kLinear = 1 };

inline std::string_view to_string(Geometry g) { return g == Geometry::kHyperbolic ? "hyperbolic" : "euclidean"; }
inline std::string_view to_string(Pooling p) { return p == Pooling::kEinstein ? "einstein" : "mean"; }
inline std::string_view to_string(OutputKind k) { return k == OutputKind::kMobius ? "mobius" : "linear"; }

struct Architecture {
  Geometry geometry = Geometry::kHyperbolic;
  Pooling pooling = Pooling::kEinstein;
  OutputKind output = OutputKind::kMobius;
  Curvature curvature{1.0};

  static Architecture hypertext(Curvature c = Curvature{1.0}) {
    return {Geometry::kHyperbolic, Pooling::kEinstein, OutputKind::kMobius, c};
  }
  static Architecture fasttext() { return {Geometry::kEuclidean, Pooling::kMean, OutputKind::kLinear, Curvature{1.0}}; }

  // The Einstein midpoint is only defined for rows that live in the ball.
  void validate() const {
    if (pooling == Pooling::kEinstein && geometry != Geometry::kHyperbolic) {
      throw ConfigError("einstein pooling requires hyperbolic geometry");
    }
  }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

namespace detail {

// Parameters may be shared between hogwild workers, so every access to stored
// values is a relaxed atomic. On mainstream targets these compile to plain
// loads and stores.
template <std::floating_point Real>
double load(const Real& x) {
  return static_cast<double>(std::atomic_ref<Real>(const_cast<Real&>(x)).load(std::memory_order_relaxed));
}

template <std::floating_point Real>
void store(Real& x, double v) {
  std::atomic_ref<Real>(x).store(static_cast<Real>(v), std::memory_order_relaxed);
}

// Writes a ball point into reduced-precision storage. Rounding can push a
// point sitting on the clamp radius just outside it, so shrink until the
// stored value satisfies the bound.
template <std::floating_point Real>
void store_ball(std::span<Real> dst, std::span<double> v, double max_norm) {
  hypergeo::kernel::project_to_ball(v, max_norm);
  for (int attempt = 0;; ++attempt) {
    double sq = 0.0;
    for (double x : v) {
      const double r = static_cast<double>(static_cast<Real>(x));
      sq += r * r;
    }
    const double n = std::sqrt(sq);
    if (n <= max_norm || attempt == 8) break;
    hypergeo::kernel::scale(v, max_norm / n * (1.0 - 4.0 * std::numeric_limits<Real>::epsilon()));
  }
  for (std::size_t i = 0; i < v.size(); ++i) store(dst[i], v[i]);
}

}  // namespace detail

template <std::floating_point Real = float>
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t rows, std::size_t dim, Geometry geometry)
      : rows_(rows), dim_(dim), geometry_(geometry), data_(rows * dim, Real{0}) {
    if (dim == 0) throw DimensionMismatch("embedding dimension must be >= 1");
  }

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  Geometry geometry() const { return geometry_; }

  std::span<Real> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  std::span<const Real> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

  void load_row(std::size_t i, std::span<double> out) const {
    const auto r = row(i);
    for (std::size_t j = 0; j < dim_; ++j) out[j] = detail::load(r[j]);
  }

  std::vector<Real>& data() { return data_; }
  const std::vector<Real>& data() const { return data_; }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  Geometry geometry_ = Geometry::kHyperbolic;
  std::vector<Real> data_;
};

// o = M (x) pooled (+) b for the Mobius kind, o = M pooled + b for linear.
// M is n_labels x dim, row-major.
template <std::floating_point Real = float>
struct OutputLayer {
  std::size_t n_labels = 0;
  std::size_t dim = 0;
  OutputKind kind = OutputKind::kMobius;
  Curvature curvature{1.0};
  std::vector<Real> m;
  std::vector<Real> b;

  friend bool operator==(const OutputLayer&, const OutputLayer&) = default;
};

template <std::floating_point Real = float>
struct Model {
  Architecture arch;
  EmbeddingTable<Real> emb;
  OutputLayer<Real> out;

  std::size_t dim() const { return emb.dim(); }
  std::size_t n_labels() const { return out.n_labels; }

  friend bool operator==(const Model&, const Model&) = default;
};

// Rows uniform in [-1e-3, 1e-3]^d, M = 0, b = 0.
template <std::floating_point Real = float>
Model<Real> init_model(std::size_t n_rows, std::size_t n_labels, std::size_t dim, const Architecture& arch,
                       std::uint64_t seed) {
  arch.validate();
  if (dim == 0) throw DimensionMismatch("embedding dimension must be >= 1");
  if (n_labels == 0) throw ConfigError("model needs at least one label");
  Model<Real> model;
  model.arch = arch;
  model.emb = EmbeddingTable<Real>(n_rows, dim, arch.geometry);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-1e-3, 1e-3);
  for (Real& v : model.emb.data()) v = static_cast<Real>(uniform(rng));
  model.out.n_labels = n_labels;
  model.out.dim = dim;
  model.out.kind = arch.output;
  model.out.curvature = arch.curvature;
  model.out.m.assign(n_labels * dim, Real{0});
  model.out.b.assign(n_labels, Real{0});
  return model;
}

template <std::floating_point Real = float>
Model<Real> init_model(const textcorpus::Vocab& vocab, std::int64_t bucket, std::size_t dim, const Architecture& arch,
                       std::uint64_t seed) {
  return init_model<Real>(static_cast<std::size_t>(vocab.n_words() + bucket), static_cast<std::size_t>(vocab.n_labels()),
                          dim, arch, seed);
}

// Everything the backward pass needs from one forward pass. Buffers are
// reused across calls when the same trace object is passed back in.
struct ForwardTrace {
  Architecture arch;
  std::size_t dim = 0;
  std::size_t n_labels = 0;
  std::size_t table_rows = 0;

  std::vector<std::int32_t> rows;  // pooled rows, document order
  std::vector<double> inputs;      // rows.size() x dim, as stored
  std::vector<double> klein;       // rows.size() x dim, Einstein pooling only
  std::vector<double> gammas;      // Lorentz factor per row, Einstein pooling only
  std::vector<double> pooled_klein;
  std::vector<double> pooled_raw;  // mean pooling before the ball clamp
  std::vector<double> pooled;      // m_P (Einstein) or u-bar (mean)
  std::vector<double> product;     // M * pooled
  std::vector<double> transformed; // M (x) pooled, Mobius output only
  std::vector<double> logits;      // o
  std::vector<double> probs;       // softmax(o)
  double log_normalizer = 0.0;     // log sum exp(o)
};

// Euclidean gradients of the single-example loss. Embedding rows are unique
// and sorted by id; duplicates in the document are summed.
struct GradientSet {
  std::size_t dim = 0;
  std::vector<std::int32_t> rows;
  std::vector<double> row_grads;  // rows.size() x dim
  std::vector<double> m;          // n_labels x dim
  std::vector<double> b;          // n_labels

  std::span<double> row_grad(std::size_t i) { return {row_grads.data() + i * dim, dim}; }
  std::span<const double> row_grad(std::size_t i) const { return {row_grads.data() + i * dim, dim}; }

  bool all_finite() const {
    const auto finite = [](double v) { return std::isfinite(v); };
    return std::all_of(row_grads.begin(), row_grads.end(), finite) && std::all_of(m.begin(), m.end(), finite) &&
           std::all_of(b.begin(), b.end(), finite);
  }
};

namespace detail {

using namespace hypergeo::kernel;

inline void softmax(std::span<const double> logits, std::span<double> probs, double& log_normalizer) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - mx);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  log_normalizer = mx + std::log(sum);
}

// Vector-Jacobian product of project_to_ball evaluated at `raw`; in place.
inline void project_vjp(std::span<const double> raw, std::span<double> g, double max_norm) {
  const double n = norm(raw);
  if (n <= max_norm) return;
  const double radial = dot(raw, g) / (n * n);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = (max_norm / n) * (g[i] - radial * raw[i]);
}

// s*sech^2(s) - tanh(s), which cancels badly for small s.
inline double tanh_slope_gap(double s) {
  if (std::abs(s) < 1e-4) return -2.0 * s * s * s / 3.0;
  const double t = std::tanh(s);
  return s * (1.0 - t * t) - t;
}

// t/(1-t^2) - atanh(t), likewise.
inline double atanh_slope_gap(double t) {
  if (std::abs(t) < 1e-2) {
    const double t2 = t * t;
    return t * t2 * (2.0 / 3.0 + t2 * (4.0 / 5.0 + t2 * (6.0 / 7.0)));
  }
  return t / (1.0 - t * t) - std::atanh(t);
}

}  // namespace detail

template <std::floating_point Real>
void forward(const Document& doc, const Model<Real>& model, ForwardTrace& trace) {
  using namespace hypergeo::kernel;
  const auto& arch = model.arch;
  const std::size_t d = model.dim();
  const std::size_t n = model.n_labels();
  if (model.out.dim != d || model.out.m.size() != n * d || model.out.b.size() != n) {
    throw DimensionMismatch("embedding dimension " + std::to_string(d) + " does not match output layer");
  }
  trace.arch = arch;
  trace.dim = d;
  trace.n_labels = n;
  trace.table_rows = model.emb.rows();

  trace.rows.clear();
  trace.rows.insert(trace.rows.end(), doc.token_ids.begin(), doc.token_ids.end());
  trace.rows.insert(trace.rows.end(), doc.ngram_ids.begin(), doc.ngram_ids.end());
  const std::size_t k = trace.rows.size();
  trace.inputs.resize(k * d);
  for (std::size_t i = 0; i < k; ++i) {
    const auto r = static_cast<std::size_t>(trace.rows[i]);
    if (r >= model.emb.rows()) throw DimensionMismatch("row id " + std::to_string(r) + " outside embedding table");
    model.emb.load_row(r, std::span<double>(trace.inputs).subspan(i * d, d));
  }

  trace.pooled.assign(d, 0.0);
  trace.pooled_raw.assign(d, 0.0);
  trace.pooled_klein.assign(d, 0.0);
  if (k > 0 && arch.pooling == Pooling::kEinstein) {
    trace.klein.resize(k * d);
    trace.gammas.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
      poincare_to_klein(std::span<const double>(trace.inputs).subspan(i * d, d),
                        std::span<double>(trace.klein).subspan(i * d, d));
    }
    einstein_midpoint(trace.klein, d, trace.gammas, trace.pooled_klein);
    klein_to_poincare(trace.pooled_klein, trace.pooled);
  } else if (k > 0) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < d; ++j) trace.pooled_raw[j] += trace.inputs[i * d + j];
    }
    scale(trace.pooled_raw, 1.0 / static_cast<double>(k));
    trace.pooled = trace.pooled_raw;
    // A Euclidean mean may leave the ball the Mobius layer is defined on.
    if (arch.output == OutputKind::kMobius) project_to_ball(trace.pooled);
  }

  std::vector<double> m(n * d);
  std::vector<double> b(n);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = detail::load(model.out.m[i]);
  for (std::size_t i = 0; i < n; ++i) b[i] = detail::load(model.out.b[i]);

  trace.product.resize(n);
  for (std::size_t r = 0; r < n; ++r) trace.product[r] = dot(std::span<const double>(m).subspan(r * d, d), trace.pooled);
  trace.logits.resize(n);
  if (arch.output == OutputKind::kMobius) {
    trace.transformed.resize(n);
    mobius_matvec(m, trace.pooled, arch.curvature, trace.transformed);
    mobius_add(trace.transformed, b, arch.curvature, trace.logits);
  } else {
    for (std::size_t r = 0; r < n; ++r) trace.logits[r] = trace.product[r] + b[r];
  }
  trace.probs.resize(n);
  detail::softmax(trace.logits, trace.probs, trace.log_normalizer);
}

template <std::floating_point Real>
ForwardTrace forward(const Document& doc, const Model<Real>& model) {
  ForwardTrace trace;
  forward(doc, model, trace);
  return trace;
}

// The HyperText path: Poincare rows, Einstein midpoint, Mobius layer.
template <std::floating_point Real>
ForwardTrace forward_hyper(const Document& doc, const Model<Real>& model) {
  if (model.arch.geometry != Geometry::kHyperbolic || model.arch.pooling != Pooling::kEinstein ||
      model.arch.output != OutputKind::kMobius) {
    throw ConfigError("forward_hyper needs a hyperbolic/einstein/mobius model");
  }
  return forward(doc, model);
}

// The fastText path: mean of rows, affine map.
template <std::floating_point Real>
ForwardTrace forward_euclid(const Document& doc, const Model<Real>& model) {
  if (model.arch.geometry != Geometry::kEuclidean || model.arch.pooling != Pooling::kMean ||
      model.arch.output != OutputKind::kLinear) {
    throw ConfigError("forward_euclid needs a euclidean/mean/linear model");
  }
  return forward(doc, model);
}

inline double loss(const ForwardTrace& trace, std::int32_t label) {
  if (label < 0 || static_cast<std::size_t>(label) >= trace.n_labels) {
    throw DimensionMismatch("label id " + std::to_string(label) + " out of range");
  }
  return trace.log_normalizer - trace.logits[static_cast<std::size_t>(label)];
}

template <std::floating_point Real>
void backward(const ForwardTrace& trace, std::int32_t label, const Model<Real>& model, GradientSet& grads) {
  using namespace hypergeo::kernel;
  const std::size_t d = trace.dim;
  const std::size_t n = trace.n_labels;
  const std::size_t k = trace.rows.size();
  if (model.dim() != d || model.n_labels() != n || model.emb.rows() != trace.table_rows ||
      !(model.arch == trace.arch)) {
    throw StaleTrace("model shape changed since the forward pass");
  }
  if (label < 0 || static_cast<std::size_t>(label) >= n) {
    throw DimensionMismatch("label id " + std::to_string(label) + " out of range");
  }
  const Curvature& curv = trace.arch.curvature;
  const double c = curv.value();

  std::vector<double> m(n * d);
  std::vector<double> b(n);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = detail::load(model.out.m[i]);
  for (std::size_t i = 0; i < n; ++i) b[i] = detail::load(model.out.b[i]);

  grads.dim = d;
  grads.m.assign(n * d, 0.0);
  grads.b.assign(n, 0.0);

  // dL/do for softmax cross-entropy.
  std::vector<double> g_out(trace.probs);
  g_out[static_cast<std::size_t>(label)] -= 1.0;

  std::vector<double> g_pooled(d, 0.0);
  std::vector<double> g_product(n, 0.0);  // dL/d(M * pooled)
  const auto& x = trace.pooled;

  if (trace.arch.output == OutputKind::kLinear) {
    grads.b = g_out;
    g_product = g_out;
  } else {
    // o = project((alpha y + beta b) / denom), y = M (x) pooled.
    const auto& y = trace.transformed;
    const double yb = dot(y, b);
    const double yy = squared_norm(y);
    const double bb = squared_norm(b);
    const double alpha = 1.0 + 2.0 * c * yb + c * bb;
    const double beta = 1.0 - c * yy;
    const double denom = 1.0 + 2.0 * c * yb + c * c * yy * bb;
    std::vector<double> raw(n);
    for (std::size_t i = 0; i < n; ++i) raw[i] = (alpha * y[i] + beta * b[i]) / denom;
    detail::project_vjp(raw, g_out, curv.max_norm());

    std::vector<double> g_num(n);
    for (std::size_t i = 0; i < n; ++i) g_num[i] = g_out[i] / denom;
    const double g_denom = -dot(g_out, raw) / denom;
    const double gn_y = dot(g_num, y);
    const double gn_b = dot(g_num, b);
    std::vector<double> g_y(n);
    for (std::size_t i = 0; i < n; ++i) {
      g_y[i] = alpha * g_num[i] + gn_y * 2.0 * c * b[i] - gn_b * 2.0 * c * y[i] +
               g_denom * (2.0 * c * b[i] + 2.0 * c * c * bb * y[i]);
      grads.b[i] = beta * g_num[i] + gn_y * (2.0 * c * y[i] + 2.0 * c * b[i]) +
                   g_denom * (2.0 * c * y[i] + 2.0 * c * c * yy * b[i]);
    }

    // y = project(tanh(s)/(sqrt(c) |u|) u), u = M x, s = |u| atanh(sqrt(c)|x|) / |x|.
    const auto& u = trace.product;
    const double xn = norm(x);
    const double un = norm(u);
    const double sc = curv.sqrt();
    if (xn == 0.0) {
      // y = M x to first order around the origin.
      g_product = g_y;
    } else {
      const double t_raw = sc * xn;
      const bool clamped = t_raw > hypergeo::kMaxNorm;
      const double t = clamped ? hypergeo::kMaxNorm : t_raw;
      const double a = std::atanh(t);
      if (un == 0.0) {
        // y = (a / (sqrt(c)|x|)) u to first order around u = 0.
        const double h = a / (sc * xn);
        for (std::size_t i = 0; i < n; ++i) g_product[i] = h * g_y[i];
      } else {
        const double s = un * a / xn;
        const double th = std::tanh(s);
        std::vector<double> y_raw(u);
        scale(y_raw, th / (sc * un));
        detail::project_vjp(y_raw, g_y, curv.max_norm());
        const double h = th / (sc * un);
        const double radial_coef = detail::tanh_slope_gap(s) / (sc * un);
        const double gy_dir = dot(g_y, u) / un;
        for (std::size_t i = 0; i < n; ++i) g_product[i] = h * g_y[i] + radial_coef * gy_dir * u[i] / un;
        // s also depends on |x| through atanh(sqrt(c)|x|)/|x|.
        if (!clamped) {
          const double ds_dxn = un * detail::atanh_slope_gap(t) / (xn * xn);
          const double g_xn = gy_dir * (1.0 - th * th) / sc * ds_dxn;
          for (std::size_t j = 0; j < d; ++j) g_pooled[j] += g_xn * x[j] / xn;
        }
      }
    }
  }

  // Shared by both output kinds: u = M x.
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      grads.m[r * d + j] = g_product[r] * x[j];
      g_pooled[j] += m[r * d + j] * g_product[r];
    }
  }

  // Pooling layer back to per-occurrence row gradients.
  std::vector<double> g_inputs(k * d, 0.0);
  if (k > 0 && trace.arch.pooling == Pooling::kEinstein) {
    // m_P = project(k2p(m_K)).
    std::vector<double> p_raw(trace.pooled_klein);
    const double w = std::sqrt(1.0 - squared_norm(trace.pooled_klein));
    scale(p_raw, 1.0 / (1.0 + w));
    detail::project_vjp(p_raw, g_pooled, hypergeo::kMaxNorm);
    const double q = 1.0 / (1.0 + w);
    const double kg = dot(trace.pooled_klein, g_pooled);
    std::vector<double> g_mk(d);
    for (std::size_t j = 0; j < d; ++j) g_mk[j] = q * g_pooled[j] + (q * q / w) * kg * trace.pooled_klein[j];

    // m_K = project(sum gamma_i k_i / sum gamma_i).
    const double total = std::accumulate(trace.gammas.begin(), trace.gammas.end(), 0.0);
    std::vector<double> mk_raw(d, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < d; ++j) mk_raw[j] += trace.gammas[i] * trace.klein[i * d + j];
    }
    scale(mk_raw, 1.0 / total);
    detail::project_vjp(mk_raw, g_mk, hypergeo::kMaxNorm);

    std::vector<double> g_k(d);
    std::vector<double> k_raw(d);
    for (std::size_t i = 0; i < k; ++i) {
      const auto ki = std::span<const double>(trace.klein).subspan(i * d, d);
      const double gi = trace.gammas[i];
      double centered = 0.0;
      for (std::size_t j = 0; j < d; ++j) centered += (ki[j] - mk_raw[j]) * g_mk[j];
      const double coef = centered * gi * gi * gi / total;
      for (std::size_t j = 0; j < d; ++j) g_k[j] = (gi / total) * g_mk[j] + coef * ki[j];

      // k_i = project(2 p_i / (1 + |p_i|^2)).
      const auto pi = std::span<const double>(trace.inputs).subspan(i * d, d);
      const double sp = 2.0 / (1.0 + squared_norm(pi));
      for (std::size_t j = 0; j < d; ++j) k_raw[j] = sp * pi[j];
      detail::project_vjp(k_raw, g_k, hypergeo::kMaxNorm);
      const double pg = dot(pi, g_k);
      for (std::size_t j = 0; j < d; ++j) g_inputs[i * d + j] = sp * g_k[j] - sp * sp * pg * pi[j];
    }
  } else if (k > 0) {
    if (trace.arch.output == OutputKind::kMobius) detail::project_vjp(trace.pooled_raw, g_pooled, hypergeo::kMaxNorm);
    const double inv_k = 1.0 / static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < d; ++j) g_inputs[i * d + j] = g_pooled[j] * inv_k;
    }
  }

  // Merge repeated rows.
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b2) { return trace.rows[a] < trace.rows[b2]; });
  grads.rows.clear();
  grads.row_grads.clear();
  for (std::size_t idx : order) {
    const auto row = trace.rows[idx];
    if (grads.rows.empty() || grads.rows.back() != row) {
      grads.rows.push_back(row);
      grads.row_grads.resize(grads.row_grads.size() + d, 0.0);
    }
    auto dst = grads.row_grad(grads.rows.size() - 1);
    for (std::size_t j = 0; j < d; ++j) dst[j] += g_inputs[idx * d + j];
  }
}

template <std::floating_point Real>
GradientSet backward(const ForwardTrace& trace, std::int32_t label, const Model<Real>& model) {
  GradientSet grads;
  backward(trace, label, model, grads);
  return grads;
}

struct Prediction {
  std::int32_t label;
  double probability;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

// Top-k labels by probability, ties to the lower label id. k is clamped to
// the number of labels.
inline std::vector<Prediction> top_k(std::span<const double> probs, std::size_t k) {
  if (k == 0) throw ConfigError("k must be >= 1");
  std::vector<Prediction> all;
  all.reserve(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) all.push_back({static_cast<std::int32_t>(i), probs[i]});
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                    [](const Prediction& a, const Prediction& b) {
                      return a.probability != b.probability ? a.probability > b.probability : a.label < b.label;
                    });
  all.resize(k);
  return all;
}

template <std::floating_point Real>
std::vector<Prediction> predict(const Document& doc, const Model<Real>& model, std::size_t k) {
  const auto trace = forward(doc, model);
  return top_k(trace.probs, k);
}

}  // namespace hypertext::model
