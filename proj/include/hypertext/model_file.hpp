#pragma once

// Binary model file. Every field is fixed width and little-endian:
//
//   "HTXT"                       magic
//   u32  version                 kModelFileVersion
//   u8   geometry, pooling, output kind, reserved (0)
//   u32  dim
//   f64  curvature
//   u32  n_words, bucket, n_labels, word_ngrams, min_count
//   str  label prefix            u32 length + UTF-8 bytes
//   n_words  x (str word,  u64 count)
//   n_labels x (str label, u64 count)
//   f32  embedding rows          (n_words + bucket) x dim, row-major
//   f32  M                       n_labels x dim, row-major
//   f32  b                       n_labels

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hypertext/classifier.hpp"
#include "hypertext/error.hpp"
#include "hypertext/model.hpp"

namespace hypertext::cli {

inline constexpr std::array<char, 4> kMagic = {'H', 'T', 'X', 'T'};
inline constexpr std::uint32_t kModelFileVersion = 1;

namespace detail {

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }
  void floats(std::span<const float> v) {
    for (float f : v) {
      f32(f);
      if (buf_.size() >= (1u << 20)) flush();
    }
  }

  void flush() {
    out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    buf_.clear();
    if (!out_) throw Error("write failed");
  }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }

  std::ostream& out_;
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > (1u << 24)) throw FormatError("string field too long");
    const auto raw = take(n);
    return std::string(raw.begin(), raw.end());
  }
  void floats(std::span<float> out) {
    constexpr std::size_t kChunk = 1 << 16;
    for (std::size_t off = 0; off < out.size(); off += kChunk) {
      const std::size_t n = std::min(kChunk, out.size() - off);
      const auto raw = take(n * 4);
      for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t v = 0;
        for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw[i * 4 + b])) << (8 * b);
        out[off + i] = std::bit_cast<float>(v);
      }
    }
  }
  std::vector<char> take(std::size_t n) {
    std::vector<char> v(n);
    in_.read(v.data(), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw FormatError("model file is truncated");
    return v;
  }

 private:
  std::uint64_t le(int n) {
    const auto raw = take(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[i])) << (8 * i);
    return v;
  }

  std::istream& in_;
};

inline std::uint32_t narrow(std::uint64_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) throw FormatError(std::string(what) + " does not fit the model file");
  return static_cast<std::uint32_t>(v);
}

}  // namespace detail

inline void save_model(const TextClassifier& clf, std::ostream& out) {
  const auto& m = clf.model;
  detail::Writer w(out);
  w.bytes(std::string_view(kMagic.data(), kMagic.size()));
  w.u32(kModelFileVersion);
  w.u8(static_cast<std::uint8_t>(m.arch.geometry));
  w.u8(static_cast<std::uint8_t>(m.arch.pooling));
  w.u8(static_cast<std::uint8_t>(m.arch.output));
  w.u8(0);
  w.u32(detail::narrow(m.dim(), "dim"));
  w.f64(m.arch.curvature.value());
  w.u32(detail::narrow(static_cast<std::uint64_t>(clf.vocab.n_words()), "n_words"));
  w.u32(detail::narrow(static_cast<std::uint64_t>(clf.corpus.bucket), "bucket"));
  w.u32(detail::narrow(static_cast<std::uint64_t>(clf.vocab.n_labels()), "n_labels"));
  w.u32(detail::narrow(static_cast<std::uint64_t>(clf.corpus.word_ngrams), "word_ngrams"));
  w.u32(detail::narrow(static_cast<std::uint64_t>(clf.corpus.min_count), "min_count"));
  w.str(clf.corpus.label_prefix);
  for (const auto& e : clf.vocab.words()) {
    w.str(e.text);
    w.u64(e.count);
  }
  for (const auto& e : clf.vocab.labels()) {
    w.str(e.text);
    w.u64(e.count);
  }
  if (m.emb.rows() != static_cast<std::size_t>(clf.vocab.n_words() + clf.corpus.bucket)) {
    throw FormatError("embedding table does not match vocabulary + bucket");
  }
  w.floats(m.emb.data());
  w.floats(m.out.m);
  w.floats(m.out.b);
  w.flush();
}

inline TextClassifier load_model(std::istream& in) {
  detail::Reader r(in);
  const auto magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) throw FormatError("not a model file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != kModelFileVersion) {
    throw FormatError("unsupported model file version " + std::to_string(version));
  }
  const auto geometry = r.u8();
  const auto pooling = r.u8();
  const auto output = r.u8();
  if (geometry > 1 || pooling > 1 || output > 1) throw FormatError("unknown architecture tag");
  r.u8();

  TextClassifier clf;
  model::Architecture arch;
  arch.geometry = static_cast<model::Geometry>(geometry);
  arch.pooling = static_cast<model::Pooling>(pooling);
  arch.output = static_cast<model::OutputKind>(output);
  const std::uint32_t dim = r.u32();
  const double c = r.f64();
  try {
    arch.curvature = hypergeo::Curvature(c);
    arch.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid architecture: ") + e.what());
  }
  const std::uint32_t n_words = r.u32();
  clf.corpus.bucket = r.u32();
  const std::uint32_t n_labels = r.u32();
  clf.corpus.word_ngrams = static_cast<int>(r.u32());
  clf.corpus.min_count = static_cast<int>(r.u32());
  clf.corpus.label_prefix = r.str();
  if (dim == 0 || n_labels == 0) throw FormatError("empty model dimensions");
  try {
    clf.corpus.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid corpus settings: ") + e.what());
  }

  std::vector<textcorpus::VocabEntry> words(n_words);
  for (auto& e : words) {
    e.text = r.str();
    e.count = r.u64();
  }
  std::vector<textcorpus::VocabEntry> labels(n_labels);
  for (auto& e : labels) {
    e.text = r.str();
    e.count = r.u64();
  }
  clf.vocab = textcorpus::Vocab(std::move(words), std::move(labels));

  const std::size_t rows = static_cast<std::size_t>(n_words) + static_cast<std::size_t>(clf.corpus.bucket);
  clf.model.arch = arch;
  clf.model.emb = model::EmbeddingTable<float>(rows, dim, arch.geometry);
  r.floats(clf.model.emb.data());
  clf.model.out.n_labels = n_labels;
  clf.model.out.dim = dim;
  clf.model.out.kind = arch.output;
  clf.model.out.curvature = arch.curvature;
  clf.model.out.m.resize(static_cast<std::size_t>(n_labels) * dim);
  clf.model.out.b.resize(n_labels);
  r.floats(clf.model.out.m);
  r.floats(clf.model.out.b);
  return clf;
}

inline void save_model(const TextClassifier& clf, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  save_model(clf, out);
}

inline TextClassifier load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file " + path);
  return load_model(in);
}

}  // namespace hypertext::cli
