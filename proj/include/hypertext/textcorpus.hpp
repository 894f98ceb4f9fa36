#pragma once

// fastText-format corpus ingestion: line parsing, vocabulary construction and
// hashed word n-grams.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hypertext/error.hpp"

namespace hypertext::textcorpus {

struct CorpusConfig {
  int min_count = 1;
  int word_ngrams = 2;
  std::int64_t bucket = 2'000'000;
  std::string label_prefix = "__label__";

  void validate() const {
    if (min_count < 1) throw ConfigError("minCount must be >= 1");
    if (word_ngrams < 1) throw ConfigError("wordNgrams must be >= 1");
    if (bucket < 0) throw ConfigError("bucket must be >= 0");
    if (bucket > std::numeric_limits<std::int32_t>::max() / 2) throw ConfigError("bucket is too large");
    if (label_prefix.empty()) throw ConfigError("label prefix must not be empty");
  }
};

enum class ParseMode { kTrain, kPredict };

namespace detail {

// Byte length of the Unicode White_Space code point starting at s[i], or 0.
inline std::size_t whitespace_length(std::string_view s, std::size_t i) {
  const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  const unsigned char b0 = byte(i);
  if (b0 == 0x20 || (b0 >= 0x09 && b0 <= 0x0D)) return 1;
  const std::size_t left = s.size() - i;
  if (b0 == 0xC2 && left >= 2) {
    const unsigned char b1 = byte(i + 1);
    return (b1 == 0x85 || b1 == 0xA0) ? 2 : 0;  // NEL, NBSP
  }
  if (left < 3) return 0;
  const unsigned char b1 = byte(i + 1);
  const unsigned char b2 = byte(i + 2);
  if (b0 == 0xE1 && b1 == 0x9A && b2 == 0x80) return 3;  // U+1680
  if (b0 == 0xE2 && b1 == 0x80 && ((b2 >= 0x80 && b2 <= 0x8A) || b2 == 0xA8 || b2 == 0xA9 || b2 == 0xAF)) return 3;
  if (b0 == 0xE2 && b1 == 0x81 && b2 == 0x9F) return 3;  // U+205F
  if (b0 == 0xE3 && b1 == 0x80 && b2 == 0x80) return 3;  // U+3000
  return 0;
}

}  // namespace detail

// Splits on Unicode whitespace. Views point into `line`.
inline std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = std::string_view::npos;
  std::size_t i = 0;
  while (i < line.size()) {
    const std::size_t ws = detail::whitespace_length(line, i);
    if (ws > 0) {
      if (start != std::string_view::npos) out.push_back(line.substr(start, i - start));
      start = std::string_view::npos;
      i += ws;
    } else {
      if (start == std::string_view::npos) start = i;
      ++i;
    }
  }
  if (start != std::string_view::npos) out.push_back(line.substr(start));
  return out;
}

struct ParsedLine {
  std::vector<std::string> labels;
  std::vector<std::string> tokens;
};

inline bool is_label(std::string_view token, const CorpusConfig& cfg) {
  return token.size() > cfg.label_prefix.size() && token.starts_with(cfg.label_prefix);
}

inline ParsedLine parse_labeled_line(std::string_view line, const CorpusConfig& cfg,
                                     ParseMode mode = ParseMode::kTrain) {
  ParsedLine out;
  for (std::string_view tok : split_whitespace(line)) {
    if (is_label(tok, cfg)) {
      out.labels.emplace_back(tok.substr(cfg.label_prefix.size()));
    } else {
      out.tokens.emplace_back(tok);
    }
  }
  if (mode == ParseMode::kTrain && out.labels.empty()) {
    throw NoLabel("line has no token starting with '" + cfg.label_prefix + "'");
  }
  return out;
}

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 14695981039346656037ULL) {
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

inline constexpr char kNgramSeparator = '\x1F';

// Hash of the n-gram tokens[0..n) joined with the 0x1F separator byte.
inline std::uint64_t ngram_hash(std::span<const std::string_view> tokens) {
  std::uint64_t h = 14695981039346656037ULL;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) h = fnv1a(std::string_view(&kNgramSeparator, 1), h);
    h = fnv1a(tokens[i], h);
  }
  return h;
}

// Ids of every contiguous 2..word_ngrams token n-gram, folded into
// [n_words, n_words + bucket).
inline std::vector<std::int32_t> extract_ngrams(std::span<const std::string_view> tokens, std::int32_t n_words,
                                                const CorpusConfig& cfg) {
  std::vector<std::int32_t> ids;
  if (cfg.word_ngrams < 2 || cfg.bucket <= 0) return ids;
  const auto bucket = static_cast<std::uint64_t>(cfg.bucket);
  for (std::size_t n = 2; n <= static_cast<std::size_t>(cfg.word_ngrams); ++n) {
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      const auto folded = ngram_hash(tokens.subspan(i, n)) % bucket;
      ids.push_back(n_words + static_cast<std::int32_t>(folded));
    }
  }
  return ids;
}

inline std::vector<std::int32_t> extract_ngrams(const std::vector<std::string>& tokens, std::int32_t n_words,
                                                const CorpusConfig& cfg) {
  std::vector<std::string_view> views(tokens.begin(), tokens.end());
  return extract_ngrams(std::span<const std::string_view>(views), n_words, cfg);
}

struct VocabEntry {
  std::string text;
  std::uint64_t count = 0;

  friend bool operator==(const VocabEntry&, const VocabEntry&) = default;
};

class Vocab {
 public:
  Vocab() = default;

  Vocab(std::vector<VocabEntry> words, std::vector<VocabEntry> labels)
      : words_(std::move(words)), labels_(std::move(labels)) {
    index();
  }

  // Reads a whole labeled corpus. Words seen fewer than min_count times are
  // dropped; surviving words and all labels get dense ids in first-seen order.
  static Vocab build(std::istream& in, const CorpusConfig& cfg) {
    cfg.validate();
    std::vector<VocabEntry> words;
    std::vector<VocabEntry> labels;
    std::unordered_map<std::string, std::size_t> word_slot;
    std::unordered_map<std::string, std::size_t> label_slot;
    const auto bump = [](auto& entries, auto& slots, std::string_view text) {
      auto [it, inserted] = slots.try_emplace(std::string(text), entries.size());
      if (inserted) entries.push_back({std::string(text), 0});
      ++entries[it->second].count;
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto toks = split_whitespace(line);
      if (toks.empty()) continue;
      bool labeled = false;
      for (std::string_view tok : toks) {
        if (is_label(tok, cfg)) {
          bump(labels, label_slot, tok.substr(cfg.label_prefix.size()));
          labeled = true;
        } else {
          bump(words, word_slot, tok);
        }
      }
      if (!labeled) throw NoLabel("line " + std::to_string(line_no) + " has no label");
    }
    if (labels.empty()) throw EmptyCorpus("corpus contains no labeled lines");

    std::erase_if(words, [&](const VocabEntry& e) { return e.count < static_cast<std::uint64_t>(cfg.min_count); });
    return Vocab(std::move(words), std::move(labels));
  }

  std::int32_t n_words() const { return static_cast<std::int32_t>(words_.size()); }
  std::int32_t n_labels() const { return static_cast<std::int32_t>(labels_.size()); }

  // -1 when absent.
  std::int32_t word_id(std::string_view w) const { return lookup(word_ids_, w); }
  std::int32_t label_id(std::string_view l) const { return lookup(label_ids_, l); }

  const VocabEntry& word(std::int32_t id) const { return words_.at(static_cast<std::size_t>(id)); }
  const VocabEntry& label(std::int32_t id) const { return labels_.at(static_cast<std::size_t>(id)); }
  const std::vector<VocabEntry>& words() const { return words_; }
  const std::vector<VocabEntry>& labels() const { return labels_; }

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.words_ == b.words_ && a.labels_ == b.labels_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };
  using IdMap = std::unordered_map<std::string, std::int32_t, Hash, std::equal_to<>>;

  static std::int32_t lookup(const IdMap& m, std::string_view key) {
    const auto it = m.find(key);
    return it == m.end() ? -1 : it->second;
  }

  void index() {
    word_ids_.clear();
    label_ids_.clear();
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (!word_ids_.emplace(words_[i].text, static_cast<std::int32_t>(i)).second) {
        throw FormatError("duplicate word in vocabulary: " + words_[i].text);
      }
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (!label_ids_.emplace(labels_[i].text, static_cast<std::int32_t>(i)).second) {
        throw FormatError("duplicate label in vocabulary: " + labels_[i].text);
      }
    }
  }

  std::vector<VocabEntry> words_;
  std::vector<VocabEntry> labels_;
  IdMap word_ids_;
  IdMap label_ids_;
};

struct Document {
  std::vector<std::int32_t> label_ids;  // known labels only, in line order
  std::vector<std::int32_t> token_ids;
  std::vector<std::int32_t> ngram_ids;
  std::size_t raw_tokens = 0;  // tokens on the line, OOV included
  bool unknown_label = false;  // the first label on the line is not in the vocab

  // The classifier trains and scores against the first label only.
  std::int32_t label() const { return unknown_label || label_ids.empty() ? -1 : label_ids.front(); }

  // Every embedding row this document pools over.
  std::vector<std::int32_t> rows() const {
    std::vector<std::int32_t> r = token_ids;
    r.insert(r.end(), ngram_ids.begin(), ngram_ids.end());
    return r;
  }

  friend bool operator==(const Document&, const Document&) = default;
};

inline Document make_document(std::string_view line, const Vocab& vocab, const CorpusConfig& cfg) {
  Document doc;
  std::vector<std::string_view> tokens;
  bool seen_label = false;
  for (std::string_view tok : split_whitespace(line)) {
    if (is_label(tok, cfg)) {
      const auto id = vocab.label_id(tok.substr(cfg.label_prefix.size()));
      if (!seen_label && id < 0) doc.unknown_label = true;
      seen_label = true;
      if (id >= 0) doc.label_ids.push_back(id);
      continue;
    }
    tokens.push_back(tok);
    const auto id = vocab.word_id(tok);
    if (id >= 0) doc.token_ids.push_back(id);
  }
  doc.raw_tokens = tokens.size();
  doc.ngram_ids = extract_ngrams(tokens, vocab.n_words(), cfg);
  return doc;
}

// Reads every non-blank line. In training mode each line must carry a label
// the vocabulary knows.
inline std::vector<Document> read_documents(std::istream& in, const Vocab& vocab, const CorpusConfig& cfg,
                                            ParseMode mode) {
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (split_whitespace(line).empty()) continue;
    Document doc = make_document(line, vocab, cfg);
    if (mode == ParseMode::kTrain && doc.label() < 0) {
      throw NoLabel("line " + std::to_string(line_no) + " has no known label");
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace hypertext::textcorpus
