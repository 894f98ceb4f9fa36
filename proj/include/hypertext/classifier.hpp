#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "hypertext/model.hpp"
#include "hypertext/textcorpus.hpp"

namespace hypertext {

// A trained network together with the vocabulary and corpus settings needed
// to turn raw lines into documents.
struct TextClassifier {
  textcorpus::CorpusConfig corpus;
  textcorpus::Vocab vocab;
  model::Model<float> model;

  textcorpus::Document document(std::string_view line) const {
    return textcorpus::make_document(line, vocab, corpus);
  }

  std::vector<model::Prediction> predict(std::string_view line, std::size_t k) const {
    return model::predict(document(line), model, k);
  }
};

struct Accuracy {
  std::size_t examples = 0;
  std::size_t correct = 0;
  std::size_t unknown_labels = 0;  // gold label never seen in training

  double value() const { return examples == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(examples); }
};

// Top-1 accuracy over a labeled stream. Unlabeled lines are skipped; lines
// whose gold label the model never saw count as wrong.
inline Accuracy evaluate(const TextClassifier& clf, std::istream& in) {
  Accuracy acc;
  model::ForwardTrace trace;
  std::string line;
  while (std::getline(in, line)) {
    const auto doc = clf.document(line);
    if (doc.label_ids.empty() && !doc.unknown_label) continue;
    ++acc.examples;
    if (doc.unknown_label) {
      ++acc.unknown_labels;
      continue;
    }
    model::forward(doc, clf.model, trace);
    if (model::top_k(trace.probs, 1).front().label == doc.label()) ++acc.correct;
  }
  return acc;
}

}  // namespace hypertext
