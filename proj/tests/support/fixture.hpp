#pragma once

// Loads the frozen forward-pass fixture written by tests/oracles/oracle.py.

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hypertext/model.hpp"
#include "hypertext/textcorpus.hpp"

namespace hypertext::test {

struct FixtureDocument {
  textcorpus::Document doc;
  std::vector<std::string> probs;  // decimal strings, 25 significant digits
};

struct FixtureModel {
  model::Model<double> model;
  std::vector<FixtureDocument> documents;
  std::string name;
};

inline model::Architecture fixture_architecture(const nlohmann::json& j) {
  model::Architecture arch;
  arch.geometry = j.at("geometry") == "hyperbolic" ? model::Geometry::kHyperbolic : model::Geometry::kEuclidean;
  arch.pooling = j.at("pooling") == "einstein" ? model::Pooling::kEinstein : model::Pooling::kMean;
  arch.output = j.at("classifier") == "mobius" ? model::OutputKind::kMobius : model::OutputKind::kLinear;
  arch.curvature = hypergeo::Curvature(j.at("curvature").get<double>());
  return arch;
}

inline std::vector<FixtureModel> load_forward_fixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  const auto root = nlohmann::json::parse(in);
  std::vector<FixtureModel> out;
  for (const auto& j : root.at("models")) {
    const auto emb = j.at("embeddings").get<std::vector<std::vector<double>>>();
    const auto m = j.at("m").get<std::vector<std::vector<double>>>();
    const auto b = j.at("b").get<std::vector<double>>();
    FixtureModel fm;
    fm.name = j.at("geometry").get<std::string>() + "/" + j.at("pooling").get<std::string>() + "/" +
              j.at("classifier").get<std::string>() + "/c=" + std::to_string(j.at("curvature").get<double>());
    fm.model = model::init_model<double>(emb.size(), m.size(), m.front().size(), fixture_architecture(j), 0);
    for (std::size_t r = 0; r < emb.size(); ++r) {
      for (std::size_t c = 0; c < emb[r].size(); ++c) fm.model.emb.row(r)[c] = emb[r][c];
    }
    for (std::size_t r = 0; r < m.size(); ++r) {
      for (std::size_t c = 0; c < m[r].size(); ++c) fm.model.out.m[r * m[r].size() + c] = m[r][c];
    }
    fm.model.out.b = b;
    for (const auto& d : j.at("documents")) {
      FixtureDocument fd;
      fd.doc.token_ids = d.at("rows").get<std::vector<std::int32_t>>();
      fd.doc.raw_tokens = fd.doc.token_ids.size();
      fd.probs = d.at("probs").get<std::vector<std::string>>();
      fm.documents.push_back(std::move(fd));
    }
    out.push_back(std::move(fm));
  }
  return out;
}

}  // namespace hypertext::test
