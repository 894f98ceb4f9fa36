#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hypertext/classifier.hpp"
#include "hypertext/optim.hpp"
#include "support/random_points.hpp"

namespace hm = hypertext::model;
namespace ho = hypertext::optim;
namespace tc = hypertext::textcorpus;

namespace {

std::string toy_corpus() {
  std::ifstream in(HYPERTEXT_TEST_DATA_DIR "/toy_train.txt");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Rows start within 1e-3 of the origin with M = 0, so 100 steps at the
// usual rates barely move the logits. 4.5 sits mid-way in the range where
// both geometries separate the toy set on every seed tried.
constexpr double kToyLr = 4.5;

ho::TrainConfig toy_config(const hm::Architecture& arch, double lr = kToyLr) {
  ho::TrainConfig cfg;
  cfg.arch = arch;
  cfg.lr = lr;
  cfg.epochs = 5;
  cfg.dim = 10;
  cfg.seed = 42;
  cfg.corpus.bucket = 1000;
  cfg.corpus.word_ngrams = 1;
  return cfg;
}

double training_accuracy(const hypertext::TextClassifier& clf) {
  std::istringstream in(toy_corpus());
  return hypertext::evaluate(clf, in).value();
}

hm::GradientSet zero_grads(const hm::Model<float>& m, std::vector<std::int32_t> rows) {
  hm::GradientSet g;
  g.dim = m.dim();
  g.rows = std::move(rows);
  g.row_grads.assign(g.rows.size() * g.dim, 0.0);
  g.m.assign(m.out.m.size(), 0.0);
  g.b.assign(m.out.b.size(), 0.0);
  return g;
}

}  // namespace

TEST(LrAt, LinearDecay) {
  ho::TrainState s{0.01, 0, 100};
  EXPECT_DOUBLE_EQ(ho::lr_at(s), 0.01);
  s.tokens_processed = 50;
  EXPECT_DOUBLE_EQ(ho::lr_at(s), 0.005);
  s.tokens_processed = 100;
  EXPECT_EQ(ho::lr_at(s), 0.0);
  s.tokens_processed = 150;
  EXPECT_EQ(ho::lr_at(s), 0.0);
  s.total_token_budget = 0;
  EXPECT_THROW(ho::lr_at(s), hypertext::ConfigError);
}

TEST(TrainConfig, Validation) {
  ho::TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), hypertext::ConfigError);
  cfg = {};
  cfg.lr = 0.0;
  EXPECT_THROW(cfg.validate(), hypertext::ConfigError);
  cfg = {};
  cfg.threads = 0;
  EXPECT_THROW(cfg.validate(), hypertext::ConfigError);
  cfg = {};
  cfg.dim = 0;
  EXPECT_THROW(cfg.validate(), hypertext::ConfigError);
  cfg = {};
  cfg.arch.geometry = hm::Geometry::kEuclidean;  // einstein pooling left on
  EXPECT_THROW(cfg.validate(), hypertext::ConfigError);
}

TEST(ApplyGradients, ZeroGradientLeavesParametersUnchanged) {
  for (const auto& arch : {hm::Architecture::hypertext(), hm::Architecture::fasttext()}) {
    auto m = hm::init_model<float>(6, 3, 4, arch, 5);
    m.out.m.assign(m.out.m.size(), 0.5f);
    m.out.b = {0.1f, -0.2f, 0.05f};
    const auto before = m;
    ho::apply_gradients(m, zero_grads(m, {0, 3}), 0.1);
    EXPECT_EQ(m, before);
  }
}

TEST(ApplyGradients, OriginRowTakesQuarterStep) {
  auto m = hm::init_model<double>(2, 2, 3, hm::Architecture::hypertext(), 1);
  for (double& v : m.emb.row(1)) v = 0.0;
  auto g = zero_grads(hm::init_model<float>(2, 2, 3, hm::Architecture::hypertext(), 1), {1});
  g.row_grads = {0.4, -0.8, 1.2};
  ho::apply_gradients(m, g, 0.1);
  EXPECT_NEAR(m.emb.row(1)[0], -0.01, 1e-15);
  EXPECT_NEAR(m.emb.row(1)[1], 0.02, 1e-15);
  EXPECT_NEAR(m.emb.row(1)[2], -0.03, 1e-15);
}

TEST(ApplyGradients, EuclideanIsPlainSgd) {
  auto m = hm::init_model<double>(2, 2, 2, hm::Architecture::fasttext(), 1);
  const double r0 = m.emb.row(0)[0];
  auto g = zero_grads(hm::init_model<float>(2, 2, 2, hm::Architecture::fasttext(), 1), {0});
  g.row_grads = {2.0, 0.0};
  g.m = {1.0, 0.0, 0.0, -1.0};
  g.b = {0.5, -0.5};
  ho::apply_gradients(m, g, 0.1);
  EXPECT_DOUBLE_EQ(m.emb.row(0)[0], r0 - 0.2);
  EXPECT_DOUBLE_EQ(m.out.m[0], -0.1);
  EXPECT_DOUBLE_EQ(m.out.m[3], 0.1);
  EXPECT_DOUBLE_EQ(m.out.b[0], -0.05);
  EXPECT_DOUBLE_EQ(m.out.b[1], 0.05);
}

TEST(ApplyGradients, BallConstrainedParametersStayInside) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal(0.0, 50.0);
  for (double c : {0.5, 1.0, 2.0}) {
    auto m = hm::init_model<float>(8, 4, 5, hm::Architecture::hypertext(hypertext::hypergeo::Curvature(c)), 2);
    const double b_radius = hypertext::hypergeo::Curvature(c).max_norm();
    for (int step = 0; step < 500; ++step) {
      auto g = zero_grads(m, {0, 2, 7});
      for (double& v : g.row_grads) v = normal(rng);
      for (double& v : g.m) v = normal(rng);
      for (double& v : g.b) v = normal(rng);
      ho::apply_gradients(m, g, 1.0);
      for (std::size_t r = 0; r < 8; ++r) {
        double sq = 0;
        for (float v : m.emb.row(r)) sq += double(v) * v;
        ASSERT_LE(std::sqrt(sq), hypertext::hypergeo::kMaxNorm);
      }
      double sq = 0;
      for (float v : m.out.b) sq += double(v) * v;
      ASSERT_LE(std::sqrt(sq), b_radius);
    }
  }
}

TEST(ApplyGradients, NonFiniteGradientWritesNothing) {
  auto m = hm::init_model<float>(4, 2, 3, hm::Architecture::hypertext(), 3);
  const auto before = m;
  auto g = zero_grads(m, {1});
  g.row_grads[0] = 1.0;
  g.m[2] = std::numeric_limits<double>::quiet_NaN();
  try {
    ho::apply_gradients(m, g, 0.1, 17);
    FAIL() << "expected NonFiniteGradient";
  } catch (const hypertext::NonFiniteGradient& e) {
    EXPECT_EQ(e.example_index(), 17u);
  }
  EXPECT_EQ(m, before);
  g.m[2] = 0.0;
  g.b[0] = INFINITY;
  EXPECT_THROW(ho::apply_gradients(m, g, 0.1), hypertext::NonFiniteGradient);
  EXPECT_EQ(m, before);
}

TEST(ApplyGradients, ShapeMismatch) {
  auto m = hm::init_model<float>(4, 2, 3, hm::Architecture::hypertext(), 3);
  auto g = zero_grads(m, {1});
  g.b.push_back(0.0);
  EXPECT_THROW(ho::apply_gradients(m, g, 0.1), hypertext::DimensionMismatch);
}

TEST(Train, ToyCorpusIsLearnedInFiveEpochs) {
  for (const auto& arch : {hm::Architecture::hypertext(), hm::Architecture::fasttext()}) {
    std::istringstream in(toy_corpus());
    const auto result = ho::train(in, toy_config(arch));
    EXPECT_EQ(training_accuracy(result.classifier), 1.0) << hm::to_string(arch.geometry);
    ASSERT_EQ(result.epochs.size(), 5u);
    EXPECT_EQ(result.final_loss, result.epochs.back().mean_loss);
  }
}

TEST(Train, ToyLossDecreasesAtDefaultRate) {
  for (const auto& arch : {hm::Architecture::hypertext(), hm::Architecture::fasttext()}) {
    for (int ngrams : {1, 2}) {
      auto cfg = toy_config(arch, 0.05);
      cfg.corpus.word_ngrams = ngrams;
      std::istringstream in(toy_corpus());
      const auto result = ho::train(in, cfg);
      for (int e = 1; e < 3; ++e) {
        EXPECT_LT(result.epochs[e].mean_loss, result.epochs[e - 1].mean_loss)
            << hm::to_string(arch.geometry) << " ngrams " << ngrams << " epoch " << e;
      }
    }
  }
}

TEST(Train, SingleThreadIsBitDeterministic) {
  for (const auto& arch : {hm::Architecture::hypertext(), hm::Architecture::fasttext()}) {
    std::istringstream a(toy_corpus()), b(toy_corpus());
    const auto ra = ho::train(a, toy_config(arch));
    const auto rb = ho::train(b, toy_config(arch));
    EXPECT_EQ(ra.classifier.model, rb.classifier.model);
    EXPECT_EQ(ra.final_loss, rb.final_loss);
    auto other = toy_config(arch);
    other.seed = 43;
    std::istringstream c(toy_corpus());
    EXPECT_NE(ho::train(c, other).classifier.model, ra.classifier.model);
  }
}

TEST(Train, HogwildThreadsStillLearn) {
  auto cfg = toy_config(hm::Architecture::fasttext());
  cfg.threads = 2;
  std::istringstream in(toy_corpus());
  EXPECT_EQ(training_accuracy(ho::train(in, cfg).classifier), 1.0);

  cfg = toy_config(hm::Architecture::hypertext());
  cfg.threads = 3;
  std::istringstream again(toy_corpus());
  const auto hyper = ho::train(again, cfg).classifier.model;
  for (std::size_t r = 0; r < hyper.emb.rows(); ++r) {
    double sq = 0;
    for (float v : hyper.emb.row(r)) sq += double(v) * v;
    ASSERT_LE(std::sqrt(sq), hypertext::hypergeo::kMaxNorm);
  }
}

TEST(Train, ProgressIsReported) {
  auto cfg = toy_config(hm::Architecture::fasttext());
  std::string big;
  for (int i = 0; i < 8000; ++i) big += i % 2 ? "__label__a x y z w v u t s r q p o n m l k j i h g f e d c b a z\n" : "__label__b q\n";
  std::ostringstream progress;
  cfg.progress = &progress;
  cfg.epochs = 1;
  std::istringstream in(big);
  ho::train(in, cfg);
  EXPECT_NE(progress.str().find("tokens/sec"), std::string::npos);
  EXPECT_NE(progress.str().find("lr:"), std::string::npos);
}

TEST(Train, CorpusErrors) {
  std::istringstream one_label("__label__a x\n__label__a y\n");
  EXPECT_THROW(ho::train(one_label, toy_config(hm::Architecture::fasttext())), hypertext::EmptyCorpus);
  std::istringstream unlabeled("__label__a x\ny z\n");
  EXPECT_THROW(ho::train(unlabeled, toy_config(hm::Architecture::fasttext())), hypertext::NoLabel);
  auto cfg = toy_config(hm::Architecture::fasttext());
  cfg.epochs = 0;
  std::istringstream ok(toy_corpus());
  EXPECT_THROW(ho::train(ok, cfg), hypertext::ConfigError);
  EXPECT_THROW(ho::train(std::string("/nonexistent/file.txt"), toy_config(hm::Architecture::fasttext())), hypertext::Error);
}

TEST(Optimizer, NamesRoundTrip) {
  for (auto o : {ho::Optimizer::kSgd, ho::Optimizer::kRiemannianAdam}) {
    EXPECT_EQ(ho::parse_optimizer(ho::optimizer_name(o)), o);
  }
  EXPECT_THROW(ho::parse_optimizer("adam"), hypertext::ConfigError);
  ho::TrainConfig cfg;
  EXPECT_EQ(cfg.optimizer, ho::Optimizer::kSgd);
  cfg.adam.beta1 = 1.0;
  EXPECT_THROW(cfg.validate(), hypertext::ConfigError);
  cfg.adam.beta1 = 0.9;
  cfg.adam.eps = 0.0;
  EXPECT_THROW(cfg.validate(), hypertext::ConfigError);
}

TEST(RiemannianAdam, ZeroGradientsLeaveModelUnchanged) {
  for (const auto& arch : {hm::Architecture::hypertext(), hm::Architecture::fasttext()}) {
    auto m = hm::init_model<float>(6, 3, 4, arch, 5);
    m.out.m.assign(m.out.m.size(), 0.5f);
    m.out.b = {0.1f, -0.2f, 0.05f};
    const auto before = m;
    ho::RiemannianAdam<float> adam(m);
    for (int i = 0; i < 3; ++i) adam.step(m, zero_grads(m, {0, 3}), 0.1);
    EXPECT_EQ(m, before);
  }
}

// At t = 1 the bias-corrected moments are g and g^2 (Euclidean) or rg and
// |rg|_x^2 (ball), so a ball block at the origin moves a Riemannian distance
// of lr: coordinate length lr/2, since lambda = 2 there.
TEST(RiemannianAdam, FirstStepFromOrigin) {
  for (double c : {0.5, 1.0, 2.0}) {
    auto m = hm::init_model<double>(2, 2, 3, hm::Architecture::hypertext(hypertext::hypergeo::Curvature(c)), 1);
    for (double& v : m.emb.row(1)) v = 0.0;
    auto g = zero_grads(hm::init_model<float>(2, 2, 3, hm::Architecture::hypertext(), 1), {1});
    g.row_grads = {0.4, -0.8, 1.2};
    g.b = {3.0, -4.0};
    g.m = {1.0, -2.0, 0.0, 0.0, 0.0, 0.5};
    ho::RiemannianAdam<double> adam(m);
    adam.step(m, g, 0.1);
    const double gn = std::sqrt(0.16 + 0.64 + 1.44);
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_NEAR(m.emb.row(1)[j], -0.1 * (g.row_grads[j] / 4) / (gn / 2 + 1e-8), 1e-15);
    }
    EXPECT_NEAR(m.out.b[0], -0.1 * (3.0 / 4) / (5.0 / 2 + 1e-8), 1e-15) << c;
    EXPECT_NEAR(m.out.b[1], -0.1 * (-4.0 / 4) / (5.0 / 2 + 1e-8), 1e-15) << c;
    EXPECT_NEAR(m.out.m[0], -0.1, 1e-8);
    EXPECT_NEAR(m.out.m[1], 0.1, 1e-8);
    EXPECT_EQ(m.out.m[2], 0.0);
    EXPECT_NEAR(m.out.m[5], -0.1, 1e-8);
  }
}

TEST(RiemannianAdam, ConstantEuclideanGradientTakesLrSteps) {
  auto m = hm::init_model<double>(3, 2, 2, hm::Architecture::fasttext(), 1);
  const double r0 = m.emb.row(0)[0];
  const double r2 = m.emb.row(2)[1];
  ho::RiemannianAdam<double> adam(m);
  auto g = zero_grads(hm::init_model<float>(3, 2, 2, hm::Architecture::fasttext(), 1), {0});
  g.row_grads = {2.0, 0.0};
  for (int i = 0; i < 4; ++i) adam.step(m, g, 0.1);
  EXPECT_NEAR(m.emb.row(0)[0], r0 - 0.4, 1e-7);
  // Row 2 is first touched now; its own step count starts at 1.
  g.rows = {2};
  g.row_grads = {0.0, -0.003};
  adam.step(m, g, 0.1);
  EXPECT_NEAR(m.emb.row(2)[1], r2 + 0.1, 1e-5);
}

TEST(RiemannianAdam, BallConstrainedParametersStayInside) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal(0.0, 50.0);
  for (double c : {0.5, 1.0, 2.0}) {
    auto m = hm::init_model<float>(8, 4, 5, hm::Architecture::hypertext(hypertext::hypergeo::Curvature(c)), 2);
    ho::RiemannianAdam<float> adam(m);
    const double b_radius = hypertext::hypergeo::Curvature(c).max_norm();
    for (int step = 0; step < 500; ++step) {
      auto g = zero_grads(m, {0, 2, 7});
      for (double& v : g.row_grads) v = normal(rng);
      for (double& v : g.m) v = normal(rng);
      for (double& v : g.b) v = normal(rng);
      adam.step(m, g, 1.0);
      for (std::size_t r = 0; r < 8; ++r) {
        double sq = 0;
        for (float v : m.emb.row(r)) sq += double(v) * v;
        ASSERT_LE(std::sqrt(sq), hypertext::hypergeo::kMaxNorm);
      }
      double sq = 0;
      for (float v : m.out.b) sq += double(v) * v;
      ASSERT_LE(std::sqrt(sq), b_radius);
    }
  }
}

TEST(RiemannianAdam, BadGradientsWriteNothing) {
  auto m = hm::init_model<float>(4, 2, 3, hm::Architecture::hypertext(), 3);
  const auto before = m;
  ho::RiemannianAdam<float> adam(m);
  auto g = zero_grads(m, {1});
  g.row_grads[0] = 1.0;
  g.m[2] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(adam.step(m, g, 0.1, 5), hypertext::NonFiniteGradient);
  EXPECT_EQ(m, before);
  g.m[2] = 0.0;
  g.b.push_back(0.0);
  EXPECT_THROW(adam.step(m, g, 0.1), hypertext::DimensionMismatch);
  EXPECT_EQ(m, before);
}

TEST(RiemannianAdam, LearnsToyCorpusAtDefaultRate) {
  for (const auto& arch : {hm::Architecture::hypertext(), hm::Architecture::fasttext()}) {
    for (int ngrams : {1, 2}) {
      auto cfg = toy_config(arch, 0.05);
      cfg.optimizer = ho::Optimizer::kRiemannianAdam;
      cfg.corpus.word_ngrams = ngrams;
      std::istringstream a(toy_corpus()), b(toy_corpus());
      const auto ra = ho::train(a, cfg);
      EXPECT_EQ(training_accuracy(ra.classifier), 1.0) << hm::to_string(arch.geometry) << " ngrams " << ngrams;
      EXPECT_LT(ra.epochs.back().mean_loss, ra.epochs.front().mean_loss);
      EXPECT_EQ(ho::train(b, cfg).classifier.model, ra.classifier.model);
    }
  }
}
