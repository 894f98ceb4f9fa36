// hypertext: train, test and predict with hyperbolic or Euclidean shallow text
// classifiers, plus the experiment harness (sweep, ablate, flops).
//
// Flags follow fastText's single-dash spelling (-dim, -lr, -wordNgrams, ...).

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hypertext/classifier.hpp"
#include "hypertext/eval.hpp"
#include "hypertext/model_file.hpp"
#include "hypertext/optim.hpp"

namespace {

using namespace hypertext;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const char* kUsage = R"(usage: hypertext <command> <args>

commands:
  train     train a classifier and write a model file
  test      print top-1 accuracy of a model on a labeled file
  predict   print the top-k labels for each input line
  sweep     train and test one model per (geometry, dim), write JSON lines
  ablate    train and test the three ablation variants, write JSON lines
  flops     print the analytic per-inference FLOPs estimate

train flags:
  -input <path>          training file (required)
  -output <path>         model file to write (required)
  -dim <int>             embedding dimension [10]
  -lr <float>            initial learning rate [0.05]
  -optimizer <name>      sgd | radam (Riemannian Adam) [sgd]
  -epoch <int>           passes over the data [5]
  -wordNgrams <int>      max word n-gram length [2]
  -bucket <int>          hashed n-gram rows [2000000]
  -minCount <int>        minimum word count [1]
  -geometry <name>       hyperbolic | euclidean [hyperbolic]
  -curvature <float>     Mobius-layer curvature c [1.0]
  -pooling <name>        einstein | mean [einstein if hyperbolic, else mean]
  -classifier <name>     mobius | linear [mobius if hyperbolic, else linear]
  -thread <int>          worker threads [1]
  -seed <int>            random seed [42]

test:     hypertext test <model> <test file>
predict:  hypertext predict <model> <file | -> [k] [-k <int>]
sweep:    hypertext sweep -input <train> -test <test> -output <report.jsonl>
                    [-dims 5,10] [-geometries hyperbolic,euclidean] [-name <dataset>] [train flags]
ablate:   hypertext ablate -input <train> -test <test> -output <report.jsonl> [-name <dataset>] [train flags]
flops:    hypertext flops [-dims 10,50,100] [-labels 4] [-tokens 50] [-transcendental 10]
)";

// Splits "-flag value" pairs; anything not starting with '-' is positional.
struct Args {
  std::map<std::string, std::string> flags;
  std::vector<std::string> positional;

  static Args parse(int argc, char** argv, int first) {
    Args a;
    for (int i = first; i < argc; ++i) {
      const std::string tok = argv[i];
      if (tok.size() > 1 && tok[0] == '-') {
        if (i + 1 >= argc) throw UsageError("missing value for " + tok);
        a.flags[tok.substr(1)] = argv[++i];
      } else {
        a.positional.push_back(tok);
      }
    }
    return a;
  }

  bool has(const std::string& key) const { return flags.count(key) > 0; }

  std::string take(const std::string& key, const std::string& fallback) {
    const auto it = flags.find(key);
    if (it == flags.end()) return fallback;
    std::string v = it->second;
    flags.erase(it);
    return v;
  }

  std::string required(const std::string& key) {
    if (!has(key)) throw UsageError("missing required flag -" + key);
    return take(key, "");
  }

  long long take_int(const std::string& key, long long fallback) {
    const std::string v = take(key, "");
    if (v.empty()) return fallback;
    std::size_t used = 0;
    long long out = 0;
    try {
      out = std::stoll(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size()) throw UsageError("-" + key + " expects an integer, got '" + v + "'");
    return out;
  }

  double take_double(const std::string& key, double fallback) {
    const std::string v = take(key, "");
    if (v.empty()) return fallback;
    std::size_t used = 0;
    double out = 0;
    try {
      out = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size()) throw UsageError("-" + key + " expects a number, got '" + v + "'");
    return out;
  }

  void reject_leftovers() const {
    if (!flags.empty()) throw UsageError("unknown flag -" + flags.begin()->first);
  }
};

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

model::Geometry parse_geometry(const std::string& s) {
  if (s == "hyperbolic") return model::Geometry::kHyperbolic;
  if (s == "euclidean") return model::Geometry::kEuclidean;
  throw UsageError("unknown geometry '" + s + "'");
}

optim::TrainConfig parse_train_config(Args& args) {
  optim::TrainConfig cfg;
  cfg.dim = static_cast<std::size_t>(std::max(0LL, args.take_int("dim", 10)));
  cfg.lr = args.take_double("lr", 0.05);
  try {
    cfg.optimizer = optim::parse_optimizer(args.take("optimizer", "sgd"));
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  cfg.epochs = static_cast<int>(args.take_int("epoch", 5));
  cfg.corpus.word_ngrams = static_cast<int>(args.take_int("wordNgrams", 2));
  cfg.corpus.bucket = args.take_int("bucket", 2'000'000);
  cfg.corpus.min_count = static_cast<int>(args.take_int("minCount", 1));
  cfg.threads = static_cast<int>(args.take_int("thread", 1));
  cfg.seed = static_cast<std::uint64_t>(args.take_int("seed", 42));

  const auto geometry = parse_geometry(args.take("geometry", "hyperbolic"));
  const bool hyper = geometry == model::Geometry::kHyperbolic;
  const std::string pooling = args.take("pooling", hyper ? "einstein" : "mean");
  const std::string classifier = args.take("classifier", hyper ? "mobius" : "linear");
  cfg.arch.geometry = geometry;
  if (pooling == "einstein") {
    cfg.arch.pooling = model::Pooling::kEinstein;
  } else if (pooling == "mean") {
    cfg.arch.pooling = model::Pooling::kMean;
  } else {
    throw UsageError("unknown pooling '" + pooling + "'");
  }
  if (classifier == "mobius") {
    cfg.arch.output = model::OutputKind::kMobius;
  } else if (classifier == "linear") {
    cfg.arch.output = model::OutputKind::kLinear;
  } else {
    throw UsageError("unknown classifier '" + classifier + "'");
  }
  cfg.arch.curvature = hypergeo::Curvature(args.take_double("curvature", 1.0));
  cfg.validate();
  return cfg;
}

int cmd_train(Args args) {
  const std::string input = args.required("input");
  const std::string output = args.required("output");
  auto cfg = parse_train_config(args);
  args.reject_leftovers();
  cfg.progress = &std::cerr;
  const auto result = optim::train(input, cfg);
  cli::save_model(result.classifier, output);
  std::printf("loss\t%.6f\n", result.final_loss);
  return 0;
}

int cmd_test(Args args) {
  args.reject_leftovers();
  if (args.positional.size() != 2) throw UsageError("test expects <model> <test file>");
  const auto clf = cli::load_model(args.positional[0]);
  std::ifstream in(args.positional[1]);
  if (!in) throw Error("cannot open test file: " + args.positional[1]);
  const auto acc = evaluate(clf, in);
  if (acc.examples == 0) throw EmptyCorpus("test file has no labeled examples");
  if (acc.unknown_labels > 0) {
    std::fprintf(stderr, "warning: %zu examples carry labels unseen in training; counted as wrong\n",
                 acc.unknown_labels);
  }
  std::printf("N\t%zu\n", acc.examples);
  std::printf("accuracy\t%.4f\n", acc.value());
  return 0;
}

int cmd_predict(Args args) {
  long long k = args.take_int("k", 1);
  args.reject_leftovers();
  if (args.positional.size() < 2 || args.positional.size() > 3) {
    throw UsageError("predict expects <model> <file | -> [k]");
  }
  if (args.positional.size() == 3) {
    try {
      k = std::stoll(args.positional[2]);
    } catch (const std::exception&) {
      throw UsageError("k must be an integer");
    }
  }
  if (k < 1) throw UsageError("k must be >= 1");
  const auto clf = cli::load_model(args.positional[0]);

  std::ifstream file;
  std::istream* in = &std::cin;
  if (args.positional[1] != "-") {
    file.open(args.positional[1]);
    if (!file) throw Error("cannot open input file: " + args.positional[1]);
    in = &file;
  }
  std::string line;
  while (std::getline(*in, line)) {
    const auto preds = clf.predict(line, static_cast<std::size_t>(k));
    std::string out;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      char prob[32];
      std::snprintf(prob, sizeof prob, "%.6f", preds[i].probability);
      if (i > 0) out += ' ';
      out += clf.corpus.label_prefix + clf.vocab.label(preds[i].label).text + ' ' + prob;
    }
    std::printf("%s\n", out.c_str());
  }
  return 0;
}

std::vector<std::size_t> parse_dims(const std::string& s) {
  std::vector<std::size_t> dims;
  for (const auto& item : split_commas(s)) {
    const long long v = std::stoll(item);
    if (v < 1) throw UsageError("dims must be >= 1");
    dims.push_back(static_cast<std::size_t>(v));
  }
  if (dims.empty()) throw UsageError("-dims must list at least one dimension");
  return dims;
}

void write_report(const eval::Report& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  report.write_jsonl(out);
  report.write_jsonl(std::cout);
}

int cmd_sweep(Args args) {
  const std::string input = args.required("input");
  const std::string test = args.required("test");
  const std::string output = args.required("output");
  eval::RunOptions opts;
  opts.dataset = args.take("name", "dataset");
  const auto dims = parse_dims(args.take("dims", "5,10"));
  std::vector<model::Geometry> geometries;
  for (const auto& g : split_commas(args.take("geometries", "hyperbolic,euclidean"))) {
    geometries.push_back(parse_geometry(g));
  }
  const auto cfg = parse_train_config(args);
  args.reject_leftovers();
  write_report(eval::run_dimension_sweep(input, test, dims, geometries, cfg, opts), output);
  return 0;
}

int cmd_ablate(Args args) {
  const std::string input = args.required("input");
  const std::string test = args.required("test");
  const std::string output = args.required("output");
  eval::RunOptions opts;
  opts.dataset = args.take("name", "dataset");
  const auto cfg = parse_train_config(args);
  args.reject_leftovers();
  write_report(eval::run_ablations(input, test, cfg, opts), output);
  return 0;
}

int cmd_flops(Args args) {
  const auto dims = parse_dims(args.take("dims", "10,50,100"));
  const long long labels = args.take_int("labels", 4);
  const double tokens = args.take_double("tokens", 50);
  eval::FlopCosts costs;
  costs.transcendental = args.take_double("transcendental", 10.0);
  args.reject_leftovers();
  if (labels < 1) throw UsageError("-labels must be >= 1");
  std::printf("# convention: arithmetic op = 1, multiply-add = 2, transcendental = %g\n", costs.transcendental);
  std::printf("# reported hyperbolic/euclidean band: %.1fx - %.1fx\n", eval::kReportedRatioLow,
              eval::kReportedRatioHigh);
  std::printf("dim\tlabels\ttokens\thyperbolic\teuclidean\tratio\tin_band\n");
  for (std::size_t d : dims) {
    const auto e = eval::estimate_flops(d, static_cast<std::size_t>(labels), tokens, costs);
    const bool in_band = e.ratio >= eval::kReportedRatioLow && e.ratio <= eval::kReportedRatioHigh;
    std::printf("%zu\t%lld\t%g\t%.0f\t%.0f\t%.3f\t%s\n", d, labels, tokens, e.hyperbolic, e.euclidean, e.ratio,
                in_band ? "yes" : "no");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fputs(kUsage, stderr);
    return 1;
  }
  const std::string command = argv[1];
  try {
    const Args args = Args::parse(argc, argv, 2);
    if (command == "train") return cmd_train(args);
    if (command == "test") return cmd_test(args);
    if (command == "predict") return cmd_predict(args);
    if (command == "sweep") return cmd_sweep(args);
    if (command == "ablate") return cmd_ablate(args);
    if (command == "flops") return cmd_flops(args);
    if (command == "help" || command == "-h" || command == "--help") {
      std::fputs(kUsage, stdout);
      return 0;
    }
    throw UsageError("unknown command '" + command + "'");
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n\n%s", e.what(), kUsage);
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
