// embedtree: batch CLI over the corpus, translation and compression modules.
// Exit codes: 0 success, 1 usage, 2 data error, 3 internal error.

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "embedtree/compress.hpp"
#include "embedtree/corpus.hpp"
#include "embedtree/translate.hpp"
#include "embedtree/treesearch.hpp"

namespace fs = std::filesystem;
using namespace embedtree;

namespace {

std::string fmt(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Training log goes to stdout and to <out>/train.log. No timestamps:
// identical runs must produce identical logs.
class RunLog {
 public:
  explicit RunLog(const fs::path& dir) : file_(dir / "train.log") {
    if (!file_) {
      throw DataError("cannot open log file in '" + dir.string() + "'");
    }
  }
  void line(const std::string& text) {
    std::cout << text << "\n";
    file_ << text << "\n";
    file_.flush();
  }

 private:
  std::ofstream file_;
};

// Flat "key = value" config files mirroring the long flags; '#' starts a
// comment. Keys already present on the command line keep their flag value.
// Expansion happens before CLI11 parses, so config values go through the
// same checks and transformers as flags.
std::vector<std::string> apply_config_file(std::vector<std::string> args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    }
  }
  if (config_path.empty()) {
    return args;
  }
  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open config file '" + config_path + "'");
  }
  const auto trim = [](std::string s) {
    const auto from = s.find_first_not_of(" \t\r");
    const auto to = s.find_last_not_of(" \t\r");
    return from == std::string::npos ? std::string() : s.substr(from, to - from + 1);
  };
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') {
      continue;
    }
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw CLI::ValidationError("config", "expected 'key = value' on line " +
                                               std::to_string(line_no) + " of '" +
                                               config_path + "'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty() || key == "config") {
      continue;
    }
    const std::string flag = "--" + key;
    bool on_command_line = false;
    for (const std::string& arg : args) {
      if (arg == flag || arg.rfind(flag + "=", 0) == 0) {
        on_command_line = true;
        break;
      }
    }
    if (!on_command_line) {
      args.push_back(flag);
      args.push_back(value);
    }
  }
  return args;
}

fs::path ensure_out_dir(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw DataError("cannot create output directory '" + out + "': " + ec.message());
  }
  return dir;
}

std::vector<TokenSequence> read_test_sequences(const std::string& path,
                                               const Dictionary& dict) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open corpus file '" + path + "'");
  }
  std::vector<TokenSequence> out;
  std::string line;
  while (std::getline(in, line)) {
    TokenSequence s = kept_sequence(dict, tokenize(line));
    if (!s.empty()) {
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<TokenSequence> collect_ngrams(const std::vector<std::vector<int>>& paragraphs,
                                          const Dictionary& dict, int length,
                                          bool random_lengths) {
  std::vector<TokenSequence> data;
  const int lo = random_lengths ? 2 : length;
  for (int len = lo; len <= length; ++len) {
    for (const auto& paragraph : paragraphs) {
      for (TokenSequence& g : extract_ngrams(paragraph, len, dict)) {
        data.push_back(std::move(g));
      }
    }
  }
  return data;
}

// ---------------------------------------------------------------------------
// Option bundles

struct BuildDictArgs {
  std::string corpus, out, word_dict;
  int keep = 30000;
  bool pairs = false;
};

struct ExtractArgs {
  std::string corpus, dict, out;
  int window = 2;
};

struct AlignArgs {
  std::string source, target, dict_a, dict_b;
};

struct TrainTranslateArgs {
  std::string source, target, dict_a, dict_b, pair_dict_a, pair_dict_b, out;
  std::string eval_source, eval_target;
  std::uint64_t seed = 1;
  int d = 50;
  double gamma = 0.01;
  Distance distance = Distance::L1;
  double margin = 0.0;  // 0 selects sqrt(d)
  long long iters = 0;
  long long eval_interval = 0;
  int eval_m = 1;
  bool no_reshuffle = false;
};

enum class Objective { LocalMse, GlobalMse, Ranking };

struct TrainCompressArgs {
  Objective objective = Objective::GlobalMse;
  std::string corpus, dict, out, eval_corpus;
  std::uint64_t seed = 1;
  int d = 8;
  CompressorVariant variant = CompressorVariant::Linear;
  int nhu = 0;
  double gamma = 0.01;
  double margin = 1.0;
  long long iters = 0;
  long long eval_interval = 0;
  TreePolicy tree = TreePolicy::LeftToRight;
  NegativeScheme negative = NegativeScheme::RandomPosition;
  int length = 2;
  bool random_lengths = false;
  int max_length = 32;
  bool no_reshuffle = false;
};

struct EvalTranslateArgs {
  std::string model, source, target, dict_a, dict_b, pair_dict_a, pair_dict_b;
  Distance distance = Distance::L1;
  double margin = 0.0;
  int m = 1;
  std::uint64_t seed = 1;
  bool exact = false;
};

struct EvalCompressArgs {
  std::string model, corpus, dict;
  TreePolicy tree = TreePolicy::LeftToRight;
  std::uint64_t seed = 1;
  bool compare_policies = false;  // eval-rank only
};

struct NnQueryArgs {
  std::string model, dict, word, pair;
  int k = 10;
  int limit = 500;
};

struct BestTreeArgs {
  std::string model, dict, sentence, corpus;
};

// ---------------------------------------------------------------------------
// Handlers

void run_build_dict(const BuildDictArgs& args) {
  if (args.pairs && args.word_dict.empty()) {
    throw CLI::ValidationError("--pairs requires --word-dict");
  }
  Dictionary dict = args.pairs
                        ? build_pair_dictionary(args.corpus,
                                                Dictionary::load(args.word_dict),
                                                args.keep)
                        : build_dictionary(args.corpus, args.keep);
  dict.save(args.out);
  std::cout << "tokens " << dict.size() << " kept " << dict.kept() << "\n";
}

void run_extract_ngrams(const ExtractArgs& args) {
  const Dictionary dict = Dictionary::load(args.dict);
  std::ifstream in(args.corpus, std::ios::binary);
  if (!in) {
    throw DataError("cannot open corpus file '" + args.corpus + "'");
  }
  std::ofstream out(args.out, std::ios::binary);
  if (!out) {
    throw DataError("cannot open '" + args.out + "' for writing");
  }
  std::string line;
  long long count = 0;
  while (std::getline(in, line)) {
    const std::vector<int> paragraph = map_tokens(dict, tokenize(line));
    for (const TokenSequence& g : extract_ngrams(paragraph, args.window, dict)) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (i > 0) {
          out << ' ';
        }
        out << dict.token(g[i]);
      }
      out << '\n';
      ++count;
    }
  }
  std::cout << "ngrams " << count << "\n";
}

void run_align_check(const AlignArgs& args) {
  const Dictionary dict_a = Dictionary::load(args.dict_a);
  const Dictionary dict_b = Dictionary::load(args.dict_b);
  const AlignedCorpus corpus = load_aligned(args.source, args.target, dict_a, dict_b);
  std::cout << "pairs " << corpus.pairs.size() << " skipped " << corpus.skipped << "\n";
}

void run_train_translate(const TrainTranslateArgs& args) {
  const bool use_pairs = !args.pair_dict_a.empty() || !args.pair_dict_b.empty();
  if (use_pairs && (args.pair_dict_a.empty() || args.pair_dict_b.empty())) {
    throw CLI::ValidationError("--pair-dict-a and --pair-dict-b go together");
  }
  const Dictionary dict_a = Dictionary::load(args.dict_a);
  const Dictionary dict_b = Dictionary::load(args.dict_b);
  const AlignedCorpus corpus = load_aligned(args.source, args.target, dict_a, dict_b);
  if (corpus.pairs.empty()) {
    throw DataError("aligned corpus is empty after filtering");
  }

  std::optional<Dictionary> pair_dict_a, pair_dict_b;
  BiText bitext;
  if (use_pairs) {
    pair_dict_a = Dictionary::load(args.pair_dict_a);
    pair_dict_b = Dictionary::load(args.pair_dict_b);
    bitext = make_bitext(corpus, dict_a, dict_b, *pair_dict_a, *pair_dict_b);
  } else {
    bitext = make_bitext(corpus);
  }

  BiText eval_bitext = bitext;
  if (!args.eval_source.empty() && !args.eval_target.empty()) {
    const AlignedCorpus eval_corpus =
        load_aligned(args.eval_source, args.eval_target, dict_a, dict_b);
    eval_bitext = use_pairs ? make_bitext(eval_corpus, dict_a, dict_b, *pair_dict_a,
                                          *pair_dict_b)
                            : make_bitext(eval_corpus);
  }

  TranslationModel model(args.d, dict_a.kept(), dict_b.kept(), args.distance,
                         args.margin, args.seed);
  if (use_pairs) {
    model.enable_pairs(pair_dict_a->kept(), pair_dict_b->kept(), args.seed + 1);
  }

  const fs::path out = ensure_out_dir(args.out);
  RunLog log(out);
  Rng eval_rng(args.seed ^ 0x45564AULL);

  TranslationTrainConfig config;
  config.gamma = args.gamma;
  config.iters = args.iters;
  config.eval_interval = args.eval_interval;
  config.seed = args.seed;
  config.reshuffle = !args.no_reshuffle;

  train_translation(model, bitext, config,
                    [&](long long iter, double loss, bool has_loss) {
                      if (has_loss) {
                        const double pw = estimate_performance(model, eval_bitext,
                                                               args.eval_m, eval_rng);
                        log.line("iter " + std::to_string(iter) + " loss " + fmt(loss) +
                                 " Pw " + fmt(pw));
                      }
                      save_translation_model(
                          model, (out / ("ckpt-" + std::to_string(iter) + ".model"))
                                     .string());
                    });
}

void run_train_compress(const TrainCompressArgs& args) {
  if (args.variant == CompressorVariant::NonLinear && args.nhu <= 0) {
    throw CLI::ValidationError("nonlinear variant requires --nhu > 0");
  }
  const Dictionary dict = Dictionary::load(args.dict);
  const std::vector<std::vector<int>> paragraphs = load_paragraphs(args.corpus, dict);
  const std::vector<TokenSequence> data =
      collect_ngrams(paragraphs, dict, args.length, args.random_lengths);
  if (data.empty()) {
    throw DataError("no training n-grams of length " + std::to_string(args.length) +
                    " in '" + args.corpus + "'");
  }

  CompressModelConfig model_config;
  model_config.d = args.d;
  model_config.n_kept = dict.kept();
  model_config.variant = args.variant;
  model_config.n_hidden = args.nhu;
  model_config.with_extractor = args.objective != Objective::Ranking;
  model_config.with_score = args.objective == Objective::Ranking;
  model_config.seed = args.seed;
  CompressModel model(model_config);

  std::vector<TokenSequence> eval_data;
  if (!args.eval_corpus.empty()) {
    const std::vector<std::vector<int>> eval_paragraphs =
        load_paragraphs(args.eval_corpus, dict);
    eval_data = collect_ngrams(eval_paragraphs, dict, args.length, args.random_lengths);
  }
  const std::uint64_t eval_seed = args.seed ^ 0x45564AULL;
  std::vector<int> eval_positions;
  {
    Rng rng(eval_seed);
    for (const TokenSequence& s : eval_data) {
      eval_positions.push_back(1 + rng.uniform_int(static_cast<int>(s.size())));
    }
  }

  // The provider is rebuilt with the same seed at every checkpoint so the
  // metric sees the same trees each time and stays comparable.
  auto metric = [&]() -> std::optional<double> {
    if (eval_data.empty()) {
      return std::nullopt;
    }
    const StepsProvider steps = fixed_steps_provider(args.tree, eval_seed + 1);
    if (args.objective == Objective::Ranking) {
      double sum = 0.0;
      for (std::size_t i = 0; i < eval_data.size(); ++i) {
        sum += sentence_rank(model, eval_data[i], eval_positions[i],
                             steps(eval_data[i]));
      }
      return sum / static_cast<double>(eval_data.size());
    }
    return correct_extraction_rate(model, eval_data, steps);
  };

  const fs::path out = ensure_out_dir(args.out);
  RunLog log(out);

  CompressTrainConfig config;
  config.gamma = args.gamma;
  config.iters = args.iters;
  config.eval_interval = args.eval_interval;
  config.margin = args.margin;
  config.tree_policy = args.tree;
  config.negative_scheme = args.negative;
  config.seed = args.seed;
  config.reshuffle = !args.no_reshuffle;
  config.max_length = args.max_length;

  const TrainCallback on_eval = [&](long long iter, double loss, bool has_loss) {
    if (has_loss) {
      const std::optional<double> m = metric();
      log.line("iter " + std::to_string(iter) + " loss " + fmt(loss) + " eval " +
               (m ? fmt(*m) : "-"));
    }
    save_compress_model(model,
                        (out / ("ckpt-" + std::to_string(iter) + ".model")).string());
  };

  switch (args.objective) {
    case Objective::LocalMse:
      train_local_mse(model, data, config, on_eval);
      break;
    case Objective::GlobalMse:
      train_global_mse(model, data, config, on_eval);
      break;
    case Objective::Ranking:
      train_ranking(model, data, config, on_eval);
      break;
  }
}

void run_eval_translate(const EvalTranslateArgs& args) {
  const Dictionary dict_a = Dictionary::load(args.dict_a);
  const Dictionary dict_b = Dictionary::load(args.dict_b);
  const AlignedCorpus corpus = load_aligned(args.source, args.target, dict_a, dict_b);
  if (corpus.pairs.empty()) {
    throw DataError("aligned corpus is empty after filtering");
  }
  TranslationModel model =
      load_translation_model(args.model, args.distance, args.margin);
  const bool use_pairs = !args.pair_dict_a.empty() && !args.pair_dict_b.empty();
  if (model.pairs_enabled() && !use_pairs) {
    throw DataError("model has pair tables; pass --pair-dict-a/--pair-dict-b");
  }
  const BiText bitext =
      use_pairs ? make_bitext(corpus, dict_a, dict_b, Dictionary::load(args.pair_dict_a),
                              Dictionary::load(args.pair_dict_b))
                : make_bitext(corpus);
  if (args.exact) {
    double sum = 0.0;
    int worst = 0;
    for (int i = 1; i <= static_cast<int>(bitext.size()); ++i) {
      const int r = exact_rank(model, bitext, i);
      sum += r;
      worst = std::max(worst, r);
    }
    std::cout << "mean_exact_rank\t" << fmt(sum / static_cast<double>(bitext.size()))
              << "\nworst_rank\t" << worst << "\nn\t" << bitext.size() << "\n";
  } else {
    Rng rng(args.seed);
    std::cout << "Pw\t" << fmt(estimate_performance(model, bitext, args.m, rng))
              << "\nn\t" << bitext.size() << "\n";
  }
}

void run_eval_rank(const EvalCompressArgs& args) {
  const Dictionary dict = Dictionary::load(args.dict);
  CompressModel model = load_compress_model(args.model);
  if (!model.score_head) {
    throw DataError("model '" + args.model +
                    "' has no score head (train with --objective ranking)");
  }
  const std::vector<TokenSequence> data = read_test_sequences(args.corpus, dict);
  if (data.empty()) {
    throw DataError("no usable test sequences in '" + args.corpus + "'");
  }
  if (args.compare_policies) {
    std::cout << compare_tree_policies(model, data, args.seed).to_tsv();
    return;
  }
  Rng rng(args.seed);
  std::vector<int> positions;
  for (const TokenSequence& s : data) {
    positions.push_back(1 + rng.uniform_int(static_cast<int>(s.size())));
  }
  double sum = 0.0;
  int worst = 0;
  const bool greedy = args.tree == TreePolicy::Greedy;
  const StepsProvider steps = greedy ? greedy_steps_provider(model)
                                     : fixed_steps_provider(args.tree, args.seed + 1);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int r = sentence_rank(model, data[i], positions[i], steps, greedy);
    sum += r;
    worst = std::max(worst, r);
  }
  std::cout << "mean_rank\t" << fmt(sum / static_cast<double>(data.size()))
            << "\nworst_rank\t" << worst << "\nn\t" << data.size() << "\n";
}

void run_eval_extract(const EvalCompressArgs& args) {
  const Dictionary dict = Dictionary::load(args.dict);
  CompressModel model = load_compress_model(args.model);
  if (!model.extractor) {
    throw DataError("model '" + args.model +
                    "' has no extractor (train with an MSE objective)");
  }
  const std::vector<TokenSequence> data = read_test_sequences(args.corpus, dict);
  if (data.empty()) {
    throw DataError("no usable test sequences in '" + args.corpus + "'");
  }
  if (args.tree == TreePolicy::Greedy) {
    throw CLI::ValidationError("eval-extract supports left-to-right and random trees");
  }
  const double rate =
      correct_extraction_rate(model, data, fixed_steps_provider(args.tree, args.seed));
  std::cout << "extraction_rate\t" << fmt(rate) << "\nn\t" << data.size() << "\n";
}

void run_nn_query(const NnQueryArgs& args) {
  const Dictionary dict = Dictionary::load(args.dict);
  CompressModel model = load_compress_model(args.model);
  if (model.n_kept() != dict.kept()) {
    throw DataError("model has " + std::to_string(model.n_kept()) +
                    " embeddings but dictionary keeps " + std::to_string(dict.kept()));
  }
  if (!args.word.empty()) {
    const int idx = dict.index_of(args.word);
    if (!dict.is_kept(idx)) {
      throw DataError("word '" + args.word + "' is not in the kept dictionary");
    }
    for (const int neighbor : nearest_words(*model.embed, idx, args.k)) {
      std::cout << dict.token(neighbor) << "\n";
    }
    return;
  }
  if (args.pair.empty()) {
    throw CLI::ValidationError("pass --word or --pair");
  }
  const std::vector<std::string> tokens = tokenize(args.pair);
  if (tokens.size() != 2) {
    throw CLI::ValidationError("--pair expects exactly two tokens");
  }
  TokenSequence query;
  for (const std::string& t : tokens) {
    const int idx = dict.index_of(t);
    if (!dict.is_kept(idx)) {
      throw DataError("word '" + t + "' is not in the kept dictionary");
    }
    query.push_back(idx);
  }
  const int limit = std::min(args.limit, dict.kept());
  for (const TokenSequence& g : nearest_ngrams(model, query, args.k, limit)) {
    std::cout << dict.token(g[0]) << " " << dict.token(g[1]) << "\n";
  }
}

void run_best_tree(const BestTreeArgs& args) {
  const Dictionary dict = Dictionary::load(args.dict);
  CompressModel model = load_compress_model(args.model);
  if (!model.score_head) {
    throw DataError("model '" + args.model +
                    "' has no score head (train with --objective ranking)");
  }
  std::vector<TokenSequence> sentences;
  if (!args.sentence.empty()) {
    const TokenSequence s = kept_sequence(dict, tokenize(args.sentence));
    if (s.empty()) {
      throw DataError("sentence has no kept words");
    }
    sentences.push_back(s);
  } else if (!args.corpus.empty()) {
    sentences = read_test_sequences(args.corpus, dict);
    if (sentences.empty()) {
      throw DataError("no usable sentences in '" + args.corpus + "'");
    }
  } else {
    throw CLI::ValidationError("pass --sentence or --corpus");
  }
  for (const TokenSequence& s : sentences) {
    const GreedyTrace trace = greedy_tree(model, s);
    const GroupingTree tree = compose_tree(trace.steps, static_cast<int>(s.size()));
    std::cout << format_tree(*tree) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"embedtree: n-gram translation scoring and recursive sentence "
               "compression over plain-text corpora"};
  app.require_subcommand(1);

  const std::map<std::string, Distance> distance_names{{"l1", Distance::L1},
                                                       {"dot", Distance::Dot}};
  const std::map<std::string, TreePolicy> tree_names{
      {"left-to-right", TreePolicy::LeftToRight},
      {"random", TreePolicy::Random},
      {"greedy", TreePolicy::Greedy}};
  const std::map<std::string, TreePolicy> train_tree_names{
      {"left-to-right", TreePolicy::LeftToRight}, {"random", TreePolicy::Random}};
  const std::map<std::string, NegativeScheme> negative_names{
      {"last", NegativeScheme::Last},
      {"random-position", NegativeScheme::RandomPosition}};
  const std::map<std::string, Objective> objective_names{
      {"local-mse", Objective::LocalMse},
      {"global-mse", Objective::GlobalMse},
      {"ranking", Objective::Ranking}};
  const std::map<std::string, CompressorVariant> variant_names{
      {"linear", CompressorVariant::Linear},
      {"nonlinear", CompressorVariant::NonLinear}};
  const std::map<std::string, bool> length_policy_names{{"fixed", false},
                                                        {"random", true}};

  BuildDictArgs build_args;
  auto* build = app.add_subcommand("build-dict", "Build a frequency dictionary");
  build->add_option("--corpus", build_args.corpus, "Corpus, one paragraph per line")
      ->required();
  build->add_option("--out", build_args.out, "Dictionary output path")->required();
  build->add_option("--keep", build_args.keep, "Keep the N most frequent tokens")
      ->check(CLI::PositiveNumber);
  build->add_flag("--pairs", build_args.pairs, "Count adjacent kept-word pairs");
  build->add_option("--word-dict", build_args.word_dict,
                    "Word dictionary (required with --pairs)");
  build->callback([&build_args]() { run_build_dict(build_args); });

  ExtractArgs extract_args;
  auto* extract =
      app.add_subcommand("extract-ngrams", "Slide a window and keep all-kept n-grams");
  extract->add_option("--corpus", extract_args.corpus)->required();
  extract->add_option("--dict", extract_args.dict)->required();
  extract->add_option("--window", extract_args.window)->check(CLI::PositiveNumber);
  extract->add_option("--out", extract_args.out)->required();
  extract->callback([&extract_args]() { run_extract_ngrams(extract_args); });

  AlignArgs align_args;
  auto* align = app.add_subcommand("align-check", "Validate an aligned corpus");
  align->add_option("--source", align_args.source)->required();
  align->add_option("--target", align_args.target)->required();
  align->add_option("--dict-a", align_args.dict_a)->required();
  align->add_option("--dict-b", align_args.dict_b)->required();
  align->callback([&align_args]() { run_align_check(align_args); });

  TrainTranslateArgs tt_args;
  auto* tt = app.add_subcommand("train-translate", "Train the dual encoder");
  std::string tt_config;
  tt->add_option("--config", tt_config, "Flat key = value config file");
  tt->add_option("--source", tt_args.source)->required();
  tt->add_option("--target", tt_args.target)->required();
  tt->add_option("--dict-a", tt_args.dict_a)->required();
  tt->add_option("--dict-b", tt_args.dict_b)->required();
  tt->add_option("--pair-dict-a", tt_args.pair_dict_a);
  tt->add_option("--pair-dict-b", tt_args.pair_dict_b);
  tt->add_option("--eval-source", tt_args.eval_source);
  tt->add_option("--eval-target", tt_args.eval_target);
  tt->add_option("--out", tt_args.out, "Checkpoint/log directory")->required();
  tt->add_option("--seed", tt_args.seed);
  tt->add_option("--d", tt_args.d, "Embedding dimension")->check(CLI::PositiveNumber);
  tt->add_option("--gamma", tt_args.gamma, "Learning rate")->check(CLI::PositiveNumber);
  tt->add_option("--distance", tt_args.distance, "l1 | dot")
      ->transform(CLI::CheckedTransformer(distance_names, CLI::ignore_case));
  tt->add_option("--margin", tt_args.margin, "Ranking margin; 0 selects sqrt(d)")
      ->check(CLI::NonNegativeNumber);
  tt->add_option("--iters", tt_args.iters)->check(CLI::NonNegativeNumber);
  tt->add_option("--eval-interval", tt_args.eval_interval)
      ->check(CLI::NonNegativeNumber);
  tt->add_option("--eval-m", tt_args.eval_m, "Random candidates per P(w) sample")
      ->check(CLI::PositiveNumber);
  tt->add_flag("--no-reshuffle", tt_args.no_reshuffle,
               "Keep the corpus order across epochs");
  tt->callback([&tt_args]() { run_train_translate(tt_args); });

  TrainCompressArgs tc_args;
  auto* tc = app.add_subcommand("train-compress", "Train the compression engine");
  std::string tc_config;
  tc->add_option("--config", tc_config, "Flat key = value config file");
  tc->add_option("--objective", tc_args.objective, "local-mse | global-mse | ranking")
      ->required()
      ->transform(CLI::CheckedTransformer(objective_names, CLI::ignore_case));
  tc->add_option("--corpus", tc_args.corpus)->required();
  tc->add_option("--dict", tc_args.dict)->required();
  tc->add_option("--eval-corpus", tc_args.eval_corpus);
  tc->add_option("--out", tc_args.out, "Checkpoint/log directory")->required();
  tc->add_option("--seed", tc_args.seed);
  tc->add_option("--d", tc_args.d, "Embedding dimension")->check(CLI::PositiveNumber);
  tc->add_option("--variant", tc_args.variant, "linear | nonlinear")
      ->transform(CLI::CheckedTransformer(variant_names, CLI::ignore_case));
  tc->add_option("--nhu", tc_args.nhu, "Hidden units (nonlinear variant)")
      ->check(CLI::NonNegativeNumber);
  tc->add_option("--gamma", tc_args.gamma, "Learning rate")->check(CLI::PositiveNumber);
  tc->add_option("--margin", tc_args.margin, "Ranking margin")
      ->check(CLI::PositiveNumber);
  tc->add_option("--iters", tc_args.iters)->check(CLI::NonNegativeNumber);
  tc->add_option("--eval-interval", tc_args.eval_interval)
      ->check(CLI::NonNegativeNumber);
  tc->add_option("--tree", tc_args.tree, "left-to-right | random")
      ->transform(CLI::CheckedTransformer(train_tree_names, CLI::ignore_case));
  tc->add_option("--negative", tc_args.negative, "last | random-position")
      ->transform(CLI::CheckedTransformer(negative_names, CLI::ignore_case));
  tc->add_option("--length", tc_args.length, "N-gram window length")
      ->check(CLI::PositiveNumber);
  tc->add_option("--length-policy", tc_args.random_lengths,
                 "fixed | random (random mixes lengths in [2, length])")
      ->transform(CLI::CheckedTransformer(length_policy_names, CLI::ignore_case));
  tc->add_option("--max-length", tc_args.max_length, "Depth guard")
      ->check(CLI::PositiveNumber);
  tc->add_flag("--no-reshuffle", tc_args.no_reshuffle);
  tc->callback([&tc_args]() { run_train_compress(tc_args); });

  EvalTranslateArgs et_args;
  auto* et = app.add_subcommand("eval-translate",
                                "P(w) estimate or exact ranks of a translation model");
  et->add_option("--model", et_args.model)->required();
  et->add_option("--source", et_args.source)->required();
  et->add_option("--target", et_args.target)->required();
  et->add_option("--dict-a", et_args.dict_a)->required();
  et->add_option("--dict-b", et_args.dict_b)->required();
  et->add_option("--pair-dict-a", et_args.pair_dict_a);
  et->add_option("--pair-dict-b", et_args.pair_dict_b);
  et->add_option("--distance", et_args.distance, "l1 | dot")
      ->transform(CLI::CheckedTransformer(distance_names, CLI::ignore_case));
  et->add_option("--margin", et_args.margin)->check(CLI::NonNegativeNumber);
  et->add_option("--m", et_args.m, "Random candidates per pair")
      ->check(CLI::PositiveNumber);
  et->add_option("--seed", et_args.seed);
  et->add_flag("--exact", et_args.exact, "Compute exact ranks instead of P(w)");
  et->callback([&et_args]() { run_eval_translate(et_args); });

  EvalCompressArgs er_args;
  auto* er = app.add_subcommand("eval-rank", "Mean sentence rank of a ranking model");
  er->add_option("--model", er_args.model)->required();
  er->add_option("--corpus", er_args.corpus, "One test n-gram per line")->required();
  er->add_option("--dict", er_args.dict)->required();
  er->add_option("--tree", er_args.tree, "left-to-right | random | greedy")
      ->transform(CLI::CheckedTransformer(tree_names, CLI::ignore_case));
  er->add_option("--seed", er_args.seed);
  er->add_flag("--compare-policies", er_args.compare_policies,
               "Report greedy vs random vs left-to-right");
  er->callback([&er_args]() { run_eval_rank(er_args); });

  EvalCompressArgs ee_args;
  auto* ee = app.add_subcommand("eval-extract",
                                "Correct-extraction rate of an autoencoder model");
  ee->add_option("--model", ee_args.model)->required();
  ee->add_option("--corpus", ee_args.corpus, "One test n-gram per line")->required();
  ee->add_option("--dict", ee_args.dict)->required();
  ee->add_option("--tree", ee_args.tree, "left-to-right | random")
      ->transform(CLI::CheckedTransformer(tree_names, CLI::ignore_case));
  ee->add_option("--seed", ee_args.seed);
  ee->callback([&ee_args]() { run_eval_extract(ee_args); });

  NnQueryArgs nn_args;
  auto* nn = app.add_subcommand("nn-query", "Nearest words or pairs in the embedding");
  nn->add_option("--model", nn_args.model)->required();
  nn->add_option("--dict", nn_args.dict)->required();
  nn->add_option("--word", nn_args.word, "Query word");
  nn->add_option("--pair", nn_args.pair, "Query pair, e.g. \"red house\"");
  nn->add_option("--k", nn_args.k, "Number of neighbors")->check(CLI::PositiveNumber);
  nn->add_option("--limit", nn_args.limit, "Dictionary prefix for pair enumeration")
      ->check(CLI::PositiveNumber);
  nn->callback([&nn_args]() { run_nn_query(nn_args); });

  BestTreeArgs bt_args;
  auto* bt = app.add_subcommand("best-tree", "Greedy grouping tree for sentences");
  bt->add_option("--model", bt_args.model)->required();
  bt->add_option("--dict", bt_args.dict)->required();
  bt->add_option("--sentence", bt_args.sentence, "One sentence of tokens");
  bt->add_option("--corpus", bt_args.corpus, "One sentence per line");
  bt->callback([&bt_args]() { run_best_tree(bt_args); });

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = apply_config_file(std::move(args));
    std::reverse(args.begin(), args.end());  // CLI11 consumes args back to front
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
