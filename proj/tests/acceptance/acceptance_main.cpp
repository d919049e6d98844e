// Acceptance suite: runs every criterion end to end and prints one
// PASS/FAIL line per criterion. Exits nonzero if any criterion fails.
// Optional arguments select a subset by number, e.g. `acceptance 4 7`.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "embedtree/compress.hpp"
#include "embedtree/translate.hpp"
#include "embedtree/treesearch.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace embedtree;
using testutil::check_module;
using testutil::max_grad_err;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared evaluation helpers

double mean_rank(CompressModel& model, const std::vector<TokenSequence>& test_set,
                 std::uint64_t eval_seed) {
  Rng rng(eval_seed);
  const StepsProvider steps = fixed_steps_provider(TreePolicy::Random, eval_seed + 1);
  double sum = 0.0;
  for (const TokenSequence& s : test_set) {
    const int position = 1 + rng.uniform_int(static_cast<int>(s.size()));
    sum += sentence_rank(model, s, position, steps(s));
  }
  return sum / static_cast<double>(test_set.size());
}

struct MetricTrack {
  double first = -1.0;
  double best = -1.0;
  double last = -1.0;
  bool lower_is_better = false;
  void record(double v) {
    if (first < 0.0) {
      first = v;
      best = v;
    }
    last = v;
    best = lower_is_better ? std::min(best, v) : std::max(best, v);
  }
};

// ---------------------------------------------------------------------------
// Criterion 1: gradient suite

Outcome criterion_gradients() {
  double worst_standard = 0.0;  // must stay < 1e-5
  double worst_stack = 0.0;     // full compress-extract stacks, < 1e-4

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);

    {
      LinearLayer layer(3, 4, rng);
      const DenseMatrix x = uniform_init(rng, 4, 1, -1.0, 1.0);
      worst_standard = std::max(worst_standard, check_module(layer, x, rng).worst());
    }
    {
      LinearLayer score_head(1, 6, rng);  // the ranking score head shape
      const DenseMatrix x = uniform_init(rng, 6, 1, -1.0, 1.0);
      worst_standard =
          std::max(worst_standard, check_module(score_head, x, rng).worst());
    }
    {
      HardTanhLayer layer;
      DenseMatrix x = uniform_init(rng, 6, 1, -2.0, 2.0);
      while (testutil::min_kink_distance(x) < 1e-3) {
        x = uniform_init(rng, 6, 1, -2.0, 2.0);
      }
      worst_standard = std::max(worst_standard, check_module(layer, x, rng).worst());
    }
    {
      MeanLayer layer;
      const DenseMatrix x = uniform_init(rng, 3, 4, -1.0, 1.0);
      worst_standard = std::max(worst_standard, check_module(layer, x, rng).worst());
    }
    {
      EmbeddingTable table(3, 6, rng);
      const TokenSequence s = {2, 5, 2};
      const DenseMatrix g = uniform_init(rng, 3, 3, -1.0, 1.0);
      const auto loss = [&]() {
        const DenseMatrix out = table.forward(s);
        double acc = 0.0;
        for (int i = 0; i < out.size(); ++i) {
          acc += g[i] * out[i];
        }
        return acc;
      };
      table.zero_grads();
      table.forward(s);
      table.backward(s, g);
      const DenseMatrix analytic = table.grad_w;
      worst_standard = std::max(worst_standard, max_grad_err(table.w, analytic, loss));
    }
    {
      // Sequential [Linear, HardTanh, Linear]: the layer-chain recursion.
      auto first = std::make_shared<LinearLayer>(5, 3, rng);
      Sequential net;
      net.add(first)
          .add(std::make_shared<HardTanhLayer>())
          .add(std::make_shared<LinearLayer>(2, 5, rng));
      DenseMatrix x = uniform_init(rng, 3, 1, -1.0, 1.0);
      while (testutil::min_kink_distance(first->forward(x)) < 1e-3) {
        x = uniform_init(rng, 3, 1, -1.0, 1.0);
      }
      worst_standard = std::max(worst_standard, check_module(net, x, rng).worst());
    }
    {
      // Shared-weight compression tree as one module.
      auto h = make_compressor(CompressorVariant::Linear, 3, 0, rng);
      CompressTreeModule tree(h, 3);
      const int l = 2 + rng.uniform_int(4);
      tree.set_steps(random_tree(l, rng));
      const DenseMatrix x = uniform_init(rng, 3, l, -1.0, 1.0);
      worst_standard = std::max(worst_standard, check_module(tree, x, rng).worst());
    }
    {
      // MSE criterion gradient.
      DenseMatrix output = uniform_init(rng, 5, 1, -1.0, 1.0);
      const DenseMatrix target = uniform_init(rng, 5, 1, -1.0, 1.0);
      const MseResult res = mse_criterion(output, target);
      const auto loss = [&]() { return mse_criterion(output, target).loss; };
      worst_standard =
          std::max(worst_standard, max_grad_err(output, res.grad_output, loss));
    }
    {
      // Margin ranking criterion slopes away from the hinge.
      double pos = rng.uniform(-2.0, 2.0);
      double neg = rng.uniform(-2.0, 2.0);
      if (std::abs(1.0 - pos + neg) > 1e-3) {
        const MarginResult res = margin_ranking_criterion(pos, neg, 1.0);
        const auto loss = [&]() {
          return margin_ranking_criterion(pos, neg, 1.0).loss;
        };
        worst_standard = std::max(
            worst_standard,
            testutil::rel_err(res.d_pos, testutil::central_diff(loss, &pos)));
        worst_standard = std::max(
            worst_standard,
            testutil::rel_err(res.d_neg, testutil::central_diff(loss, &neg)));
      }
    }
  }

  // Full compress-extract stacks at l=5, d=4 with a frozen reconstruction
  // target, both variants; gradients of every parameter against FD.
  int stack_checks = 0;
  std::uint64_t stack_seed = 1;
  while (stack_checks < 20) {
    const bool nonlinear = stack_checks % 2 == 1;
    CompressModelConfig config;
    config.d = 4;
    config.n_kept = 9;
    config.variant = nonlinear ? CompressorVariant::NonLinear : CompressorVariant::Linear;
    config.n_hidden = nonlinear ? 6 : 0;
    config.with_extractor = true;
    config.seed = stack_seed++;
    CompressModel model(config);
    Rng rng(stack_seed * 31);
    const TokenSequence s = {3, 9, 1, 5, 3};
    const MergeSteps steps = random_tree(5, rng);
    if (nonlinear) {
      const DenseMatrix embedded = model.embed->forward(s);
      const CompressTrace probe = compress_sentence(*model.compressor, embedded, steps);
      auto& hidden = dynamic_cast<LinearLayer&>(
          *dynamic_cast<Sequential&>(*model.compressor).children.front());
      double kink = 1e300;
      for (const DenseMatrix& input : probe.inputs) {
        kink = std::min(kink, testutil::min_kink_distance(hidden.forward(input)));
      }
      if (kink < 1e-3) {
        continue;
      }
    }
    const DenseMatrix target = model.embed->forward(s);
    const auto loss = [&]() {
      const DenseMatrix embedded = model.embed->forward(s);
      const CompressTrace ct = compress_sentence(*model.compressor, embedded, steps);
      const ExtractTrace et = extract_sentence(*model.extractor, ct.code, steps);
      double acc = 0.0;
      for (int j = 0; j < 5; ++j) {
        for (int i = 0; i < 4; ++i) {
          const double diff = target(i, j) - et.columns(i, j);
          acc += diff * diff / 4.0;
        }
      }
      return acc / 5.0;
    };
    model.zero_grads();
    const DenseMatrix embedded = model.embed->forward(s);
    const CompressTrace ct = compress_sentence(*model.compressor, embedded, steps);
    const ExtractTrace et = extract_sentence(*model.extractor, ct.code, steps);
    DenseMatrix grad_columns(4, 5);
    for (int j = 0; j < 5; ++j) {
      for (int i = 0; i < 4; ++i) {
        grad_columns(i, j) = (2.0 / 4.0) * (et.columns(i, j) - target(i, j)) / 5.0;
      }
    }
    const DenseMatrix grad_code =
        extract_backward(*model.extractor, et, steps, grad_columns);
    model.embed->backward(s, compress_backward(*model.compressor, ct, 5, grad_code));
    for (const Parameter& p : model.parameters()) {
      const DenseMatrix analytic = *p.grad;
      worst_stack = std::max(worst_stack, max_grad_err(*p.value, analytic, loss));
    }
    ++stack_checks;
  }

  Outcome out;
  out.pass = worst_standard < 1e-5 && worst_stack < 1e-4;
  out.detail = "worst module err " + fmt(worst_standard) + " (< 1e-5), stack err " +
               fmt(worst_stack) + " (< 1e-4)";
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 2: closed-form linear backward vs explicit Jacobian route

Outcome criterion_linear_closed_form() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const int out_n = 2 + rng.uniform_int(5);
    const int in_n = 2 + rng.uniform_int(5);
    LinearLayer layer(out_n, in_n, rng);
    const DenseMatrix x = uniform_init(rng, in_n, 1, -2.0, 2.0);
    const DenseMatrix g = uniform_init(rng, out_n, 1, -2.0, 2.0);
    layer.forward(x);
    layer.zero_grads();
    const DenseMatrix grad_in = layer.backward(x, g);
    for (int j = 0; j < out_n; ++j) {
      for (int k = 0; k < in_n; ++k) {
        double acc = 0.0;
        for (int r = 0; r < out_n; ++r) {
          acc += g[r] * ((r == j) ? x[k] : 0.0);
        }
        worst = std::max(worst, std::abs(layer.grad_w(j, k) - acc));
      }
      worst = std::max(worst, std::abs(layer.grad_b[j] - g[j]));
    }
    for (int k = 0; k < in_n; ++k) {
      double acc = 0.0;
      for (int j = 0; j < out_n; ++j) {
        acc += g[j] * layer.w(j, k);
      }
      worst = std::max(worst, std::abs(grad_in[k] - acc));
    }
  }
  Outcome out;
  out.pass = worst <= 1e-12;
  out.detail = "max |closed-form - Jacobian route| = " + fmt(worst) + " (<= 1e-12)";
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 3: algorithm oracles

Outcome criterion_algorithm_oracles() {
  std::vector<std::string> failures;

  // exact_rank vs full-sort oracle, N = 20 pairs.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    TranslationModel model(4, 20, 20, seed % 2 ? Distance::L1 : Distance::Dot, 1.0,
                           seed);
    BiText bitext;
    for (int i = 0; i < 20; ++i) {
      Sentence a, b;
      const int la = 1 + rng.uniform_int(6);
      const int lb = 1 + rng.uniform_int(6);
      for (int k = 0; k < la; ++k) {
        a.words.push_back(1 + rng.uniform_int(20));
      }
      for (int k = 0; k < lb; ++k) {
        b.words.push_back(1 + rng.uniform_int(20));
      }
      bitext.a.push_back(a);
      bitext.b.push_back(b);
    }
    for (int i = 1; i <= 20; ++i) {
      std::vector<double> scores;
      for (int j = 0; j < 20; ++j) {
        scores.push_back(pair_score(model, bitext.a[static_cast<std::size_t>(i - 1)],
                                    bitext.b[static_cast<std::size_t>(j)]));
      }
      if (exact_rank(model, bitext, i) != testutil::oracle_rank(scores, i - 1)) {
        failures.push_back("exact_rank seed " + std::to_string(seed));
        break;
      }
    }

    // P(w) estimator expectation vs the exact rank distribution: with one
    // uniform draw a pair wins unless the draw is strictly closer, so
    // P_i = 1 - (rank_i - 1)/N.
    if (seed == 1) {
      double expectation = 0.0;
      double variance_sum = 0.0;
      for (int i = 1; i <= 20; ++i) {
        const double p = 1.0 - (exact_rank(model, bitext, i) - 1) / 20.0;
        expectation += p / 20.0;
        variance_sum += p * (1.0 - p);
      }
      Rng draws(4321);
      double mean = 0.0;
      const int trials = 10000;
      for (int t = 0; t < trials; ++t) {
        mean += estimate_performance(model, bitext, 1, draws);
      }
      mean /= trials;
      const double sigma_mean =
          std::sqrt(variance_sum) / 20.0 / std::sqrt(static_cast<double>(trials));
      if (std::abs(mean - expectation) > 3.0 * sigma_mean) {
        failures.push_back("estimate_performance off by " +
                           fmt(std::abs(mean - expectation)) + " > 3 sigma " +
                           fmt(3.0 * sigma_mean));
      }
    }
  }

  // correct_extraction_rate vs brute force.
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    CompressModelConfig config;
    config.d = 3;
    config.n_kept = 15;
    config.variant = CompressorVariant::NonLinear;
    config.n_hidden = 5;
    config.with_extractor = true;
    config.seed = seed;
    CompressModel model(config);
    Rng rng(seed + 9);
    std::vector<TokenSequence> sentences;
    for (int i = 0; i < 12; ++i) {
      TokenSequence s;
      const int l = 1 + rng.uniform_int(6);
      for (int j = 0; j < l; ++j) {
        s.push_back(1 + rng.uniform_int(15));
      }
      sentences.push_back(s);
    }
    const double got = correct_extraction_rate(
        model, sentences, fixed_steps_provider(TreePolicy::Random, seed));
    const StepsProvider steps = fixed_steps_provider(TreePolicy::Random, seed);
    long long hits = 0, total = 0;
    for (const TokenSequence& s : sentences) {
      const CompressTrace ct =
          compress_sentence(*model.compressor, model.embed->forward(s), steps(s));
      const ExtractTrace et = extract_sentence(*model.extractor, ct.code, ct.steps);
      for (int j = 0; j < static_cast<int>(s.size()); ++j) {
        const auto nearest = testutil::oracle_nearest_columns(
            model.embed->w, column_of(et.columns, j), 1, -1);
        hits += (nearest.front() + 1 == s[static_cast<std::size_t>(j)]) ? 1 : 0;
        ++total;
      }
    }
    if (std::abs(got - static_cast<double>(hits) / total) > 1e-12) {
      failures.push_back("correct_extraction_rate seed " + std::to_string(seed));
    }
  }

  // nearest_words / nearest_ngrams vs brute force.
  {
    Rng rng(77);
    EmbeddingTable table(4, 20, rng);
    for (int query = 1; query <= 20; ++query) {
      const auto got = nearest_words(table, query, 7);
      const auto want = testutil::oracle_nearest_columns(
          table.w, column_of(table.w, query - 1), 7, query - 1);
      for (std::size_t i = 0; i < got.size(); ++i) {
        if (got[i] != want[i] + 1) {
          failures.push_back("nearest_words query " + std::to_string(query));
          break;
        }
      }
    }

    CompressModelConfig config;
    config.d = 3;
    config.n_kept = 15;
    config.seed = 5;
    config.with_extractor = false;
    CompressModel model(config);
    const TokenSequence query = {2, 11};
    const auto got = nearest_ngrams(model, query, 10, 15);
    const MergeSteps steps = {1};
    const DenseMatrix query_code =
        compress_sentence(*model.compressor, model.embed->forward(query), steps).code;
    std::vector<std::pair<double, std::pair<int, int>>> dists;
    for (int a = 1; a <= 15; ++a) {
      for (int b = 1; b <= 15; ++b) {
        if (a == 2 && b == 11) {
          continue;
        }
        const DenseMatrix code =
            compress_sentence(*model.compressor, model.embed->forward({a, b}), steps)
                .code;
        dists.push_back({euclidean_sq(code, query_code), {a, b}});
      }
    }
    std::stable_sort(dists.begin(), dists.end());
    for (int i = 0; i < 10; ++i) {
      if (got[static_cast<std::size_t>(i)] !=
          TokenSequence{dists[static_cast<std::size_t>(i)].second.first,
                        dists[static_cast<std::size_t>(i)].second.second}) {
        failures.push_back("nearest_ngrams at position " + std::to_string(i));
        break;
      }
    }
  }

  // decompose / random_tree and the greedy replay.
  {
    if (decompose(*parse_tree("((1 (2 3)) (4 (5 6)))")) != MergeSteps{2, 1, 3, 2, 1}) {
      failures.push_back("decompose hand trace");
    }
    Rng rng(15);
    for (int trial = 0; trial < 200; ++trial) {
      const int l = 1 + rng.uniform_int(6);
      const MergeSteps steps = random_tree(l, rng);
      if (!steps_valid(steps, l)) {
        failures.push_back("random_tree validity");
        break;
      }
      const GroupingTree tree = compose_tree(steps, l);
      const MergeSteps canonical = decompose(*tree);
      if (format_tree(*compose_tree(canonical, l)) != format_tree(*tree)) {
        failures.push_back("decompose/compose identity");
        break;
      }
      const auto groups = testutil::oracle_merge_replay(steps, l);
      int next = 1;
      for (const auto& group : groups) {
        for (const int leaf : group) {
          if (leaf != next++) {
            failures.push_back("merge replay order");
          }
        }
      }
    }

    CompressModelConfig config;
    config.d = 3;
    config.n_kept = 12;
    config.with_extractor = false;
    config.with_score = true;
    config.seed = 3;
    CompressModel model(config);
    for (int trial = 0; trial < 50; ++trial) {
      TokenSequence s;
      const int l = 1 + rng.uniform_int(6);
      for (int j = 0; j < l; ++j) {
        s.push_back(1 + rng.uniform_int(12));
      }
      const GreedyTrace trace = greedy_tree(model, s);
      const CompressTrace replay =
          compress_sentence(*model.compressor, model.embed->forward(s), trace.steps);
      for (int i = 0; i < 3; ++i) {
        if (std::abs(replay.code[i] - trace.code[i]) > 1e-12) {
          failures.push_back("greedy replay");
          break;
        }
      }
    }
  }

  Outcome out;
  out.pass = failures.empty();
  out.detail = failures.empty()
                   ? "exact_rank, P(w), extraction rate, nearest, trees, greedy all "
                     "match brute force"
                   : "failed: " + failures.front() + " (+" +
                         std::to_string(failures.size() - 1) + " more)";
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 4: translation desk-scale

struct TranslateRun {
  double best_pw = 0.0;
  double final_pw = 0.0;
};

TranslateRun run_translation(Distance distance, const BiText& bitext) {
  TranslationModel model(16, 100, 100, distance, 0.0, 11);
  TranslationTrainConfig config;
  config.gamma = 0.05;
  config.iters = 200000;
  config.eval_interval = 20000;
  config.seed = 7;
  TranslateRun run;
  BiText eval_bitext = bitext;
  train_translation(model, bitext, config,
                    [&](long long iter, double, bool) {
                      Rng eval_rng(4242 + static_cast<std::uint64_t>(iter));
                      const double pw =
                          estimate_performance(model, eval_bitext, 1, eval_rng);
                      run.best_pw = std::max(run.best_pw, pw);
                      run.final_pw = pw;
                    });
  return run;
}

Outcome criterion_translation() {
  const synth::BijectionCorpus corpus =
      synth::make_bijection_corpus(2000, 100, 2, 6, 99);
  const TranslateRun l1 = run_translation(Distance::L1, corpus.bitext);
  const TranslateRun dot = run_translation(Distance::Dot, corpus.bitext);
  Outcome out;
  out.pass = l1.best_pw >= 0.95 && dot.final_pw <= l1.final_pw;
  out.detail = "L1 P(w) best " + fmt(l1.best_pw) + " (>= 0.95), final " +
               fmt(l1.final_pw) + "; dot final " + fmt(dot.final_pw) +
               " (<= L1 final)";
  return out;
}

// ---------------------------------------------------------------------------
// Criteria 5 and 6: autoencoder extraction rates

struct MseRun {
  MetricTrack rate;
};

MseRun run_global_mse(CompressorVariant variant, int nhu, int length,
                      long long iters, double gamma, std::uint64_t seed) {
  CompressModelConfig config;
  config.d = 8;
  config.n_kept = 50;
  config.variant = variant;
  config.n_hidden = nhu;
  config.with_extractor = true;
  config.seed = seed;
  CompressModel model(config);

  const std::vector<TokenSequence> train =
      synth::make_ngram_corpus(2000, 50, length, 1000 + seed);
  const std::vector<TokenSequence> test =
      synth::make_ngram_corpus(300, 50, length, 2000 + seed);

  CompressTrainConfig train_config;
  train_config.gamma = gamma;
  train_config.iters = iters;
  train_config.eval_interval = iters / 10;
  train_config.seed = seed;

  MseRun run;
  train_global_mse(model, train, train_config,
                   [&](long long, double, bool) {
                     run.rate.record(correct_extraction_rate(
                         model, test,
                         fixed_steps_provider(TreePolicy::LeftToRight, 0)));
                   });
  return run;
}

double g_l2_final_rate = -1.0;  // criterion 5 result reused by criterion 6

Outcome criterion_pair_autoencoder() {
  const MseRun run =
      run_global_mse(CompressorVariant::Linear, 0, 2, 100000, 0.02, 1);
  g_l2_final_rate = run.rate.last;
  Outcome out;
  out.pass = run.rate.best >= 0.95;
  out.detail = "extraction rate best " + fmt(run.rate.best) + " (>= 0.95), final " +
               fmt(run.rate.last);
  return out;
}

Outcome criterion_length_degradation() {
  if (g_l2_final_rate < 0.0) {
    g_l2_final_rate =
        run_global_mse(CompressorVariant::Linear, 0, 2, 100000, 0.02, 1).rate.last;
  }
  const long long budget = 100000;
  int nonlinear_wins = 0;
  double linear_seed1 = -1.0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const double linear =
        run_global_mse(CompressorVariant::Linear, 0, 6, budget, 0.02, seed)
            .rate.last;
    const double nonlinear =
        run_global_mse(CompressorVariant::NonLinear, 32, 6, budget, 0.02, seed)
            .rate.last;
    if (seed == 1) {
      linear_seed1 = linear;
    }
    if (nonlinear >= linear) {
      ++nonlinear_wins;
    }
    per_seed += " s" + std::to_string(seed) + " lin " + fmt(linear) + "/nl " +
                fmt(nonlinear);
  }
  Outcome out;
  out.pass = linear_seed1 < g_l2_final_rate && nonlinear_wins >= 2;
  out.detail = "l=6 linear " + fmt(linear_seed1) + " < l=2 " + fmt(g_l2_final_rate) +
               "; nonlinear wins " + std::to_string(nonlinear_wins) + "/3;" + per_seed;
  return out;
}

// ---------------------------------------------------------------------------
// Criteria 7 and 8: ranking desk-scale and greedy trees

struct RankingRun {
  CompressModel model;
  double baseline = 0.0;
  MetricTrack rank;
};

RankingRun run_ranking(const synth::GrammarCorpus& corpus, TreePolicy tree,
                       NegativeScheme negative, std::uint64_t seed) {
  CompressModelConfig model_config;
  model_config.d = 16;
  model_config.n_kept = corpus.vocab;
  model_config.variant = CompressorVariant::NonLinear;
  model_config.n_hidden = 32;
  model_config.with_extractor = false;
  model_config.with_score = true;
  model_config.seed = seed;

  RankingRun run{CompressModel(model_config), 0.0, {}};
  run.rank.lower_is_better = true;

  CompressTrainConfig config;
  config.gamma = 0.02;
  config.iters = 300000;
  config.eval_interval = 50000;
  config.margin = 1.0;
  config.tree_policy = tree;
  config.negative_scheme = negative;
  config.seed = seed;

  train_ranking(run.model, corpus.train, config,
                [&](long long iter, double, bool) {
                  const double rank = mean_rank(run.model, corpus.test, 555);
                  if (iter == 0) {
                    run.baseline = rank;
                  }
                  run.rank.record(rank);
                });
  return run;
}

const synth::GrammarCorpus& grammar_corpus() {
  static const synth::GrammarCorpus corpus =
      synth::make_grammar_corpus(2000, 200, 5, 20, 77);
  return corpus;
}

std::vector<RankingRun>& ranking_seeds() {
  static std::vector<RankingRun> runs;
  if (runs.empty()) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      runs.push_back(run_ranking(grammar_corpus(), TreePolicy::Random,
                                 NegativeScheme::RandomPosition, seed));
    }
  }
  return runs;
}

Outcome criterion_ranking() {
  const synth::GrammarCorpus& corpus = grammar_corpus();
  const RankingRun& main_run = ranking_seeds().front();

  const RankingRun ltr = run_ranking(corpus, TreePolicy::LeftToRight,
                                     NegativeScheme::RandomPosition, 1);
  const RankingRun last_neg =
      run_ranking(corpus, TreePolicy::Random, NegativeScheme::Last, 1);

  const double random_final = main_run.rank.last;
  const double ltr_final = ltr.rank.last;
  const double ratio = std::min(random_final, ltr_final) /
                       std::max(random_final, ltr_final);

  Outcome out;
  out.pass = main_run.rank.best < 25.0 && main_run.baseline > 35.0 &&
             main_run.baseline < 65.0 && ratio >= 0.8 && last_neg.rank.best < 25.0;
  out.detail = "mean rank best " + fmt(main_run.rank.best) + " (< 25, baseline " +
               fmt(main_run.baseline) + "); ltr vs random finals " + fmt(ltr_final) +
               "/" + fmt(random_final) + " (ratio " + fmt(ratio) +
               " >= 0.8); last-word best " + fmt(last_neg.rank.best) + " (< 25)";
  return out;
}

Outcome criterion_greedy_trees() {
  const synth::GrammarCorpus& corpus = grammar_corpus();
  std::vector<TokenSequence> subset(corpus.test.begin(), corpus.test.begin() + 100);
  int greedy_wins = 0;
  std::string per_seed;
  for (RankingRun& run : ranking_seeds()) {
    const PolicyReport report = compare_tree_policies(run.model, subset, 31);
    const double greedy = report.rows[0].mean_rank;
    const double random_mean = report.rows[1].mean_rank;
    if (greedy <= random_mean) {
      ++greedy_wins;
    }
    per_seed += " greedy " + fmt(greedy) + " vs random " + fmt(random_mean) + ";";
  }
  Outcome out;
  out.pass = greedy_wins >= 2;
  out.detail = "greedy <= random in " + std::to_string(greedy_wins) + "/3 seeds:" +
               per_seed;
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 9: linear autoencoder vs PCA optimum

Outcome criterion_pca() {
  const int data_dim = 8;  // 2d
  const int code_dim = 4;  // d
  const int samples = 2000;

  // Anisotropic zero-mean Gaussian via Box-Muller and a fixed mixing matrix.
  Rng rng(313);
  const DenseMatrix mixing = uniform_init(rng, data_dim, data_dim, -1.0, 1.0);
  std::vector<DenseMatrix> data;
  data.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    DenseMatrix z(data_dim, 1);
    for (int k = 0; k < data_dim; ++k) {
      const double u1 = rng.uniform(1e-12, 1.0);
      const double u2 = rng.next_double();
      z[k] = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
      z[k] *= 1.0 / (1 << (k / 2));  // decaying scale per coordinate pair
    }
    data.push_back(matvec(mixing, z));
  }

  // Independent optimum: eigenvalues of the centered sample covariance; the
  // best rank-d reconstruction leaves the trailing eigenvalue mass.
  Eigen::MatrixXd centered(samples, data_dim);
  Eigen::VectorXd mean_vec = Eigen::VectorXd::Zero(data_dim);
  for (int i = 0; i < samples; ++i) {
    for (int k = 0; k < data_dim; ++k) {
      centered(i, k) = data[static_cast<std::size_t>(i)][k];
      mean_vec(k) += data[static_cast<std::size_t>(i)][k] / samples;
    }
  }
  for (int i = 0; i < samples; ++i) {
    centered.row(i) -= mean_vec.transpose();
  }
  const Eigen::MatrixXd covariance =
      centered.transpose() * centered / static_cast<double>(samples);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
  double optimal = 0.0;
  for (int k = 0; k < data_dim - code_dim; ++k) {
    optimal += solver.eigenvalues()(k);  // ascending order: the discarded tail
  }
  optimal /= data_dim;  // same 1/(2d) normalization as the training loss

  // Train the l=2 linear autoencoder by plain per-sample SGD.
  Rng init(17);
  LinearLayer compress(code_dim, data_dim, init);
  LinearLayer extract(data_dim, code_dim, init);
  Rng order(29);
  double gamma = 0.02;
  const long long iters = 400000;
  for (long long iter = 1; iter <= iters; ++iter) {
    if (iter == iters / 2 || iter == (3 * iters) / 4) {
      gamma *= 0.25;  // settle into the optimum
    }
    const DenseMatrix& x = data[static_cast<std::size_t>(order.uniform_int(samples))];
    const DenseMatrix code = compress.forward(x);
    const DenseMatrix rebuilt = extract.forward(code);
    const MseResult mse = mse_criterion(rebuilt, x);
    compress.backward(x, extract.backward(code, mse.grad_output));
    sgd_step(compress, gamma);
    sgd_step(extract, gamma);
  }

  double achieved = 0.0;
  for (const DenseMatrix& x : data) {
    achieved += mse_criterion(extract.forward(compress.forward(x)), x).loss;
  }
  achieved /= samples;

  Outcome out;
  out.pass = achieved <= 1.05 * optimal;
  out.detail = "reconstruction " + fmt(achieved) + " vs SVD optimum " + fmt(optimal) +
               " (ratio " + fmt(achieved / optimal) + " <= 1.05)";
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 10: determinism and serialization

Outcome criterion_determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "embedtree_acceptance";
  fs::create_directories(dir);
  const auto read_bytes = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), {});
  };

  bool pass = true;
  std::string detail;

  // Identical ranking runs, byte-identical checkpoints.
  {
    const std::vector<TokenSequence> data = synth::make_ngram_corpus(100, 20, 4, 5);
    CompressTrainConfig config;
    config.gamma = 0.02;
    config.iters = 2000;
    config.seed = 3;
    config.tree_policy = TreePolicy::Random;
    std::vector<std::string> bytes;
    for (int run = 0; run < 2; ++run) {
      CompressModelConfig mc;
      mc.d = 6;
      mc.n_kept = 20;
      mc.variant = CompressorVariant::NonLinear;
      mc.n_hidden = 8;
      mc.with_extractor = false;
      mc.with_score = true;
      mc.seed = 21;
      CompressModel model(mc);
      train_ranking(model, data, config);
      const fs::path p = dir / ("rank" + std::to_string(run) + ".model");
      save_compress_model(model, p.string());
      bytes.push_back(read_bytes(p));
    }
    if (bytes[0] != bytes[1] || bytes[0].empty()) {
      pass = false;
      detail += "ranking checkpoints differ; ";
    }
    // Save -> load -> save round trip is bit-exact.
    CompressModel loaded = load_compress_model((dir / "rank0.model").string());
    const fs::path p = dir / "rank0_again.model";
    save_compress_model(loaded, p.string());
    if (read_bytes(p) != bytes[0]) {
      pass = false;
      detail += "compress model round trip not bit-exact; ";
    }
  }

  // Identical translation runs.
  {
    const synth::BijectionCorpus corpus =
        synth::make_bijection_corpus(50, 20, 2, 5, 13);
    TranslationTrainConfig config;
    config.gamma = 0.05;
    config.iters = 2000;
    config.seed = 5;
    std::vector<std::string> bytes;
    for (int run = 0; run < 2; ++run) {
      TranslationModel model(6, 20, 20, Distance::L1, 0.0, 9);
      train_translation(model, corpus.bitext, config);
      const fs::path p = dir / ("trans" + std::to_string(run) + ".model");
      save_translation_model(model, p.string());
      bytes.push_back(read_bytes(p));
    }
    if (bytes[0] != bytes[1] || bytes[0].empty()) {
      pass = false;
      detail += "translation checkpoints differ; ";
    }
    TranslationModel loaded =
        load_translation_model((dir / "trans0.model").string(), Distance::L1, 0.0);
    const fs::path p = dir / "trans0_again.model";
    save_translation_model(loaded, p.string());
    if (read_bytes(p) != bytes[0]) {
      pass = false;
      detail += "translation model round trip not bit-exact; ";
    }
  }

  fs::remove_all(dir);
  Outcome out;
  out.pass = pass;
  out.detail = pass ? "repeated runs byte-identical; save/load bit-exact" : detail;
  return out;
}

// ---------------------------------------------------------------------------

struct Criterion {
  int id;
  const char* name;
  double time_limit_s;  // 0: no stated limit
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    selected.insert(std::atoi(argv[i]));
  }

  const std::vector<Criterion> criteria = {
      {1, "gradient suite", 30.0, criterion_gradients},
      {2, "closed-form linear backward", 0.0, criterion_linear_closed_form},
      {3, "algorithm oracles", 60.0, criterion_algorithm_oracles},
      {4, "translation desk-scale", 600.0, criterion_translation},
      {5, "pair autoencoder", 300.0, criterion_pair_autoencoder},
      {6, "length degradation trend", 0.0, criterion_length_degradation},
      {7, "ranking desk-scale", 0.0, criterion_ranking},
      {8, "greedy trees", 0.0, criterion_greedy_trees},
      {9, "PCA property", 60.0, criterion_pca},
      {10, "determinism & serialization", 0.0, criterion_determinism},
  };

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    if (!selected.empty() && !selected.count(criterion.id)) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criterion.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (criterion.time_limit_s > 0.0 && elapsed > criterion.time_limit_s) {
      outcome.pass = false;
      outcome.detail += " [exceeded " + fmt(criterion.time_limit_s) + " s limit]";
    }
    std::printf("[%s] criterion %d: %s — %s (%.1f s)\n",
                outcome.pass ? "PASS" : "FAIL", criterion.id, criterion.name,
                outcome.detail.c_str(), elapsed);
    std::fflush(stdout);
    if (!outcome.pass) {
      ++failures;
    }
  }
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
