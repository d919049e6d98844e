#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "embedtree/corpus.hpp"
#include "embedtree/model_file.hpp"
#include "embedtree/nn.hpp"
#include "embedtree/tree.hpp"

namespace embedtree {

enum class CompressorVariant { Linear, NonLinear };

// How merge orders are chosen when compressing. Greedy needs a trained score
// head and is implemented by the tree-search layer on top of this module.
enum class TreePolicy { LeftToRight, Random, Greedy };

// h: 2d -> d. Linear is a single layer; non-linear is Linear(2d, nHU),
// HardTanh, Linear(nHU, d).
std::shared_ptr<NetModule> make_compressor(CompressorVariant variant, int d,
                                           int n_hidden, Rng& rng);
// h^-1: d -> 2d, mirrored.
std::shared_ptr<NetModule> make_extractor(CompressorVariant variant, int d,
                                          int n_hidden, Rng& rng);

// ---------------------------------------------------------------------------
// Tree application

struct CompressTrace {
  MergeSteps steps;
  std::vector<DenseMatrix> inputs;  // 2d×1 input to h per step
  DenseMatrix code;                 // d×1
};

// Repeatedly replaces columns (p, p+1) with h(top ‖ bottom) per the steps,
// left column on top. The trace records every h input so a backward pass can
// replay the applications without recompressing. l = 1 needs no application.
CompressTrace compress_sentence(NetModule& compressor, const DenseMatrix& embedded,
                                const MergeSteps& steps);

// Gradient w.r.t. the embedded d×l input given the gradient at the code;
// accumulates into the compressor's parameter gradients.
DenseMatrix compress_backward(NetModule& compressor, const CompressTrace& trace,
                              int length, const DenseMatrix& grad_code);

struct ExtractTrace {
  std::vector<DenseMatrix> inputs;  // d×1 input to h^-1 per application
  DenseMatrix columns;              // d×l
};

// Applies h^-1 in the exact opposite order of the compression, splitting each
// vector back into two at the position the reversed steps dictate.
ExtractTrace extract_sentence(NetModule& extractor, const DenseMatrix& code,
                              const MergeSteps& steps);

DenseMatrix extract_backward(NetModule& extractor, const ExtractTrace& trace,
                             const MergeSteps& steps, const DenseMatrix& grad_columns);

// NetModule view of the compression: d×l in, d×1 code out, with one shared
// compressor accumulating gradients across all l-1 applications. Steps are
// set explicitly before forward; backward uses the trace of the last forward
// on this instance, so give concurrent branches their own instance (they can
// share the compressor).
class CompressTreeModule : public NetModule {
 public:
  CompressTreeModule(std::shared_ptr<NetModule> compressor, int dim,
                     int max_length = 32);

  void set_steps(MergeSteps steps);
  const MergeSteps& steps() const { return steps_; }

  DenseMatrix forward(const DenseMatrix& input) override;
  DenseMatrix backward(const DenseMatrix& input, const DenseMatrix& grad_output) override;
  std::vector<Parameter> parameters() override;

  const CompressTrace& trace() const { return trace_; }

 private:
  std::shared_ptr<NetModule> compressor_;
  int dim_;
  int max_length_;
  MergeSteps steps_;
  CompressTrace trace_;
  int last_length_ = 0;
  bool forwarded_ = false;
};

// Mirror image: d×1 code in, d×l columns out, shared extractor.
class ExtractTreeModule : public NetModule {
 public:
  ExtractTreeModule(std::shared_ptr<NetModule> extractor, int dim,
                    int max_length = 32);

  void set_steps(MergeSteps steps);

  DenseMatrix forward(const DenseMatrix& input) override;
  DenseMatrix backward(const DenseMatrix& input, const DenseMatrix& grad_output) override;
  std::vector<Parameter> parameters() override;

 private:
  std::shared_ptr<NetModule> extractor_;
  int dim_;
  int max_length_;
  MergeSteps steps_;
  ExtractTrace trace_;
  bool forwarded_ = false;
};

// ---------------------------------------------------------------------------
// Model

struct CompressModelConfig {
  int d = 8;
  int n_kept = 0;  // embedding entries
  CompressorVariant variant = CompressorVariant::Linear;
  int n_hidden = 0;  // ignored for the linear variant
  bool with_extractor = true;
  bool with_score = false;
  std::uint64_t seed = 1;
};

// Embedding + shared compressor (+ optional extractor and score head), the
// unit the chapter-5 pipelines train. Initialization order is fixed (embed,
// compressor, extractor, score) so a seed pins every weight.
class CompressModel : public Trainable {
 public:
  explicit CompressModel(const CompressModelConfig& config);

  std::vector<Parameter> parameters() override;

  int d() const { return config_.d; }
  int n_kept() const { return embed->entries(); }
  CompressorVariant variant() const { return config_.variant; }
  int n_hidden() const { return config_.n_hidden; }

  std::shared_ptr<EmbeddingTable> embed;
  std::shared_ptr<NetModule> compressor;
  std::shared_ptr<NetModule> extractor;    // null when not built
  std::shared_ptr<LinearLayer> score_head; // null when not built

 private:
  CompressModelConfig config_;
};

// ModelFile names: embed, comp.* / extr.* (W, b for linear; hidden.W,
// hidden.b, output.W, output.b for non-linear), score.W, score.b.
void save_compress_model(const CompressModel& model, const std::string& path);
CompressModel load_compress_model(const std::string& path);

// ---------------------------------------------------------------------------
// Training

struct CompressTrainConfig {
  double gamma = 0.01;
  long long iters = 0;
  long long eval_interval = 0;  // 0: callbacks only at start and end
  double margin = 1.0;          // ranking objective
  TreePolicy tree_policy = TreePolicy::LeftToRight;
  NegativeScheme negative_scheme = NegativeScheme::RandomPosition;
  std::uint64_t seed = 1;
  bool reshuffle = true;  // reshuffle the sample order every epoch
  int max_length = 32;    // depth guard; longer sentences are an error
};

// Per merge: reconstruct the two inputs through h then h^-1, apply the MSE
// locally and update immediately. Word vectors get gradients where they sit
// under a merge; intermediate codes are treated as constants.
void train_local_mse(CompressModel& model, const std::vector<TokenSequence>& data,
                     const CompressTrainConfig& config,
                     const TrainCallback& on_eval = {});

// Full compress + extract per sentence, one MSE over all l columns (mean of
// per-column MSE), one update with gradients accumulated through all 2(l-1)
// network applications.
void train_global_mse(CompressModel& model, const std::vector<TokenSequence>& data,
                      const CompressTrainConfig& config,
                      const TrainCallback& on_eval = {});

// Margin ranking of each n-gram against a one-word-corrupted copy, both
// compressed through the same merge steps and scored by the linear head.
// Trains score head, compressor and embeddings.
void train_ranking(CompressModel& model, const std::vector<TokenSequence>& data,
                   const CompressTrainConfig& config,
                   const TrainCallback& on_eval = {});

// ---------------------------------------------------------------------------
// Evaluation

// Merge steps to use for one concrete sequence (lets greedy trees plug in).
using StepsProvider = std::function<MergeSteps(const TokenSequence&)>;

StepsProvider fixed_steps_provider(TreePolicy policy, std::uint64_t seed);

double score_sequence(CompressModel& model, const TokenSequence& s,
                      const MergeSteps& steps);

// Fraction of word positions whose extracted vector is closest (Euclidean,
// ties to the lowest index) to the original word's embedding.
double correct_extraction_rate(CompressModel& model,
                               const std::vector<TokenSequence>& sentences,
                               const StepsProvider& steps_for);

// Rank of s among the n_kept variants obtained by substituting every
// dictionary word at `position` (1-based), sorted by descending score. The
// true sentence ranks after equal-scored variants with a lower word index.
// All variants share one steps draw from the provider (called on s).
int sentence_rank(CompressModel& model, const TokenSequence& s, int position,
                  const MergeSteps& steps);
int sentence_rank(CompressModel& model, const TokenSequence& s, int position,
                  const StepsProvider& steps_for_variant, bool per_variant_steps);

// k nearest embedding columns to the query column, Euclidean, query excluded,
// ties to the lower index.
std::vector<int> nearest_words(const EmbeddingTable& embeddings, int query_index,
                               int k);

// Enumerates all limit_n² ordered pairs over dictionary indices 1..limit_n,
// compresses each, and returns the k whose codes are nearest the query
// pair's code (query itself excluded). Refuses enumerations beyond the cap.
std::vector<TokenSequence> nearest_ngrams(CompressModel& model,
                                          const TokenSequence& query, int k,
                                          int limit_n,
                                          long long enumeration_cap = 1000000);

}  // namespace embedtree
