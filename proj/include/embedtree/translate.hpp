#pragma once

#include <memory>
#include <string>
#include <vector>

#include "embedtree/corpus.hpp"
#include "embedtree/nn.hpp"

namespace embedtree {

enum class Distance { L1, Dot };
enum class Language { A, B };
enum class Gram { Words, Pairs };

// One side of an aligned pair: kept word indices plus, for the extended
// model, kept indices of its adjacent word pairs (may be empty).
struct Sentence {
  TokenSequence words;
  TokenSequence pairs;
};

struct BiText {
  std::vector<Sentence> a, b;
  std::size_t size() const { return a.size(); }
};

BiText make_bitext(const AlignedCorpus& corpus);
BiText make_bitext(const AlignedCorpus& corpus, const Dictionary& dict_a,
                   const Dictionary& dict_b, const Dictionary& pair_dict_a,
                   const Dictionary& pair_dict_b);

// Dual encoder over one word table per language (and optionally one pair
// table per language). A sentence encodes as the mean of its table columns;
// a pair of sentences scores by how close the two encodings are.
class TranslationModel : public Trainable {
 public:
  // margin <= 0 selects the default sqrt(d).
  TranslationModel(int d, int n_words_a, int n_words_b, Distance distance,
                   double margin, std::uint64_t seed);

  void enable_pairs(int n_pairs_a, int n_pairs_b, std::uint64_t seed);
  bool pairs_enabled() const { return pairs_a != nullptr; }

  std::vector<Parameter> parameters() override;

  int d() const { return words_a->dim(); }
  Distance distance() const { return distance_; }
  double margin() const { return margin_; }

  EmbeddingTable& table(Language lang, Gram gram);

  std::shared_ptr<EmbeddingTable> words_a, words_b;
  std::shared_ptr<EmbeddingTable> pairs_a, pairs_b;

 private:
  Distance distance_;
  double margin_;
};

// ModelFile names: words.A, words.B and, when pairs are enabled, pairs.A,
// pairs.B. Distance and margin are run configuration, not parameters.
void save_translation_model(const TranslationModel& model, const std::string& path);
TranslationModel load_translation_model(const std::string& path, Distance distance,
                                        double margin);

// Mean of the embedded columns of s under the (language, gram) table.
// Errors on a sequence that is empty after filtering.
DenseMatrix encode(TranslationModel& model, const TokenSequence& s, Language lang,
                   Gram gram);

// Higher is better. L1: negated distance between the two encodings; dot: the
// dot product itself. With pairs enabled the words and pairs terms are
// summed; the pairs term is skipped when either side has no kept pairs.
double pair_score(TranslationModel& model, const Sentence& sa, const Sentence& sb);

// One trainable sub-network of the extended model: encode the left view and
// the right view and rank the aligned right against a random one. Views are
// (language, gram) selections; left == right selections are degenerate and
// never enabled.
struct SubNet {
  Language lang_left, lang_right;
  Gram gram_left, gram_right;
};
std::vector<SubNet> enabled_subnets(const TranslationModel& model);

struct TranslationTrainConfig {
  double gamma = 0.01;
  long long iters = 0;
  long long eval_interval = 0;
  std::uint64_t seed = 1;
  bool reshuffle = true;
};

// Per sample: take the aligned pair as positive and the same source with a
// random target as negative, pick one enabled sub-network uniformly, apply
// the margin ranking criterion and update. The callback runs at iter 0,
// every eval_interval iterations and at the end (see TrainCallback).
void train_translation(TranslationModel& model, const BiText& bitext,
                       const TranslationTrainConfig& config,
                       const TrainCallback& on_eval = {});

// Rank of true target i (1-based) among all targets by descending
// pair_score against source i; ties rank the lower candidate index first.
int exact_rank(TranslationModel& model, const BiText& bitext, int i);

// P(w) estimate: fraction of pairs whose true target is at least as close as
// each of M uniformly drawn targets. A random draw only defeats the pair
// when it is strictly closer, exactly as a rank-1 target never loses.
double estimate_performance(TranslationModel& model, const BiText& bitext, int m,
                            Rng& rng);

}  // namespace embedtree
