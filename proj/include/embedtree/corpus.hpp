#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "embedtree/model_file.hpp"
#include "embedtree/nn.hpp"
#include "embedtree/rng.hpp"

namespace embedtree {

// Token <-> index map over a corpus, sorted by descending frequency with
// lexicographic tie-break. Index = 1-based frequency rank. Only indices
// <= kept() take part in training; everything above is thresholded.
//
// File format: header "DICT v1 N=<threshold>", then one "<token>\t<freq>"
// line per token in rank order.
class Dictionary {
 public:
  Dictionary(std::vector<std::pair<std::string, long long>> ranked, int keep);

  int size() const { return static_cast<int>(tokens_.size()); }
  int kept() const { return kept_; }
  bool is_kept(int index) const { return index >= 1 && index <= kept_; }

  // 0 when the token is not in the dictionary at all.
  int index_of(const std::string& token) const;
  const std::string& token(int index) const;  // 1-based
  long long frequency(int index) const;       // 1-based

  void save(const std::string& path) const;
  static Dictionary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::vector<long long> freqs_;
  std::unordered_map<std::string, int> index_;
  int kept_;
};

// Whitespace tokenization of one pre-cleaned lowercase line.
std::vector<std::string> tokenize(const std::string& line);

// Raw index mapping: dictionary index per token, 0 for unknown tokens.
// Thresholded-but-known tokens keep their (> kept) index so windowing can
// tell them apart from kept ones.
std::vector<int> map_tokens(const Dictionary& dict,
                            const std::vector<std::string>& tokens);

// Kept indices only; unknown and thresholded tokens are dropped.
TokenSequence kept_sequence(const Dictionary& dict,
                            const std::vector<std::string>& tokens);

// Count every distinct token of the corpus (one paragraph per line), rank by
// descending frequency with lexicographic tie-break, keep the top N.
Dictionary build_dictionary(const std::string& corpus_path, int keep);

// Same ranking over adjacent kept-word pairs ("a b" as one token). Pairs
// touching a thresholded or unknown word are not counted.
Dictionary build_pair_dictionary(const std::string& corpus_path,
                                 const Dictionary& words, int keep);

// Adjacent pair indices of a kept-word sequence under a pair dictionary;
// pairs absent from the dictionary (or thresholded there) are dropped.
TokenSequence pair_sequence(const TokenSequence& words, const Dictionary& word_dict,
                            const Dictionary& pair_dict);

// All contiguous windows of the given size whose tokens are all kept,
// in order, overlapping included. `paragraph` uses map_tokens indices.
std::vector<TokenSequence> extract_ngrams(const std::vector<int>& paragraph,
                                          int window, const Dictionary& dict);

// One mapped paragraph per corpus line (map_tokens indexing).
std::vector<std::vector<int>> load_paragraphs(const std::string& path,
                                              const Dictionary& dict);

struct AlignedPair {
  TokenSequence source;
  TokenSequence target;
};

struct AlignedCorpus {
  std::vector<AlignedPair> pairs;
  int skipped = 0;  // lines dropped because one side was empty after mapping
};

// Line-aligned corpus: i-th line of each file is the same sentence in two
// languages. Sides are mapped to kept indices; a pair whose either side comes
// out empty is skipped and counted. Mismatched line counts are an error.
AlignedCorpus load_aligned(const std::string& path_a, const std::string& path_b,
                           const Dictionary& dict_a, const Dictionary& dict_b);

// Deterministic pass over 0..n-1 in epochs. With reshuffle on, the order is
// re-drawn (Fisher-Yates against the caller's rng) at the start of every
// epoch, including the first; otherwise it stays 0..n-1.
class EpochSampler {
 public:
  EpochSampler(std::size_t n, bool reshuffle);
  std::size_t next(Rng& rng);

 private:
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  bool reshuffle_;
};

enum class NegativeScheme { Last, RandomPosition };

struct NegativeSample {
  TokenSequence tokens;
  int position;  // 1-based position that was replaced
};

// Copy of s with exactly one position replaced by a uniformly drawn kept
// index, resampled until it differs from the original. Requires n_kept >= 2.
NegativeSample make_negative(const TokenSequence& s, NegativeScheme scheme,
                             Rng& rng, int n_kept);

}  // namespace embedtree
