#pragma once

#include <string>
#include <vector>

#include "embedtree/compress.hpp"

namespace embedtree {

struct GreedyStep {
  std::vector<double> candidate_scores;  // merging (p, p+1) for p = 1..n-1
  int chosen;                            // argmax position, leftmost on ties
};

struct GreedyTrace {
  MergeSteps steps;
  std::vector<GreedyStep> per_step;
  DenseMatrix code;
};

// While the working list has more than one element: score the compressed
// representation of every adjacent pair through the score head, merge the
// best-scoring pair. Candidates that are themselves compressed codes go
// through the exact same pathway as word vectors.
GreedyTrace greedy_tree(CompressModel& model, const TokenSequence& s,
                        int max_length = 32);

// Steps provider running the greedy algorithm per sequence (so rank
// evaluation greedily re-groups every candidate variant).
StepsProvider greedy_steps_provider(CompressModel& model, int max_length = 32);

struct PolicyRow {
  std::string policy;
  double mean_rank;
  int worst_rank;
  int n;
  std::vector<int> ranks;
};

struct PolicyReport {
  std::vector<PolicyRow> rows;
  std::string to_tsv() const;  // policy<TAB>mean_rank<TAB>worst_rank<TAB>n
};

// Mean sentence rank over the test set under (a) greedy trees, (b) random
// trees from the given seed, (c) left-to-right trees. One corrupted position
// is drawn per sentence and shared across the three policies.
PolicyReport compare_tree_policies(CompressModel& model,
                                   const std::vector<TokenSequence>& test_set,
                                   std::uint64_t seed);

}  // namespace embedtree
