#include "embedtree/treesearch.hpp"

#include <charconv>
#include <stdexcept>

namespace embedtree {

GreedyTrace greedy_tree(CompressModel& model, const TokenSequence& s,
                        int max_length) {
  if (!model.score_head) {
    throw std::invalid_argument("greedy_tree: model has no score head");
  }
  if (s.empty()) {
    throw std::invalid_argument("greedy_tree: empty sentence");
  }
  if (static_cast<int>(s.size()) > max_length) {
    throw std::invalid_argument("greedy_tree: sentence length " +
                                std::to_string(s.size()) +
                                " exceeds the depth guard (" +
                                std::to_string(max_length) + ")");
  }
  GreedyTrace trace;
  const DenseMatrix embedded = model.embed->forward(s);
  std::vector<DenseMatrix> working;
  working.reserve(s.size());
  for (int j = 0; j < embedded.cols(); ++j) {
    working.push_back(column_of(embedded, j));
  }
  while (working.size() > 1) {
    GreedyStep step;
    step.candidate_scores.reserve(working.size() - 1);
    std::vector<DenseMatrix> candidates;
    candidates.reserve(working.size() - 1);
    for (std::size_t p = 0; p + 1 < working.size(); ++p) {
      DenseMatrix merged =
          model.compressor->forward(vconcat(working[p], working[p + 1]));
      step.candidate_scores.push_back(model.score_head->forward(merged)[0]);
      candidates.push_back(std::move(merged));
    }
    int best = 0;
    for (int p = 1; p < static_cast<int>(step.candidate_scores.size()); ++p) {
      if (step.candidate_scores[static_cast<std::size_t>(p)] >
          step.candidate_scores[static_cast<std::size_t>(best)]) {
        best = p;
      }
    }
    step.chosen = best + 1;
    trace.steps.push_back(step.chosen);
    trace.per_step.push_back(std::move(step));
    working[static_cast<std::size_t>(best)] =
        std::move(candidates[static_cast<std::size_t>(best)]);
    working.erase(working.begin() + best + 1);
  }
  trace.code = std::move(working.front());
  return trace;
}

StepsProvider greedy_steps_provider(CompressModel& model, int max_length) {
  return [&model, max_length](const TokenSequence& s) {
    return greedy_tree(model, s, max_length).steps;
  };
}

namespace {

std::string render_mean(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 4);
  return std::string(buf, res.ptr);
}

PolicyRow summarize(std::string policy, std::vector<int> ranks) {
  PolicyRow row;
  row.policy = std::move(policy);
  row.n = static_cast<int>(ranks.size());
  row.worst_rank = 0;
  double sum = 0.0;
  for (const int r : ranks) {
    sum += r;
    row.worst_rank = std::max(row.worst_rank, r);
  }
  row.mean_rank = row.n > 0 ? sum / row.n : 0.0;
  row.ranks = std::move(ranks);
  return row;
}

}  // namespace

std::string PolicyReport::to_tsv() const {
  std::string out = "policy\tmean_rank\tworst_rank\tn\n";
  for (const PolicyRow& row : rows) {
    out += row.policy + "\t" + render_mean(row.mean_rank) + "\t" +
           std::to_string(row.worst_rank) + "\t" + std::to_string(row.n) + "\n";
  }
  return out;
}

PolicyReport compare_tree_policies(CompressModel& model,
                                   const std::vector<TokenSequence>& test_set,
                                   std::uint64_t seed) {
  if (test_set.empty()) {
    throw std::invalid_argument("compare_tree_policies: empty test set");
  }
  Rng position_rng(seed);
  std::vector<int> positions;
  positions.reserve(test_set.size());
  for (const TokenSequence& s : test_set) {
    positions.push_back(1 + position_rng.uniform_int(static_cast<int>(s.size())));
  }

  std::vector<int> greedy_ranks, random_ranks, ltr_ranks;
  const StepsProvider greedy = greedy_steps_provider(model);
  const StepsProvider random_steps =
      fixed_steps_provider(TreePolicy::Random, seed + 1);
  const StepsProvider ltr = fixed_steps_provider(TreePolicy::LeftToRight, 0);
  for (std::size_t i = 0; i < test_set.size(); ++i) {
    const TokenSequence& s = test_set[i];
    const int pos = positions[i];
    greedy_ranks.push_back(sentence_rank(model, s, pos, greedy, true));
    random_ranks.push_back(sentence_rank(model, s, pos, random_steps, false));
    ltr_ranks.push_back(sentence_rank(model, s, pos, ltr, false));
  }

  PolicyReport report;
  report.rows.push_back(summarize("greedy", std::move(greedy_ranks)));
  report.rows.push_back(summarize("random", std::move(random_ranks)));
  report.rows.push_back(summarize("left-to-right", std::move(ltr_ranks)));
  return report;
}

}  // namespace embedtree
