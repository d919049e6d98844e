#pragma once

#include <memory>
#include <string>
#include <vector>

#include "embedtree/rng.hpp"

namespace embedtree {

// Linearized grouping tree: step k merges working-list elements p_k and
// p_k + 1 (1-based). A sentence of length l takes exactly l - 1 steps; before
// step k the list holds l - k + 1 elements, so p_k must lie in [1, l - k].
using MergeSteps = std::vector<int>;

// Full binary bracketing of positions 1..l. Leaves carry their position and
// appear left to right in order.
struct TreeNode {
  int leaf = 0;  // > 0 for leaves, 0 for internal nodes
  std::unique_ptr<TreeNode> left, right;

  bool is_leaf() const { return leaf != 0; }
};
using GroupingTree = std::unique_ptr<TreeNode>;

GroupingTree make_leaf(int position);
GroupingTree make_node(GroupingTree left, GroupingTree right);

int leaf_count(const TreeNode& tree);

// Left-first post-order linearization: a node's own merge emits after both
// children's merges, left subtree first. Validates that leaves are exactly
// 1..l in order.
MergeSteps decompose(const TreeNode& tree);

// Inverse of decompose: replay the merges over leaves 1..length.
GroupingTree compose_tree(const MergeSteps& steps, int length);

bool steps_valid(const MergeSteps& steps, int length);

// Always merges the two leftmost elements: (1, 1, ..., 1).
MergeSteps left_to_right_steps(int length);

// At each step the merge position is drawn uniformly over the current
// adjacencies. Note this is not uniform over bracketings.
MergeSteps random_tree(int length, Rng& rng);

// Nested parentheses over 1-based leaf positions, e.g. "((1 (2 3)) (4 (5 6)))".
// A single leaf prints as its number.
std::string format_tree(const TreeNode& tree);
GroupingTree parse_tree(const std::string& text);

std::string format_steps(const MergeSteps& steps);  // space-separated positions

}  // namespace embedtree
