#include "embedtree/tree.hpp"

#include <algorithm>
#include <stdexcept>

namespace embedtree {

namespace {

void collect_leaves(const TreeNode& node, std::vector<int>& out) {
  if (node.is_leaf()) {
    out.push_back(node.leaf);
    return;
  }
  if (!node.left || !node.right) {
    throw std::invalid_argument("decompose: internal node with missing child");
  }
  collect_leaves(*node.left, out);
  collect_leaves(*node.right, out);
}

// Returns the leftmost leaf of the subtree, emitting the subtree's merges.
// `working` holds the leftmost-leaf id of every current working-list element.
int emit_merges(const TreeNode& node, std::vector<int>& working, MergeSteps& steps) {
  if (node.is_leaf()) {
    return node.leaf;
  }
  const int left_rep = emit_merges(*node.left, working, steps);
  const int right_rep = emit_merges(*node.right, working, steps);
  const auto it = std::find(working.begin(), working.end(), left_rep);
  const int pos = static_cast<int>(it - working.begin()) + 1;
  if (it == working.end() || it + 1 == working.end() || *(it + 1) != right_rep) {
    throw std::invalid_argument("decompose: malformed tree (leaves out of order)");
  }
  working.erase(it + 1);
  steps.push_back(pos);
  return left_rep;
}

const char* skip_spaces(const char* p, const char* end) {
  while (p != end && *p == ' ') {
    ++p;
  }
  return p;
}

GroupingTree parse_node(const char*& p, const char* end) {
  p = skip_spaces(p, end);
  if (p == end) {
    throw std::invalid_argument("parse_tree: unexpected end of input");
  }
  if (*p == '(') {
    ++p;
    GroupingTree left = parse_node(p, end);
    GroupingTree right = parse_node(p, end);
    p = skip_spaces(p, end);
    if (p == end || *p != ')') {
      throw std::invalid_argument("parse_tree: expected ')'");
    }
    ++p;
    return make_node(std::move(left), std::move(right));
  }
  if (*p < '0' || *p > '9') {
    throw std::invalid_argument(std::string("parse_tree: unexpected character '") +
                                *p + "'");
  }
  int value = 0;
  while (p != end && *p >= '0' && *p <= '9') {
    value = value * 10 + (*p - '0');
    ++p;
  }
  if (value < 1) {
    throw std::invalid_argument("parse_tree: leaf positions are 1-based");
  }
  return make_leaf(value);
}

}  // namespace

GroupingTree make_leaf(int position) {
  auto node = std::make_unique<TreeNode>();
  node->leaf = position;
  return node;
}

GroupingTree make_node(GroupingTree left, GroupingTree right) {
  auto node = std::make_unique<TreeNode>();
  node->left = std::move(left);
  node->right = std::move(right);
  return node;
}

int leaf_count(const TreeNode& tree) {
  if (tree.is_leaf()) {
    return 1;
  }
  return leaf_count(*tree.left) + leaf_count(*tree.right);
}

MergeSteps decompose(const TreeNode& tree) {
  std::vector<int> leaves;
  collect_leaves(tree, leaves);
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (leaves[i] != static_cast<int>(i) + 1) {
      throw std::invalid_argument(
          "decompose: malformed tree (leaves must be 1..l in order, found " +
          std::to_string(leaves[i]) + " at position " + std::to_string(i + 1) + ")");
    }
  }
  std::vector<int> working(leaves);
  MergeSteps steps;
  steps.reserve(leaves.size() - 1);
  emit_merges(tree, working, steps);
  return steps;
}

GroupingTree compose_tree(const MergeSteps& steps, int length) {
  if (length < 1) {
    throw std::invalid_argument("compose_tree: length must be >= 1");
  }
  if (!steps_valid(steps, length)) {
    throw std::invalid_argument("compose_tree: invalid steps for length " +
                                std::to_string(length));
  }
  std::vector<GroupingTree> working;
  working.reserve(static_cast<std::size_t>(length));
  for (int i = 1; i <= length; ++i) {
    working.push_back(make_leaf(i));
  }
  for (const int p : steps) {
    GroupingTree merged = make_node(std::move(working[static_cast<std::size_t>(p - 1)]),
                                    std::move(working[static_cast<std::size_t>(p)]));
    working[static_cast<std::size_t>(p - 1)] = std::move(merged);
    working.erase(working.begin() + p);
  }
  return std::move(working.front());
}

bool steps_valid(const MergeSteps& steps, int length) {
  if (static_cast<int>(steps.size()) != length - 1) {
    return false;
  }
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const int remaining = length - static_cast<int>(k);  // elements before step k
    if (steps[k] < 1 || steps[k] > remaining - 1) {
      return false;
    }
  }
  return true;
}

MergeSteps left_to_right_steps(int length) {
  if (length < 1) {
    throw std::invalid_argument("left_to_right_steps: length must be >= 1");
  }
  return MergeSteps(static_cast<std::size_t>(length - 1), 1);
}

MergeSteps random_tree(int length, Rng& rng) {
  if (length < 1) {
    throw std::invalid_argument("random_tree: length must be >= 1");
  }
  MergeSteps steps;
  steps.reserve(static_cast<std::size_t>(length - 1));
  for (int remaining = length; remaining > 1; --remaining) {
    steps.push_back(1 + rng.uniform_int(remaining - 1));
  }
  return steps;
}

std::string format_tree(const TreeNode& tree) {
  if (tree.is_leaf()) {
    return std::to_string(tree.leaf);
  }
  return "(" + format_tree(*tree.left) + " " + format_tree(*tree.right) + ")";
}

GroupingTree parse_tree(const std::string& text) {
  const char* p = text.data();
  const char* end = text.data() + text.size();
  GroupingTree tree = parse_node(p, end);
  p = skip_spaces(p, end);
  if (p != end) {
    throw std::invalid_argument("parse_tree: trailing characters after tree");
  }
  return tree;
}

std::string format_steps(const MergeSteps& steps) {
  std::string out;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i > 0) {
      out += ' ';
    }
    out += std::to_string(steps[i]);
  }
  return out;
}

}  // namespace embedtree
