#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "embedtree/matrix.hpp"
#include "embedtree/rng.hpp"

namespace embedtree {

// 1-based dictionary indices; 0 never appears in a training sequence.
using TokenSequence = std::vector<int>;

struct Parameter {
  std::string name;
  DenseMatrix* value;
  DenseMatrix* grad;
};

// Anything holding trainable weights. Gradients always accumulate across
// backward calls; clearing them is an explicit step. This is what lets one
// shared compression network serve every merge of a sentence.
class Trainable {
 public:
  virtual ~Trainable() = default;
  virtual std::vector<Parameter> parameters() = 0;

  void zero_grads();
  // w <- w - gamma * grad for every parameter. Does not clear gradients.
  void update(double gamma);
};

// One SGD update: w <- w - gamma * grad, then gradients are cleared.
void sgd_step(Trainable& t, double gamma);

// Training progress hook: called with iter 0 before training (no loss yet),
// then every eval interval and at the end with the mean per-sample loss
// since the previous call.
using TrainCallback =
    std::function<void(long long iter, double mean_loss, bool has_loss)>;

// A layer in the chain: forward maps input to output, backward receives the
// gradient w.r.t. the output, accumulates parameter gradients and returns
// the gradient w.r.t. the input (same shape as the input).
class NetModule : public Trainable {
 public:
  virtual DenseMatrix forward(const DenseMatrix& input) = 0;
  virtual DenseMatrix backward(const DenseMatrix& input,
                               const DenseMatrix& grad_output) = 0;
};

// y = W x + b
class LinearLayer : public NetModule {
 public:
  // Weights uniform in [-1/sqrt(in), 1/sqrt(in)] (fan-in scaling keeps a
  // following hardTanh unsaturated at the start), bias zero.
  LinearLayer(int out, int in, Rng& rng);
  LinearLayer(int out, int in);  // zero-initialized

  DenseMatrix forward(const DenseMatrix& x) override;
  DenseMatrix backward(const DenseMatrix& x, const DenseMatrix& grad_output) override;
  std::vector<Parameter> parameters() override;

  DenseMatrix w, b, grad_w, grad_b;

 private:
  bool forwarded_ = false;
};

// Entrywise clamp to [-1, 1]. Derivative is 1 strictly inside the interval
// and 0 elsewhere (including at the kinks).
class HardTanhLayer : public NetModule {
 public:
  DenseMatrix forward(const DenseMatrix& x) override;
  DenseMatrix backward(const DenseMatrix& x, const DenseMatrix& grad_output) override;
  std::vector<Parameter> parameters() override { return {}; }

 private:
  bool forwarded_ = false;
};

// d×l input -> d×1 column mean; backward spreads grad/l to every column.
class MeanLayer : public NetModule {
 public:
  DenseMatrix forward(const DenseMatrix& x) override;
  DenseMatrix backward(const DenseMatrix& x, const DenseMatrix& grad_output) override;
  std::vector<Parameter> parameters() override { return {}; }

 private:
  bool forwarded_ = false;
};

// Trainable d×N table; column i is the vector for dictionary entry i.
// Input is a sequence of 1-based indices rather than a matrix, so this is a
// Trainable with its own typed forward/backward instead of a NetModule.
class EmbeddingTable : public Trainable {
 public:
  // Columns uniform in [-0.1, 0.1].
  EmbeddingTable(int dim, int entries, Rng& rng);
  EmbeddingTable(int dim, int entries);  // zero-initialized

  // Output column j equals table column s[j]; shape d×l.
  DenseMatrix forward(const TokenSequence& s);
  // Accumulates grad_output columns into the gradient columns named by s.
  // Untouched columns keep a gradient of exactly zero.
  void backward(const TokenSequence& s, const DenseMatrix& grad_output);
  std::vector<Parameter> parameters() override;

  int dim() const { return w.rows(); }
  int entries() const { return w.cols(); }

  DenseMatrix w, grad_w;

 private:
  bool forwarded_ = false;
};

// Chains children left to right; backward walks right to left. Backward
// recomputes the intermediate activations from the given input, so a shared
// child that was forwarded elsewhere in between cannot poison the chain.
class Sequential : public NetModule {
 public:
  Sequential& add(std::shared_ptr<NetModule> child);

  DenseMatrix forward(const DenseMatrix& input) override;
  DenseMatrix backward(const DenseMatrix& input, const DenseMatrix& grad_output) override;
  std::vector<Parameter> parameters() override;

  std::vector<std::shared_ptr<NetModule>> children;

 private:
  bool forwarded_ = false;
};

// Runs two children on two inputs and stacks the two outputs vertically;
// backward splits the gradient at the same boundary.
class ParallelPair : public Trainable {
 public:
  ParallelPair(std::shared_ptr<NetModule> first, std::shared_ptr<NetModule> second);

  DenseMatrix forward(const DenseMatrix& a, const DenseMatrix& b);
  std::pair<DenseMatrix, DenseMatrix> backward(const DenseMatrix& a,
                                               const DenseMatrix& b,
                                               const DenseMatrix& grad_output);
  std::vector<Parameter> parameters() override;

  std::shared_ptr<NetModule> first, second;

 private:
  bool forwarded_ = false;
};

// loss = (1/d) sum_i (target_i - output_i)^2
// grad_output = (2/d) (output - target), the true derivative of the loss.
// The target is a constant: no gradient flows into it.
struct MseResult {
  double loss;
  DenseMatrix grad_output;
};
MseResult mse_criterion(const DenseMatrix& output, const DenseMatrix& target);

// loss = max(0, m - score_pos + score_neg); requires m > 0.
// d_pos/d_neg are the loss derivatives w.r.t. the two scores (-1/+1 when the
// margin is violated, 0 otherwise).
struct MarginResult {
  double loss;
  double d_pos;
  double d_neg;
};
MarginResult margin_ranking_criterion(double score_pos, double score_neg, double margin);

}  // namespace embedtree
