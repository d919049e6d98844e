#include "embedtree/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace embedtree {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) {
    throw std::invalid_argument(msg);
  }
}

}  // namespace

void Trainable::zero_grads() {
  for (const Parameter& p : parameters()) {
    p.grad->fill(0.0);
  }
}

void Trainable::update(double gamma) {
  for (const Parameter& p : parameters()) {
    DenseMatrix& w = *p.value;
    const DenseMatrix& g = *p.grad;
    for (int i = 0; i < w.size(); ++i) {
      w[i] -= gamma * g[i];
    }
  }
}

void sgd_step(Trainable& t, double gamma) {
  require(gamma > 0.0, "sgd_step: learning rate must be positive");
  t.update(gamma);
  t.zero_grads();
}

// ---------------------------------------------------------------------------
// LinearLayer

LinearLayer::LinearLayer(int out, int in, Rng& rng)
    : w(uniform_init(rng, out, in, -1.0 / std::sqrt(in), 1.0 / std::sqrt(in))),
      b(out, 1),
      grad_w(out, in),
      grad_b(out, 1) {}

LinearLayer::LinearLayer(int out, int in)
    : w(out, in), b(out, 1), grad_w(out, in), grad_b(out, 1) {}

DenseMatrix LinearLayer::forward(const DenseMatrix& x) {
  require(x.cols() == 1 && x.rows() == w.cols(),
          "LinearLayer::forward: expected " + std::to_string(w.cols()) +
              "x1 input, got " + x.shape());
  forwarded_ = true;
  DenseMatrix out = matvec(w, x);
  for (int i = 0; i < out.rows(); ++i) {
    out[i] += b[i];
  }
  return out;
}

DenseMatrix LinearLayer::backward(const DenseMatrix& x, const DenseMatrix& grad_output) {
  require(forwarded_, "LinearLayer::backward called before forward");
  require(x.cols() == 1 && x.rows() == w.cols(),
          "LinearLayer::backward: expected " + std::to_string(w.cols()) +
              "x1 input, got " + x.shape());
  require(grad_output.cols() == 1 && grad_output.rows() == w.rows(),
          "LinearLayer::backward: expected " + std::to_string(w.rows()) +
              "x1 gradient, got " + grad_output.shape());
  // dC/dW_jk = gradOut_j * x_k; dC/db = gradOut; gradIn = W^T gradOut.
  for (int j = 0; j < w.rows(); ++j) {
    const double g = grad_output[j];
    for (int k = 0; k < w.cols(); ++k) {
      grad_w(j, k) += g * x[k];
    }
    grad_b[j] += g;
  }
  DenseMatrix grad_in(w.cols(), 1);
  for (int k = 0; k < w.cols(); ++k) {
    double acc = 0.0;
    for (int j = 0; j < w.rows(); ++j) {
      acc += w(j, k) * grad_output[j];
    }
    grad_in[k] = acc;
  }
  return grad_in;
}

std::vector<Parameter> LinearLayer::parameters() {
  return {{"W", &w, &grad_w}, {"b", &b, &grad_b}};
}

// ---------------------------------------------------------------------------
// HardTanhLayer

DenseMatrix HardTanhLayer::forward(const DenseMatrix& x) {
  forwarded_ = true;
  DenseMatrix out = x;
  for (int i = 0; i < out.size(); ++i) {
    if (out[i] > 1.0) {
      out[i] = 1.0;
    } else if (out[i] < -1.0) {
      out[i] = -1.0;
    }
  }
  return out;
}

DenseMatrix HardTanhLayer::backward(const DenseMatrix& x, const DenseMatrix& grad_output) {
  require(forwarded_, "HardTanhLayer::backward called before forward");
  require(x.same_shape(grad_output),
          "HardTanhLayer::backward: shape mismatch: " + x.shape() + " vs " +
              grad_output.shape());
  DenseMatrix grad_in(x.rows(), x.cols());
  for (int i = 0; i < x.size(); ++i) {
    grad_in[i] = (x[i] > -1.0 && x[i] < 1.0) ? grad_output[i] : 0.0;
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// MeanLayer

DenseMatrix MeanLayer::forward(const DenseMatrix& x) {
  forwarded_ = true;
  DenseMatrix out(x.rows(), 1);
  for (int i = 0; i < x.rows(); ++i) {
    double acc = 0.0;
    for (int j = 0; j < x.cols(); ++j) {
      acc += x(i, j);
    }
    out[i] = acc / x.cols();
  }
  return out;
}

DenseMatrix MeanLayer::backward(const DenseMatrix& x, const DenseMatrix& grad_output) {
  require(forwarded_, "MeanLayer::backward called before forward");
  require(grad_output.cols() == 1 && grad_output.rows() == x.rows(),
          "MeanLayer::backward: expected " + std::to_string(x.rows()) +
              "x1 gradient, got " + grad_output.shape());
  DenseMatrix grad_in(x.rows(), x.cols());
  for (int i = 0; i < x.rows(); ++i) {
    const double g = grad_output[i] / x.cols();
    for (int j = 0; j < x.cols(); ++j) {
      grad_in(i, j) = g;
    }
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// EmbeddingTable

EmbeddingTable::EmbeddingTable(int dim, int entries, Rng& rng)
    : w(uniform_init(rng, dim, entries, -0.1, 0.1)), grad_w(dim, entries) {}

EmbeddingTable::EmbeddingTable(int dim, int entries)
    : w(dim, entries), grad_w(dim, entries) {}

DenseMatrix EmbeddingTable::forward(const TokenSequence& s) {
  require(!s.empty(), "EmbeddingTable::forward: empty sequence");
  forwarded_ = true;
  DenseMatrix out(dim(), static_cast<int>(s.size()));
  for (int j = 0; j < static_cast<int>(s.size()); ++j) {
    const int idx = s[static_cast<std::size_t>(j)];
    require(idx >= 1 && idx <= entries(),
            "EmbeddingTable::forward: index " + std::to_string(idx) +
                " out of range [1, " + std::to_string(entries()) + "]");
    for (int i = 0; i < dim(); ++i) {
      out(i, j) = w(i, idx - 1);
    }
  }
  return out;
}

void EmbeddingTable::backward(const TokenSequence& s, const DenseMatrix& grad_output) {
  require(forwarded_, "EmbeddingTable::backward called before forward");
  require(grad_output.rows() == dim() &&
              grad_output.cols() == static_cast<int>(s.size()),
          "EmbeddingTable::backward: expected " + std::to_string(dim()) + "x" +
              std::to_string(s.size()) + " gradient, got " + grad_output.shape());
  for (int j = 0; j < static_cast<int>(s.size()); ++j) {
    const int idx = s[static_cast<std::size_t>(j)];
    require(idx >= 1 && idx <= entries(),
            "EmbeddingTable::backward: index " + std::to_string(idx) +
                " out of range [1, " + std::to_string(entries()) + "]");
    for (int i = 0; i < dim(); ++i) {
      grad_w(i, idx - 1) += grad_output(i, j);
    }
  }
}

std::vector<Parameter> EmbeddingTable::parameters() {
  return {{"W", &w, &grad_w}};
}

// ---------------------------------------------------------------------------
// Sequential

Sequential& Sequential::add(std::shared_ptr<NetModule> child) {
  children.push_back(std::move(child));
  return *this;
}

DenseMatrix Sequential::forward(const DenseMatrix& input) {
  forwarded_ = true;
  DenseMatrix current = input;
  for (auto& child : children) {
    current = child->forward(current);
  }
  return current;
}

DenseMatrix Sequential::backward(const DenseMatrix& input, const DenseMatrix& grad_output) {
  require(forwarded_, "Sequential::backward called before forward");
  // Rebuild intermediates, then chain gradients right to left.
  std::vector<DenseMatrix> inputs;
  inputs.reserve(children.size());
  DenseMatrix current = input;
  for (auto& child : children) {
    inputs.push_back(current);
    current = child->forward(current);
  }
  DenseMatrix grad = grad_output;
  for (int i = static_cast<int>(children.size()) - 1; i >= 0; --i) {
    grad = children[static_cast<std::size_t>(i)]->backward(
        inputs[static_cast<std::size_t>(i)], grad);
  }
  return grad;
}

std::vector<Parameter> Sequential::parameters() {
  std::vector<Parameter> out;
  for (std::size_t i = 0; i < children.size(); ++i) {
    for (Parameter p : children[i]->parameters()) {
      p.name = std::to_string(i) + "." + p.name;
      out.push_back(p);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// ParallelPair

ParallelPair::ParallelPair(std::shared_ptr<NetModule> first_child,
                           std::shared_ptr<NetModule> second_child)
    : first(std::move(first_child)), second(std::move(second_child)) {}

DenseMatrix ParallelPair::forward(const DenseMatrix& a, const DenseMatrix& b) {
  forwarded_ = true;
  return vconcat(first->forward(a), second->forward(b));
}

std::pair<DenseMatrix, DenseMatrix> ParallelPair::backward(
    const DenseMatrix& a, const DenseMatrix& b, const DenseMatrix& grad_output) {
  require(forwarded_, "ParallelPair::backward called before forward");
  const DenseMatrix out_a = first->forward(a);
  const DenseMatrix out_b = second->forward(b);
  require(grad_output.cols() == 1 &&
              grad_output.rows() == out_a.rows() + out_b.rows(),
          "ParallelPair::backward: gradient shape " + grad_output.shape() +
              " does not match stacked output");
  DenseMatrix grad_a(out_a.rows(), 1);
  DenseMatrix grad_b(out_b.rows(), 1);
  for (int i = 0; i < out_a.rows(); ++i) {
    grad_a[i] = grad_output[i];
  }
  for (int i = 0; i < out_b.rows(); ++i) {
    grad_b[i] = grad_output[out_a.rows() + i];
  }
  return {first->backward(a, grad_a), second->backward(b, grad_b)};
}

std::vector<Parameter> ParallelPair::parameters() {
  std::vector<Parameter> out;
  for (Parameter p : first->parameters()) {
    p.name = "first." + p.name;
    out.push_back(p);
  }
  for (Parameter p : second->parameters()) {
    p.name = "second." + p.name;
    out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Criteria

MseResult mse_criterion(const DenseMatrix& output, const DenseMatrix& target) {
  require(output.same_shape(target),
          "mse_criterion: shape mismatch: " + output.shape() + " vs " + target.shape());
  const int d = output.size();
  double loss = 0.0;
  DenseMatrix grad(output.rows(), output.cols());
  for (int i = 0; i < d; ++i) {
    const double diff = target[i] - output[i];
    loss += diff * diff;
    grad[i] = (2.0 / d) * (output[i] - target[i]);
  }
  return {loss / d, std::move(grad)};
}

MarginResult margin_ranking_criterion(double score_pos, double score_neg, double margin) {
  require(margin > 0.0, "margin_ranking_criterion: margin must be positive");
  const double loss = margin - score_pos + score_neg;
  if (loss > 0.0) {
    return {loss, -1.0, 1.0};
  }
  return {0.0, 0.0, 0.0};
}

}  // namespace embedtree
