#include "embedtree/matrix.hpp"

#include <cmath>
#include <cstdlib>

namespace embedtree {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) {
    throw std::invalid_argument(msg);
  }
}

void require_column_pair(const DenseMatrix& x, const DenseMatrix& y,
                         const char* op) {
  require(x.cols() == 1 && y.cols() == 1 && x.rows() == y.rows(),
          std::string(op) + ": expected equal-length column vectors, got " +
              x.shape() + " vs " + y.shape());
}

}  // namespace

DenseMatrix::DenseMatrix(int rows, int cols)
    : rows_(rows), cols_(cols),
      data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0) {
  require(rows > 0 && cols > 0,
          "DenseMatrix: dimensions must be positive, got " + shape());
}

DenseMatrix::DenseMatrix(int rows, int cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  require(rows > 0 && cols > 0,
          "DenseMatrix: dimensions must be positive, got " + shape());
  require(data_.size() == static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
          "DenseMatrix: data length " + std::to_string(data_.size()) +
              " does not match shape " + shape());
}

DenseMatrix DenseMatrix::column(std::vector<double> values) {
  const int n = static_cast<int>(values.size());
  return DenseMatrix(n, 1, std::move(values));
}

DenseMatrix DenseMatrix::identity(int n) {
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = 1.0;
  }
  return m;
}

void DenseMatrix::fill(double value) {
  for (double& x : data_) {
    x = value;
  }
}

std::string DenseMatrix::shape() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

DenseMatrix matvec(const DenseMatrix& m, const DenseMatrix& v) {
  require(v.cols() == 1 && m.cols() == v.rows(),
          "matvec: inner dimensions disagree: " + m.shape() + " vs " + v.shape());
  DenseMatrix out(m.rows(), 1);
  for (int i = 0; i < m.rows(); ++i) {
    double acc = 0.0;
    for (int k = 0; k < m.cols(); ++k) {
      acc += m(i, k) * v[k];
    }
    out[i] = acc;
  }
  return out;
}

double dot(const DenseMatrix& x, const DenseMatrix& y) {
  require_column_pair(x, y, "dot");
  double acc = 0.0;
  for (int i = 0; i < x.rows(); ++i) {
    acc += x[i] * y[i];
  }
  return acc;
}

double l1_distance(const DenseMatrix& x, const DenseMatrix& y) {
  require_column_pair(x, y, "l1_distance");
  double acc = 0.0;
  for (int i = 0; i < x.rows(); ++i) {
    acc += std::abs(x[i] - y[i]);
  }
  return acc;
}

double euclidean_sq(const DenseMatrix& x, const DenseMatrix& y) {
  require_column_pair(x, y, "euclidean_sq");
  double acc = 0.0;
  for (int i = 0; i < x.rows(); ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc;
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.same_shape(b),
          "add: shape mismatch: " + a.shape() + " vs " + b.shape());
  DenseMatrix out = a;
  for (int i = 0; i < out.size(); ++i) {
    out[i] += b[i];
  }
  return out;
}

DenseMatrix column_of(const DenseMatrix& m, int j) {
  require(j >= 0 && j < m.cols(),
          "column_of: column " + std::to_string(j) + " out of range for " + m.shape());
  DenseMatrix out(m.rows(), 1);
  for (int i = 0; i < m.rows(); ++i) {
    out[i] = m(i, j);
  }
  return out;
}

void set_column(DenseMatrix& m, int j, const DenseMatrix& v) {
  require(j >= 0 && j < m.cols(),
          "set_column: column " + std::to_string(j) + " out of range for " + m.shape());
  require(v.cols() == 1 && v.rows() == m.rows(),
          "set_column: expected " + std::to_string(m.rows()) + "x1, got " + v.shape());
  for (int i = 0; i < m.rows(); ++i) {
    m(i, j) = v[i];
  }
}

DenseMatrix vconcat(const DenseMatrix& top, const DenseMatrix& bottom) {
  require(top.cols() == 1 && bottom.cols() == 1,
          "vconcat: expected column vectors, got " + top.shape() + " and " +
              bottom.shape());
  DenseMatrix out(top.rows() + bottom.rows(), 1);
  for (int i = 0; i < top.rows(); ++i) {
    out[i] = top[i];
  }
  for (int i = 0; i < bottom.rows(); ++i) {
    out[top.rows() + i] = bottom[i];
  }
  return out;
}

std::pair<DenseMatrix, DenseMatrix> vsplit(const DenseMatrix& x) {
  require(x.cols() == 1 && x.rows() % 2 == 0,
          "vsplit: expected even-length column vector, got " + x.shape());
  const int half = x.rows() / 2;
  DenseMatrix top(half, 1);
  DenseMatrix bottom(half, 1);
  for (int i = 0; i < half; ++i) {
    top[i] = x[i];
    bottom[i] = x[half + i];
  }
  return {std::move(top), std::move(bottom)};
}

bool all_finite(const DenseMatrix& m) {
  for (double x : m.data()) {
    if (!std::isfinite(x)) {
      return false;
    }
  }
  return true;
}

DenseMatrix uniform_init(Rng& rng, int rows, int cols, double lo, double hi) {
  if (!(lo < hi)) {
    throw std::invalid_argument("uniform_init: requires lo < hi");
  }
  DenseMatrix out(rows, cols);
  for (int i = 0; i < out.size(); ++i) {
    out[i] = rng.uniform(lo, hi);
  }
  return out;
}

}  // namespace embedtree
