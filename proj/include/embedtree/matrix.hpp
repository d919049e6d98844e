#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "embedtree/rng.hpp"

namespace embedtree {

// Row-major dense matrix of f64. Column vectors are represented as n×1
// matrices throughout; there is no separate vector type.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(int rows, int cols);
  DenseMatrix(int rows, int cols, std::vector<double> values);

  static DenseMatrix column(std::vector<double> values);
  static DenseMatrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int size() const { return rows_ * cols_; }

  double& operator()(int r, int c) {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  double operator()(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  // Flat row-major access.
  double& operator[](int i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return data_[static_cast<std::size_t>(i)]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void fill(double value);
  bool same_shape(const DenseMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// Shape-checked primitives. All are pure: arguments are never modified and
// results are freshly allocated.
DenseMatrix matvec(const DenseMatrix& m, const DenseMatrix& v);
double dot(const DenseMatrix& x, const DenseMatrix& y);
double l1_distance(const DenseMatrix& x, const DenseMatrix& y);
double euclidean_sq(const DenseMatrix& x, const DenseMatrix& y);
DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);

// Column / stacking helpers for d×l activations.
DenseMatrix column_of(const DenseMatrix& m, int j);
void set_column(DenseMatrix& m, int j, const DenseMatrix& v);
DenseMatrix vconcat(const DenseMatrix& top, const DenseMatrix& bottom);
std::pair<DenseMatrix, DenseMatrix> vsplit(const DenseMatrix& x);

bool all_finite(const DenseMatrix& m);

// Every entry drawn independently, uniform in [lo, hi), in row-major order.
// Deterministic for a fixed rng state.
DenseMatrix uniform_init(Rng& rng, int rows, int cols, double lo, double hi);

}  // namespace embedtree
