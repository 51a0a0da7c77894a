#include "pursuit/autodiff/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace pursuit::ad {

Matrix::Matrix(int rows, int cols, double fill) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw ShapeError("negative matrix dimension");
  data_.assign(static_cast<std::size_t>(rows) * cols, fill);
}

Matrix::Matrix(int rows, int cols, std::vector<double> values) : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (rows < 0 || cols < 0 || data_.size() != static_cast<std::size_t>(rows) * cols)
    throw ShapeError("value count does not match shape " + shape_string());
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r == 0 ? 0 : static_cast<int>(rows.begin()->size());
  std::vector<double> v;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c) throw ShapeError("ragged matrix literal");
    v.insert(v.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(v));
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string Matrix::shape_string() const { return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]"; }

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix& Matrix::operator+=(const Matrix& o) {
  if (!same_shape(o)) throw ShapeError("shape mismatch in += : " + shape_string() + " vs " + o.shape_string());
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

void gemm(const Matrix& a, bool trans_a, const Matrix& b, bool trans_b, Matrix& c, bool accumulate) {
  const int m = trans_a ? a.cols() : a.rows();
  const int k = trans_a ? a.rows() : a.cols();
  const int kb = trans_b ? b.cols() : b.rows();
  const int n = trans_b ? b.rows() : b.cols();
  if (k != kb) throw ShapeError("gemm inner dimension mismatch: " + a.shape_string() + " * " + b.shape_string());
  if (c.rows() != m || c.cols() != n) {
    if (accumulate) throw ShapeError("gemm output shape mismatch");
    c = Matrix(m, n);
  } else if (!accumulate) {
    c.fill(0.0);
  }
  if (!trans_a && !trans_b) {
    for (int i = 0; i < m; ++i) {
      double* ci = c.row(i);
      const double* ai = a.row(i);
      for (int p = 0; p < k; ++p) {
        const double av = ai[p];
        if (av == 0.0) continue;
        const double* bp = b.row(p);
        for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
      }
    }
  } else if (trans_a && !trans_b) {
    // c[i][j] += sum_p a[p][i] * b[p][j]
    for (int p = 0; p < k; ++p) {
      const double* ap = a.row(p);
      const double* bp = b.row(p);
      for (int i = 0; i < m; ++i) {
        const double av = ap[i];
        if (av == 0.0) continue;
        double* ci = c.row(i);
        for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
      }
    }
  } else if (!trans_a && trans_b) {
    // c[i][j] += sum_p a[i][p] * b[j][p]
    for (int i = 0; i < m; ++i) {
      const double* ai = a.row(i);
      double* ci = c.row(i);
      for (int j = 0; j < n; ++j) {
        const double* bj = b.row(j);
        double s = 0.0;
        for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
        ci[j] += s;
      }
    }
  } else {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int p = 0; p < k; ++p) s += a(p, i) * b(j, p);
        c(i, j) += s;
      }
  }
}

}  // namespace pursuit::ad
