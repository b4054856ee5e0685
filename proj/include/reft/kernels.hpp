#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace reft {

// Row-major matrix of doubles. All training math is done in 64-bit floats.
struct Mat {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double* row(int i) { return a.data() + static_cast<size_t>(i) * cols; }
  const double* row(int i) const { return a.data() + static_cast<size_t>(i) * cols; }
  double& at(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  double at(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }
  size_t size() const { return a.size(); }
  void zero() { std::fill(a.begin(), a.end(), 0.0); }
  void resize(int r, int c) {
    rows = r;
    cols = c;
    a.assign(static_cast<size_t>(r) * c, 0.0);
  }
};

// Matrix kernels. Each comes in an OpenMP-parallel flavor (the default) and a
// serial reference flavor used by the tests and the kernel benchmark. The
// parallel versions partition output elements across threads but keep the
// per-element accumulation order identical to the serial code, so both
// flavors produce bitwise-identical results.

// C = A * B              (A: m x k, B: k x n)
void matmul(const Mat& A, const Mat& B, Mat& C);
void matmul_serial(const Mat& A, const Mat& B, Mat& C);

// C = A * B^T            (A: m x k, B: n x k)
void matmul_bt(const Mat& A, const Mat& B, Mat& C);
void matmul_bt_serial(const Mat& A, const Mat& B, Mat& C);

// C += A^T * B           (A: m x k, B: m x n, C: k x n)
void matmul_at_acc(const Mat& A, const Mat& B, Mat& C);
void matmul_at_acc_serial(const Mat& A, const Mat& B, Mat& C);

int max_threads();
void set_threads(int n);

}  // namespace reft
