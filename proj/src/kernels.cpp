#include "reft/kernels.hpp"

#include <cassert>
#ifdef _OPENMP
#include <omp.h>
#endif

namespace reft {

namespace {
// Below this many multiply-adds the parallel fork costs more than it saves.
constexpr size_t kParallelCutoff = 64 * 1024;
}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n);
#else
  (void)n;
#endif
}

void matmul_serial(const Mat& A, const Mat& B, Mat& C) {
  assert(A.cols == B.rows);
  C.resize(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i) {
    double* crow = C.row(i);
    const double* arow = A.row(i);
    for (int l = 0; l < A.cols; ++l) {
      const double av = arow[l];
      const double* brow = B.row(l);
      for (int j = 0; j < B.cols; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul(const Mat& A, const Mat& B, Mat& C) {
  assert(A.cols == B.rows);
  C.resize(A.rows, B.cols);
  const size_t work = static_cast<size_t>(A.rows) * A.cols * B.cols;
#pragma omp parallel for schedule(static) if (work > kParallelCutoff)
  for (int i = 0; i < A.rows; ++i) {
    double* crow = C.row(i);
    const double* arow = A.row(i);
    for (int l = 0; l < A.cols; ++l) {
      const double av = arow[l];
      const double* brow = B.row(l);
      for (int j = 0; j < B.cols; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_bt_serial(const Mat& A, const Mat& B, Mat& C) {
  assert(A.cols == B.cols);
  C.resize(A.rows, B.rows);
  for (int i = 0; i < A.rows; ++i) {
    const double* arow = A.row(i);
    double* crow = C.row(i);
    for (int j = 0; j < B.rows; ++j) {
      const double* brow = B.row(j);
      double s = 0.0;
      for (int l = 0; l < A.cols; ++l) s += arow[l] * brow[l];
      crow[j] = s;
    }
  }
}

void matmul_bt(const Mat& A, const Mat& B, Mat& C) {
  assert(A.cols == B.cols);
  C.resize(A.rows, B.rows);
  const size_t work = static_cast<size_t>(A.rows) * A.cols * B.rows;
#pragma omp parallel for schedule(static) if (work > kParallelCutoff)
  for (int i = 0; i < A.rows; ++i) {
    const double* arow = A.row(i);
    double* crow = C.row(i);
    for (int j = 0; j < B.rows; ++j) {
      const double* brow = B.row(j);
      double s = 0.0;
      for (int l = 0; l < A.cols; ++l) s += arow[l] * brow[l];
      crow[j] = s;
    }
  }
}

void matmul_at_acc_serial(const Mat& A, const Mat& B, Mat& C) {
  assert(A.rows == B.rows);
  assert(C.rows == A.cols && C.cols == B.cols);
  for (int i = 0; i < A.cols; ++i) {
    double* crow = C.row(i);
    for (int l = 0; l < A.rows; ++l) {
      const double av = A.at(l, i);
      const double* brow = B.row(l);
      for (int j = 0; j < B.cols; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_at_acc(const Mat& A, const Mat& B, Mat& C) {
  assert(A.rows == B.rows);
  assert(C.rows == A.cols && C.cols == B.cols);
  const size_t work = static_cast<size_t>(A.rows) * A.cols * B.cols;
#pragma omp parallel for schedule(static) if (work > kParallelCutoff)
  for (int i = 0; i < A.cols; ++i) {
    double* crow = C.row(i);
    for (int l = 0; l < A.rows; ++l) {
      const double av = A.at(l, i);
      const double* brow = B.row(l);
      for (int j = 0; j < B.cols; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace reft
