// Compares the serial reference kernels against the parallel ones: checks
// bitwise agreement, then reports throughput at a few transformer-ish shapes.
#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "reft/kernels.hpp"
#include "reft/rng.hpp"

using namespace reft;

namespace {

Mat random_mat(int r, int c, Rng& rng) {
  Mat m;
  m.resize(r, c);
  for (double& x : m.a) x = rng.gaussian();
  return m;
}

double time_of(const std::function<void()>& fn, int reps) {
  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  for (int i = 0; i < reps; ++i) fn();
  return std::chrono::duration<double>(clock::now() - t0).count() / reps;
}

}  // namespace

int main() {
  Rng rng(7);
  struct Shape {
    int m, k, n;
  };
  const Shape shapes[] = {{64, 64, 64}, {256, 128, 128}, {256, 128, 512},
                          {512, 256, 256}, {1024, 256, 1024}};

  std::printf("threads: %d\n", max_threads());
  std::printf("%8s %8s %8s  %12s %12s %8s %8s\n", "m", "k", "n", "serial_s",
              "parallel_s", "speedup", "bitwise");
  for (const auto& s : shapes) {
    Mat a = random_mat(s.m, s.k, rng);
    Mat b = random_mat(s.k, s.n, rng);
    Mat c1, c2;
    matmul_serial(a, b, c1);
    matmul(a, b, c2);
    bool same = c1.a == c2.a;

    const int reps = s.m * (long)s.n < 100000 ? 200 : 20;
    double ts = time_of([&] { matmul_serial(a, b, c1); }, reps);
    double tp = time_of([&] { matmul(a, b, c2); }, reps);
    std::printf("%8d %8d %8d  %12.6f %12.6f %8.2f %8s\n", s.m, s.k, s.n, ts, tp,
                ts / tp, same ? "yes" : "NO");
    if (!same) return 1;
  }
  return 0;
}
