#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "reft/model.hpp"

namespace reft {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled; disabled during RL
};

// Adaptive moment estimation with decoupled weight decay over the flat
// parameter vector.
class AdamW {
 public:
  AdamW() = default;
  explicit AdamW(size_t n_params) : m_(n_params, 0.0), v_(n_params, 0.0) {}

  void step(Params& p, const Params& g, double lr, const AdamWConfig& cfg);
  int64_t steps_taken() const { return t_; }

  void write(std::ostream& os) const;
  void read(std::istream& is);

 private:
  std::vector<double> m_, v_;
  int64_t t_ = 0;
};

// Linear warm-up to `lr` over warmup_frac of total_steps, then constant.
double warmup_lr(double lr, double warmup_frac, int64_t step, int64_t total_steps);

}  // namespace reft
