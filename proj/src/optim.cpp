#include "reft/optim.hpp"

#include <cassert>
#include <cmath>
#include <istream>
#include <ostream>

namespace reft {

void AdamW::step(Params& p, const Params& g, double lr, const AdamWConfig& cfg) {
  auto pm = p.all();
  auto gm = g.all();
  assert(pm.size() == gm.size());
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t_));
  size_t off = 0;
  for (size_t i = 0; i < pm.size(); ++i) {
    double* w = pm[i]->a.data();
    const double* gr = gm[i]->a.data();
    const size_t n = pm[i]->size();
    assert(off + n <= m_.size());
    for (size_t j = 0; j < n; ++j) {
      double& m = m_[off + j];
      double& v = v_[off + j];
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * gr[j];
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * gr[j] * gr[j];
      const double mh = m / bc1;
      const double vh = v / bc2;
      w[j] -= lr * (mh / (std::sqrt(vh) + cfg.eps) + cfg.weight_decay * w[j]);
    }
    off += n;
  }
}

void AdamW::write(std::ostream& os) const {
  const uint64_t n = m_.size();
  os.write(reinterpret_cast<const char*>(&n), sizeof(n));
  os.write(reinterpret_cast<const char*>(&t_), sizeof(t_));
  os.write(reinterpret_cast<const char*>(m_.data()), n * sizeof(double));
  os.write(reinterpret_cast<const char*>(v_.data()), n * sizeof(double));
}

void AdamW::read(std::istream& is) {
  uint64_t n = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof(n));
  is.read(reinterpret_cast<char*>(&t_), sizeof(t_));
  m_.resize(n);
  v_.resize(n);
  is.read(reinterpret_cast<char*>(m_.data()), n * sizeof(double));
  is.read(reinterpret_cast<char*>(v_.data()), n * sizeof(double));
}

double warmup_lr(double lr, double warmup_frac, int64_t step, int64_t total_steps) {
  const int64_t warm = static_cast<int64_t>(warmup_frac * static_cast<double>(total_steps));
  if (warm <= 0 || step > warm) return lr;
  return lr * static_cast<double>(step) / static_cast<double>(warm);
}

}  // namespace reft
