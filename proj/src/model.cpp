#include "reft/model.hpp"

#include <cassert>
#include <cmath>

namespace reft {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kInitStd = 0.02;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
  static const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * M_PI);
  return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) +
         x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

void add_bias_rows(Mat& x, const Mat& b) {
  for (int t = 0; t < x.rows; ++t) {
    double* r = x.row(t);
    const double* br = b.row(0);
    for (int j = 0; j < x.cols; ++j) r[j] += br[j];
  }
}

void add_col_sums(const Mat& d, Mat& acc) {
  for (int t = 0; t < d.rows; ++t) {
    const double* r = d.row(t);
    double* a = acc.row(0);
    for (int j = 0; j < d.cols; ++j) a[j] += r[j];
  }
}

void ln_forward(const Mat& x, const Mat& g, const Mat& b, Mat& out, LnCache& c) {
  const int T = x.rows, d = x.cols;
  out.resize(T, d);
  c.xhat.resize(T, d);
  c.rstd.assign(T, 0.0);
  for (int t = 0; t < T; ++t) {
    const double* xr = x.row(t);
    double mu = 0.0;
    for (int j = 0; j < d; ++j) mu += xr[j];
    mu /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
      const double dv = xr[j] - mu;
      var += dv * dv;
    }
    var /= d;
    const double rstd = 1.0 / std::sqrt(var + kLnEps);
    c.rstd[t] = rstd;
    double* xh = c.xhat.row(t);
    double* o = out.row(t);
    const double* gr = g.row(0);
    const double* br = b.row(0);
    for (int j = 0; j < d; ++j) {
      xh[j] = (xr[j] - mu) * rstd;
      o[j] = gr[j] * xh[j] + br[j];
    }
  }
}

// Accumulates dL/dx into dx; accumulates gain/bias gradients.
void ln_backward(const Mat& dout, const Mat& g, const LnCache& c, Mat& dx,
                 Mat& dg, Mat& db) {
  const int T = dout.rows, d = dout.cols;
  for (int t = 0; t < T; ++t) {
    const double* do_ = dout.row(t);
    const double* xh = c.xhat.row(t);
    const double* gr = g.row(0);
    double* dgr = dg.row(0);
    double* dbr = db.row(0);
    double mean_h = 0.0, mean_hx = 0.0;
    for (int j = 0; j < d; ++j) {
      const double h = do_[j] * gr[j];
      mean_h += h;
      mean_hx += h * xh[j];
      dgr[j] += do_[j] * xh[j];
      dbr[j] += do_[j];
    }
    mean_h /= d;
    mean_hx /= d;
    const double rstd = c.rstd[t];
    double* dxr = dx.row(t);
    for (int j = 0; j < d; ++j) {
      const double h = do_[j] * gr[j];
      dxr[j] += rstd * (h - mean_h - xh[j] * mean_hx);
    }
  }
}

void init_gaussian(Mat& m, Rng& rng, double std) {
  for (double& x : m.a) x = rng.gaussian() * std;
}

}  // namespace

void softmax_inplace(std::vector<double>& x, double temperature) {
  double mx = x[0];
  for (double v : x) mx = std::max(mx, v);
  double sum = 0.0;
  for (double& v : x) {
    v = std::exp((v - mx) / temperature);
    sum += v;
  }
  for (double& v : x) v /= sum;
}

double log_sum_exp(const double* x, int n) {
  double mx = x[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(x[i] - mx);
  return mx + std::log(s);
}

void Params::init_shapes(const ModelConfig& cfg) {
  const int d = cfg.d_model, V = cfg.vocab_size, f = 4 * cfg.d_model;
  tok_emb.resize(V, d);
  pos_emb.resize(cfg.max_seq, d);
  blocks.resize(cfg.n_layers);
  for (auto& b : blocks) {
    b.ln1_g.resize(1, d);
    b.ln1_b.resize(1, d);
    b.wq.resize(d, d);
    b.bq.resize(1, d);
    b.wk.resize(d, d);
    b.bk.resize(1, d);
    b.wv.resize(d, d);
    b.bv.resize(1, d);
    b.wo.resize(d, d);
    b.bo.resize(1, d);
    b.ln2_g.resize(1, d);
    b.ln2_b.resize(1, d);
    b.w1.resize(d, f);
    b.b1.resize(1, f);
    b.w2.resize(f, d);
    b.b2.resize(1, d);
  }
  lnf_g.resize(1, d);
  lnf_b.resize(1, d);
  w_out.resize(d, V);
  b_out.resize(1, V);
  w_val.resize(d, 1);
  b_val.resize(1, 1);
}

std::vector<Mat*> Params::all() {
  std::vector<Mat*> v = {&tok_emb, &pos_emb};
  for (auto& b : blocks) {
    for (Mat* m : {&b.ln1_g, &b.ln1_b, &b.wq, &b.bq, &b.wk, &b.bk, &b.wv, &b.bv,
                   &b.wo, &b.bo, &b.ln2_g, &b.ln2_b, &b.w1, &b.b1, &b.w2, &b.b2})
      v.push_back(m);
  }
  for (Mat* m : {&lnf_g, &lnf_b, &w_out, &b_out, &w_val, &b_val}) v.push_back(m);
  return v;
}

std::vector<const Mat*> Params::all() const {
  auto v = const_cast<Params*>(this)->all();
  return std::vector<const Mat*>(v.begin(), v.end());
}

size_t Params::count() const {
  size_t n = 0;
  for (const Mat* m : all()) n += m->size();
  return n;
}

void Params::zero() {
  for (Mat* m : all()) m->zero();
}

void Params::axpy(double s, const Params& g) {
  auto dst = all();
  auto src = g.all();
  assert(dst.size() == src.size());
  for (size_t i = 0; i < dst.size(); ++i) {
    assert(dst[i]->size() == src[i]->size());
    double* d = dst[i]->a.data();
    const double* x = src[i]->a.data();
    const size_t n = dst[i]->size();
    for (size_t j = 0; j < n; ++j) d[j] += s * x[j];
  }
}

double Params::flat_get(size_t idx) const {
  for (const Mat* m : all()) {
    if (idx < m->size()) return m->a[idx];
    idx -= m->size();
  }
  throw ArgumentError("flat parameter index out of range");
}

void Params::flat_add(size_t idx, double dv) {
  for (Mat* m : all()) {
    if (idx < m->size()) {
      m->a[idx] += dv;
      return;
    }
    idx -= m->size();
  }
  throw ArgumentError("flat parameter index out of range");
}

Model::Model(const ModelConfig& c) : cfg(c) {
  if (cfg.vocab_size <= 0) throw ArgumentError("vocab_size must be positive");
  if (cfg.d_model % cfg.n_heads != 0)
    throw ArgumentError("d_model must be divisible by n_heads");
  p.init_shapes(cfg);
  Rng rng(splitmix64(cfg.init_seed ^ 0x6d6f64656cull));
  init_gaussian(p.tok_emb, rng, kInitStd);
  init_gaussian(p.pos_emb, rng, kInitStd);
  for (auto& b : p.blocks) {
    for (double& x : b.ln1_g.a) x = 1.0;
    for (double& x : b.ln2_g.a) x = 1.0;
    init_gaussian(b.wq, rng, kInitStd);
    init_gaussian(b.wk, rng, kInitStd);
    init_gaussian(b.wv, rng, kInitStd);
    init_gaussian(b.wo, rng, kInitStd);
    init_gaussian(b.w1, rng, kInitStd);
    init_gaussian(b.w2, rng, kInitStd);
  }
  for (double& x : p.lnf_g.a) x = 1.0;
  init_gaussian(p.w_out, rng, kInitStd);
  // The scalar head starts at zero so early value estimates sit near 0.
}

void Model::forward(std::span<const int> tokens, Cache& cache) const {
  const int T = static_cast<int>(tokens.size());
  if (T == 0) throw ArgumentError("empty token sequence");
  if (T > cfg.max_seq)
    throw LengthError("sequence length " + std::to_string(T) + " exceeds max " +
                      std::to_string(cfg.max_seq));
  const int d = cfg.d_model, H = cfg.n_heads, hd = d / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));

  cache.T = T;
  cache.blocks.resize(cfg.n_layers);

  Mat x(T, d);
  for (int t = 0; t < T; ++t) {
    const double* te = p.tok_emb.row(tokens[t]);
    const double* pe = p.pos_emb.row(t);
    double* xr = x.row(t);
    for (int j = 0; j < d; ++j) xr[j] = te[j] + pe[j];
  }

  for (int l = 0; l < cfg.n_layers; ++l) {
    const BlockParams& bp = p.blocks[l];
    BlockCache& bc = cache.blocks[l];
    bc.x_in = x;
    ln_forward(bc.x_in, bp.ln1_g, bp.ln1_b, bc.ln1_out, bc.ln1);
    matmul(bc.ln1_out, bp.wq, bc.q);
    add_bias_rows(bc.q, bp.bq);
    matmul(bc.ln1_out, bp.wk, bc.k);
    add_bias_rows(bc.k, bp.bk);
    matmul(bc.ln1_out, bp.wv, bc.v);
    add_bias_rows(bc.v, bp.bv);

    bc.probs.assign(H, Mat(T, T));
    bc.att_mix.resize(T, d);
#pragma omp parallel for schedule(static) if (static_cast<size_t>(T) * T * d > 32768)
    for (int h = 0; h < H; ++h) {
      const int off = h * hd;
      Mat& pr = bc.probs[h];
      for (int t = 0; t < T; ++t) {
        const double* qrow = bc.q.row(t) + off;
        double* prow = pr.row(t);
        double mx = -1e300;
        for (int j = 0; j <= t; ++j) {
          const double* krow = bc.k.row(j) + off;
          double s = 0.0;
          for (int e = 0; e < hd; ++e) s += qrow[e] * krow[e];
          prow[j] = s * scale;
          mx = std::max(mx, prow[j]);
        }
        double sum = 0.0;
        for (int j = 0; j <= t; ++j) {
          prow[j] = std::exp(prow[j] - mx);
          sum += prow[j];
        }
        double* orow = bc.att_mix.row(t) + off;
        for (int e = 0; e < hd; ++e) orow[e] = 0.0;
        for (int j = 0; j <= t; ++j) {
          prow[j] /= sum;
          const double* vrow = bc.v.row(j) + off;
          for (int e = 0; e < hd; ++e) orow[e] += prow[j] * vrow[e];
        }
      }
    }

    Mat att_out;
    matmul(bc.att_mix, bp.wo, att_out);
    add_bias_rows(att_out, bp.bo);
    bc.resid1.resize(T, d);
    for (size_t i = 0; i < bc.resid1.size(); ++i)
      bc.resid1.a[i] = bc.x_in.a[i] + att_out.a[i];

    ln_forward(bc.resid1, bp.ln2_g, bp.ln2_b, bc.ln2_out, bc.ln2);
    matmul(bc.ln2_out, bp.w1, bc.mlp_pre);
    add_bias_rows(bc.mlp_pre, bp.b1);
    bc.mlp_act.resize(T, 4 * d);
    for (size_t i = 0; i < bc.mlp_pre.size(); ++i)
      bc.mlp_act.a[i] = gelu(bc.mlp_pre.a[i]);
    Mat mlp_out;
    matmul(bc.mlp_act, bp.w2, mlp_out);
    add_bias_rows(mlp_out, bp.b2);

    x.resize(T, d);
    for (size_t i = 0; i < x.size(); ++i) x.a[i] = bc.resid1.a[i] + mlp_out.a[i];
  }

  cache.x_final = x;
  ln_forward(cache.x_final, p.lnf_g, p.lnf_b, cache.lnf_out, cache.lnf);
  matmul(cache.lnf_out, p.w_out, cache.logits);
  add_bias_rows(cache.logits, p.b_out);
  cache.values.assign(T, 0.0);
  for (int t = 0; t < T; ++t) {
    const double* f = cache.lnf_out.row(t);
    double v = p.b_val.at(0, 0);
    for (int j = 0; j < d; ++j) v += f[j] * p.w_val.at(j, 0);
    cache.values[t] = v;
  }
}

void Model::backward(std::span<const int> tokens, const Cache& cache,
                     const Mat& dlogits, const std::vector<double>& dvalues,
                     Params& grads) const {
  const int T = cache.T;
  const int d = cfg.d_model, H = cfg.n_heads, hd = d / H;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  assert(dlogits.rows == T && dlogits.cols == cfg.vocab_size);

  // output heads
  Mat dlnf(T, d);
  matmul_at_acc(cache.lnf_out, dlogits, grads.w_out);
  add_col_sums(dlogits, grads.b_out);
  matmul_bt(dlogits, p.w_out, dlnf);
  if (!dvalues.empty()) {
    assert(static_cast<int>(dvalues.size()) == T);
    for (int t = 0; t < T; ++t) {
      const double dv = dvalues[t];
      if (dv == 0.0) continue;
      const double* f = cache.lnf_out.row(t);
      double* dl = dlnf.row(t);
      for (int j = 0; j < d; ++j) {
        dl[j] += dv * p.w_val.at(j, 0);
        grads.w_val.at(j, 0) += dv * f[j];
      }
      grads.b_val.at(0, 0) += dv;
    }
  }

  Mat dx(T, d);
  ln_backward(dlnf, p.lnf_g, cache.lnf, dx, grads.lnf_g, grads.lnf_b);

  for (int l = cfg.n_layers - 1; l >= 0; --l) {
    const BlockParams& bp = p.blocks[l];
    const BlockCache& bc = cache.blocks[l];
    BlockParams& gb = grads.blocks[l];

    // x_out = resid1 + mlp(ln2(resid1))
    Mat dresid1 = dx;  // residual branch
    matmul_at_acc(bc.mlp_act, dx, gb.w2);
    add_col_sums(dx, gb.b2);
    Mat dact;
    matmul_bt(dx, bp.w2, dact);
    Mat dpre(T, 4 * d);
    for (size_t i = 0; i < dpre.size(); ++i)
      dpre.a[i] = dact.a[i] * gelu_grad(bc.mlp_pre.a[i]);
    matmul_at_acc(bc.ln2_out, dpre, gb.w1);
    add_col_sums(dpre, gb.b1);
    Mat dln2;
    matmul_bt(dpre, bp.w1, dln2);
    ln_backward(dln2, bp.ln2_g, bc.ln2, dresid1, gb.ln2_g, gb.ln2_b);

    // resid1 = x_in + wo(att_mix) + bo
    Mat dx_in = dresid1;  // residual branch
    matmul_at_acc(bc.att_mix, dresid1, gb.wo);
    add_col_sums(dresid1, gb.bo);
    Mat dmix;
    matmul_bt(dresid1, bp.wo, dmix);

    Mat dq(T, d), dk(T, d), dv(T, d);
#pragma omp parallel for schedule(static) if (static_cast<size_t>(T) * T * d > 32768)
    for (int h = 0; h < H; ++h) {
      const int off = h * hd;
      const Mat& pr = bc.probs[h];
      std::vector<double> dp(T);
      for (int t = 0; t < T; ++t) {
        const double* dmr = dmix.row(t) + off;
        const double* prow = pr.row(t);
        double dot_pd = 0.0;
        for (int j = 0; j <= t; ++j) {
          const double* vrow = bc.v.row(j) + off;
          double s = 0.0;
          for (int e = 0; e < hd; ++e) s += dmr[e] * vrow[e];
          dp[j] = s;
          dot_pd += prow[j] * s;
          double* dvrow = dv.row(j) + off;
          for (int e = 0; e < hd; ++e) dvrow[e] += prow[j] * dmr[e];
        }
        const double* qrow = bc.q.row(t) + off;
        double* dqrow = dq.row(t) + off;
        for (int j = 0; j <= t; ++j) {
          const double ds = prow[j] * (dp[j] - dot_pd) * scale;
          const double* krow = bc.k.row(j) + off;
          double* dkrow = dk.row(j) + off;
          for (int e = 0; e < hd; ++e) {
            dqrow[e] += ds * krow[e];
            dkrow[e] += ds * qrow[e];
          }
        }
      }
    }

    Mat dln1(T, d);
    matmul_at_acc(bc.ln1_out, dq, gb.wq);
    add_col_sums(dq, gb.bq);
    Mat tmp;
    matmul_bt(dq, bp.wq, tmp);
    for (size_t i = 0; i < dln1.size(); ++i) dln1.a[i] += tmp.a[i];
    matmul_at_acc(bc.ln1_out, dk, gb.wk);
    add_col_sums(dk, gb.bk);
    matmul_bt(dk, bp.wk, tmp);
    for (size_t i = 0; i < dln1.size(); ++i) dln1.a[i] += tmp.a[i];
    matmul_at_acc(bc.ln1_out, dv, gb.wv);
    add_col_sums(dv, gb.bv);
    matmul_bt(dv, bp.wv, tmp);
    for (size_t i = 0; i < dln1.size(); ++i) dln1.a[i] += tmp.a[i];

    ln_backward(dln1, bp.ln1_g, bc.ln1, dx_in, gb.ln1_g, gb.ln1_b);
    dx = std::move(dx_in);
  }

  for (int t = 0; t < T; ++t) {
    const double* dxr = dx.row(t);
    double* te = grads.tok_emb.row(tokens[t]);
    double* pe = grads.pos_emb.row(t);
    for (int j = 0; j < d; ++j) {
      te[j] += dxr[j];
      pe[j] += dxr[j];
    }
  }
}

void Model::decode_begin(DecodeState& st) const {
  st.k.assign(cfg.n_layers, Mat(cfg.max_seq, cfg.d_model));
  st.v.assign(cfg.n_layers, Mat(cfg.max_seq, cfg.d_model));
  st.len = 0;
}

void Model::decode_step(DecodeState& st, int token, std::vector<double>& logits_out,
                        double& value_out) const {
  const int d = cfg.d_model, H = cfg.n_heads, hd = d / H, f = 4 * d;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hd));
  const int pos = st.len;
  if (pos >= cfg.max_seq) throw LengthError("decode past max sequence length");

  std::vector<double> x(d), u(d), q(d), att(d), tmp(std::max(d, f));
  {
    const double* te = p.tok_emb.row(token);
    const double* pe = p.pos_emb.row(pos);
    for (int j = 0; j < d; ++j) x[j] = te[j] + pe[j];
  }

  auto layer_norm = [d](const std::vector<double>& in, const Mat& g, const Mat& b,
                        std::vector<double>& out) {
    double mu = 0.0;
    for (int j = 0; j < d; ++j) mu += in[j];
    mu /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) var += (in[j] - mu) * (in[j] - mu);
    var /= d;
    const double rstd = 1.0 / std::sqrt(var + kLnEps);
    for (int j = 0; j < d; ++j)
      out[j] = g.at(0, j) * ((in[j] - mu) * rstd) + b.at(0, j);
  };

  auto vec_mat = [](const std::vector<double>& in, const Mat& w, const Mat& b,
                    double* out, int n) {
    for (int j = 0; j < n; ++j) out[j] = b.at(0, j);
    for (int l = 0; l < w.rows; ++l) {
      const double xv = in[l];
      const double* wr = w.row(l);
      for (int j = 0; j < n; ++j) out[j] += xv * wr[j];
    }
  };

  for (int l = 0; l < cfg.n_layers; ++l) {
    const BlockParams& bp = p.blocks[l];
    layer_norm(x, bp.ln1_g, bp.ln1_b, u);
    vec_mat(u, bp.wq, bp.bq, q.data(), d);
    vec_mat(u, bp.wk, bp.bk, st.k[l].row(pos), d);
    vec_mat(u, bp.wv, bp.bv, st.v[l].row(pos), d);

    std::vector<double> mix(d, 0.0);
    std::vector<double> sc(pos + 1);
    for (int h = 0; h < H; ++h) {
      const int off = h * hd;
      double mx = -1e300;
      for (int j = 0; j <= pos; ++j) {
        const double* krow = st.k[l].row(j) + off;
        double s = 0.0;
        for (int e = 0; e < hd; ++e) s += q[off + e] * krow[e];
        sc[j] = s * scale;
        mx = std::max(mx, sc[j]);
      }
      double sum = 0.0;
      for (int j = 0; j <= pos; ++j) {
        sc[j] = std::exp(sc[j] - mx);
        sum += sc[j];
      }
      for (int j = 0; j <= pos; ++j) {
        const double pj = sc[j] / sum;
        const double* vrow = st.v[l].row(j) + off;
        for (int e = 0; e < hd; ++e) mix[off + e] += pj * vrow[e];
      }
    }

    vec_mat(mix, bp.wo, bp.bo, tmp.data(), d);
    for (int j = 0; j < d; ++j) x[j] += tmp[j];

    layer_norm(x, bp.ln2_g, bp.ln2_b, u);
    std::vector<double> pre(f);
    vec_mat(u, bp.w1, bp.b1, pre.data(), f);
    for (int j = 0; j < f; ++j) pre[j] = gelu(pre[j]);
    std::vector<double> m2(d);
    {
      for (int j = 0; j < d; ++j) m2[j] = bp.b2.at(0, j);
      for (int l2 = 0; l2 < f; ++l2) {
        const double xv = pre[l2];
        const double* wr = bp.w2.row(l2);
        for (int j = 0; j < d; ++j) m2[j] += xv * wr[j];
      }
    }
    for (int j = 0; j < d; ++j) x[j] += m2[j];
  }

  layer_norm(x, p.lnf_g, p.lnf_b, u);
  logits_out.assign(cfg.vocab_size, 0.0);
  vec_mat(u, p.w_out, p.b_out, logits_out.data(), cfg.vocab_size);
  double v = p.b_val.at(0, 0);
  for (int j = 0; j < d; ++j) v += u[j] * p.w_val.at(j, 0);
  value_out = v;
  ++st.len;
}

Model::SampleResult Model::sample(std::span<const int> prompt, double temperature,
                                  int max_new, Rng& rng, bool greedy,
                                  bool want_logits) const {
  if (prompt.empty()) throw ArgumentError("prompt must be non-empty");
  if (!greedy && temperature <= 0.0)
    throw ArgumentError("temperature must be positive");
  if (static_cast<int>(prompt.size()) >= cfg.max_seq)
    throw LengthError("prompt exceeds maximum context length");

  DecodeState st;
  decode_begin(st);
  std::vector<double> logits;
  double value = 0.0;
  for (int t : prompt) decode_step(st, t, logits, value);

  SampleResult res;
  const int budget =
      std::min(max_new, cfg.max_seq - static_cast<int>(prompt.size()));
  for (int step = 0; step < budget; ++step) {
    res.values.push_back(value);
    if (want_logits) res.logits.push_back(logits);
    int action;
    double logp;
    if (greedy) {
      action = 0;
      for (int i = 1; i < cfg.vocab_size; ++i)
        if (logits[i] > logits[action]) action = i;
      std::vector<double> z = logits;
      const double lse = log_sum_exp(z.data(), cfg.vocab_size);
      logp = logits[action] - lse;
    } else {
      std::vector<double> probs = logits;
      softmax_inplace(probs, temperature);
      const double u = rng.uniform();
      double acc = 0.0;
      action = cfg.vocab_size - 1;
      for (int i = 0; i < cfg.vocab_size; ++i) {
        acc += probs[i];
        if (u < acc) {
          action = i;
          break;
        }
      }
      logp = std::log(std::max(probs[action], 1e-300));
    }
    res.tokens.push_back(action);
    res.logprobs.push_back(logp);
    if (action == 1 /* <eos> */) return res;
    if (step + 1 < budget) decode_step(st, action, logits, value);
  }
  res.truncated = true;
  return res;
}

std::vector<double> Model::log_probs(std::span<const int> tokens, int from_pos,
                                     double temperature) const {
  if (from_pos < 1 || from_pos > static_cast<int>(tokens.size()))
    throw ArgumentError("from_pos out of range");
  Cache cache;
  forward(tokens, cache);
  std::vector<double> out;
  out.reserve(tokens.size() - from_pos);
  std::vector<double> z(cfg.vocab_size);
  for (size_t t = from_pos; t < tokens.size(); ++t) {
    const double* row = cache.logits.row(static_cast<int>(t) - 1);
    for (int i = 0; i < cfg.vocab_size; ++i) z[i] = row[i] / temperature;
    out.push_back(z[tokens[t]] - log_sum_exp(z.data(), cfg.vocab_size));
  }
  return out;
}

double grad_check(Model& m,
                  const std::function<double(const Model&, Params*)>& loss_fn,
                  int n_probe, double h, Rng& rng) {
  Params grads;
  grads.init_shapes(m.cfg);
  const double base = loss_fn(m, &grads);
  if (!std::isfinite(base)) throw NumericError("non-finite loss in grad_check");
  const size_t n = m.p.count();
  double max_rel = 0.0;
  for (int probe = 0; probe < n_probe; ++probe) {
    const size_t idx = rng.next() % n;
    m.p.flat_add(idx, h);
    const double lp = loss_fn(m, nullptr);
    m.p.flat_add(idx, -2.0 * h);
    const double lm = loss_fn(m, nullptr);
    m.p.flat_add(idx, h);
    if (!std::isfinite(lp) || !std::isfinite(lm))
      throw NumericError("non-finite loss in grad_check");
    const double fd = (lp - lm) / (2.0 * h);
    const double an = grads.flat_get(idx);
    const double denom = std::max({1e-8, std::abs(fd), std::abs(an)});
    const double rel = std::abs(fd - an) / denom;
    if (std::abs(fd) < 1e-10 && std::abs(an) < 1e-10) continue;
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace reft
