#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "reft/kernels.hpp"
#include "reft/rng.hpp"

namespace reft {

struct LengthError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ModelConfig {
  int vocab_size = 0;
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int max_seq = 256;
  uint64_t init_seed = 0;
};

struct BlockParams {
  Mat ln1_g, ln1_b;
  Mat wq, bq, wk, bk, wv, bv, wo, bo;
  Mat ln2_g, ln2_b;
  Mat w1, b1, w2, b2;
};

// All trainable parameters. Gradients use the same structure. The flat
// parameter order (the checkpoint order) is the order returned by all().
struct Params {
  Mat tok_emb, pos_emb;
  std::vector<BlockParams> blocks;
  Mat lnf_g, lnf_b;
  Mat w_out, b_out;  // vocabulary projection
  Mat w_val, b_val;  // scalar head: value estimate, or ORM classifier logit

  void init_shapes(const ModelConfig& cfg);
  std::vector<Mat*> all();
  std::vector<const Mat*> all() const;
  size_t count() const;
  void zero();
  void axpy(double s, const Params& g);  // this += s * g
  double flat_get(size_t idx) const;
  void flat_add(size_t idx, double dv);
};

struct LnCache {
  Mat xhat;
  std::vector<double> rstd;
};

struct BlockCache {
  Mat x_in;
  LnCache ln1;
  Mat ln1_out;
  Mat q, k, v;
  std::vector<Mat> probs;  // per head, row t holds the distribution over j <= t
  Mat att_mix;             // heads concatenated, before the output projection
  Mat resid1;
  LnCache ln2;
  Mat ln2_out;
  Mat mlp_pre, mlp_act;
};

struct Cache {
  int T = 0;
  std::vector<BlockCache> blocks;
  Mat x_final;
  LnCache lnf;
  Mat lnf_out;
  Mat logits;                  // T x |V|
  std::vector<double> values;  // T
};

// Incremental decoding state: cached per-layer key/value rows.
struct DecodeState {
  std::vector<Mat> k, v;
  int len = 0;
};

// Decoder-only transformer (pre-LN) with a linear scalar head on the last
// hidden states. Copying the object is a parameter snapshot.
class Model {
 public:
  ModelConfig cfg;
  Params p;

  Model() = default;
  explicit Model(const ModelConfig& c);

  // One differentiable pass producing both heads.
  void forward(std::span<const int> tokens, Cache& cache) const;

  // Reverse pass. dlogits is T x |V|; dvalues may be empty (no value-head
  // gradient). Gradients are accumulated into `grads`.
  void backward(std::span<const int> tokens, const Cache& cache,
                const Mat& dlogits, const std::vector<double>& dvalues,
                Params& grads) const;

  struct SampleResult {
    std::vector<int> tokens;        // actions a_1..a_L; ends with <eos> unless truncated
    std::vector<double> logprobs;   // log-prob of each action under the sampling model
    std::vector<double> values;     // V(s_t) for each action position
    std::vector<std::vector<double>> logits;  // per-step raw logits (want_logits only)
    bool truncated = false;
  };

  // Autoregressive multinomial sampling from softmax(logits / temperature),
  // stopping at <eos> or after max_new actions.
  SampleResult sample(std::span<const int> prompt, double temperature, int max_new,
                      Rng& rng, bool greedy = false, bool want_logits = false) const;

  // log pi(tokens[t] | tokens[0..t-1]) for t in [from_pos, T).
  std::vector<double> log_probs(std::span<const int> tokens, int from_pos,
                                double temperature = 1.0) const;

  // Incremental decoding primitives (no gradients, no activation cache).
  void decode_begin(DecodeState& st) const;
  void decode_step(DecodeState& st, int token, std::vector<double>& logits_out,
                   double& value_out) const;
};

// Central finite differences vs reverse-mode gradients on a random parameter
// subset. loss_fn must fill `grads` when the pointer is non-null. Returns the
// max relative error over the probed coordinates.
double grad_check(Model& m,
                  const std::function<double(const Model&, Params*)>& loss_fn,
                  int n_probe, double h, Rng& rng);

// In-place softmax utilities shared by the trainers.
void softmax_inplace(std::vector<double>& x, double temperature = 1.0);
double log_sum_exp(const double* x, int n);

}  // namespace reft
