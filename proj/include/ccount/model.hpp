#pragma once

// Single-block encoder / single-cross-attention decoder transformer with
// configurable causality, positional encoding, BOS usage, and optional MLPs.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ccount/task.hpp"
#include "ccount/tensor.hpp"

namespace ccount {

enum class PosEnc : int { NOPE = 0, ABS = 1, ROPE = 2, ALIBI = 3 };

std::string to_string(PosEnc pe);
PosEnc pos_enc_from_string(const std::string& s);

struct ModelConfig {
  int d_model = 64;
  int d_head = 64;
  int d_mlp = 256;
  PosEnc pe = PosEnc::NOPE;
  bool causal_encoder = true;
  bool use_bos = true;
  bool encoder_mlp = true;
  bool decoder_mlp = false;
  int n_classes = 512;
  int max_T = 1024;
  double alibi_slope = 1.0;
  double rope_base = 10000.0;
  int R_max = 8;

  void validate() const;
};

struct Params {
  Tensor tok_emb;     // [5, d_model]
  Tensor prompt_emb;  // [R_max, d_model]
  Tensor pos_emb;     // [max_T+1, d_model], ABS only
  Tensor enc_wq, enc_wk, enc_wv;  // [d_model, d_head]
  Tensor enc_wo;                  // [d_head, d_model]
  Tensor enc_w1, enc_b1, enc_w2, enc_b2;
  Tensor dec_wq, dec_wk, dec_wv;
  Tensor dec_wo;
  Tensor dec_w1, dec_b1, dec_w2, dec_b2;
  Tensor unembed;  // [d_model, n_classes]

  // Name/tensor pairs in a fixed order (checkpoints, optimizer state).
  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;
  void set_requires_grad(bool v);
  void zero_grad();
};

struct AttentionCapture {
  Tensor enc_pre_softmax;    // [T, T]
  Tensor enc_post_softmax;   // [T, T]
  Tensor enc_latents;        // [T, d_model], post-attention (pre-MLP)
  Tensor enc_output;         // [T, d_model], encoder block output
  Tensor dec_pre_softmax;    // [R, T]
  Tensor dec_post_softmax;   // [R, T]
  Tensor dec_keys;           // [T, d_head]
  Tensor dec_values;         // [T, d_head]
  Tensor logits;             // [R, n_classes]
};

Params init(const ModelConfig& cfg, std::uint64_t seed);

// Returns per-region class logits [R, n_classes]. Differentiable when called
// under an active Tape with grad-enabled params.
Tensor forward(const ModelConfig& cfg, const Params& params, const Sample& sample,
               AttentionCapture* capture = nullptr);

// bias[i,j] = -slope*(i-j) for j<=i, -inf above the diagonal when causal;
// -slope*|i-j| when non-causal.
Tensor alibi_bias(int T, double slope, bool causal);

// 0 on and below the diagonal, -inf above.
Tensor causal_mask(int T);

// Layer-1 pre-softmax logit between pure token-type embeddings; only
// meaningful for NoPE, where layer-1 logits carry no position information.
// [V, V] with V=5 when BOS is in use, 4 otherwise.
Tensor token_type_logit_matrix(const ModelConfig& cfg, const Params& params);

void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                     const Params& params);
std::pair<ModelConfig, Params> load_checkpoint(const std::string& path);

}  // namespace ccount
