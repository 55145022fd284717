#pragma once

// Circuit-analysis tools over a checkpoint: PCA of ONE-token latents,
// cross-attention profiles, effective value curves with the closed-form
// count predictor, positional-encoding decompositions, and the bias-token
// report.

#include <string>
#include <vector>

#include "ccount/model.hpp"
#include "ccount/task.hpp"

namespace ccount {

// Labels for ONE-token latents outside any region.
constexpr int kPreRegion = -2;
constexpr int kInterRegion = -1;

struct PCAProjection {
  std::vector<double> mean;                     // [d]
  std::vector<std::vector<double>> components;  // [q][d], orthonormal
  std::vector<double> variance_share;           // [q], non-increasing
  std::vector<std::vector<double>> coords;      // [n][q]
};

// Top-q principal components of the centered covariance. Throws if fewer
// than 2 points or q exceeds the dimension.
PCAProjection pca(const std::vector<std::vector<double>>& points, int q);

struct LabeledPoints {
  std::vector<std::vector<double>> points;
  std::vector<int> labels;  // region index, kPreRegion, or kInterRegion
};

// Post-encoder-attention latents (pre-MLP) of every ONE token across the
// samples, labeled by region index with pre/inter distinction.
LabeledPoints one_token_latents(const ModelConfig& cfg, const Params& params,
                                const std::vector<Sample>& samples);

struct CrossAttentionProfile {
  int region = 0;
  std::vector<double> weights;  // post-softmax, one per encoder position
  std::vector<Token> tokens;
  std::vector<int> cp;  // contextual position per token
};

CrossAttentionProfile cross_attention_profile(const ModelConfig& cfg,
                                              const Params& params,
                                              const Sample& sample, int r);

struct EffectiveValueCurves {
  int prompt = 0;
  int bias_token = code(Token::BOS);
  int n_bias = 1;  // bias carriers per sequence (4 for the ']' variant)
  std::vector<std::vector<double>> v_eff;  // [kVocabSize][C]
  std::vector<double> attn_logit;          // [kVocabSize]
  std::vector<bool> present;               // type seen in the probe samples
  // Residual-path contribution of the query itself: prompt_emb[r] through
  // the unembedding. Zero for the exact construction.
  std::vector<double> prompt_logit;        // [C]
};

// v_eff(type) = mean encoder output of that type pushed through
// W_V, W_O and the unembedding; attn_logit(type) from decoder query r.
// Throws when the decoder has an MLP (output no longer linear in values).
EffectiveValueCurves effective_values(const ModelConfig& cfg, const Params& params,
                                      const std::vector<Sample>& samples, int r);

// f(n) = softmax(n a(1) v_eff(1) + n_bias a(B) v_eff(B)) with
// a(1) = e^{l1} / (n e^{l1} + n_bias e^{lB}) and a(B) analogous.
std::vector<double> closed_form_predictor(const EffectiveValueCurves& curves, int n);

double total_variation(const std::vector<double>& p, const std::vector<double>& q);

struct AbsPEDecomposition {
  int T = 0;
  // logit(i,j) = contextual[tok_i][tok_j] + positional[i][j]
  //            + tok_pos[tok_i][j] + pos_tok[i][tok_j], pre-softmax scale.
  std::vector<double> contextual;  // [V*V] row-major
  std::vector<double> positional;  // [T*T]
  std::vector<double> tok_pos;     // [V*T]
  std::vector<double> pos_tok;     // [T*V]
};

AbsPEDecomposition abspe_decompose(const ModelConfig& cfg, const Params& params,
                                   int T);

// Full encoder pre-softmax logit for tokens at given positions; oracle for
// the reconstruction identity.
double abspe_logit(const ModelConfig& cfg, const Params& params, Token q_tok,
                   int q_pos, Token k_tok, int k_pos);

struct RopeSubspaceReport {
  std::vector<double> theta;     // rotation frequency per plane
  std::vector<double> mean_abs;  // mean |per-plane contribution| over pairs
  double max_reconstruction_error = 0.0;  // |sum of planes - total logit|
};

RopeSubspaceReport rope_subspace_decompose(const ModelConfig& cfg,
                                           const Params& params,
                                           const std::vector<Sample>& samples);

struct BiasTokenReport {
  // Token types ranked by mean decoder attention mass received outside the
  // queried region, descending.
  std::vector<std::pair<int, double>> ranked_mass;
  std::vector<int> candidates;        // mass above threshold
  std::vector<double> v_eff_norm;     // [kVocabSize]
  double threshold = 1e-3;
};

BiasTokenReport bias_token_report(const ModelConfig& cfg, const Params& params,
                                  const std::vector<Sample>& samples);

struct LinearProbeReport {
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  int n_classes = 0;
};

// Pairwise one-vs-one least-squares classifiers with majority voting.
LinearProbeReport linear_probe(const LabeledPoints& train,
                               const LabeledPoints& test);

// Figure emission: each writes fig<id>_<config>_<seed>.json and .svg into
// out_dir and returns the list of paths written.
std::vector<std::string> emit_latent_pca_figure(
    const ModelConfig& cfg, const Params& params, const std::vector<Sample>& samples,
    const std::string& out_dir, const std::string& config_name, std::uint64_t seed);
std::vector<std::string> emit_attention_figures(
    const ModelConfig& cfg, const Params& params, const Sample& sample,
    const std::string& out_dir, const std::string& config_name, std::uint64_t seed);
std::vector<std::string> emit_value_curve_figures(
    const ModelConfig& cfg, const Params& params, const std::vector<Sample>& samples,
    const std::string& out_dir, const std::string& config_name, std::uint64_t seed);
std::vector<std::string> emit_abspe_figures(
    const ModelConfig& cfg, const Params& params, int T, const std::string& out_dir,
    const std::string& config_name, std::uint64_t seed);
std::vector<std::string> emit_rope_figure(
    const ModelConfig& cfg, const Params& params, const std::vector<Sample>& samples,
    const std::string& out_dir, const std::string& config_name, std::uint64_t seed);
std::vector<std::string> emit_bias_figure(
    const ModelConfig& cfg, const Params& params, const std::vector<Sample>& samples,
    const std::string& out_dir, const std::string& config_name, std::uint64_t seed);

}  // namespace ccount
