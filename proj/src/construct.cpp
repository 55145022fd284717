#include "ccount/construct.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <stdexcept>

namespace ccount {

namespace {

// Latent axes used by the construction. Layer 1 writes the delimiter
// mixture onto (kFOpen, kFClose); the MLP turns the mixture difference
// 1/(2r+1) into a one-hot region channel at kBump0+r; the decoder routes
// ONE / bias values through (kVOne, kVBias) into the staircase unembedding.
constexpr int kFOpen = 5;
constexpr int kFClose = 6;
constexpr int kVOne = 7;
constexpr int kVBias = 8;
constexpr int kBump0 = 9;

// Head axes.
constexpr int kEncKeyAxis = 0;
constexpr int kEncValOpen = 1;
constexpr int kEncValClose = 2;

constexpr double kKappa = 1e5;    // MLP ramp steepness
constexpr double kWindow = 100.0; // ramp half-width (pre-activation units)
constexpr double kGate = 1e7;     // suppresses the MLP for non-ONE tokens

int prompt_dim(const ConstructionSpec& spec, int r) {
  return kBump0 + spec.R_max + r;
}

std::pair<ModelConfig, Params> build_variant(const ConstructionSpec& spec,
                                             BiasVariant variant) {
  spec.validate();
  ModelConfig cfg;
  cfg.d_model = spec.d_model;
  cfg.d_head = spec.d_model;
  cfg.d_mlp = 2 * spec.R_max;
  cfg.pe = PosEnc::NOPE;
  cfg.causal_encoder = true;
  cfg.use_bos = (variant == BiasVariant::BOS_BIAS);
  cfg.encoder_mlp = true;
  cfg.decoder_mlp = false;
  cfg.n_classes = spec.n_classes;
  cfg.R_max = spec.R_max;
  cfg.validate();

  Params p = init(cfg, 0);
  for (auto& [name, t] : p.named()) {
    std::fill(t->vec().begin(), t->vec().end(), 0.0);
  }

  const double rsd = std::sqrt(static_cast<double>(cfg.d_head));
  const double enc_logit = spec.sharpness + 40.0;
  const double dec_logit = spec.sharpness + 25.0;

  // Token and prompt embeddings: one-hot.
  for (int t = 0; t < kVocabSize; ++t) p.tok_emb(t, t) = 1.0;
  for (int r = 0; r < spec.R_max; ++r) p.prompt_emb(r, prompt_dim(spec, r)) = 1.0;

  // Encoder: every token emits the same query; only delimiter keys respond,
  // so each token averages the value vectors of all preceding delimiters.
  for (int t = 0; t < kVocabSize; ++t) p.enc_wq(t, kEncKeyAxis) = 1.0;
  p.enc_wk(code(Token::LBRACK), kEncKeyAxis) = enc_logit * rsd;
  p.enc_wk(code(Token::RBRACK), kEncKeyAxis) = enc_logit * rsd;
  p.enc_wv(code(Token::LBRACK), kEncValOpen) = 1.0;
  p.enc_wv(code(Token::RBRACK), kEncValClose) = 1.0;
  p.enc_wo(kEncValOpen, kFOpen) = 1.0;
  p.enc_wo(kEncValClose, kFClose) = 1.0;

  // Encoder MLP: the mixture difference delta = y[kFOpen]-y[kFClose] equals
  // 1/(2r+1) inside region r and 0 in inter/pre regions. Saturated GELU
  // ramp pairs turn the delta levels into indicator channels; the gate kills
  // everything that is not a ONE token.
  //
  // ind_r = 1{delta > t_r} with thresholds t_r between consecutive levels;
  // bump_r = ind_r - ind_{r-1} is one-hot in the region index.
  std::vector<double> level(static_cast<std::size_t>(spec.R_max + 1));
  for (int r = 0; r <= spec.R_max; ++r) {
    level[static_cast<std::size_t>(r)] = 1.0 / (2.0 * r + 1.0);
  }
  for (int r = 0; r < spec.R_max; ++r) {
    const double thresh = 0.5 * (level[static_cast<std::size_t>(r)] +
                                 level[static_cast<std::size_t>(r + 1)]);
    const int ua = 2 * r, ub = 2 * r + 1;
    for (int u : {ua, ub}) {
      p.enc_w1(kFOpen, u) = kKappa;
      p.enc_w1(kFClose, u) = -kKappa;
      p.enc_w1(code(Token::ONE), u) = kGate;
    }
    p.enc_b1(ua) = -kKappa * thresh + kWindow - kGate;
    p.enc_b1(ub) = -kKappa * thresh - kWindow - kGate;
    const double s = 1.0 / (2.0 * kWindow);
    p.enc_w2(ua, kBump0 + r) += s;
    p.enc_w2(ub, kBump0 + r) -= s;
    if (r + 1 < spec.R_max) {
      p.enc_w2(ua, kBump0 + r + 1) -= s;
      p.enc_w2(ub, kBump0 + r + 1) += s;
    }
  }

  // Decoder: query r matches the region-r bump channel plus the bias token.
  const int bias_key_axis = spec.R_max;
  const int val_one_axis = spec.R_max + 1;
  const int val_bias_axis = spec.R_max + 2;
  const int bias_token = (variant == BiasVariant::BOS_BIAS) ? code(Token::BOS)
                                                            : code(Token::RBRACK);
  // With ']' as bias there are R_train=4 carriers instead of one; shift the
  // logit so their combined weight matches a single BOS carrier.
  const double bias_logit =
      (variant == BiasVariant::BOS_BIAS) ? dec_logit : dec_logit - std::log(4.0);

  for (int r = 0; r < spec.R_max; ++r) {
    p.dec_wq(prompt_dim(spec, r), r) = dec_logit * rsd;
    p.dec_wq(prompt_dim(spec, r), bias_key_axis) = bias_logit * rsd;
    p.dec_wk(kBump0 + r, r) = 1.0;
  }
  p.dec_wk(bias_token, bias_key_axis) = 1.0;
  p.dec_wv(code(Token::ONE), val_one_axis) = 1.0;
  p.dec_wv(bias_token, val_bias_axis) = 1.0;
  p.dec_wo(val_one_axis, kVOne) = 1.0;
  p.dec_wo(val_bias_axis, kVBias) = 1.0;

  // Count readout: lines tangent to n^2. With attention weights a(1), a(B),
  // class logits are a(1)*n*... maximized exactly at c = round(ratio), and
  // the ratio equals n because the ONE and bias logits cancel.
  for (int c = 0; c < spec.n_classes; ++c) {
    if (c <= spec.count_cap) {
      p.unembed(kVOne, c) = 2.0 * c;
      p.unembed(kVBias, c) = -static_cast<double>(c) * c;
    } else {
      p.unembed(kVBias, c) = -1e6;
    }
  }

  return {cfg, std::move(p)};
}

}  // namespace

void ConstructionSpec::validate() const {
  if (sharpness <= 0.0) throw std::invalid_argument("ConstructionSpec: sharpness must be > 0");
  if (count_cap >= n_classes) {
    throw std::invalid_argument("ConstructionSpec: count_cap must be < n_classes");
  }
  if (R_max < 1) throw std::invalid_argument("ConstructionSpec: R_max must be >= 1");
  if (d_model < 9 + 2 * R_max) {
    throw std::invalid_argument("ConstructionSpec: d_model must be >= 9 + 2*R_max");
  }
}

std::pair<ModelConfig, Params> build_nope_solution(const ConstructionSpec& spec) {
  if (spec.variant != BiasVariant::BOS_BIAS) {
    throw std::invalid_argument("build_nope_solution: spec.variant must be BOS_BIAS");
  }
  return build_variant(spec, BiasVariant::BOS_BIAS);
}

std::pair<ModelConfig, Params> build_rbrack_bias_variant(const ConstructionSpec& spec) {
  if (spec.variant != BiasVariant::RBRACK_BIAS) {
    throw std::invalid_argument("build_rbrack_bias_variant: spec.variant must be RBRACK_BIAS");
  }
  return build_variant(spec, BiasVariant::RBRACK_BIAS);
}

namespace {

Sample tokens_to_input(std::vector<Token> tokens, int R) {
  Sample s;
  s.tokens = std::move(tokens);
  for (int r = 0; r < R; ++r) s.prompt.push_back(r);
  return s;
}

}  // namespace

double permutation_deviation(const ModelConfig& cfg, int T, int n_param_draws,
                             int n_permutations, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int draw = 0; draw < n_param_draws; ++draw) {
    const Params params = init(cfg, seed + static_cast<std::uint64_t>(draw) + 1);
    GenConfig gen;
    gen.T = T;
    gen.R = 2;
    gen.use_bos = cfg.use_bos;
    const Sample base = generate(gen, rng);
    const Tensor ref = forward(cfg, params, base);
    std::vector<Token> tokens = base.tokens;
    for (int p = 0; p < n_permutations; ++p) {
      std::vector<Token> shuffled = tokens;
      for (std::size_t i = shuffled.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> d(0, i - 1);
        std::swap(shuffled[i - 1], shuffled[d(rng)]);
      }
      const Tensor out = forward(cfg, params, tokens_to_input(shuffled, 2));
      for (std::size_t i = 0; i < out.size(); ++i) {
        worst = std::max(worst, std::abs(out.data()[i] - ref.data()[i]));
      }
    }
  }
  return worst;
}

PermutationWitnessReport permutation_invariance_witness(const ModelConfig& cfg,
                                                        int T, int n_param_draws,
                                                        int n_permutations,
                                                        std::uint64_t seed) {
  if (cfg.causal_encoder || cfg.pe != PosEnc::NOPE || cfg.use_bos) {
    throw std::invalid_argument(
        "permutation_invariance_witness: requires a non-causal NoPE "
        "configuration without BOS");
  }
  PermutationWitnessReport report;
  report.n_param_draws = n_param_draws;
  report.n_permutations = n_permutations;
  report.max_output_deviation =
      permutation_deviation(cfg, T, n_param_draws, n_permutations, seed);
  report.invariant = report.max_output_deviation < 1e-10;

  // A transposition with equal multisets but different targets: no
  // permutation-invariant model can output both.
  report.collision_a = from_text("[ 1 ] 0");
  report.collision_b = from_text("[ 0 ] 1");
  report.collision_targets_a = report.collision_a.targets;
  report.collision_targets_b = report.collision_b.targets;
  return report;
}

double rank_bound_witness(int T, int d) {
  if (d < 1 || d > T) {
    throw std::invalid_argument("rank_bound_witness: need 1 <= d <= T");
  }
  // The causal-emulation requirement k_t . q_T patterns form the identity.
  Eigen::MatrixXd required = Eigen::MatrixXd::Identity(T, T);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(required);
  const auto& sv = svd.singularValues();
  double residual_sq = 0.0;
  for (int i = d; i < T; ++i) residual_sq += sv(i) * sv(i);
  return std::sqrt(residual_sq);
}

RelativeSymmetryReport noncausal_relative_symmetry_witness(PosEnc pe, int T) {
  RelativeSymmetryReport report;
  report.pe = pe;
  if (pe == PosEnc::ALIBI) {
    const Tensor bias = alibi_bias(T, 0.7, /*causal=*/false);
    double worst = 0.0;
    for (int i = 0; i < T; ++i) {
      for (int j = 0; j < T; ++j) {
        worst = std::max(worst, std::abs(bias(i, j) - bias(j, i)));
      }
    }
    report.max_deviation = worst;
  } else if (pe == PosEnc::ROPE) {
    const int d = 8;
    const double base = 100.0;
    std::mt19937_64 rng(7);
    Tensor q = Tensor::randn({1, d}, rng, 1.0);
    Tensor k = Tensor::randn({1, d}, rng, 1.0);
    auto logit = [&](int i, int j) {
      const Tensor qi = rope_rotate(q, {i}, base);
      const Tensor kj = rope_rotate(k, {j}, base);
      double dot = 0.0;
      for (int c = 0; c < d; ++c) dot += qi(0, c) * kj(0, c);
      return dot;
    };
    double worst = 0.0;
    for (int offset = -(T - 1); offset < T; ++offset) {
      const int i0 = std::max(0, -offset);
      const double ref = logit(i0, i0 + offset);
      for (int i = i0; i + offset < T && i < T; ++i) {
        worst = std::max(worst, std::abs(logit(i, i + offset) - ref));
      }
    }
    report.max_deviation = worst;
  } else {
    throw std::invalid_argument(
        "noncausal_relative_symmetry_witness: only RoPE and Alibi have "
        "relative attention profiles");
  }
  report.holds = report.max_deviation < 1e-10;
  return report;
}

}  // namespace ccount
