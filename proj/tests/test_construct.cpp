#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ccount/construct.hpp"
#include "ccount/eval.hpp"

using namespace ccount;

namespace {

std::vector<int> argmax_counts(const Tensor& logits) {
  std::vector<int> out;
  for (int r = 0; r < logits.rows(); ++r) {
    int best = 0;
    for (int c = 1; c < logits.cols(); ++c) {
      if (logits(r, c) > logits(r, best)) best = c;
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace

TEST_CASE("construction solves the reference example") {
  ConstructionSpec spec;
  const auto [cfg, params] = build_nope_solution(spec);
  Sample s = from_text("B [ 0 ] [ 1 0 1 ] 0 [ 1 ] 1 [ ] 0");
  const Tensor logits = forward(cfg, params, s);
  CHECK(argmax_counts(logits) == std::vector<int>{0, 2, 1, 0});
}

TEST_CASE("construction is exact over random draws at several (T,R)") {
  ConstructionSpec spec;
  const auto [cfg, params] = build_nope_solution(spec);
  std::mt19937_64 rng(1);
  for (const auto& [T, R] : std::vector<std::pair<int, int>>{
           {128, 2}, {300, 4}, {512, 3}, {1000, 8}}) {
    GenConfig gen;
    gen.T = T;
    gen.R = R;
    gen.use_bos = true;
    for (int i = 0; i < 25; ++i) {
      const Sample s = generate(gen, rng);
      REQUIRE(argmax_counts(forward(cfg, params, s)) == s.targets);
    }
  }
}

TEST_CASE("inter-region ONE latents collapse to the delimiter midpoint") {
  ConstructionSpec spec;
  const auto [cfg, params] = build_nope_solution(spec);
  // After the first region, every inter-region ONE has seen equally many
  // '[' and ']' so its latent is the image of (v_[ + v_])/2.
  const Sample s = from_text("B [ 1 ] 1 0 [ 1 1 ] 1 [ ] 1");
  AttentionCapture cap;
  forward(cfg, params, s, &cap);

  // Expected latent of an inter-region ONE: one-hot(ONE) + (f_[ + f_])/2 on
  // the two mixture axes (enc_wo writes delimiter values to dims 5 and 6).
  std::vector<int> inter_positions = {4, 10, 13};  // the ONEs outside regions
  for (int pos : inter_positions) {
    for (int dim = 0; dim < cfg.d_model; ++dim) {
      double want = 0.0;
      if (dim == code(Token::ONE)) want = 1.0;
      if (dim == 5 || dim == 6) want = 0.5;
      CHECK(std::abs(cap.enc_latents(pos, dim) - want) < 1e-9);
    }
  }
}

TEST_CASE("rbrack-bias variant: exact at R=4, broken at R=3") {
  ConstructionSpec spec;
  spec.variant = BiasVariant::RBRACK_BIAS;
  const auto [cfg, params] = build_rbrack_bias_variant(spec);
  CHECK_FALSE(cfg.use_bos);

  std::mt19937_64 rng(2);
  for (int T : {300, 512}) {
    GenConfig gen;
    gen.T = T;
    gen.R = 4;
    gen.use_bos = false;
    for (int i = 0; i < 25; ++i) {
      const Sample s = generate(gen, rng);
      REQUIRE(argmax_counts(forward(cfg, params, s)) == s.targets);
    }
  }

  GenConfig fewer;
  fewer.T = 512;
  fewer.R = 3;
  fewer.use_bos = false;
  int wrong = 0, total = 0;
  for (int i = 0; i < 50; ++i) {
    const Sample s = generate(fewer, rng);
    const auto got = argmax_counts(forward(cfg, params, s));
    for (int r = 0; r < 3; ++r) {
      wrong += got[static_cast<std::size_t>(r)] != s.targets[static_cast<std::size_t>(r)];
      ++total;
    }
  }
  CHECK(wrong >= total / 2);

  ConstructionSpec bos_spec;
  CHECK_THROWS(build_rbrack_bias_variant(bos_spec));
  CHECK_THROWS(build_nope_solution(spec));
}

TEST_CASE("spec validation") {
  ConstructionSpec bad;
  bad.count_cap = 600;
  CHECK_THROWS(build_nope_solution(bad));
  bad = ConstructionSpec{};
  bad.sharpness = 0.0;
  CHECK_THROWS(build_nope_solution(bad));
  bad = ConstructionSpec{};
  bad.d_model = 16;  // too narrow for R_max=8
  CHECK_THROWS(build_nope_solution(bad));
}

TEST_CASE("permutation invariance witness") {
  ModelConfig cfg;
  cfg.d_model = 12;
  cfg.d_head = 12;
  cfg.d_mlp = 16;
  cfg.n_classes = 16;
  cfg.pe = PosEnc::NOPE;
  cfg.causal_encoder = false;
  cfg.use_bos = false;
  const PermutationWitnessReport report =
      permutation_invariance_witness(cfg, 16, 5, 20, 3);
  CHECK(report.invariant);
  CHECK(report.max_output_deviation < 1e-10);
  CHECK(report.collision_targets_a == std::vector<int>{1});
  CHECK(report.collision_targets_b == std::vector<int>{0});
  // Same token multiset on both sides of the collision pair.
  auto sorted = [](std::vector<Token> t) {
    std::sort(t.begin(), t.end());
    return t;
  };
  CHECK(sorted(report.collision_a.tokens) == sorted(report.collision_b.tokens));

  // The causal configuration is position sensitive: the witness must refuse
  // it, and the raw deviation is large.
  ModelConfig causal = cfg;
  causal.causal_encoder = true;
  CHECK_THROWS(permutation_invariance_witness(causal, 16, 5, 20, 3));
  CHECK(permutation_deviation(causal, 16, 5, 20, 3) > 1e-6);
}

TEST_CASE("rank bound witness equals sqrt(T-d)") {
  CHECK(rank_bound_witness(8, 4) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(rank_bound_witness(8, 8) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(rank_bound_witness(64, 32) ==
        doctest::Approx(std::sqrt(32.0)).epsilon(1e-9));
  CHECK_THROWS(rank_bound_witness(8, 0));
  CHECK_THROWS(rank_bound_witness(8, 9));
}

TEST_CASE("relative symmetry witnesses") {
  const RelativeSymmetryReport alibi = noncausal_relative_symmetry_witness(PosEnc::ALIBI, 32);
  CHECK(alibi.holds);
  CHECK(alibi.max_deviation == 0.0);
  const RelativeSymmetryReport rope = noncausal_relative_symmetry_witness(PosEnc::ROPE, 64);
  CHECK(rope.holds);
  CHECK(rope.max_deviation < 1e-10);
  CHECK_THROWS(noncausal_relative_symmetry_witness(PosEnc::ABS, 16));
  CHECK_THROWS(noncausal_relative_symmetry_witness(PosEnc::NOPE, 16));
}

TEST_CASE("sharpness raises the decoder margin monotonically") {
  GenConfig gen;
  gen.T = 128;
  gen.R = 4;
  gen.use_bos = true;
  std::mt19937_64 rng(5);
  std::vector<Sample> samples;
  for (int i = 0; i < 100; ++i) samples.push_back(generate(gen, rng));

  // Margin: lowest decoder logit toward region-r ONE tokens minus highest
  // decoder logit toward other non-bias tokens, per query.
  auto min_margin = [&](double beta) {
    ConstructionSpec spec;
    spec.sharpness = beta;
    const auto [cfg, params] = build_nope_solution(spec);
    double worst = std::numeric_limits<double>::infinity();
    for (const Sample& s : samples) {
      AttentionCapture cap;
      forward(cfg, params, s, &cap);
      const auto cp = contextual_position(s.tokens);
      for (int r = 0; r < 4; ++r) {
        double lowest_in = std::numeric_limits<double>::infinity();
        double highest_out = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < s.tokens.size(); ++i) {
          const bool in_region = cp[i] == r && s.tokens[i] == Token::ONE;
          const bool bias = s.tokens[i] == Token::BOS;
          const double logit = cap.dec_pre_softmax(r, static_cast<int>(i));
          if (in_region) lowest_in = std::min(lowest_in, logit);
          if (!in_region && !bias) highest_out = std::max(highest_out, logit);
        }
        if (std::isfinite(lowest_in)) {
          worst = std::min(worst, lowest_in - highest_out);
        }
      }
    }
    return worst;
  };

  const double m5 = min_margin(5.0), m10 = min_margin(10.0), m20 = min_margin(20.0);
  CHECK(m5 > 0.0);
  CHECK(m10 >= m5);
  CHECK(m20 >= m10);
}
