#pragma once

// Hand-built exact-weight solutions of the counting task and numerical
// witnesses for the impossibility statements (permutation invariance of
// non-causal NoPE, rank lower bound for causal emulation, relative-offset
// symmetry of RoPE/Alibi).

#include <cstdint>
#include <string>
#include <vector>

#include "ccount/model.hpp"
#include "ccount/task.hpp"

namespace ccount {

enum class BiasVariant : int { BOS_BIAS = 0, RBRACK_BIAS = 1 };

struct ConstructionSpec {
  int d_model = 32;
  double sharpness = 20.0;  // attention logit scale beta
  BiasVariant variant = BiasVariant::BOS_BIAS;
  int count_cap = 400;  // N_max; counts above it are not representable
  int n_classes = 512;
  int R_max = 8;

  void validate() const;
};

// Causal NoPE solution whose argmax equals the oracle count for every
// region, any T, any R <= R_max, counts <= count_cap. The BOS token acts as
// the decoder's bias term. Exact by construction, not statistically.
std::pair<ModelConfig, Params> build_nope_solution(const ConstructionSpec& spec);

// No-BOS variant using the ']' tokens as the bias term. Exact for R=4 at
// any sequence length; miscounts by construction when R != 4.
std::pair<ModelConfig, Params> build_rbrack_bias_variant(const ConstructionSpec& spec);

struct PermutationWitnessReport {
  double max_output_deviation = 0.0;  // over random draws x permutations
  int n_param_draws = 0;
  int n_permutations = 0;
  // Two inputs with equal token multisets but different targets.
  Sample collision_a, collision_b;
  std::vector<int> collision_targets_a, collision_targets_b;
  bool invariant = false;  // deviation below tolerance
};

// Verifies that a non-causal NoPE model's output is permutation invariant
// and exhibits a pair of samples no such model can separate. Throws unless
// cfg is non-causal NoPE.
PermutationWitnessReport permutation_invariance_witness(
    const ModelConfig& cfg, int T = 16, int n_param_draws = 20,
    int n_permutations = 100, std::uint64_t seed = 0);

// Max output deviation under random input permutations for a given config;
// used to show the causal configuration is NOT permutation invariant.
double permutation_deviation(const ModelConfig& cfg, int T, int n_param_draws,
                             int n_permutations, std::uint64_t seed);

// Frobenius residual of the best rank-d approximation of the T x T identity
// attention-requirement pattern (sqrt(T-d) in closed form; computed via SVD).
double rank_bound_witness(int T, int d);

struct RelativeSymmetryReport {
  PosEnc pe;
  double max_deviation = 0.0;
  bool holds = false;
};

// ALIBI: non-causal bias symmetry b[i,j]==b[j,i], exhaustive.
// ROPE: logits depend only on the signed offset j-i, exhaustive over T.
RelativeSymmetryReport noncausal_relative_symmetry_witness(PosEnc pe, int T);

}  // namespace ccount
