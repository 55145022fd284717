#pragma once

// Accuracy metrics and the three evaluation suites: in-distribution
// (T=512,R=4), shorter sequences (T=300,R=4), fewer regions (T=512,R=3).

#include <cstdint>
#include <string>
#include <vector>

#include "ccount/model.hpp"
#include "ccount/task.hpp"

namespace ccount {

enum class Suite : int { IN_DIST = 0, SHORT = 1, FEWER = 2 };

std::string to_string(Suite s);
Suite suite_from_string(const std::string& s);
GenConfig suite_gen_config(Suite s, bool use_bos);

struct EvalReport {
  std::string suite;
  std::vector<double> region_top1;
  std::vector<double> region_top5;
  int n_samples = 0;
  std::uint64_t seed = 0;
  std::string config_id;

  std::string to_json() const;
};

// Region r is correct iff the target is among the k highest-logit classes;
// ties break toward the lower class index.
std::vector<bool> top_k_accuracy(const Tensor& logits,
                                 const std::vector<int>& targets, int k);

EvalReport run_suite(const ModelConfig& cfg, const Params& params, Suite suite,
                     int n_samples, std::uint64_t seed, int workers = 1);

EvalReport run_gen_eval(const ModelConfig& cfg, const Params& params,
                        const GenConfig& gen, const std::string& suite_name,
                        int n_samples, std::uint64_t seed, int workers = 1);

// Per-region frequency of the modal target over n_samples draws; the
// empirical chance level reported next to trained accuracies.
std::vector<double> modal_class_baseline(const GenConfig& gen, int n_samples,
                                         std::uint64_t seed);

}  // namespace ccount
