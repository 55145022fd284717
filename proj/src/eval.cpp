#include "ccount/eval.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace ccount {

std::string to_string(Suite s) {
  switch (s) {
    case Suite::IN_DIST: return "in_dist";
    case Suite::SHORT: return "short";
    case Suite::FEWER: return "fewer";
  }
  throw std::logic_error("to_string: bad Suite");
}

Suite suite_from_string(const std::string& s) {
  if (s == "in_dist") return Suite::IN_DIST;
  if (s == "short") return Suite::SHORT;
  if (s == "fewer") return Suite::FEWER;
  throw std::invalid_argument("unknown suite '" + s + "'");
}

GenConfig suite_gen_config(Suite s, bool use_bos) {
  GenConfig gen;
  gen.use_bos = use_bos;
  switch (s) {
    case Suite::IN_DIST: gen.T = 512; gen.R = 4; break;
    case Suite::SHORT: gen.T = 300; gen.R = 4; break;
    case Suite::FEWER: gen.T = 512; gen.R = 3; break;
  }
  return gen;
}

std::vector<bool> top_k_accuracy(const Tensor& logits,
                                 const std::vector<int>& targets, int k) {
  if (k < 1) throw std::invalid_argument("top_k_accuracy: k must be >= 1");
  const int r = logits.rows(), c = logits.cols();
  if (static_cast<int>(targets.size()) != r) {
    throw std::invalid_argument("top_k_accuracy: target count mismatch");
  }
  std::vector<bool> out(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) {
    const int target = targets[static_cast<std::size_t>(i)];
    const double target_logit = logits(i, target);
    // Rank of the target under (logit desc, index asc) ordering.
    int better = 0;
    for (int j = 0; j < c; ++j) {
      if (logits(i, j) > target_logit ||
          (logits(i, j) == target_logit && j < target)) {
        ++better;
      }
    }
    out[static_cast<std::size_t>(i)] = better < k;
  }
  return out;
}

std::string EvalReport::to_json() const {
  std::ostringstream os;
  os << "{\n  \"suite\": \"" << suite << "\",\n  \"n_samples\": " << n_samples
     << ",\n  \"seed\": " << seed << ",\n  \"config_id\": \"" << config_id
     << "\",\n  \"region_top1\": [";
  for (std::size_t i = 0; i < region_top1.size(); ++i) {
    if (i) os << ", ";
    os << region_top1[i];
  }
  os << "],\n  \"region_top5\": [";
  for (std::size_t i = 0; i < region_top5.size(); ++i) {
    if (i) os << ", ";
    os << region_top5[i];
  }
  os << "]\n}\n";
  return os.str();
}

EvalReport run_gen_eval(const ModelConfig& cfg, const Params& params,
                        const GenConfig& gen, const std::string& suite_name,
                        int n_samples, std::uint64_t seed, int workers) {
  if (n_samples < 1) throw std::invalid_argument("run_gen_eval: n_samples must be >= 1");
  const int R = gen.R;
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(n_samples));
  {
    GenConfig g = gen;
    g.seed = seed;
    std::mt19937_64 rng(seed);
    for (int i = 0; i < n_samples; ++i) samples.push_back(generate(g, rng));
  }
  std::vector<int> hits1(static_cast<std::size_t>(R), 0);
  std::vector<int> hits5(static_cast<std::size_t>(R), 0);

  const int w = std::max(1, workers);
  std::vector<std::vector<int>> part1(static_cast<std::size_t>(w),
                                      std::vector<int>(static_cast<std::size_t>(R), 0));
  std::vector<std::vector<int>> part5 = part1;
  std::vector<std::thread> threads;
  const int chunk = (n_samples + w - 1) / w;
  for (int wi = 0; wi < w; ++wi) {
    const int lo = wi * chunk, hi = std::min(n_samples, lo + chunk);
    threads.emplace_back([&, wi, lo, hi]() {
      for (int i = lo; i < hi; ++i) {
        const Sample& s = samples[static_cast<std::size_t>(i)];
        const Tensor logits = forward(cfg, params, s);
        const auto t1 = top_k_accuracy(logits, s.targets, 1);
        const auto t5 = top_k_accuracy(logits, s.targets, 5);
        for (int r = 0; r < R; ++r) {
          part1[static_cast<std::size_t>(wi)][static_cast<std::size_t>(r)] += t1[static_cast<std::size_t>(r)];
          part5[static_cast<std::size_t>(wi)][static_cast<std::size_t>(r)] += t5[static_cast<std::size_t>(r)];
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  for (int wi = 0; wi < w; ++wi) {
    for (int r = 0; r < R; ++r) {
      hits1[static_cast<std::size_t>(r)] += part1[static_cast<std::size_t>(wi)][static_cast<std::size_t>(r)];
      hits5[static_cast<std::size_t>(r)] += part5[static_cast<std::size_t>(wi)][static_cast<std::size_t>(r)];
    }
  }

  EvalReport report;
  report.suite = suite_name;
  report.n_samples = n_samples;
  report.seed = seed;
  for (int r = 0; r < R; ++r) {
    report.region_top1.push_back(static_cast<double>(hits1[static_cast<std::size_t>(r)]) / n_samples);
    report.region_top5.push_back(static_cast<double>(hits5[static_cast<std::size_t>(r)]) / n_samples);
  }
  return report;
}

EvalReport run_suite(const ModelConfig& cfg, const Params& params, Suite suite,
                     int n_samples, std::uint64_t seed, int workers) {
  return run_gen_eval(cfg, params, suite_gen_config(suite, cfg.use_bos),
                      to_string(suite), n_samples, seed, workers);
}

std::vector<double> modal_class_baseline(const GenConfig& gen, int n_samples,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::map<int, int>> freq(static_cast<std::size_t>(gen.R));
  for (int i = 0; i < n_samples; ++i) {
    const Sample s = generate(gen, rng);
    for (int r = 0; r < gen.R; ++r) {
      ++freq[static_cast<std::size_t>(r)][s.targets[static_cast<std::size_t>(r)]];
    }
  }
  std::vector<double> out;
  for (int r = 0; r < gen.R; ++r) {
    int best = 0;
    for (const auto& [count, n] : freq[static_cast<std::size_t>(r)]) best = std::max(best, n);
    out.push_back(static_cast<double>(best) / n_samples);
  }
  return out;
}

}  // namespace ccount
