#pragma once

// Seeded training on freshly generated samples with Adam, metrics logging
// and checkpointing. One (config, seed) pair fully determines the result.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ccount/model.hpp"
#include "ccount/task.hpp"

namespace ccount {

struct TrainConfig {
  GenConfig gen;  // T=512, R=4 default
  int steps = 20000;
  int batch_size = 64;
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  int eval_every = 500;
  int eval_batch = 64;
  std::string checkpoint_dir;
  int workers = 1;  // batch parallelism; reduction order stays fixed
};

struct TrainRecord {
  int step = 0;
  double loss = 0.0;
  std::vector<double> region_top1;  // held-out batch accuracy per region
  double wall_seconds = 0.0;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::int64_t t = 0;
};

AdamState make_adam_state(Params& params);

// Standard Adam with bias correction, applied over params.named() order.
void adam_step(Params& params, AdamState& state, double lr, double beta1,
               double beta2, double eps);

struct TrainResult {
  std::uint64_t seed = 0;
  Params params;
  std::vector<TrainRecord> records;
  bool diverged = false;
  int diverged_at = -1;
};

// Trains one seed. Writes metrics.csv and checkpoints under
// cfg.checkpoint_dir when it is non-empty. `on_record` may be null.
TrainResult train_one_seed(const ModelConfig& model_cfg, const TrainConfig& cfg,
                           std::uint64_t seed,
                           const std::function<void(const TrainRecord&)>& on_record = nullptr);

std::vector<TrainResult> train(const ModelConfig& model_cfg, const TrainConfig& cfg);

// Mean loss and summed parameter gradients over a batch; returns mean loss.
// Exposed for gradient-accumulation checks.
double batch_loss_and_grad(const ModelConfig& model_cfg, Params& params,
                           const std::vector<Sample>& batch, int workers);

}  // namespace ccount
