#include "ccount/trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "ccount/eval.hpp"

namespace ccount {

namespace {

Params clone_params(const Params& src) {
  Params dst = src;  // shares storage
  for (auto& [name, t] : dst.named()) {
    *t = Tensor::from_data(t->shape(), t->vec(), t->requires_grad());
  }
  return dst;
}

double sample_loss_and_grad(const ModelConfig& cfg, Params& params,
                            const Sample& sample) {
  Tape tape;
  Tensor logits = forward(cfg, params, sample);
  Tensor loss = cross_entropy(logits, sample.targets);
  tape.backward(loss);
  return loss(0);
}

}  // namespace

AdamState make_adam_state(Params& params) {
  AdamState state;
  for (auto& [name, t] : params.named()) {
    state.m.emplace_back(t->size(), 0.0);
    state.v.emplace_back(t->size(), 0.0);
  }
  return state;
}

void adam_step(Params& params, AdamState& state, double lr, double beta1,
               double beta2, double eps) {
  auto named = params.named();
  if (named.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: state does not match params");
  }
  ++state.t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (std::size_t p = 0; p < named.size(); ++p) {
    Tensor* t = named[p].second;
    t->ensure_grad();
    const double* g = t->grad();
    double* m = state.m[p].data();
    double* v = state.v[p].data();
    double* w = t->data();
    for (std::size_t i = 0; i < t->size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      w[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
  }
}

double batch_loss_and_grad(const ModelConfig& model_cfg, Params& params,
                           const std::vector<Sample>& batch, int workers) {
  const int n = static_cast<int>(batch.size());
  if (n == 0) throw std::invalid_argument("batch_loss_and_grad: empty batch");
  const int w = std::min(std::max(1, workers), n);

  // One gradient buffer per sample so the reduction below runs in sample
  // order and is bit-identical for every worker count.
  std::vector<Params> locals;
  std::vector<double> losses(static_cast<std::size_t>(n), 0.0);
  locals.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) locals.push_back(clone_params(params));

  const int chunk = (n + w - 1) / w;
  std::vector<std::thread> threads;
  for (int wi = 0; wi < w; ++wi) {
    const int lo = wi * chunk, hi = std::min(n, lo + chunk);
    threads.emplace_back([&, lo, hi]() {
      for (int i = lo; i < hi; ++i) {
        losses[static_cast<std::size_t>(i)] =
            sample_loss_and_grad(model_cfg, locals[static_cast<std::size_t>(i)],
                                 batch[static_cast<std::size_t>(i)]);
      }
    });
  }
  for (auto& t : threads) t.join();

  // Reduce per-sample gradients in sample order; mean over the batch.
  auto main_named = params.named();
  for (auto& [name, t] : main_named) t->ensure_grad();
  double total_loss = 0.0;
  for (int si = 0; si < n; ++si) {
    total_loss += losses[static_cast<std::size_t>(si)];
    auto local_named = locals[static_cast<std::size_t>(si)].named();
    for (std::size_t p = 0; p < main_named.size(); ++p) {
      const double* src = local_named[p].second->grad();
      if (src == nullptr) continue;
      double* dst = main_named[p].second->grad();
      for (std::size_t i = 0; i < main_named[p].second->size(); ++i) {
        dst[i] += src[i] / n;
      }
    }
  }
  return total_loss / n;
}

TrainResult train_one_seed(const ModelConfig& model_cfg, const TrainConfig& cfg,
                           std::uint64_t seed,
                           const std::function<void(const TrainRecord&)>& on_record) {
  model_cfg.validate();
  cfg.gen.validate();
  if (cfg.steps < 0) throw std::invalid_argument("TrainConfig: steps must be >= 0");
  if (model_cfg.use_bos != cfg.gen.use_bos) {
    throw std::invalid_argument("train: model and generator disagree on BOS");
  }

  TrainResult result;
  result.seed = seed;
  result.params = init(model_cfg, seed);
  result.params.set_requires_grad(true);
  AdamState adam = make_adam_state(result.params);

  std::mt19937_64 data_rng(seed * 0x9e3779b97f4a7c15ULL + 1);
  std::mt19937_64 eval_rng(seed * 0x9e3779b97f4a7c15ULL + 2);

  namespace fs = std::filesystem;
  std::ofstream metrics;
  if (!cfg.checkpoint_dir.empty()) {
    fs::create_directories(cfg.checkpoint_dir);
    metrics.open(cfg.checkpoint_dir + "/metrics_seed" + std::to_string(seed) + ".csv");
    metrics << "step,loss";
    for (int r = 0; r < cfg.gen.R; ++r) metrics << ",acc_region_" << r;
    metrics << "\n";
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto evaluate = [&](int step, double loss) {
    TrainRecord rec;
    rec.step = step;
    rec.loss = loss;
    std::vector<int> hits(static_cast<std::size_t>(cfg.gen.R), 0);
    for (int i = 0; i < cfg.eval_batch; ++i) {
      const Sample s = generate(cfg.gen, eval_rng);
      const Tensor logits = forward(model_cfg, result.params, s);
      const auto ok = top_k_accuracy(logits, s.targets, 1);
      for (int r = 0; r < cfg.gen.R; ++r) hits[static_cast<std::size_t>(r)] += ok[static_cast<std::size_t>(r)];
    }
    for (int r = 0; r < cfg.gen.R; ++r) {
      rec.region_top1.push_back(static_cast<double>(hits[static_cast<std::size_t>(r)]) / cfg.eval_batch);
    }
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (metrics.is_open()) {
      metrics << rec.step << "," << rec.loss;
      for (double a : rec.region_top1) metrics << "," << a;
      metrics << "\n" << std::flush;
    }
    if (on_record) on_record(rec);
    result.records.push_back(rec);
  };

  for (int step = 0; step < cfg.steps; ++step) {
    std::vector<Sample> batch;
    batch.reserve(static_cast<std::size_t>(cfg.batch_size));
    for (int i = 0; i < cfg.batch_size; ++i) batch.push_back(generate(cfg.gen, data_rng));

    result.params.zero_grad();
    const double loss = batch_loss_and_grad(model_cfg, result.params, batch, cfg.workers);
    if (!std::isfinite(loss)) {
      result.diverged = true;
      result.diverged_at = step;
      evaluate(step, loss);
      break;
    }
    adam_step(result.params, adam, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps);

    if ((step + 1) % cfg.eval_every == 0 || step + 1 == cfg.steps) {
      evaluate(step + 1, loss);
      if (!cfg.checkpoint_dir.empty()) {
        save_checkpoint(cfg.checkpoint_dir + "/seed" + std::to_string(seed) + "_last.ckpt",
                        model_cfg, result.params);
      }
    }
  }

  if (!cfg.checkpoint_dir.empty() && !result.diverged) {
    save_checkpoint(cfg.checkpoint_dir + "/seed" + std::to_string(seed) + "_final.ckpt",
                    model_cfg, result.params);
  }
  return result;
}

std::vector<TrainResult> train(const ModelConfig& model_cfg, const TrainConfig& cfg) {
  std::vector<TrainResult> results;
  for (std::uint64_t seed : cfg.seeds) {
    results.push_back(train_one_seed(model_cfg, cfg, seed));
  }
  return results;
}

}  // namespace ccount
