// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Trained-model criteria load checkpoints from
// artifacts/trained/ when present and fall back to inline training.

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "ccount/construct.hpp"
#include "ccount/eval.hpp"
#include "ccount/interpret.hpp"
#include "ccount/llm_probe.hpp"
#include "ccount/trainer.hpp"
#include "../tests/test_util.hpp"

using namespace ccount;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

int g_failures = 0;

void report(int idx, bool pass, const std::string& what,
            const std::string& detail = "") {
  std::printf("%s criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", idx,
              what.c_str(), detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

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

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

// --- criterion 1: exact constructed solution, timed ---

void criterion1() {
  ConstructionSpec spec;
  const auto [cfg, params] = build_nope_solution(spec);
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  long wrong = 0;
  for (const auto& [T, R] : std::vector<std::pair<int, int>>{
           {128, 2}, {300, 4}, {512, 3}, {512, 4}, {1000, 8}}) {
    GenConfig gen;
    gen.T = T;
    gen.R = R;
    gen.use_bos = true;
    for (int i = 0; i < 1000; ++i) {
      const Sample s = generate(gen, rng);
      if (argmax_counts(forward(cfg, params, s)) != s.targets) ++wrong;
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(1, wrong == 0 && secs < 300.0,
         "constructed solution exact on 1000 samples x 5 (T,R) pairs in < 5 min",
         "wrong=" + std::to_string(wrong) + " runtime=" + fmt(secs) + "s");
}

// --- criteria 2/3/5b: trained checkpoints ---

std::vector<std::string> find_checkpoints(const std::string& dir) {
  std::vector<std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > 11 &&
        name.rfind("_final.ckpt") == name.size() - 11) {
      out.push_back(entry.path().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

ModelConfig trained_model_cfg(PosEnc pe, bool causal, bool use_bos) {
  ModelConfig cfg;
  cfg.d_model = 64;
  cfg.d_head = 64;
  cfg.d_mlp = 128;
  cfg.pe = pe;
  cfg.causal_encoder = causal;
  cfg.use_bos = use_bos;
  cfg.n_classes = 512;
  cfg.max_T = 1024;
  cfg.R_max = 8;
  return cfg;
}

// Trains one seed inline when no artifact exists; the budget matches the
// pre-baked training configs.
std::vector<std::string> checkpoints_or_train(const std::string& name,
                                              PosEnc pe, bool causal,
                                              bool use_bos, int steps) {
  const std::string dir = std::string(CCOUNT_SOURCE_DIR) + "/artifacts/trained/" + name;
  std::vector<std::string> found = find_checkpoints(dir);
  if (!found.empty()) return found;
  std::printf("  (no checkpoints under %s; training seed 1 inline)\n", dir.c_str());
  std::fflush(stdout);
  const ModelConfig cfg = trained_model_cfg(pe, causal, use_bos);
  TrainConfig tc;
  tc.gen.T = 512;
  tc.gen.R = 4;
  tc.gen.use_bos = use_bos;
  tc.steps = steps;
  tc.batch_size = 16;
  tc.learning_rate = 1e-3;
  tc.eval_every = 500;
  tc.eval_batch = 16;
  tc.workers = 1;
  tc.checkpoint_dir = dir + "/inline";
  train_one_seed(cfg, tc, 1);
  return find_checkpoints(dir);
}

struct TrainedEval {
  std::string best_ckpt;
  bool qualified = false;
  std::string detail;
};

TrainedEval eval_encoding(const std::vector<std::string>& ckpts) {
  TrainedEval out;
  double best_mean = -1.0;
  for (const std::string& path : ckpts) {
    const auto [cfg, params] = load_checkpoint(path);
    const EvalReport rep = run_suite(cfg, params, Suite::IN_DIST, 2000, 777, 1);
    bool top5_all = true;
    int top1_good = 0;
    double mean_top1 = 0.0;
    for (std::size_t r = 0; r < rep.region_top1.size(); ++r) {
      if (rep.region_top5[r] != 1.0) top5_all = false;
      if (rep.region_top1[r] >= 0.90) ++top1_good;
      mean_top1 += rep.region_top1[r] / rep.region_top1.size();
    }
    const bool ok = top5_all && top1_good >= 3;
    out.detail += fs::path(path).filename().string() + " top1=" + fmt(mean_top1) +
                  (ok ? " (qualifies) " : " ");
    if (ok && !out.qualified) {
      out.qualified = true;
      best_mean = -1.0;  // restrict best-seed choice to qualifying seeds
    }
    if ((!out.qualified || ok) && mean_top1 > best_mean) {
      best_mean = mean_top1;
      out.best_ckpt = path;
    }
  }
  return out;
}

// --- criterion 7 helpers ---

double op_grad_worst(const std::string& op, std::mt19937_64& rng) {
  using testutil::grad_check_fd;
  std::normal_distribution<double> nd(0.0, 1.0);
  auto randt = [&](int r, int c) {
    std::vector<double> vals(static_cast<std::size_t>(r) * c);
    for (double& v : vals) v = nd(rng);
    return Tensor::from_data({r, c}, vals);
  };
  double worst = 0.0;
  const double h = 1e-5;
  Tensor a = randt(3, 4), b = randt(4, 5), c = randt(3, 4);
  Tensor v = Tensor::from_data({4}, {nd(rng), nd(rng), nd(rng), nd(rng)});
  const Tensor w = randt(3, 5), w2 = randt(3, 4);
  if (op == "matmul") {
    worst = grad_check_fd([&] { return sum(mul(matmul(a, b), w)); }, {&a, &b}, h);
  } else if (op == "matmul_nt") {
    Tensor bt = randt(5, 4);
    worst = grad_check_fd([&] { return sum(mul(matmul_nt(a, bt), w)); }, {&a, &bt}, h);
  } else if (op == "add") {
    worst = grad_check_fd([&] { return sum(mul(add(a, c), w2)); }, {&a, &c}, h);
  } else if (op == "add_row_vector") {
    worst = grad_check_fd([&] { return sum(mul(add_row_vector(a, v), w2)); }, {&a, &v}, h);
  } else if (op == "scale") {
    worst = grad_check_fd([&] { return sum(mul(scale(a, 1.7), w2)); }, {&a}, h);
  } else if (op == "mul") {
    worst = grad_check_fd([&] { return sum(mul(mul(a, c), w2)); }, {&a, &c}, h);
  } else if (op == "gelu") {
    worst = grad_check_fd([&] { return sum(mul(gelu(a), w2)); }, {&a}, h);
  } else if (op == "softmax_rows") {
    worst = grad_check_fd([&] { return sum(mul(softmax_rows(a), w2)); }, {&a}, h);
  } else if (op == "embedding") {
    Tensor table = randt(6, 4);
    const std::vector<int> idx = {0, 5, 2, 5};  // duplicate rows accumulate
    const Tensor w4 = randt(4, 4);
    worst = grad_check_fd([&] { return sum(mul(embedding(table, idx), w4)); },
                          {&table}, h);
  } else if (op == "sum") {
    worst = grad_check_fd([&] { return sum(a); }, {&a}, h);
  } else if (op == "cross_entropy") {
    worst = grad_check_fd([&] { return cross_entropy(a, {1, 3, 0}); }, {&a}, h);
  } else if (op == "rope_rotate") {
    const std::vector<int> pos = {0, 2, 7};
    worst = grad_check_fd([&] { return sum(mul(rope_rotate(a, pos, 100.0), w2)); },
                          {&a}, h);
  } else {
    throw std::logic_error("unknown op " + op);
  }
  return worst;
}

// --- criterion 9 mock server ---

class MockServer {
 public:
  explicit MockServer(std::function<std::string(const json&)> oracle)
      : oracle_(std::move(oracle)) {
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   const json body = json::parse(req.body);
                   json reply;
                   reply["choices"][0]["message"]["content"] = oracle_(body);
                   res.set_content(reply.dump(), "application/json");
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
  }

 private:
  httplib::Server server_;
  std::function<std::string(const json&)> oracle_;
  int port_ = 0;
  std::thread thread_;
};

std::vector<int> counts_from_int_list(const std::string& text) {
  std::vector<Token> tokens;
  for (char c : text) {
    if (c == '0') tokens.push_back(Token::ZERO);
    if (c == '1') tokens.push_back(Token::ONE);
    if (c == '2') tokens.push_back(Token::LBRACK);
    if (c == '3') tokens.push_back(Token::RBRACK);
  }
  return count_ones_oracle(tokens);
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int main() {
  criterion1();

  // 2. Trained causal RoPE and causal NoPE+BOS.
  TrainedEval nope_bos, rope;
  {
    const auto nope_ckpts =
        checkpoints_or_train("nope_bos", PosEnc::NOPE, true, true, 4200);
    const auto rope_ckpts =
        checkpoints_or_train("rope", PosEnc::ROPE, true, false, 4200);
    nope_bos = eval_encoding(nope_ckpts);
    rope = eval_encoding(rope_ckpts);
    report(2, nope_bos.qualified && rope.qualified,
           "best trained seed per encoding: top-5 = 100% all regions, "
           "top-1 >= 90% on >= 3/4 regions (2000 samples)",
           "nope_bos: " + nope_bos.detail + "| rope: " + rope.detail);
  }

  // 3. Trained non-causal NoPE tracks the modal baseline.
  {
    const auto ckpts =
        checkpoints_or_train("noncausal", PosEnc::NOPE, false, false, 1500);
    GenConfig gen;
    gen.T = 512;
    gen.R = 4;
    gen.use_bos = false;
    const std::vector<double> baseline = modal_class_baseline(gen, 10000, 5);
    bool pass = !ckpts.empty();
    std::string detail;
    if (!ckpts.empty()) {
      const auto [cfg, params] = load_checkpoint(ckpts.front());
      const EvalReport rep = run_gen_eval(cfg, params, gen, "in_dist", 2000, 777, 1);
      for (std::size_t r = 0; r < rep.region_top1.size(); ++r) {
        const double diff = rep.region_top1[r] - baseline[r];
        detail += "r" + std::to_string(r) + ": top1=" + fmt(rep.region_top1[r]) +
                  " baseline=" + fmt(baseline[r]) + " ";
        if (std::abs(diff) > 0.03) pass = false;
      }
    }
    report(3, pass,
           "trained non-causal NoPE top-1 within +-3pp of the modal baseline",
           detail);
  }

  // 4. OOD dissociation of the two constructed bias variants.
  {
    ConstructionSpec bos_spec;
    const auto [bos_cfg, bos_params] = build_nope_solution(bos_spec);
    ConstructionSpec rb_spec;
    rb_spec.variant = BiasVariant::RBRACK_BIAS;
    const auto [rb_cfg, rb_params] = build_rbrack_bias_variant(rb_spec);

    auto mean_top1 = [](const EvalReport& r) {
      double m = 0.0;
      for (double a : r.region_top1) m += a / r.region_top1.size();
      return m;
    };
    bool pass = true;
    std::string detail;
    for (Suite suite : {Suite::IN_DIST, Suite::SHORT, Suite::FEWER}) {
      const double bos = mean_top1(run_suite(bos_cfg, bos_params, suite, 1000, 21, 1));
      const double rb = mean_top1(run_suite(rb_cfg, rb_params, suite, 1000, 21, 1));
      detail += to_string(suite) + ": bos=" + fmt(bos) + " rbrack=" + fmt(rb) + " ";
      if (bos != 1.0) pass = false;
      if (suite == Suite::FEWER) {
        const GenConfig gen = suite_gen_config(suite, false);
        double base = 0.0;
        const auto b = modal_class_baseline(gen, 10000, 5);
        for (double x : b) base += x / b.size();
        detail += "(baseline=" + fmt(base) + ") ";
        if (rb > base + 0.10) pass = false;
      } else if (rb != 1.0) {
        pass = false;
      }
    }
    report(4, pass,
           "rbrack-bias construction exact on (512,4),(300,4), at baseline on "
           "(512,3); bos-bias exact on all three",
           detail);
  }

  // 5. Closed-form circuit match.
  {
    ConstructionSpec spec;
    const auto [cfg, params] = build_nope_solution(spec);
    std::vector<Sample> probes;
    for (int n = 0; n <= 30; ++n) {
      probes.push_back(make_count_probe_sample(256, 4, 1, n, true));
    }
    const EffectiveValueCurves curves = effective_values(cfg, params, probes, 1);
    double worst_tv = 0.0;
    for (int n = 0; n <= 30; ++n) {
      const Tensor logits = forward(cfg, params, probes[static_cast<std::size_t>(n)]);
      std::vector<double> model_dist(static_cast<std::size_t>(logits.cols()));
      double mx = -1e300, z = 0.0;
      for (int c = 0; c < logits.cols(); ++c) mx = std::max(mx, logits(1, c));
      for (int c = 0; c < logits.cols(); ++c) {
        model_dist[static_cast<std::size_t>(c)] = std::exp(logits(1, c) - mx);
        z += model_dist[static_cast<std::size_t>(c)];
      }
      for (double& p : model_dist) p /= z;
      worst_tv = std::max(worst_tv,
                          total_variation(closed_form_predictor(curves, n), model_dist));
    }

    double worst_prob_diff = -1.0;
    if (!nope_bos.best_ckpt.empty()) {
      const auto [tcfg, tparams] = load_checkpoint(nope_bos.best_ckpt);
      GenConfig gen;
      gen.T = 512;
      gen.R = 4;
      gen.use_bos = true;
      std::mt19937_64 rng(42);
      std::vector<Sample> curve_samples;
      for (int i = 0; i < 32; ++i) curve_samples.push_back(generate(gen, rng));
      worst_prob_diff = 0.0;
      for (int r = 0; r < 4; ++r) {
        const EffectiveValueCurves tc = effective_values(tcfg, tparams, curve_samples, r);
        for (int n = 0; n <= 20; ++n) {
          const Sample probe = make_count_probe_sample(512, 4, r, n, true);
          const Tensor logits = forward(tcfg, tparams, probe);
          double mx = -1e300, z = 0.0;
          for (int c = 0; c < logits.cols(); ++c) mx = std::max(mx, logits(r, c));
          std::vector<double> q(static_cast<std::size_t>(logits.cols()));
          for (int c = 0; c < logits.cols(); ++c) {
            q[static_cast<std::size_t>(c)] = std::exp(logits(r, c) - mx);
            z += q[static_cast<std::size_t>(c)];
          }
          for (double& p : q) p /= z;
          const std::vector<double> f = closed_form_predictor(tc, n);
          for (std::size_t c = 0; c < q.size(); ++c) {
            worst_prob_diff = std::max(worst_prob_diff, std::abs(f[c] - q[c]));
          }
        }
      }
    }
    const bool pass = worst_tv < 1e-6 && worst_prob_diff >= 0.0 && worst_prob_diff < 0.05;
    report(5, pass,
           "closed-form predictor: TV < 1e-6 on the construction (n 0..30), "
           "max prob diff < 0.05 on the best trained NoPE+BOS seed (n 0..20)",
           "construction worst TV=" + fmt(worst_tv) +
               " trained worst prob diff=" + fmt(worst_prob_diff));
  }

  // 6. Rank bound witness.
  {
    bool pass = true;
    std::string detail;
    for (const auto& [T, d] : std::vector<std::pair<int, int>>{
             {8, 4}, {64, 32}, {512, 64}, {512, 512}}) {
      const double got = rank_bound_witness(T, d);
      const double want = std::sqrt(static_cast<double>(T - d));
      detail += "(" + std::to_string(T) + "," + std::to_string(d) + ")=" + fmt(got) + " ";
      if (std::abs(got - want) > 1e-9) pass = false;
    }
    report(6, pass, "rank_bound_witness(T,d) = sqrt(T-d) +- 1e-9", detail);
  }

  // 7. Gradient checks.
  {
    std::mt19937_64 rng(7);
    double worst_op = 0.0;
    for (const std::string op :
         {"matmul", "matmul_nt", "add", "add_row_vector", "scale", "mul", "gelu",
          "softmax_rows", "embedding", "sum", "cross_entropy", "rope_rotate"}) {
      for (int i = 0; i < 100; ++i) worst_op = std::max(worst_op, op_grad_worst(op, rng));
    }

    ModelConfig cfg;
    cfg.d_model = 12;
    cfg.d_head = 12;
    cfg.d_mlp = 16;
    cfg.n_classes = 16;
    cfg.use_bos = true;
    cfg.R_max = 4;
    Params params = init(cfg, 3);
    GenConfig gen;
    gen.T = 32;
    gen.R = 2;
    gen.use_bos = true;
    std::mt19937_64 grng(11);
    const Sample s = generate(gen, grng);
    std::vector<Tensor*> inputs;
    for (auto& [name, t] : params.named()) {
      if (t->size() > 0) inputs.push_back(t);
    }
    const double worst_e2e = testutil::grad_check_fd(
        [&] { return cross_entropy(forward(cfg, params, s), s.targets); }, inputs,
        1e-5);
    report(7, worst_op < 1e-4 && worst_e2e < 1e-3,
           "finite-difference gradient checks: per-op < 1e-4 (100 instances "
           "each), end-to-end < 1e-3 at T=32",
           "worst per-op=" + fmt(worst_op) + " end-to-end=" + fmt(worst_e2e));
  }

  // 8. Positional decompositions reconstruct the attention logits.
  {
    double worst_abs = 0.0, worst_rope = 0.0;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
      ModelConfig acfg;
      acfg.d_model = 16;
      acfg.d_head = 16;
      acfg.d_mlp = 8;
      acfg.n_classes = 8;
      acfg.pe = PosEnc::ABS;
      acfg.max_T = 24;
      acfg.R_max = 4;
      Params aparams = init(acfg, seed);
      const AbsPEDecomposition dec = abspe_decompose(acfg, aparams, 24);
      std::mt19937_64 rng(seed);
      for (int i = 0; i < 200; ++i) {
        const Token qt = static_cast<Token>(rng() % kVocabSize);
        const Token kt = static_cast<Token>(rng() % kVocabSize);
        const int qp = static_cast<int>(rng() % 24), kp = static_cast<int>(rng() % 24);
        const double total =
            dec.contextual[static_cast<std::size_t>(code(qt)) * kVocabSize + code(kt)] +
            dec.positional[static_cast<std::size_t>(qp) * 24 + kp] +
            dec.tok_pos[static_cast<std::size_t>(code(qt)) * 24 + kp] +
            dec.pos_tok[static_cast<std::size_t>(qp) * kVocabSize + code(kt)];
        worst_abs = std::max(
            worst_abs, std::abs(total - abspe_logit(acfg, aparams, qt, qp, kt, kp)));
      }

      ModelConfig rcfg = acfg;
      rcfg.pe = PosEnc::ROPE;
      Params rparams = init(rcfg, seed);
      GenConfig gen;
      gen.T = 24;
      gen.R = 2;
      gen.use_bos = false;
      std::mt19937_64 srng(seed + 50);
      std::vector<Sample> samples;
      for (int i = 0; i < 4; ++i) samples.push_back(generate(gen, srng));
      worst_rope = std::max(
          worst_rope,
          rope_subspace_decompose(rcfg, rparams, samples).max_reconstruction_error);
    }
    report(8, worst_abs < 1e-10 && worst_rope < 1e-10,
           "AbsPE four-term and RoPE per-plane decompositions reconstruct "
           "their totals +- 1e-10",
           "abs=" + fmt(worst_abs) + " rope=" + fmt(worst_rope));
  }

  // 9. LLM harness: round trip plus exact mock-endpoint tables.
  {
    GenConfig gen;
    gen.T = 64;
    gen.R = 4;
    gen.use_bos = false;
    std::mt19937_64 rng(9);
    long mismatches = 0;
    for (PromptStrategy strategy :
         {PromptStrategy::DIRECT, PromptStrategy::COT1, PromptStrategy::COT2}) {
      for (int i = 0; i < 1000; ++i) {
        const Sample s = generate(gen, rng);
        const ParsedCounts parsed =
            parse_response(strategy, format_reply(strategy, s), 4);
        if (!parsed.ok() || *parsed.counts != s.targets) ++mismatches;
      }
    }

    bool mock_ok = true;
    std::string detail = "roundtrip mismatches=" + std::to_string(mismatches) + " ";
    {
      MockServer echo([](const json& body) {
        std::string last;
        for (const auto& m : body.at("messages")) {
          if (m.at("role") == "user") last = m.at("content").get<std::string>();
        }
        const auto counts = counts_from_int_list(last);
        std::string out = "[";
        for (std::size_t i = 0; i < counts.size(); ++i) {
          if (i) out += ", ";
          out += std::to_string(counts[i]);
        }
        return out + "]";
      });
      PromptSpec spec;
      spec.eval_n = 10;
      spec.lengths = {64};
      const std::string transcript =
          (fs::temp_directory_path() / "ccount_acc_echo.jsonl").string();
      fs::remove(transcript);
      const ProbeReport rep = run_probe(spec, echo.endpoint(), "", transcript);
      detail += "echo acc=" + fmt(rep.cells[0].accuracy) +
                " mae=" + fmt(rep.cells[0].mae) + " ";
      if (rep.cells[0].accuracy != 1.0 || rep.cells[0].mae != 0.0) mock_ok = false;
      fs::remove(transcript);
    }
    {
      MockServer zeros([](const json&) { return std::string("[0, 0, 0, 0]"); });
      PromptSpec spec;
      spec.eval_n = 12;
      spec.lengths = {64};
      const std::string transcript =
          (fs::temp_directory_path() / "ccount_acc_zero.jsonl").string();
      fs::remove(transcript);
      const ProbeReport rep = run_probe(spec, zeros.endpoint(), "", transcript);
      std::mt19937_64 zr(spec.seed * 0x2545f4914f6cdd1dULL + 64);
      GenConfig zgen;
      zgen.T = 64;
      zgen.R = 4;
      zgen.use_bos = false;
      for (int i = 0; i < spec.k_shot; ++i) generate(zgen, zr);
      double total = 0.0;
      for (int i = 0; i < spec.eval_n; ++i) {
        const Sample s = generate(zgen, zr);
        for (int t : s.targets) total += t;
      }
      const double want = total / (spec.eval_n * 4);
      detail += "zeros mae=" + fmt(rep.cells[0].mae) + " want=" + fmt(want);
      if (rep.cells[0].mae != want) mock_ok = false;
      fs::remove(transcript);
    }
    report(9, mismatches == 0 && mock_ok,
           "format-then-parse 100% on 1000 samples x 3 strategies; "
           "mock-endpoint accuracy/MAE tables exact",
           detail);
  }

  // 10. Byte-identical artifacts across two runs.
  {
    const std::string root = (fs::temp_directory_path() / "ccount_acc_det").string();
    fs::remove_all(root);
    fs::create_directories(root);
    bool pass = true;
    std::string detail;

    // Constructed checkpoint.
    ConstructionSpec spec;
    for (int run = 0; run < 2; ++run) {
      const auto [cfg, params] = build_nope_solution(spec);
      save_checkpoint(root + "/construct" + std::to_string(run) + ".ckpt", cfg, params);
    }
    if (read_bytes(root + "/construct0.ckpt") != read_bytes(root + "/construct1.ckpt")) {
      pass = false;
      detail += "construct differs ";
    }

    // Trained checkpoint, metrics, and eval report.
    ModelConfig cfg;
    cfg.d_model = 12;
    cfg.d_head = 12;
    cfg.d_mlp = 16;
    cfg.n_classes = 32;
    cfg.use_bos = true;
    cfg.R_max = 4;
    for (int run = 0; run < 2; ++run) {
      TrainConfig tc;
      tc.gen.T = 24;
      tc.gen.R = 2;
      tc.gen.use_bos = true;
      tc.steps = 30;
      tc.batch_size = 8;
      tc.eval_every = 10;
      tc.eval_batch = 8;
      tc.workers = run == 0 ? 1 : 2;  // worker count must not matter
      tc.checkpoint_dir = root + "/train" + std::to_string(run);
      const TrainResult res = train_one_seed(cfg, tc, 6);
      const EvalReport rep = run_gen_eval(cfg, res.params, tc.gen, "tiny", 50, 3, 1);
      std::ofstream(root + "/report" + std::to_string(run) + ".json") << rep.to_json();
    }
    if (read_bytes(root + "/train0/seed6_final.ckpt") !=
        read_bytes(root + "/train1/seed6_final.ckpt")) {
      pass = false;
      detail += "trained checkpoint differs ";
    }
    if (read_bytes(root + "/train0/metrics_seed6.csv") !=
        read_bytes(root + "/train1/metrics_seed6.csv")) {
      pass = false;
      detail += "metrics differ ";
    }
    if (read_bytes(root + "/report0.json") != read_bytes(root + "/report1.json")) {
      pass = false;
      detail += "eval report differs ";
    }
    fs::remove_all(root);
    report(10, pass,
           "checkpoints, metrics, and reports byte-identical across two runs",
           detail.empty() ? "all byte-identical" : detail);
  }

  std::printf("%d of 10 criteria passed\n", 10 - g_failures);
  return g_failures;
}
