// Pipeline driver: generate data, train, evaluate, build exact solutions,
// extract interpretability figures, probe a chat endpoint, and aggregate
// reports, all from a flat key=value config file.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ccount/construct.hpp"
#include "ccount/eval.hpp"
#include "ccount/interpret.hpp"
#include "ccount/llm_probe.hpp"
#include "ccount/model.hpp"
#include "ccount/runcfg.hpp"
#include "ccount/task.hpp"
#include "ccount/trainer.hpp"

namespace fs = std::filesystem;
using namespace ccount;

namespace {

constexpr const char* kToolVersion = "ccount 1.0.0";

struct CliError : std::runtime_error {
  std::string code;
  CliError(std::string c, const std::string& msg)
      : std::runtime_error(msg), code(std::move(c)) {}
};

struct Options {
  std::string config_path;
  std::string out_dir = ".";
  int workers = 1;
  long seed_override = -1;
};

RunConfig load_config(const Options& opt) {
  if (opt.config_path.empty()) throw CliError("E_CONFIG", "--config is required");
  RunConfig cfg = RunConfig::parse_file(opt.config_path);
  if (opt.workers > 0) cfg.set("workers", std::to_string(opt.workers));
  return cfg;
}

std::vector<std::uint64_t> effective_seeds(const RunConfig& cfg, const Options& opt) {
  if (opt.seed_override >= 0) {
    return {static_cast<std::uint64_t>(opt.seed_override)};
  }
  return cfg.train_config().seeds;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_manifest(const std::string& dir, const RunConfig& cfg,
                    const std::vector<std::uint64_t>& seeds,
                    const std::vector<std::string>& artifacts) {
  RunManifest manifest;
  manifest.config_hash = cfg.hash();
  manifest.seeds = seeds;
  manifest.artifacts = artifacts;
  manifest.tool_version = kToolVersion;
  manifest.created_at = timestamp();
  manifest.write(dir + "/manifest.json");
}

ConstructionSpec construction_spec(const RunConfig& cfg) {
  ConstructionSpec spec;
  spec.d_model = static_cast<int>(cfg.get_int("construct.d_model", spec.d_model));
  spec.sharpness = cfg.get_double("construct.sharpness", spec.sharpness);
  const std::string variant = cfg.get_or("construct.variant", "bos");
  if (variant == "bos") {
    spec.variant = BiasVariant::BOS_BIAS;
  } else if (variant == "rbrack") {
    spec.variant = BiasVariant::RBRACK_BIAS;
  } else {
    throw CliError("E_CONFIG", "construct.variant must be 'bos' or 'rbrack'");
  }
  spec.count_cap = static_cast<int>(cfg.get_int("construct.count_cap", spec.count_cap));
  spec.n_classes = static_cast<int>(cfg.get_int("construct.n_classes", spec.n_classes));
  spec.R_max = static_cast<int>(cfg.get_int("construct.R_max", spec.R_max));
  return spec;
}

int cmd_gen(const Options& opt) {
  const RunConfig cfg = load_config(opt);
  const GenConfig gen = cfg.gen_config();
  const long n = cfg.get_int("gen.n_samples", 100);
  std::mt19937_64 rng(gen.seed);
  std::vector<Sample> samples;
  for (long i = 0; i < n; ++i) samples.push_back(generate(gen, rng));

  fs::create_directories(opt.out_dir);
  const std::string path = opt.out_dir + "/dataset.txt";
  std::ofstream out(path);
  if (!out) throw CliError("E_IO", "cannot write " + path);
  write_dataset(out, gen, samples);
  std::cout << "wrote " << n << " samples to " << path << "\n";
  return 0;
}

int cmd_train(const Options& opt) {
  const RunConfig cfg = load_config(opt);
  const ModelConfig model_cfg = cfg.model_config();
  TrainConfig train_cfg = cfg.train_config();
  const std::vector<std::uint64_t> seeds = effective_seeds(cfg, opt);

  std::vector<std::string> artifacts;
  for (std::uint64_t seed : seeds) {
    const std::string dir = run_directory(opt.out_dir, cfg, seed);
    train_cfg.checkpoint_dir = dir;
    const TrainResult result = train_one_seed(model_cfg, train_cfg, seed);
    artifacts.push_back(dir + "/seed" + std::to_string(seed) + "_final.ckpt");
    artifacts.push_back(dir + "/metrics_seed" + std::to_string(seed) + ".csv");
    std::cout << "seed " << seed << (result.diverged ? " diverged at step " +
                                     std::to_string(result.diverged_at)
                                                     : " done")
              << "\n";
    write_manifest(dir, cfg, {seed}, artifacts);
  }
  return 0;
}

int cmd_eval(const Options& opt) {
  const RunConfig cfg = load_config(opt);
  const std::string ckpt = cfg.get("eval.checkpoint");
  if (!fs::exists(ckpt)) throw CliError("E_MISSING", "checkpoint not found: " + ckpt);
  auto [model_cfg, params] = load_checkpoint(ckpt);

  const long n = cfg.get_int("eval.n_samples", 2000);
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("eval.seed", 99));
  std::istringstream suites(cfg.get_or("eval.suites", "in_dist,short,fewer"));
  std::string name;
  fs::create_directories(opt.out_dir);
  std::vector<std::string> artifacts;
  while (std::getline(suites, name, ',')) {
    EvalReport report = run_suite(model_cfg, params, suite_from_string(name),
                                  static_cast<int>(n), seed, opt.workers);
    report.config_id = cfg.hash();
    const std::string path = opt.out_dir + "/report_" + name + ".json";
    std::ofstream out(path);
    if (!out) throw CliError("E_IO", "cannot write " + path);
    out << report.to_json();
    artifacts.push_back(path);
    std::cout << "suite " << name << " top1=[";
    for (std::size_t r = 0; r < report.region_top1.size(); ++r) {
      if (r) std::cout << ", ";
      std::cout << report.region_top1[r];
    }
    std::cout << "]\n";
  }
  write_manifest(opt.out_dir, cfg, {seed}, artifacts);
  return 0;
}

int cmd_construct(const Options& opt) {
  const RunConfig cfg = load_config(opt);
  const ConstructionSpec spec = construction_spec(cfg);
  const auto [model_cfg, params] = spec.variant == BiasVariant::BOS_BIAS
                                       ? build_nope_solution(spec)
                                       : build_rbrack_bias_variant(spec);
  fs::create_directories(opt.out_dir);
  const std::string path = opt.out_dir + "/constructed.ckpt";
  save_checkpoint(path, model_cfg, params);
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_interpret(const Options& opt) {
  const RunConfig cfg = load_config(opt);
  const std::string ckpt = cfg.get("interpret.checkpoint");
  if (!fs::exists(ckpt)) throw CliError("E_MISSING", "checkpoint not found: " + ckpt);
  auto [model_cfg, params] = load_checkpoint(ckpt);

  GenConfig gen = cfg.gen_config();
  gen.use_bos = model_cfg.use_bos;
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("gen.seed", 0));
  const long n = cfg.get_int("interpret.n_samples", 100);
  std::mt19937_64 rng(seed);
  std::vector<Sample> samples;
  for (long i = 0; i < n; ++i) samples.push_back(generate(gen, rng));

  fs::create_directories(opt.out_dir);
  const std::string config_name = cfg.get_or("interpret.name", cfg.hash());
  std::vector<std::string> artifacts;
  auto add = [&artifacts](std::vector<std::string> paths) {
    for (auto& p : paths) artifacts.push_back(std::move(p));
  };
  add(emit_latent_pca_figure(model_cfg, params, samples, opt.out_dir, config_name, seed));
  add(emit_attention_figures(model_cfg, params, samples.front(), opt.out_dir,
                             config_name, seed));
  if (!model_cfg.decoder_mlp) {
    add(emit_value_curve_figures(model_cfg, params, samples, opt.out_dir,
                                 config_name, seed));
    add(emit_bias_figure(model_cfg, params, samples, opt.out_dir, config_name, seed));
  }
  if (model_cfg.pe == PosEnc::ABS) {
    add(emit_abspe_figures(model_cfg, params, gen.T, opt.out_dir, config_name, seed));
  }
  if (model_cfg.pe == PosEnc::ROPE) {
    add(emit_rope_figure(model_cfg, params, samples, opt.out_dir, config_name, seed));
  }
  write_manifest(opt.out_dir, cfg, {seed}, artifacts);
  std::cout << "wrote " << artifacts.size() << " figure files to " << opt.out_dir << "\n";
  return 0;
}

int cmd_llm_probe(const Options& opt) {
  const RunConfig cfg = load_config(opt);
  PromptSpec spec;
  spec.strategy = strategy_from_string(cfg.get_or("llm.strategy", "direct"));
  spec.k_shot = static_cast<int>(cfg.get_int("llm.k_shot", spec.k_shot));
  spec.eval_n = static_cast<int>(cfg.get_int("llm.eval_n", spec.eval_n));
  spec.R = static_cast<int>(cfg.get_int("gen.R", spec.R));
  spec.model = cfg.get_or("llm.model", spec.model);
  spec.temperature = cfg.get_double("llm.temperature", spec.temperature);
  spec.seed = static_cast<std::uint64_t>(cfg.get_int("gen.seed", 0));
  if (cfg.has("llm.lengths")) {
    spec.lengths.clear();
    std::istringstream is(cfg.get("llm.lengths"));
    std::string tok;
    while (std::getline(is, tok, ',')) spec.lengths.push_back(std::stoi(tok));
  }
  const std::string endpoint = cfg.get("llm.endpoint");
  const std::string cred_env = cfg.get_or("llm.credentials_env", "CCOUNT_API_KEY");

  fs::create_directories(opt.out_dir);
  const ProbeReport report =
      run_probe(spec, endpoint, cred_env, opt.out_dir + "/transcripts.jsonl");

  nlohmann::json table;
  for (const ProbeCell& cell : report.cells) {
    table["cells"].push_back({{"strategy", cell.strategy},
                              {"length", cell.length},
                              {"accuracy", cell.accuracy},
                              {"region_accuracy", cell.region_accuracy},
                              {"mae", cell.mae},
                              {"region_mae", cell.region_mae},
                              {"n_samples", cell.n_samples},
                              {"n_parse_failures", cell.n_parse_failures},
                              {"n_probe_errors", cell.n_probe_errors}});
  }
  const std::string path = opt.out_dir + "/llm_tables.json";
  std::ofstream out(path);
  if (!out) throw CliError("E_IO", "cannot write " + path);
  out << table.dump(2) << "\n";
  write_manifest(opt.out_dir, cfg, {spec.seed}, {path, report.transcript_path});
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_report(const Options& opt) {
  const RunConfig cfg = load_config(opt);
  const std::string root = cfg.get_or("report.root", opt.out_dir);
  std::vector<fs::path> reports;
  if (fs::exists(root)) {
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
      const std::string name = entry.path().filename().string();
      if (entry.is_regular_file() && name.rfind("report_", 0) == 0 &&
          entry.path().extension() == ".json") {
        reports.push_back(entry.path());
      }
    }
  }
  std::sort(reports.begin(), reports.end());

  fs::create_directories(opt.out_dir);
  const std::string csv_path = opt.out_dir + "/aggregate.csv";
  const std::string md_path = opt.out_dir + "/report.md";
  std::ofstream csv(csv_path), md(md_path);
  if (!csv || !md) throw CliError("E_IO", "cannot write aggregate outputs");
  csv << "config_id,suite,region,top1,top5\n";
  md << "# Evaluation summary\n\n| config | suite | region | top-1 | top-5 |\n"
     << "|---|---|---|---|---|\n";
  for (const fs::path& p : reports) {
    std::ifstream in(p);
    nlohmann::json j = nlohmann::json::parse(in);
    const std::string suite = j.value("suite", "?");
    const std::string id = j.value("config_id", "?");
    const auto top1 = j.value("region_top1", std::vector<double>{});
    const auto top5 = j.value("region_top5", std::vector<double>{});
    for (std::size_t r = 0; r < top1.size(); ++r) {
      csv << id << "," << suite << "," << r << "," << top1[r] << ","
          << (r < top5.size() ? top5[r] : 0.0) << "\n";
      md << "| " << id << " | " << suite << " | " << r << " | " << top1[r]
         << " | " << (r < top5.size() ? top5[r] : 0.0) << " |\n";
    }
  }
  std::cout << "aggregated " << reports.size() << " reports into " << csv_path << "\n";
  return 0;
}

int cmd_sweep(const Options& opt) {
  const RunConfig cfg = load_config(opt);
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) {
      if (!tok.empty()) out.push_back(tok);
    }
    return out;
  };
  const auto pes = split(cfg.get_or("sweep.pe", "nope"));
  const auto causals = split(cfg.get_or("sweep.causal", "true"));
  const auto boses = split(cfg.get_or("sweep.bos", "true"));
  const auto mlps = split(cfg.get_or("sweep.encoder_mlp", "true"));
  const auto slopes = split(cfg.get_or("sweep.alibi_slopes", ""));
  const std::vector<std::uint64_t> seeds = effective_seeds(cfg, opt);

  int failures = 0, runs = 0;
  for (const auto& pe : pes) {
    const auto slope_set =
        (pe == "alibi" && !slopes.empty()) ? slopes : std::vector<std::string>{""};
    for (const auto& causal : causals) {
      for (const auto& bos : boses) {
        for (const auto& mlp : mlps) {
          for (const auto& slope : slope_set) {
            RunConfig cell = cfg;
            cell.set("model.pe", pe);
            cell.set("model.causal", causal);
            cell.set("gen.use_bos", bos);
            cell.set("model.encoder_mlp", mlp);
            if (!slope.empty()) cell.set("model.alibi_slope", slope);
            for (std::uint64_t seed : seeds) {
              ++runs;
              try {
                const ModelConfig model_cfg = cell.model_config();
                TrainConfig train_cfg = cell.train_config();
                const std::string dir = run_directory(opt.out_dir, cell, seed);
                train_cfg.checkpoint_dir = dir;
                train_one_seed(model_cfg, train_cfg, seed);
                const std::string ckpt =
                    dir + "/seed" + std::to_string(seed) + "_final.ckpt";
                auto [mc, params] = load_checkpoint(ckpt);
                for (Suite suite : {Suite::IN_DIST, Suite::SHORT, Suite::FEWER}) {
                  EvalReport report = run_suite(
                      mc, params, suite,
                      static_cast<int>(cell.get_int("eval.n_samples", 2000)),
                      static_cast<std::uint64_t>(cell.get_int("eval.seed", 99)),
                      opt.workers);
                  report.seed = seed;
                  report.config_id = cell.hash();
                  std::ofstream out(dir + "/report_" + to_string(suite) + ".json");
                  out << report.to_json();
                }
                write_manifest(dir, cell, {seed}, {ckpt});
              } catch (const std::exception& e) {
                ++failures;
                std::cerr << "sweep cell failed (pe=" << pe << " causal=" << causal
                          << " bos=" << bos << " mlp=" << mlp << " seed=" << seed
                          << "): " << e.what() << "\n";
              }
            }
          }
        }
      }
    }
  }
  std::cout << "sweep finished: " << runs - failures << "/" << runs << " runs ok\n";
  return failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contextual counting laboratory"};
  app.require_subcommand(1);
  app.fallthrough();

  Options opt;
  app.add_option("--config", opt.config_path, "key=value config file")
      ->expected(1);
  app.add_option("--out", opt.out_dir, "output directory");
  app.add_option("--workers", opt.workers, "worker thread count");
  app.add_option("--seed-override", opt.seed_override,
                 "use this single seed instead of the configured list");

  auto* gen = app.add_subcommand("gen", "generate a dataset file");
  auto* train = app.add_subcommand("train", "train model seeds");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on suites");
  auto* construct = app.add_subcommand("construct", "emit the exact-weight checkpoint");
  auto* interpret = app.add_subcommand("interpret", "emit figure JSON+SVG set");
  auto* llm = app.add_subcommand("llm-probe", "run the chat-endpoint probe");
  auto* report = app.add_subcommand("report", "aggregate eval reports");
  auto* sweep = app.add_subcommand("sweep", "train/eval a config grid");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(opt);
    if (train->parsed()) return cmd_train(opt);
    if (eval->parsed()) return cmd_eval(opt);
    if (construct->parsed()) return cmd_construct(opt);
    if (interpret->parsed()) return cmd_interpret(opt);
    if (llm->parsed()) return cmd_llm_probe(opt);
    if (report->parsed()) return cmd_report(opt);
    if (sweep->parsed()) return cmd_sweep(opt);
  } catch (const CliError& e) {
    std::cerr << "ERROR " << e.code << " " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "ERROR E_RUNTIME " << e.what() << "\n";
    return 1;
  }
  std::cerr << "ERROR E_USAGE unknown subcommand\n";
  return 1;
}
