#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>

#include "ccount/runcfg.hpp"

using namespace ccount;

TEST_CASE("parsing key=value lines with comments and whitespace") {
  const RunConfig cfg = RunConfig::parse_string(
      "# top comment\n"
      "gen.T = 300\n"
      "  gen.R=4\n"
      "\n"
      "model.pe = rope   \n"
      "name = a = b\n");
  CHECK(cfg.get("gen.T") == "300");
  CHECK(cfg.get("gen.R") == "4");
  CHECK(cfg.get("model.pe") == "rope");
  // The first '=' splits: values may themselves contain '='.
  CHECK(cfg.get("name") == "a = b");
  CHECK(cfg.has("gen.T"));
  CHECK_FALSE(cfg.has("gen.missing"));
  CHECK_THROWS(cfg.get("gen.missing"));
  CHECK(cfg.get_or("gen.missing", "fallback") == "fallback");

  CHECK_THROWS(RunConfig::parse_string("no_equals_here\n"));
  CHECK_THROWS(RunConfig::parse_string("= value\n"));
}

TEST_CASE("typed accessors parse strictly") {
  const RunConfig cfg = RunConfig::parse_string(
      "i = 42\nd = 2.5\nb1 = true\nb0 = 0\nbad_int = 4x\nbad_bool = yes\n");
  CHECK(cfg.get_int("i", 0) == 42);
  CHECK(cfg.get_int("absent", 7) == 7);
  CHECK(cfg.get_double("d", 0.0) == 2.5);
  CHECK(cfg.get_double("i", 0.0) == 42.0);
  CHECK(cfg.get_bool("b1", false));
  CHECK_FALSE(cfg.get_bool("b0", true));
  CHECK(cfg.get_bool("absent", true));
  CHECK_THROWS(cfg.get_int("bad_int", 0));
  CHECK_THROWS(cfg.get_double("bad_int", 0.0));
  CHECK_THROWS(cfg.get_bool("bad_bool", false));
}

TEST_CASE("hash is stable, order independent, and content sensitive") {
  const RunConfig a = RunConfig::parse_string("x = 1\ny = 2\n");
  const RunConfig b = RunConfig::parse_string("y = 2\n# note\nx = 1\n");
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() == a.hash());

  RunConfig c = RunConfig::parse_string("x = 1\ny = 3\n");
  CHECK(a.hash() != c.hash());
  c.set("y", "2");
  CHECK(a.hash() == c.hash());
  // Key/value boundary matters: {xy: ""} vs {x: "y"}.
  const RunConfig d = RunConfig::parse_string("xy =\n");
  const RunConfig e = RunConfig::parse_string("x = y\n");
  CHECK(d.hash() != e.hash());
}

TEST_CASE("gen/model/train configs are built from namespaced keys") {
  const RunConfig cfg = RunConfig::parse_string(
      "gen.T = 300\n"
      "gen.R = 4\n"
      "gen.use_bos = false\n"
      "model.d_model = 48\n"
      "model.pe = alibi\n"
      "model.causal = true\n"
      "model.alibi_slope = 0.25\n"
      "train.steps = 123\n"
      "train.batch_size = 16\n"
      "train.lr = 0.002\n"
      "train.seeds = 3, 5, 8\n"
      "workers = 6\n");
  const GenConfig gen = cfg.gen_config();
  CHECK(gen.T == 300);
  CHECK(gen.R == 4);
  CHECK_FALSE(gen.use_bos);

  const ModelConfig model = cfg.model_config();
  CHECK(model.d_model == 48);
  CHECK(model.pe == PosEnc::ALIBI);
  CHECK(model.causal_encoder);
  CHECK(model.alibi_slope == 0.25);
  CHECK_FALSE(model.use_bos);  // follows gen.use_bos

  const TrainConfig train = cfg.train_config();
  CHECK(train.steps == 123);
  CHECK(train.batch_size == 16);
  CHECK(train.learning_rate == 0.002);
  CHECK(train.workers == 6);
  CHECK(train.seeds == std::vector<std::uint64_t>{3, 5, 8});
  CHECK(train.gen.T == 300);
}

TEST_CASE("derived configs are validated") {
  // T too small for the region count.
  CHECK_THROWS(RunConfig::parse_string("gen.T = 6\ngen.R = 4\n").gen_config());
  CHECK_THROWS(RunConfig::parse_string("model.pe = spiral\n").model_config());
  CHECK_THROWS(RunConfig::parse_string("model.d_head = 0\n").model_config());
}

TEST_CASE("config files round trip through the filesystem") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "ccount_cfg_test.cfg").string();
  {
    std::ofstream out(path);
    out << "gen.T = 128\ngen.R = 2\n";
  }
  const RunConfig cfg = RunConfig::parse_file(path);
  CHECK(cfg.gen_config().T == 128);
  CHECK_THROWS(RunConfig::parse_file(path + ".does_not_exist"));
  fs::remove(path);
}

TEST_CASE("run directories are laid out as runs/<hash>/<seed>") {
  namespace fs = std::filesystem;
  const std::string root = (fs::temp_directory_path() / "ccount_runs_test").string();
  fs::remove_all(root);
  const RunConfig cfg = RunConfig::parse_string("gen.T = 64\ngen.R = 2\n");
  const std::string dir = run_directory(root, cfg, 11);
  CHECK(dir == root + "/runs/" + cfg.hash() + "/11");
  CHECK(fs::is_directory(dir));
  fs::remove_all(root);
}

TEST_CASE("manifest serializes to json and writes to disk") {
  RunManifest m;
  m.config_hash = "deadbeef";
  m.seeds = {1, 2, 3};
  m.artifacts = {"a.ckpt", "b.csv"};
  m.tool_version = "ccount 1.0.0";
  m.created_at = "2026-01-01T00:00:00Z";
  const nlohmann::json j = nlohmann::json::parse(m.to_json());
  CHECK(j["config_hash"] == "deadbeef");
  CHECK(j["seeds"] == nlohmann::json({1, 2, 3}));
  CHECK(j["artifacts"][1] == "b.csv");
  CHECK(j["tool_version"] == "ccount 1.0.0");

  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "ccount_manifest.json").string();
  m.write(path);
  std::ifstream in(path);
  REQUIRE(in.good());
  const nlohmann::json back = nlohmann::json::parse(in);
  CHECK(back == j);
  fs::remove(path);
}
