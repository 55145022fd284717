#include "ccount/runcfg.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ccount {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig RunConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_string(os.str());
}

RunConfig RunConfig::parse_string(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key=value, got '" + t + "'");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": empty key");
    }
    cfg.entries_[key] = trim(t.substr(eq + 1));
  }
  return cfg;
}

bool RunConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string RunConfig::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw std::invalid_argument("config key '" + key + "' is missing");
  }
  return it->second;
}

std::string RunConfig::get_or(const std::string& key,
                              const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

long RunConfig::get_int(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key);
  std::size_t pos = 0;
  const long out = std::stol(v, &pos);
  if (pos != v.size()) {
    throw std::invalid_argument("config key '" + key + "': '" + v +
                                "' is not an integer");
  }
  return out;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key);
  std::size_t pos = 0;
  const double out = std::stod(v, &pos);
  if (pos != v.size()) {
    throw std::invalid_argument("config key '" + key + "': '" + v +
                                "' is not a number");
  }
  return out;
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config key '" + key + "': '" + v +
                              "' is not a boolean");
}

void RunConfig::set(const std::string& key, const std::string& value) {
  entries_[key] = value;
}

std::string RunConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& [k, v] : entries_) {  // std::map: already sorted
    mix(k);
    mix("=");
    mix(v);
    mix("\n");
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

GenConfig RunConfig::gen_config() const {
  GenConfig gen;
  gen.T = static_cast<int>(get_int("gen.T", gen.T));
  gen.R = static_cast<int>(get_int("gen.R", gen.R));
  gen.p_one = get_double("gen.p_one", gen.p_one);
  gen.use_bos = get_bool("gen.use_bos", gen.use_bos);
  gen.seed = static_cast<std::uint64_t>(get_int("gen.seed", 0));
  gen.validate();
  return gen;
}

ModelConfig RunConfig::model_config() const {
  ModelConfig cfg;
  cfg.d_model = static_cast<int>(get_int("model.d_model", cfg.d_model));
  cfg.d_head = static_cast<int>(get_int("model.d_head", cfg.d_head));
  cfg.d_mlp = static_cast<int>(get_int("model.d_mlp", cfg.d_mlp));
  cfg.pe = pos_enc_from_string(get_or("model.pe", to_string(cfg.pe)));
  cfg.causal_encoder = get_bool("model.causal", cfg.causal_encoder);
  cfg.use_bos = get_bool("gen.use_bos", cfg.use_bos);
  cfg.encoder_mlp = get_bool("model.encoder_mlp", cfg.encoder_mlp);
  cfg.decoder_mlp = get_bool("model.decoder_mlp", cfg.decoder_mlp);
  cfg.n_classes = static_cast<int>(get_int("model.n_classes", cfg.n_classes));
  cfg.max_T = static_cast<int>(get_int("model.max_T", cfg.max_T));
  cfg.alibi_slope = get_double("model.alibi_slope", cfg.alibi_slope);
  cfg.rope_base = get_double("model.rope_base", cfg.rope_base);
  cfg.R_max = static_cast<int>(get_int("model.R_max", cfg.R_max));
  cfg.validate();
  return cfg;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig cfg;
  cfg.gen = gen_config();
  cfg.steps = static_cast<int>(get_int("train.steps", cfg.steps));
  cfg.batch_size = static_cast<int>(get_int("train.batch_size", cfg.batch_size));
  cfg.learning_rate = get_double("train.lr", cfg.learning_rate);
  cfg.beta1 = get_double("train.beta1", cfg.beta1);
  cfg.beta2 = get_double("train.beta2", cfg.beta2);
  cfg.adam_eps = get_double("train.eps", cfg.adam_eps);
  cfg.eval_every = static_cast<int>(get_int("train.eval_every", cfg.eval_every));
  cfg.eval_batch = static_cast<int>(get_int("train.eval_batch", cfg.eval_batch));
  cfg.workers = static_cast<int>(get_int("workers", cfg.workers));
  if (has("train.seeds")) {
    cfg.seeds.clear();
    std::istringstream is(get("train.seeds"));
    std::string tok;
    while (std::getline(is, tok, ',')) {
      cfg.seeds.push_back(static_cast<std::uint64_t>(std::stoull(trim(tok))));
    }
  }
  return cfg;
}

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["config_hash"] = config_hash;
  j["seeds"] = seeds;
  j["artifacts"] = artifacts;
  j["tool_version"] = tool_version;
  j["created_at"] = created_at;
  return j.dump(2) + "\n";
}

void RunManifest::write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest '" + path + "'");
  out << to_json();
}

std::string run_directory(const std::string& root, const RunConfig& cfg,
                          std::uint64_t seed) {
  namespace fs = std::filesystem;
  const std::string dir =
      root + "/runs/" + cfg.hash() + "/" + std::to_string(seed);
  fs::create_directories(dir);
  return dir;
}

}  // namespace ccount
