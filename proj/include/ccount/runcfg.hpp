#pragma once

// Flat key=value run configuration: parsing, typed accessors, a stable
// content hash, and the run-directory manifest.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ccount/model.hpp"
#include "ccount/task.hpp"
#include "ccount/trainer.hpp"

namespace ccount {

class RunConfig {
 public:
  static RunConfig parse_file(const std::string& path);
  static RunConfig parse_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get(const std::string& key) const;  // throws if missing
  std::string get_or(const std::string& key, const std::string& fallback) const;
  long get_int(const std::string& key, long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  void set(const std::string& key, const std::string& value);

  // FNV-1a over the sorted key=value pairs; stable across reordering.
  std::string hash() const;

  GenConfig gen_config() const;
  ModelConfig model_config() const;
  TrainConfig train_config() const;

  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

struct RunManifest {
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> artifacts;
  std::string tool_version;
  std::string created_at;

  std::string to_json() const;
  void write(const std::string& path) const;
};

// runs/<config-hash>/<seed>/ under root; creates directories.
std::string run_directory(const std::string& root, const RunConfig& cfg,
                          std::uint64_t seed);

}  // namespace ccount
