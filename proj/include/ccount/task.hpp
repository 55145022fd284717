#pragma once

// Contextual-counting task: sequences over {0, 1, [, ]} with R delimited
// regions; the target for region r is the number of 1-tokens inside it.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace ccount {

enum class Token : int { ZERO = 0, ONE = 1, LBRACK = 2, RBRACK = 3, BOS = 4 };

constexpr int kVocabSize = 5;

inline int code(Token t) { return static_cast<int>(t); }

struct GenConfig {
  int T = 512;
  int R = 4;
  double p_one = 0.5;
  bool use_bos = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Sample {
  std::vector<Token> tokens;                 // length T, plus leading BOS if used
  std::vector<std::pair<int, int>> regions;  // (open_index, close_index)
  std::vector<int> targets;                  // ones strictly inside each region
  std::vector<int> prompt;                   // [0..R-1]

  bool has_bos() const { return !tokens.empty() && tokens.front() == Token::BOS; }
  bool operator==(const Sample&) const = default;
};

Sample generate(const GenConfig& cfg, std::mt19937_64& rng);
Sample generate(const GenConfig& cfg);  // seeds an rng from cfg.seed

// Scans for well-nested, non-overlapping bracket pairs and counts the
// 1-tokens strictly inside each. Throws on unbalanced brackets.
std::vector<int> count_ones_oracle(const std::vector<Token>& tokens);

// Region index (0-based) per position, delimiters inclusive; -1 elsewhere.
constexpr int kNoRegion = -1;
std::vector<int> contextual_position(const std::vector<Token>& tokens);
// Display form matching 1-based region labels: "- - - 1 1 ...".
std::string cp_to_string(const std::vector<int>& cp);

std::string to_text(const Sample& s);
Sample from_text(const std::string& line);

// Dataset files: a "key=value ..." header line, then one sample per line.
void write_dataset(std::ostream& os, const GenConfig& cfg,
                   const std::vector<Sample>& samples);
std::pair<GenConfig, std::vector<Sample>> read_dataset(std::istream& is);

// T tokens with exactly n ONE tokens inside region `r` and zeros elsewhere;
// region layout is deterministic. Used for the f(n) circuit probes.
Sample make_count_probe_sample(int T, int R, int r, int n, bool use_bos);

}  // namespace ccount
