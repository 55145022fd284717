#pragma once

// Few-shot chat-prompting harness for the counting task: prompt assembly in
// three styles (direct answer, region listing, region listing with running
// counts), strict reply parsing, and accuracy/MAE reporting against a
// chat-completion HTTP endpoint.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ccount/task.hpp"

namespace ccount {

enum class PromptStrategy : int { DIRECT = 0, COT1 = 1, COT2 = 2 };

std::string to_string(PromptStrategy s);
PromptStrategy strategy_from_string(const std::string& s);

struct PromptSpec {
  PromptStrategy strategy = PromptStrategy::DIRECT;
  int k_shot = 4;
  int eval_n = 30;
  std::vector<int> lengths = {128, 256, 512};
  int R = 4;
  std::string model = "gpt-4o";
  double temperature = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Message {
  std::string role;  // system | user | assistant
  std::string content;
};

// Integer-list rendering of the tokens, "[0, 1, 2, ...]"; BOS excluded.
std::string sequence_as_int_list(const Sample& s);

// System text for the strategy and region count.
std::string system_prompt(PromptStrategy strategy, int R);

// Ground-truth assistant reply in the strategy's format.
std::string format_reply(PromptStrategy strategy, const Sample& s);

// system + k_shot (user, assistant) pairs + final user turn.
std::vector<Message> build_prompt(const PromptSpec& spec,
                                  const std::vector<Sample>& few_shot,
                                  const Sample& test);

struct ParsedCounts {
  std::optional<std::vector<int>> counts;
  std::string error_span;  // offending text when parsing failed

  bool ok() const { return counts.has_value(); }
};

ParsedCounts parse_response(PromptStrategy strategy, const std::string& text,
                            int R);

struct ProbeCell {
  std::string strategy;
  int length = 0;
  double accuracy = 0.0;                // over parsed region counts
  std::vector<double> region_accuracy;  // [R]
  double mae = 0.0;
  std::vector<double> region_mae;  // [R]
  int n_samples = 0;
  int n_parse_failures = 0;  // scored as incorrect
  int n_probe_errors = 0;    // transport failures, excluded entirely
};

struct ProbeReport {
  std::vector<ProbeCell> cells;
  std::string transcript_path;
};

// Runs the probe grid (strategy fixed by spec, one cell per length) against
// a chat-completion endpoint. Credentials come from the named environment
// variable and are sent as a bearer token. Each request is retried up to 3
// times; a sample whose request never succeeds is excluded from the
// denominators. Transcripts are appended to transcript_path as JSON lines.
ProbeReport run_probe(const PromptSpec& spec, const std::string& endpoint,
                      const std::string& credentials_env,
                      const std::string& transcript_path);

}  // namespace ccount
