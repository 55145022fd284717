#include "ccount/llm_probe.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>

#include <httplib.h>

namespace ccount {

namespace {

using json = nlohmann::json;

const char* kNumberWords[] = {"zero", "one", "two",   "three", "four",
                              "five", "six", "seven", "eight", "nine",
                              "ten"};

std::string number_word(int n) {
  if (n >= 0 && n <= 10) return kNumberWords[n];
  return std::to_string(n);
}

std::string join_ints(const std::vector<int>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << v[i];
  }
  return os.str();
}

}  // namespace

std::string to_string(PromptStrategy s) {
  switch (s) {
    case PromptStrategy::DIRECT: return "direct";
    case PromptStrategy::COT1: return "cot1";
    case PromptStrategy::COT2: return "cot2";
  }
  throw std::logic_error("to_string: bad PromptStrategy");
}

PromptStrategy strategy_from_string(const std::string& s) {
  if (s == "direct") return PromptStrategy::DIRECT;
  if (s == "cot1") return PromptStrategy::COT1;
  if (s == "cot2") return PromptStrategy::COT2;
  throw std::invalid_argument("unknown prompt strategy '" + s + "'");
}

void PromptSpec::validate() const {
  if (k_shot < 1) throw std::invalid_argument("PromptSpec: k_shot must be >= 1");
  if (eval_n < 1) throw std::invalid_argument("PromptSpec: eval_n must be >= 1");
  if (R < 1) throw std::invalid_argument("PromptSpec: R must be >= 1");
  if (lengths.empty()) throw std::invalid_argument("PromptSpec: lengths empty");
}

std::string sequence_as_int_list(const Sample& s) {
  std::vector<int> codes;
  for (Token t : s.tokens) {
    if (t == Token::BOS) continue;
    codes.push_back(code(t));
  }
  return "[" + join_ints(codes) + "]";
}

std::string system_prompt(PromptStrategy strategy, int R) {
  const std::string r_digits = std::to_string(R);
  const std::string r_word = number_word(R);
  switch (strategy) {
    case PromptStrategy::DIRECT:
      return "You'll be provided lists of integers in the list {0,1,2,3}. "
             "Your goal is to return a list of " + r_digits +
             " elements, where each corresponds to the number of 1 tokens in "
             "each of the " + r_digits +
             " regions surrounded by start (2) and end (3) tokens. Use a "
             "consistent style.";
    case PromptStrategy::COT1:
      return "You'll be provided lists of integer tokens in the set "
             "{`0`,`1`,`2`,`3`}. Your goal is to identify the " + r_word +
             " regions surrounded by `2` and `3` tokens, and count the number "
             "of `1` tokens in each region. Use a consistent style.";
    case PromptStrategy::COT2:
      return "You'll be provided lists of integer tokens in the set "
             "{`0`,`1`,`2`,`3`}. Your goal is to identify the " + r_word +
             " regions surrounded by `2` and `3` tokens, and count the number "
             "of `1` tokens in each region. When printing each sequence, you "
             "can use parentheses to keep track of counting. Use a consistent "
             "style.";
  }
  throw std::logic_error("system_prompt: bad strategy");
}

std::string format_reply(PromptStrategy strategy, const Sample& s) {
  if (strategy == PromptStrategy::DIRECT) {
    return "[" + join_ints(s.targets) + "]";
  }
  std::ostringstream os;
  os << "The " << number_word(static_cast<int>(s.regions.size()))
     << " regions with the corresponding count of `1` tokens are:";
  for (std::size_t r = 0; r < s.regions.size(); ++r) {
    const auto [open, close] = s.regions[r];
    os << "\n* [2";
    int running = 0;
    for (int i = open + 1; i < close; ++i) {
      const int c = code(s.tokens[static_cast<std::size_t>(i)]);
      if (c == code(Token::ONE)) ++running;
      os << ", " << c;
      if (strategy == PromptStrategy::COT2) os << " (" << running << ")";
    }
    os << ", 3]: " << s.targets[r];
  }
  return os.str();
}

std::vector<Message> build_prompt(const PromptSpec& spec,
                                  const std::vector<Sample>& few_shot,
                                  const Sample& test) {
  spec.validate();
  if (static_cast<int>(few_shot.size()) != spec.k_shot) {
    throw std::invalid_argument("build_prompt: few-shot count != k_shot");
  }
  std::vector<Message> messages;
  messages.push_back({"system", system_prompt(spec.strategy, spec.R)});
  for (const Sample& s : few_shot) {
    messages.push_back({"user", sequence_as_int_list(s)});
    messages.push_back({"assistant", format_reply(spec.strategy, s)});
  }
  messages.push_back({"user", sequence_as_int_list(test)});
  return messages;
}

ParsedCounts parse_response(PromptStrategy strategy, const std::string& text,
                            int R) {
  ParsedCounts out;
  std::vector<int> counts;

  if (strategy == PromptStrategy::DIRECT) {
    // Last bracketed integer list of exactly R entries.
    static const std::regex list_re(R"(\[\s*-?\d+(?:\s*,\s*-?\d+)*\s*\])");
    static const std::regex int_re(R"(-?\d+)");
    std::string best;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), list_re);
         it != std::sregex_iterator(); ++it) {
      const std::string candidate = it->str();
      int n = 0;
      for (auto ii = std::sregex_iterator(candidate.begin(), candidate.end(), int_re);
           ii != std::sregex_iterator(); ++ii) {
        ++n;
      }
      if (n == R) best = candidate;
    }
    if (best.empty()) {
      out.error_span = text.substr(0, std::min<std::size_t>(text.size(), 120));
      return out;
    }
    for (auto ii = std::sregex_iterator(best.begin(), best.end(), int_re);
         ii != std::sregex_iterator(); ++ii) {
      counts.push_back(std::stoi(ii->str()));
    }
  } else {
    // The trailing ": n" of each "* [...]" line, in order.
    static const std::regex line_re(R"(^\s*\*\s*\[.*\]\s*:\s*(-?\d+)\s*$)");
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      std::smatch m;
      if (std::regex_match(line, m, line_re)) counts.push_back(std::stoi(m[1].str()));
    }
    if (static_cast<int>(counts.size()) != R) {
      out.error_span = text.substr(0, std::min<std::size_t>(text.size(), 120));
      return out;
    }
  }

  for (int c : counts) {
    if (c < 0) {
      out.error_span = "negative count in reply";
      return out;
    }
  }
  out.counts = std::move(counts);
  return out;
}

namespace {

struct Endpoint {
  std::string base;  // scheme://host:port
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("endpoint must start with http:// or https://");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

ProbeReport run_probe(const PromptSpec& spec, const std::string& endpoint,
                      const std::string& credentials_env,
                      const std::string& transcript_path) {
  spec.validate();
  const Endpoint ep = split_endpoint(endpoint);
  httplib::Client client(ep.base);
  client.set_connection_timeout(30);
  client.set_read_timeout(120);
  httplib::Headers headers;
  if (!credentials_env.empty()) {
    if (const char* key = std::getenv(credentials_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  std::ofstream transcript(transcript_path, std::ios::app);
  if (!transcript) {
    throw std::runtime_error("cannot open transcript file '" + transcript_path + "'");
  }

  ProbeReport report;
  report.transcript_path = transcript_path;

  for (int length : spec.lengths) {
    GenConfig gen;
    gen.T = length;
    gen.R = spec.R;
    gen.use_bos = false;
    std::mt19937_64 rng(spec.seed * 0x2545f4914f6cdd1dULL +
                        static_cast<std::uint64_t>(length));
    std::vector<Sample> few_shot;
    for (int i = 0; i < spec.k_shot; ++i) few_shot.push_back(generate(gen, rng));

    ProbeCell cell;
    cell.strategy = to_string(spec.strategy);
    cell.length = length;
    cell.region_accuracy.assign(static_cast<std::size_t>(spec.R), 0.0);
    cell.region_mae.assign(static_cast<std::size_t>(spec.R), 0.0);
    std::vector<long> region_hits(static_cast<std::size_t>(spec.R), 0);
    std::vector<double> region_abs(static_cast<std::size_t>(spec.R), 0.0);
    long n_scored = 0, n_parsed = 0;

    for (int i = 0; i < spec.eval_n; ++i) {
      const Sample test = generate(gen, rng);
      const std::vector<Message> messages = build_prompt(spec, few_shot, test);

      json body;
      body["model"] = spec.model;
      body["temperature"] = spec.temperature;
      for (const Message& m : messages) {
        body["messages"].push_back({{"role", m.role}, {"content", m.content}});
      }

      std::string reply;
      bool got_reply = false;
      std::string transport_error;
      for (int attempt = 0; attempt < 3 && !got_reply; ++attempt) {
        auto res = client.Post(ep.path, headers, body.dump(), "application/json");
        if (!res) {
          transport_error = httplib::to_string(res.error());
          continue;
        }
        if (res->status != 200) {
          transport_error = "http status " + std::to_string(res->status);
          continue;
        }
        try {
          const json parsed = json::parse(res->body);
          reply = parsed.at("choices").at(0).at("message").at("content")
                      .get<std::string>();
          got_reply = true;
        } catch (const std::exception& e) {
          transport_error = std::string("bad response body: ") + e.what();
        }
      }

      json entry;
      entry["strategy"] = cell.strategy;
      entry["length"] = length;
      entry["index"] = i;
      entry["targets"] = test.targets;
      for (const Message& m : messages) {
        entry["messages"].push_back({{"role", m.role}, {"content", m.content}});
      }

      if (!got_reply) {
        ++cell.n_probe_errors;
        entry["error"] = transport_error;
        transcript << entry.dump() << "\n" << std::flush;
        continue;
      }
      entry["response"] = reply;

      const ParsedCounts parsed = parse_response(spec.strategy, reply, spec.R);
      ++n_scored;
      if (parsed.ok()) {
        ++n_parsed;
        entry["parsed"] = *parsed.counts;
        for (int r = 0; r < spec.R; ++r) {
          const int got = (*parsed.counts)[static_cast<std::size_t>(r)];
          const int want = test.targets[static_cast<std::size_t>(r)];
          if (got == want) ++region_hits[static_cast<std::size_t>(r)];
          region_abs[static_cast<std::size_t>(r)] += std::abs(got - want);
        }
      } else {
        ++cell.n_parse_failures;
        entry["parse_error"] = parsed.error_span;
      }
      transcript << entry.dump() << "\n" << std::flush;
    }

    cell.n_samples = static_cast<int>(n_scored);
    if (n_scored > 0) {
      long total_hits = 0;
      for (int r = 0; r < spec.R; ++r) {
        cell.region_accuracy[static_cast<std::size_t>(r)] =
            static_cast<double>(region_hits[static_cast<std::size_t>(r)]) / n_scored;
        total_hits += region_hits[static_cast<std::size_t>(r)];
      }
      cell.accuracy = static_cast<double>(total_hits) / (n_scored * spec.R);
    }
    if (n_parsed > 0) {
      double total_abs = 0.0;
      for (int r = 0; r < spec.R; ++r) {
        cell.region_mae[static_cast<std::size_t>(r)] =
            region_abs[static_cast<std::size_t>(r)] / static_cast<double>(n_parsed);
        total_abs += region_abs[static_cast<std::size_t>(r)];
      }
      cell.mae = total_abs / static_cast<double>(n_parsed * spec.R);
    }
    report.cells.push_back(std::move(cell));
  }
  return report;
}

}  // namespace ccount
