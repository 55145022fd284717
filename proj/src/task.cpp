#include "ccount/task.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ccount {

void GenConfig::validate() const {
  if (R < 1) throw std::invalid_argument("GenConfig: R must be >= 1");
  if (T < 2 * R) {
    throw std::invalid_argument("GenConfig: T=" + std::to_string(T) +
                                " too short for R=" + std::to_string(R) +
                                " regions (need T >= 2R)");
  }
  if (p_one < 0.0 || p_one > 1.0) {
    throw std::invalid_argument("GenConfig: p_one must be in [0,1]");
  }
}

Sample generate(const GenConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  // 2R distinct bracket positions, uniform over {0..T-1}, paired in order.
  std::vector<int> pos(static_cast<std::size_t>(cfg.T));
  for (int i = 0; i < cfg.T; ++i) pos[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < 2 * cfg.R; ++i) {
    std::uniform_int_distribution<int> d(i, cfg.T - 1);
    std::swap(pos[static_cast<std::size_t>(i)], pos[static_cast<std::size_t>(d(rng))]);
  }
  std::vector<int> brackets(pos.begin(), pos.begin() + 2 * cfg.R);
  std::sort(brackets.begin(), brackets.end());

  Sample s;
  s.tokens.assign(static_cast<std::size_t>(cfg.T), Token::ZERO);
  std::bernoulli_distribution coin(cfg.p_one);
  std::vector<bool> is_bracket(static_cast<std::size_t>(cfg.T), false);
  for (int b : brackets) is_bracket[static_cast<std::size_t>(b)] = true;
  for (int i = 0; i < cfg.T; ++i) {
    if (!is_bracket[static_cast<std::size_t>(i)]) {
      s.tokens[static_cast<std::size_t>(i)] = coin(rng) ? Token::ONE : Token::ZERO;
    }
  }
  for (int r = 0; r < cfg.R; ++r) {
    const int open = brackets[static_cast<std::size_t>(2 * r)];
    const int close = brackets[static_cast<std::size_t>(2 * r + 1)];
    s.tokens[static_cast<std::size_t>(open)] = Token::LBRACK;
    s.tokens[static_cast<std::size_t>(close)] = Token::RBRACK;
  }
  if (cfg.use_bos) s.tokens.insert(s.tokens.begin(), Token::BOS);

  s.targets = count_ones_oracle(s.tokens);
  const int offset = cfg.use_bos ? 1 : 0;
  for (int r = 0; r < cfg.R; ++r) {
    s.regions.emplace_back(brackets[static_cast<std::size_t>(2 * r)] + offset,
                           brackets[static_cast<std::size_t>(2 * r + 1)] + offset);
    s.prompt.push_back(r);
  }
  return s;
}

Sample generate(const GenConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  return generate(cfg, rng);
}

std::vector<int> count_ones_oracle(const std::vector<Token>& tokens) {
  std::vector<int> counts;
  bool inside = false;
  int current = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    switch (tokens[i]) {
      case Token::LBRACK:
        if (inside) {
          throw std::invalid_argument("count_ones_oracle: nested '[' at position " +
                                      std::to_string(i));
        }
        inside = true;
        current = 0;
        break;
      case Token::RBRACK:
        if (!inside) {
          throw std::invalid_argument("count_ones_oracle: unmatched ']' at position " +
                                      std::to_string(i));
        }
        inside = false;
        counts.push_back(current);
        break;
      case Token::ONE:
        if (inside) ++current;
        break;
      default:
        break;
    }
  }
  if (inside) throw std::invalid_argument("count_ones_oracle: unclosed '['");
  return counts;
}

std::vector<int> contextual_position(const std::vector<Token>& tokens) {
  std::vector<int> cp(tokens.size(), kNoRegion);
  bool inside = false;
  int region = -1;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    switch (tokens[i]) {
      case Token::LBRACK:
        if (inside) {
          throw std::invalid_argument("contextual_position: nested '[' at position " +
                                      std::to_string(i));
        }
        inside = true;
        ++region;
        cp[i] = region;
        break;
      case Token::RBRACK:
        if (!inside) {
          throw std::invalid_argument("contextual_position: unmatched ']' at position " +
                                      std::to_string(i));
        }
        inside = false;
        cp[i] = region;
        break;
      default:
        if (inside) cp[i] = region;
        break;
    }
  }
  if (inside) throw std::invalid_argument("contextual_position: unclosed '['");
  return cp;
}

std::string cp_to_string(const std::vector<int>& cp) {
  std::string out;
  for (std::size_t i = 0; i < cp.size(); ++i) {
    if (i) out += ' ';
    out += (cp[i] == kNoRegion) ? "-" : std::to_string(cp[i] + 1);
  }
  return out;
}

namespace {
char token_char(Token t) {
  switch (t) {
    case Token::ZERO: return '0';
    case Token::ONE: return '1';
    case Token::LBRACK: return '[';
    case Token::RBRACK: return ']';
    case Token::BOS: return 'B';
  }
  throw std::logic_error("token_char: bad token");
}
}  // namespace

std::string to_text(const Sample& s) {
  std::string out;
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    if (i) out += ' ';
    out += token_char(s.tokens[i]);
  }
  return out;
}

Sample from_text(const std::string& line) {
  Sample s;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    switch (c) {
      case '0': s.tokens.push_back(Token::ZERO); break;
      case '1': s.tokens.push_back(Token::ONE); break;
      case '[': s.tokens.push_back(Token::LBRACK); break;
      case ']': s.tokens.push_back(Token::RBRACK); break;
      case 'B': s.tokens.push_back(Token::BOS); break;
      case ' ': case '\t': case '\r': break;
      default:
        throw std::invalid_argument(std::string("from_text: unknown character '") +
                                    c + "' at column " + std::to_string(i));
    }
  }
  s.targets = count_ones_oracle(s.tokens);
  const auto cp = contextual_position(s.tokens);
  const int R = static_cast<int>(s.targets.size());
  s.regions.assign(static_cast<std::size_t>(R), {-1, -1});
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    if (s.tokens[i] == Token::LBRACK) s.regions[static_cast<std::size_t>(cp[i])].first = static_cast<int>(i);
    if (s.tokens[i] == Token::RBRACK) s.regions[static_cast<std::size_t>(cp[i])].second = static_cast<int>(i);
  }
  for (int r = 0; r < R; ++r) s.prompt.push_back(r);
  return s;
}

void write_dataset(std::ostream& os, const GenConfig& cfg,
                   const std::vector<Sample>& samples) {
  os << "T=" << cfg.T << " R=" << cfg.R << " p_one=" << cfg.p_one
     << " use_bos=" << (cfg.use_bos ? 1 : 0) << " seed=" << cfg.seed << "\n";
  for (const Sample& s : samples) os << to_text(s) << "\n";
}

std::pair<GenConfig, std::vector<Sample>> read_dataset(std::istream& is) {
  GenConfig cfg;
  std::string header;
  if (!std::getline(is, header)) {
    throw std::invalid_argument("read_dataset: missing header line");
  }
  std::istringstream hs(header);
  std::string kv;
  while (hs >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("read_dataset: bad header field '" + kv + "'");
    }
    const std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
    if (key == "T") cfg.T = std::stoi(val);
    else if (key == "R") cfg.R = std::stoi(val);
    else if (key == "p_one") cfg.p_one = std::stod(val);
    else if (key == "use_bos") cfg.use_bos = std::stoi(val) != 0;
    else if (key == "seed") cfg.seed = std::stoull(val);
    else throw std::invalid_argument("read_dataset: unknown header key '" + key + "'");
  }
  std::vector<Sample> samples;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty()) samples.push_back(from_text(line));
  }
  return {cfg, samples};
}

Sample make_count_probe_sample(int T, int R, int r, int n, bool use_bos) {
  if (r < 0 || r >= R) throw std::invalid_argument("make_count_probe_sample: bad region index");
  const int block = T / R;
  if (n > block - 2) {
    throw std::invalid_argument("make_count_probe_sample: n=" + std::to_string(n) +
                                " does not fit in a region of interior size " +
                                std::to_string(block - 2));
  }
  Sample s;
  s.tokens.assign(static_cast<std::size_t>(T), Token::ZERO);
  for (int k = 0; k < R; ++k) {
    const int open = k * block;
    const int close = k * block + block - 1;
    s.tokens[static_cast<std::size_t>(open)] = Token::LBRACK;
    s.tokens[static_cast<std::size_t>(close)] = Token::RBRACK;
    if (k == r) {
      for (int j = 0; j < n; ++j) {
        s.tokens[static_cast<std::size_t>(open + 1 + j)] = Token::ONE;
      }
    }
    s.regions.emplace_back(open, close);
    s.prompt.push_back(k);
  }
  if (use_bos) {
    s.tokens.insert(s.tokens.begin(), Token::BOS);
    for (auto& reg : s.regions) {
      ++reg.first;
      ++reg.second;
    }
  }
  s.targets = count_ones_oracle(s.tokens);
  return s;
}

}  // namespace ccount
