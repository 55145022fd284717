#include "ccount/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ccount {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

std::string to_string(PosEnc pe) {
  switch (pe) {
    case PosEnc::NOPE: return "nope";
    case PosEnc::ABS: return "abs";
    case PosEnc::ROPE: return "rope";
    case PosEnc::ALIBI: return "alibi";
  }
  throw std::logic_error("to_string: bad PosEnc");
}

PosEnc pos_enc_from_string(const std::string& s) {
  if (s == "nope") return PosEnc::NOPE;
  if (s == "abs") return PosEnc::ABS;
  if (s == "rope") return PosEnc::ROPE;
  if (s == "alibi") return PosEnc::ALIBI;
  throw std::invalid_argument("unknown positional encoding '" + s + "'");
}

void ModelConfig::validate() const {
  if (d_model < 1 || d_head < 1 || d_mlp < 1) {
    throw std::invalid_argument("ModelConfig: widths must be positive");
  }
  if (pe == PosEnc::ROPE && d_head % 2 != 0) {
    throw std::invalid_argument("ModelConfig: d_head must be even with RoPE");
  }
  if (n_classes < 2) throw std::invalid_argument("ModelConfig: n_classes too small");
  if (R_max < 1) throw std::invalid_argument("ModelConfig: R_max must be >= 1");
  if (alibi_slope <= 0.0) throw std::invalid_argument("ModelConfig: alibi_slope must be > 0");
  if (rope_base <= 0.0) throw std::invalid_argument("ModelConfig: rope_base must be > 0");
}

std::vector<std::pair<std::string, Tensor*>> Params::named() {
  std::vector<std::pair<std::string, Tensor*>> all = {
      {"tok_emb", &tok_emb},   {"prompt_emb", &prompt_emb}, {"pos_emb", &pos_emb},
      {"enc_wq", &enc_wq},     {"enc_wk", &enc_wk},         {"enc_wv", &enc_wv},
      {"enc_wo", &enc_wo},     {"enc_w1", &enc_w1},         {"enc_b1", &enc_b1},
      {"enc_w2", &enc_w2},     {"enc_b2", &enc_b2},         {"dec_wq", &dec_wq},
      {"dec_wk", &dec_wk},     {"dec_wv", &dec_wv},         {"dec_wo", &dec_wo},
      {"dec_w1", &dec_w1},     {"dec_b1", &dec_b1},         {"dec_w2", &dec_w2},
      {"dec_b2", &dec_b2},     {"unembed", &unembed}};
  std::vector<std::pair<std::string, Tensor*>> defined;
  for (auto& [name, t] : all) {
    if (t->defined()) defined.emplace_back(name, t);
  }
  return defined;
}

std::vector<std::pair<std::string, const Tensor*>> Params::named() const {
  auto mutable_named = const_cast<Params*>(this)->named();
  std::vector<std::pair<std::string, const Tensor*>> out;
  out.reserve(mutable_named.size());
  for (auto& [name, t] : mutable_named) out.emplace_back(name, t);
  return out;
}

void Params::set_requires_grad(bool v) {
  for (auto& [name, t] : named()) t->set_requires_grad(v);
}

void Params::zero_grad() {
  for (auto& [name, t] : named()) t->zero_grad();
}

namespace {

// Zero-filled parameter set with the shapes implied by cfg.
Params alloc_params(const ModelConfig& cfg) {
  Params p;
  p.tok_emb = Tensor({kVocabSize, cfg.d_model});
  p.prompt_emb = Tensor({cfg.R_max, cfg.d_model});
  if (cfg.pe == PosEnc::ABS) p.pos_emb = Tensor({cfg.max_T + 1, cfg.d_model});
  p.enc_wq = Tensor({cfg.d_model, cfg.d_head});
  p.enc_wk = Tensor({cfg.d_model, cfg.d_head});
  p.enc_wv = Tensor({cfg.d_model, cfg.d_head});
  p.enc_wo = Tensor({cfg.d_head, cfg.d_model});
  if (cfg.encoder_mlp) {
    p.enc_w1 = Tensor({cfg.d_model, cfg.d_mlp});
    p.enc_b1 = Tensor({cfg.d_mlp});
    p.enc_w2 = Tensor({cfg.d_mlp, cfg.d_model});
    p.enc_b2 = Tensor({cfg.d_model});
  }
  p.dec_wq = Tensor({cfg.d_model, cfg.d_head});
  p.dec_wk = Tensor({cfg.d_model, cfg.d_head});
  p.dec_wv = Tensor({cfg.d_model, cfg.d_head});
  p.dec_wo = Tensor({cfg.d_head, cfg.d_model});
  if (cfg.decoder_mlp) {
    p.dec_w1 = Tensor({cfg.d_model, cfg.d_mlp});
    p.dec_b1 = Tensor({cfg.d_mlp});
    p.dec_w2 = Tensor({cfg.d_mlp, cfg.d_model});
    p.dec_b2 = Tensor({cfg.d_model});
  }
  p.unembed = Tensor({cfg.d_model, cfg.n_classes});
  return p;
}

bool is_bias(const std::string& name) {
  return name == "enc_b1" || name == "enc_b2" || name == "dec_b1" ||
         name == "dec_b2";
}

}  // namespace

Params init(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Params p = alloc_params(cfg);
  std::mt19937_64 rng(seed);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& [name, t] : p.named()) {
    if (is_bias(name)) continue;
    for (double& v : t->vec()) v = dist(rng);
  }
  return p;
}

Tensor causal_mask(int T) {
  Tensor m({T, T});
  for (int i = 0; i < T; ++i) {
    for (int j = i + 1; j < T; ++j) m(i, j) = kNegInf;
  }
  return m;
}

Tensor alibi_bias(int T, double slope, bool causal) {
  if (slope <= 0.0) throw std::invalid_argument("alibi_bias: slope must be > 0");
  Tensor b({T, T});
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j < T; ++j) {
      if (causal) {
        b(i, j) = (j <= i) ? -slope * (i - j) : kNegInf;
      } else {
        b(i, j) = -slope * std::abs(i - j);
      }
    }
  }
  return b;
}

namespace {

Tensor mlp_block(const Tensor& x, const Tensor& w1, const Tensor& b1,
                 const Tensor& w2, const Tensor& b2) {
  return add(x, add_row_vector(matmul(gelu(add_row_vector(matmul(x, w1), b1)), w2), b2));
}

}  // namespace

Tensor forward(const ModelConfig& cfg, const Params& params, const Sample& sample,
               AttentionCapture* capture) {
  cfg.validate();
  if (cfg.use_bos != sample.has_bos()) {
    throw std::invalid_argument(cfg.use_bos
                                    ? "forward: config expects a BOS token"
                                    : "forward: config expects no BOS token");
  }
  const int T = static_cast<int>(sample.tokens.size());
  const int R = static_cast<int>(sample.prompt.size());
  if (R < 1) throw std::invalid_argument("forward: empty prompt");
  for (int r : sample.prompt) {
    if (r < 0 || r >= cfg.R_max) {
      throw std::invalid_argument("forward: prompt label " + std::to_string(r) +
                                  " exceeds R_max=" + std::to_string(cfg.R_max));
    }
  }
  std::vector<int> codes(static_cast<std::size_t>(T));
  std::vector<int> positions(static_cast<std::size_t>(T));
  for (int i = 0; i < T; ++i) {
    codes[static_cast<std::size_t>(i)] = code(sample.tokens[static_cast<std::size_t>(i)]);
    positions[static_cast<std::size_t>(i)] = i;
  }
  if (cfg.pe == PosEnc::ABS && T > params.pos_emb.rows()) {
    throw std::length_error("forward: sequence length " + std::to_string(T) +
                            " exceeds ABS table size " +
                            std::to_string(params.pos_emb.rows()));
  }

  const double att_scale = 1.0 / std::sqrt(static_cast<double>(cfg.d_head));

  // Encoder.
  Tensor x = embedding(params.tok_emb, codes);
  if (cfg.pe == PosEnc::ABS) x = add(x, embedding(params.pos_emb, positions));
  Tensor q = matmul(x, params.enc_wq);
  Tensor k = matmul(x, params.enc_wk);
  if (cfg.pe == PosEnc::ROPE) {
    q = rope_rotate(q, positions, cfg.rope_base);
    k = rope_rotate(k, positions, cfg.rope_base);
  }
  Tensor att_logits = scale(matmul_nt(q, k), att_scale);
  if (cfg.pe == PosEnc::ALIBI) {
    att_logits = add(att_logits, alibi_bias(T, cfg.alibi_slope, cfg.causal_encoder));
  } else if (cfg.causal_encoder) {
    att_logits = add(att_logits, causal_mask(T));
  }
  Tensor att = softmax_rows(att_logits);
  Tensor enc_attn_out = matmul(matmul(att, matmul(x, params.enc_wv)), params.enc_wo);
  Tensor y = add(x, enc_attn_out);
  if (capture != nullptr) {
    capture->enc_pre_softmax = att_logits;
    capture->enc_post_softmax = att;
    capture->enc_latents = y;
  }
  if (cfg.encoder_mlp) {
    y = mlp_block(y, params.enc_w1, params.enc_b1, params.enc_w2, params.enc_b2);
  }
  if (capture != nullptr) capture->enc_output = y;

  // Decoder: prompt embeddings as queries over the encoder output.
  Tensor p = embedding(params.prompt_emb, sample.prompt);
  Tensor qd = matmul(p, params.dec_wq);
  Tensor kd = matmul(y, params.dec_wk);
  Tensor vd = matmul(y, params.dec_wv);
  Tensor cross_logits = scale(matmul_nt(qd, kd), att_scale);
  Tensor cross_att = softmax_rows(cross_logits);
  Tensor d = add(p, matmul(matmul(cross_att, vd), params.dec_wo));
  if (cfg.decoder_mlp) {
    d = mlp_block(d, params.dec_w1, params.dec_b1, params.dec_w2, params.dec_b2);
  }
  Tensor logits = matmul(d, params.unembed);

  if (capture != nullptr) {
    capture->dec_pre_softmax = cross_logits;
    capture->dec_post_softmax = cross_att;
    capture->dec_keys = kd;
    capture->dec_values = vd;
    capture->logits = logits;
  }
  return logits;
}

Tensor token_type_logit_matrix(const ModelConfig& cfg, const Params& params) {
  if (cfg.pe != PosEnc::NOPE) {
    throw std::invalid_argument(
        "token_type_logit_matrix: layer-1 logits are position-free only with NoPE");
  }
  const int v = cfg.use_bos ? kVocabSize : kVocabSize - 1;
  std::vector<int> types(static_cast<std::size_t>(v));
  for (int i = 0; i < v; ++i) types[static_cast<std::size_t>(i)] = i;
  Tensor e = embedding(params.tok_emb, types);
  Tensor q = matmul(e, params.enc_wq);
  Tensor k = matmul(e, params.enc_wk);
  return scale(matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(cfg.d_head)));
}

// --- checkpoint io: magic, key=value config text, then named f64 arrays ---

namespace {

constexpr char kMagic[8] = {'C', 'C', 'K', 'P', 'T', '0', '0', '1'};

std::string config_text(const ModelConfig& cfg) {
  std::ostringstream os;
  os << "d_model=" << cfg.d_model << "\n"
     << "d_head=" << cfg.d_head << "\n"
     << "d_mlp=" << cfg.d_mlp << "\n"
     << "pe=" << to_string(cfg.pe) << "\n"
     << "causal_encoder=" << (cfg.causal_encoder ? 1 : 0) << "\n"
     << "use_bos=" << (cfg.use_bos ? 1 : 0) << "\n"
     << "encoder_mlp=" << (cfg.encoder_mlp ? 1 : 0) << "\n"
     << "decoder_mlp=" << (cfg.decoder_mlp ? 1 : 0) << "\n"
     << "n_classes=" << cfg.n_classes << "\n"
     << "max_T=" << cfg.max_T << "\n"
     << "alibi_slope=" << std::hexfloat << cfg.alibi_slope << "\n"
     << "rope_base=" << std::hexfloat << cfg.rope_base << "\n"
     << "R_max=" << cfg.R_max << "\n";
  return os.str();
}

ModelConfig config_from_text(const std::string& text) {
  ModelConfig cfg;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("checkpoint: bad config line '" + line + "'");
    }
    const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "d_model") cfg.d_model = std::stoi(val);
    else if (key == "d_head") cfg.d_head = std::stoi(val);
    else if (key == "d_mlp") cfg.d_mlp = std::stoi(val);
    else if (key == "pe") cfg.pe = pos_enc_from_string(val);
    else if (key == "causal_encoder") cfg.causal_encoder = std::stoi(val) != 0;
    else if (key == "use_bos") cfg.use_bos = std::stoi(val) != 0;
    else if (key == "encoder_mlp") cfg.encoder_mlp = std::stoi(val) != 0;
    else if (key == "decoder_mlp") cfg.decoder_mlp = std::stoi(val) != 0;
    else if (key == "n_classes") cfg.n_classes = std::stoi(val);
    else if (key == "max_T") cfg.max_T = std::stoi(val);
    else if (key == "alibi_slope") cfg.alibi_slope = std::strtod(val.c_str(), nullptr);
    else if (key == "rope_base") cfg.rope_base = std::strtod(val.c_str(), nullptr);
    else if (key == "R_max") cfg.R_max = std::stoi(val);
    else throw std::invalid_argument("checkpoint: unknown config key '" + key + "'");
  }
  return cfg;
}

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                     const Params& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
  os.write(kMagic, sizeof(kMagic));
  const std::string header = config_text(cfg);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(header.size()));
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  const auto named = params.named();
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(named.size()));
  for (const auto& [name, t] : named) {
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(t->shape().size()));
    for (int d : t->shape()) write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(d));
    os.write(reinterpret_cast<const char*>(t->data()),
             static_cast<std::streamsize>(t->size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

std::pair<ModelConfig, Params> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  }
  const auto header_len = read_pod<std::uint32_t>(is);
  std::string header(header_len, '\0');
  is.read(header.data(), header_len);
  const ModelConfig cfg = config_from_text(header);
  Params params = alloc_params(cfg);
  auto named = params.named();
  const auto n_arrays = read_pod<std::uint32_t>(is);
  for (std::uint32_t a = 0; a < n_arrays; ++a) {
    const auto name_len = read_pod<std::uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const auto ndim = read_pod<std::uint32_t>(is);
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = static_cast<int>(read_pod<std::uint64_t>(is));
    Tensor* target = nullptr;
    for (auto& [n, t] : named) {
      if (n == name) target = t;
    }
    if (target == nullptr) {
      throw std::runtime_error("load_checkpoint: unexpected array '" + name + "'");
    }
    if (target->shape() != shape) {
      throw std::runtime_error("load_checkpoint: shape mismatch for '" + name + "'");
    }
    is.read(reinterpret_cast<char*>(target->data()),
            static_cast<std::streamsize>(target->size() * sizeof(double)));
    if (!is) throw std::runtime_error("load_checkpoint: truncated array '" + name + "'");
  }
  return {cfg, std::move(params)};
}

}  // namespace ccount
