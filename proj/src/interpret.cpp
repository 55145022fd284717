#include "ccount/interpret.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "ccount/svg.hpp"

namespace ccount {

namespace {

using json = nlohmann::json;

std::vector<double> tensor_row(const Tensor& t, int row) {
  std::vector<double> out(static_cast<std::size_t>(t.cols()));
  for (int j = 0; j < t.cols(); ++j) out[static_cast<std::size_t>(j)] = t(row, j);
  return out;
}

// v (length = t.rows()) times matrix t.
std::vector<double> vec_mat(const std::vector<double>& v, const Tensor& t) {
  if (static_cast<int>(v.size()) != t.rows()) {
    throw std::invalid_argument("vec_mat: dimension mismatch");
  }
  std::vector<double> out(static_cast<std::size_t>(t.cols()), 0.0);
  for (int i = 0; i < t.rows(); ++i) {
    for (int j = 0; j < t.cols(); ++j) {
      out[static_cast<std::size_t>(j)] += v[static_cast<std::size_t>(i)] * t(i, j);
    }
  }
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> softmax_vec(const std::vector<double>& x) {
  const double mx = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) z += (out[i] = std::exp(x[i] - mx));
  for (double& v : out) v /= z;
  return out;
}

}  // namespace

PCAProjection pca(const std::vector<std::vector<double>>& points, int q) {
  const int n = static_cast<int>(points.size());
  if (n < 2) throw std::invalid_argument("pca: need at least 2 points");
  const int d = static_cast<int>(points[0].size());
  if (q < 1 || q > d) throw std::invalid_argument("pca: need 1 <= q <= dim");

  Eigen::MatrixXd X(n, d);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(points[static_cast<std::size_t>(i)].size()) != d) {
      throw std::invalid_argument("pca: ragged point set");
    }
    for (int j = 0; j < d; ++j) X(i, j) = points[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  const Eigen::RowVectorXd mean = X.colwise().mean();
  X.rowwise() -= mean;
  const Eigen::MatrixXd cov = (X.transpose() * X) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const Eigen::VectorXd evals = es.eigenvalues();  // ascending
  const Eigen::MatrixXd evecs = es.eigenvectors();
  const double total = std::max(evals.sum(), 1e-300);

  PCAProjection out;
  out.mean.assign(mean.data(), mean.data() + d);
  for (int k = 0; k < q; ++k) {
    const int idx = d - 1 - k;
    std::vector<double> comp(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) comp[static_cast<std::size_t>(j)] = evecs(j, idx);
    out.components.push_back(std::move(comp));
    out.variance_share.push_back(std::max(evals(idx), 0.0) / total);
  }
  out.coords.assign(static_cast<std::size_t>(n),
                    std::vector<double>(static_cast<std::size_t>(q), 0.0));
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < q; ++k) {
      double c = 0.0;
      for (int j = 0; j < d; ++j) c += X(i, j) * out.components[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
      out.coords[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = c;
    }
  }
  return out;
}

LabeledPoints one_token_latents(const ModelConfig& cfg, const Params& params,
                                const std::vector<Sample>& samples) {
  LabeledPoints out;
  for (const Sample& s : samples) {
    AttentionCapture cap;
    forward(cfg, params, s, &cap);
    const std::vector<int> cp = contextual_position(s.tokens);
    bool region_seen = false;
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      if (s.tokens[i] == Token::LBRACK) region_seen = true;
      if (s.tokens[i] != Token::ONE) continue;
      int label = cp[i];
      if (label == kNoRegion) label = region_seen ? kInterRegion : kPreRegion;
      out.points.push_back(tensor_row(cap.enc_latents, static_cast<int>(i)));
      out.labels.push_back(label);
    }
  }
  return out;
}

CrossAttentionProfile cross_attention_profile(const ModelConfig& cfg,
                                              const Params& params,
                                              const Sample& sample, int r) {
  if (r < 0 || r >= static_cast<int>(sample.prompt.size())) {
    throw std::invalid_argument("cross_attention_profile: region out of range");
  }
  AttentionCapture cap;
  forward(cfg, params, sample, &cap);
  CrossAttentionProfile out;
  out.region = r;
  out.weights = tensor_row(cap.dec_post_softmax, r);
  out.tokens = sample.tokens;
  out.cp = contextual_position(sample.tokens);
  return out;
}

EffectiveValueCurves effective_values(const ModelConfig& cfg, const Params& params,
                                      const std::vector<Sample>& samples, int r) {
  if (cfg.decoder_mlp) {
    throw std::invalid_argument(
        "effective_values: unsupported with a decoder MLP (output is not "
        "linear in the attended values)");
  }
  if (samples.empty()) throw std::invalid_argument("effective_values: no samples");
  if (r < 0 || r >= cfg.R_max) {
    throw std::invalid_argument("effective_values: region out of range");
  }

  std::vector<std::vector<double>> mean_out(
      kVocabSize, std::vector<double>(static_cast<std::size_t>(cfg.d_model), 0.0));
  std::vector<long> counts(kVocabSize, 0);
  for (const Sample& s : samples) {
    AttentionCapture cap;
    forward(cfg, params, s, &cap);
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      const int t = code(s.tokens[i]);
      ++counts[static_cast<std::size_t>(t)];
      for (int j = 0; j < cfg.d_model; ++j) {
        mean_out[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] +=
            cap.enc_output(static_cast<int>(i), j);
      }
    }
  }

  EffectiveValueCurves curves;
  curves.prompt = r;
  if (cfg.use_bos) {
    curves.bias_token = code(Token::BOS);
    curves.n_bias = 1;
  } else {
    curves.bias_token = code(Token::RBRACK);
    curves.n_bias = static_cast<int>(samples.front().prompt.size());
  }
  const std::vector<double> prompt_row = tensor_row(params.prompt_emb, r);
  const std::vector<double> query = vec_mat(prompt_row, params.dec_wq);
  curves.prompt_logit = vec_mat(prompt_row, params.unembed);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(cfg.d_head));

  for (int t = 0; t < kVocabSize; ++t) {
    curves.present.push_back(counts[static_cast<std::size_t>(t)] > 0);
    if (counts[static_cast<std::size_t>(t)] > 0) {
      for (double& v : mean_out[static_cast<std::size_t>(t)]) {
        v /= static_cast<double>(counts[static_cast<std::size_t>(t)]);
      }
    }
    const auto& m = mean_out[static_cast<std::size_t>(t)];
    std::vector<double> val = vec_mat(vec_mat(vec_mat(m, params.dec_wv), params.dec_wo),
                                      params.unembed);
    curves.v_eff.push_back(std::move(val));
    curves.attn_logit.push_back(dot(query, vec_mat(m, params.dec_wk)) * inv_sqrt);
  }
  return curves;
}

std::vector<double> closed_form_predictor(const EffectiveValueCurves& curves, int n) {
  if (n < 0) throw std::invalid_argument("closed_form_predictor: n must be >= 0");
  const int one = code(Token::ONE);
  const int bias = curves.bias_token;
  const double l1 = curves.attn_logit[static_cast<std::size_t>(one)];
  const double lB = curves.attn_logit[static_cast<std::size_t>(bias)];
  // Normalize over exactly n ONE carriers and n_bias bias carriers.
  const double m = std::max(l1, lB);
  const double z = n * std::exp(l1 - m) + curves.n_bias * std::exp(lB - m);
  const double a1 = std::exp(l1 - m) / z;
  const double aB = std::exp(lB - m) / z;

  const auto& v1 = curves.v_eff[static_cast<std::size_t>(one)];
  const auto& vB = curves.v_eff[static_cast<std::size_t>(bias)];
  std::vector<double> logits(v1.size());
  for (std::size_t c = 0; c < v1.size(); ++c) {
    logits[c] = n * a1 * v1[c] + curves.n_bias * aB * vB[c];
    if (!curves.prompt_logit.empty()) logits[c] += curves.prompt_logit[c];
  }
  return softmax_vec(logits);
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("total_variation: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

AbsPEDecomposition abspe_decompose(const ModelConfig& cfg, const Params& params,
                                   int T) {
  if (cfg.pe != PosEnc::ABS) {
    throw std::invalid_argument("abspe_decompose: unsupported for pe != ABS");
  }
  if (T < 1 || T > params.pos_emb.rows()) {
    throw std::invalid_argument("abspe_decompose: T out of range of position table");
  }
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(cfg.d_head));
  const int V = kVocabSize;

  std::vector<std::vector<double>> tq(V), tk(V), pq(static_cast<std::size_t>(T)),
      pk(static_cast<std::size_t>(T));
  for (int t = 0; t < V; ++t) {
    tq[static_cast<std::size_t>(t)] = vec_mat(tensor_row(params.tok_emb, t), params.enc_wq);
    tk[static_cast<std::size_t>(t)] = vec_mat(tensor_row(params.tok_emb, t), params.enc_wk);
  }
  for (int i = 0; i < T; ++i) {
    pq[static_cast<std::size_t>(i)] = vec_mat(tensor_row(params.pos_emb, i), params.enc_wq);
    pk[static_cast<std::size_t>(i)] = vec_mat(tensor_row(params.pos_emb, i), params.enc_wk);
  }

  AbsPEDecomposition out;
  out.T = T;
  out.contextual.resize(static_cast<std::size_t>(V) * V);
  out.positional.resize(static_cast<std::size_t>(T) * T);
  out.tok_pos.resize(static_cast<std::size_t>(V) * T);
  out.pos_tok.resize(static_cast<std::size_t>(T) * V);
  for (int a = 0; a < V; ++a) {
    for (int b = 0; b < V; ++b) {
      out.contextual[static_cast<std::size_t>(a) * V + b] =
          dot(tq[static_cast<std::size_t>(a)], tk[static_cast<std::size_t>(b)]) * inv_sqrt;
    }
  }
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j < T; ++j) {
      out.positional[static_cast<std::size_t>(i) * T + j] =
          dot(pq[static_cast<std::size_t>(i)], pk[static_cast<std::size_t>(j)]) * inv_sqrt;
    }
  }
  for (int a = 0; a < V; ++a) {
    for (int j = 0; j < T; ++j) {
      out.tok_pos[static_cast<std::size_t>(a) * T + j] =
          dot(tq[static_cast<std::size_t>(a)], pk[static_cast<std::size_t>(j)]) * inv_sqrt;
    }
  }
  for (int i = 0; i < T; ++i) {
    for (int b = 0; b < V; ++b) {
      out.pos_tok[static_cast<std::size_t>(i) * V + b] =
          dot(pq[static_cast<std::size_t>(i)], tk[static_cast<std::size_t>(b)]) * inv_sqrt;
    }
  }
  return out;
}

double abspe_logit(const ModelConfig& cfg, const Params& params, Token q_tok,
                   int q_pos, Token k_tok, int k_pos) {
  if (cfg.pe != PosEnc::ABS) {
    throw std::invalid_argument("abspe_logit: unsupported for pe != ABS");
  }
  std::vector<double> xq = tensor_row(params.tok_emb, code(q_tok));
  std::vector<double> xk = tensor_row(params.tok_emb, code(k_tok));
  for (int j = 0; j < cfg.d_model; ++j) {
    xq[static_cast<std::size_t>(j)] += params.pos_emb(q_pos, j);
    xk[static_cast<std::size_t>(j)] += params.pos_emb(k_pos, j);
  }
  return dot(vec_mat(xq, params.enc_wq), vec_mat(xk, params.enc_wk)) /
         std::sqrt(static_cast<double>(cfg.d_head));
}

RopeSubspaceReport rope_subspace_decompose(const ModelConfig& cfg,
                                           const Params& params,
                                           const std::vector<Sample>& samples) {
  if (cfg.pe != PosEnc::ROPE) {
    throw std::invalid_argument("rope_subspace_decompose: unsupported for pe != ROPE");
  }
  if (samples.empty()) {
    throw std::invalid_argument("rope_subspace_decompose: no samples");
  }
  const int planes = cfg.d_head / 2;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(cfg.d_head));

  RopeSubspaceReport out;
  for (int p = 0; p < planes; ++p) {
    out.theta.push_back(std::pow(cfg.rope_base, -2.0 * p / cfg.d_head));
  }
  out.mean_abs.assign(static_cast<std::size_t>(planes), 0.0);

  long n_pairs = 0;
  for (const Sample& s : samples) {
    const int T = static_cast<int>(s.tokens.size());
    std::vector<int> positions(static_cast<std::size_t>(T));
    std::vector<int> codes(static_cast<std::size_t>(T));
    for (int i = 0; i < T; ++i) {
      positions[static_cast<std::size_t>(i)] = i;
      codes[static_cast<std::size_t>(i)] = code(s.tokens[static_cast<std::size_t>(i)]);
    }
    const Tensor x = embedding(params.tok_emb, codes);
    const Tensor q = rope_rotate(matmul(x, params.enc_wq), positions, cfg.rope_base);
    const Tensor k = rope_rotate(matmul(x, params.enc_wk), positions, cfg.rope_base);
    for (int i = 0; i < T; ++i) {
      const int j_hi = cfg.causal_encoder ? i + 1 : T;
      for (int j = 0; j < j_hi; ++j) {
        double total = 0.0;
        double full = 0.0;
        for (int p = 0; p < planes; ++p) {
          const double c = (q(i, 2 * p) * k(j, 2 * p) +
                            q(i, 2 * p + 1) * k(j, 2 * p + 1)) * inv_sqrt;
          out.mean_abs[static_cast<std::size_t>(p)] += std::abs(c);
          total += c;
        }
        for (int d = 0; d < cfg.d_head; ++d) full += q(i, d) * k(j, d);
        full *= inv_sqrt;
        out.max_reconstruction_error =
            std::max(out.max_reconstruction_error, std::abs(total - full));
        ++n_pairs;
      }
    }
  }
  for (double& v : out.mean_abs) v /= static_cast<double>(n_pairs);
  return out;
}

BiasTokenReport bias_token_report(const ModelConfig& cfg, const Params& params,
                                  const std::vector<Sample>& samples) {
  if (samples.empty()) throw std::invalid_argument("bias_token_report: no samples");
  std::vector<double> mass(kVocabSize, 0.0);
  long n_queries = 0;
  for (const Sample& s : samples) {
    AttentionCapture cap;
    forward(cfg, params, s, &cap);
    const std::vector<int> cp = contextual_position(s.tokens);
    for (int r = 0; r < static_cast<int>(s.prompt.size()); ++r) {
      ++n_queries;
      for (std::size_t i = 0; i < s.tokens.size(); ++i) {
        if (cp[i] == r) continue;
        mass[static_cast<std::size_t>(code(s.tokens[i]))] +=
            cap.dec_post_softmax(r, static_cast<int>(i));
      }
    }
  }

  BiasTokenReport report;
  for (int t = 0; t < kVocabSize; ++t) {
    report.ranked_mass.emplace_back(t, mass[static_cast<std::size_t>(t)] / n_queries);
  }
  std::stable_sort(report.ranked_mass.begin(), report.ranked_mass.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [t, m] : report.ranked_mass) {
    if (m > report.threshold) report.candidates.push_back(t);
  }
  const EffectiveValueCurves curves = effective_values(cfg, params, samples, 0);
  for (int t = 0; t < kVocabSize; ++t) {
    report.v_eff_norm.push_back(
        std::sqrt(dot(curves.v_eff[static_cast<std::size_t>(t)],
                      curves.v_eff[static_cast<std::size_t>(t)])));
  }
  return report;
}

LinearProbeReport linear_probe(const LabeledPoints& train, const LabeledPoints& test) {
  if (train.points.size() < 2) throw std::invalid_argument("linear_probe: too few points");
  std::map<int, int> class_id;
  for (int l : train.labels) class_id.emplace(l, 0);
  int next = 0;
  for (auto& [l, id] : class_id) id = next++;
  const int K = next;
  const int d = static_cast<int>(train.points[0].size());

  // One weight vector (with bias column) per unordered class pair, least
  // squares against +/-1 targets.
  std::vector<Eigen::VectorXd> w(static_cast<std::size_t>(K) * K);
  for (int a = 0; a < K; ++a) {
    for (int b = a + 1; b < K; ++b) {
      std::vector<int> rows;
      for (std::size_t i = 0; i < train.points.size(); ++i) {
        const int c = class_id.at(train.labels[i]);
        if (c == a || c == b) rows.push_back(static_cast<int>(i));
      }
      Eigen::MatrixXd X(rows.size(), d + 1);
      Eigen::VectorXd y(rows.size());
      for (std::size_t ri = 0; ri < rows.size(); ++ri) {
        const auto& pt = train.points[static_cast<std::size_t>(rows[ri])];
        for (int j = 0; j < d; ++j) X(static_cast<Eigen::Index>(ri), j) = pt[static_cast<std::size_t>(j)];
        X(static_cast<Eigen::Index>(ri), d) = 1.0;
        y(static_cast<Eigen::Index>(ri)) =
            class_id.at(train.labels[static_cast<std::size_t>(rows[ri])]) == a ? 1.0 : -1.0;
      }
      w[static_cast<std::size_t>(a) * K + b] = X.colPivHouseholderQr().solve(y);
    }
  }

  auto classify = [&](const std::vector<double>& pt) {
    Eigen::VectorXd x(d + 1);
    for (int j = 0; j < d; ++j) x(j) = pt[static_cast<std::size_t>(j)];
    x(d) = 1.0;
    std::vector<int> votes(static_cast<std::size_t>(K), 0);
    for (int a = 0; a < K; ++a) {
      for (int b = a + 1; b < K; ++b) {
        const double s = w[static_cast<std::size_t>(a) * K + b].dot(x);
        ++votes[static_cast<std::size_t>(s >= 0 ? a : b)];
      }
    }
    return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  };

  auto accuracy = [&](const LabeledPoints& set) {
    if (set.points.empty()) return 0.0;
    long hit = 0;
    for (std::size_t i = 0; i < set.points.size(); ++i) {
      const auto it = class_id.find(set.labels[i]);
      if (it == class_id.end()) continue;
      if (classify(set.points[i]) == it->second) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(set.points.size());
  };

  LinearProbeReport report;
  report.n_classes = K;
  report.train_accuracy = accuracy(train);
  report.test_accuracy = accuracy(test);
  return report;
}

namespace {

std::string fig_base(const std::string& out_dir, const std::string& fig_id,
                     const std::string& config_name, std::uint64_t seed) {
  return out_dir + "/" + fig_id + "_" + config_name + "_" + std::to_string(seed);
}

std::vector<std::string> write_pair(const std::string& base, const json& data,
                                    const std::string& svg_doc) {
  svg::write_file(base + ".json", data.dump(2) + "\n");
  svg::write_file(base + ".svg", svg_doc);
  return {base + ".json", base + ".svg"};
}

void append(std::vector<std::string>& all, std::vector<std::string> more) {
  for (auto& p : more) all.push_back(std::move(p));
}

}  // namespace

std::vector<std::string> emit_latent_pca_figure(
    const ModelConfig& cfg, const Params& params, const std::vector<Sample>& samples,
    const std::string& out_dir, const std::string& config_name, std::uint64_t seed) {
  const LabeledPoints latents = one_token_latents(cfg, params, samples);
  if (latents.points.size() < 2) {
    throw std::invalid_argument("emit_latent_pca_figure: not enough ONE tokens");
  }
  const PCAProjection proj = pca(latents.points, 2);

  std::vector<double> x, y;
  std::vector<int> lab;
  for (std::size_t i = 0; i < proj.coords.size(); ++i) {
    x.push_back(proj.coords[i][0]);
    y.push_back(proj.coords[i][1]);
    lab.push_back(latents.labels[i] + 2);  // palette index >= 0
  }
  std::vector<std::string> names = {"pre-region", "inter-region"};
  int max_region = -1;
  for (int l : latents.labels) max_region = std::max(max_region, l);
  for (int r = 0; r <= max_region; ++r) names.push_back("region " + std::to_string(r + 1));

  json data;
  data["variance_share"] = proj.variance_share;
  data["labels"] = latents.labels;
  data["coords"] = proj.coords;
  return write_pair(fig_base(out_dir, "fig6", config_name, seed), data,
                    svg::scatter(x, y, lab, names, "ONE-token latents, top-2 PCA"));
}

std::vector<std::string> emit_attention_figures(
    const ModelConfig& cfg, const Params& params, const Sample& sample,
    const std::string& out_dir, const std::string& config_name, std::uint64_t seed) {
  AttentionCapture cap;
  forward(cfg, params, sample, &cap);
  std::vector<std::string> out;

  json enc;
  enc["T"] = cap.enc_post_softmax.rows();
  enc["weights"] = cap.enc_post_softmax.vec();
  append(out, write_pair(fig_base(out_dir, "fig5", config_name, seed), enc,
                         svg::heatmap(cap.enc_post_softmax.vec(),
                                      cap.enc_post_softmax.rows(),
                                      cap.enc_post_softmax.cols(),
                                      "encoder self-attention")));

  const int R = static_cast<int>(sample.prompt.size());
  std::vector<svg::Series> series;
  json dec;
  for (int r = 0; r < R; ++r) {
    const CrossAttentionProfile prof = cross_attention_profile(cfg, params, sample, r);
    svg::Series s;
    s.label = "region " + std::to_string(r + 1);
    for (std::size_t i = 0; i < prof.weights.size(); ++i) {
      s.x.push_back(static_cast<double>(i));
      s.y.push_back(prof.weights[i]);
    }
    series.push_back(std::move(s));
    dec["weights"].push_back(prof.weights);
  }
  dec["tokens"] = to_text(sample);
  append(out, write_pair(fig_base(out_dir, "fig7", config_name, seed), dec,
                         svg::line_chart(series, "decoder cross-attention",
                                         "position", "weight")));
  return out;
}

std::vector<std::string> emit_value_curve_figures(
    const ModelConfig& cfg, const Params& params, const std::vector<Sample>& samples,
    const std::string& out_dir, const std::string& config_name, std::uint64_t seed) {
  const EffectiveValueCurves curves = effective_values(cfg, params, samples, 0);
  std::vector<std::string> out;
  static const char* kTypeNames[] = {"0", "1", "[", "]", "BoS"};

  std::vector<svg::Series> series;
  json data;
  for (int t = 0; t < kVocabSize; ++t) {
    if (!curves.present[static_cast<std::size_t>(t)]) continue;
    svg::Series s;
    s.label = kTypeNames[t];
    const auto& v = curves.v_eff[static_cast<std::size_t>(t)];
    for (std::size_t c = 0; c < v.size(); ++c) {
      s.x.push_back(static_cast<double>(c));
      s.y.push_back(v[c]);
    }
    series.push_back(std::move(s));
    data["v_eff"][kTypeNames[t]] = v;
    data["attn_logit"][kTypeNames[t]] = curves.attn_logit[static_cast<std::size_t>(t)];
  }
  append(out, write_pair(fig_base(out_dir, "fig9", config_name, seed), data,
                         svg::line_chart(series, "effective value curves",
                                         "class index", "contribution")));

  // Closed-form prediction vs the full model on count probes.
  svg::Series cf{"closed form", {}, {}}, fm{"model", {}, {}};
  json pred;
  const int R = static_cast<int>(samples.front().prompt.size());
  for (int n = 0; n <= 30; ++n) {
    const std::vector<double> f = closed_form_predictor(curves, n);
    const Sample probe = make_count_probe_sample(128, R, 0, n, cfg.use_bos);
    const Tensor logits = forward(cfg, params, probe);
    const std::vector<double> model = softmax_vec(tensor_row(logits, 0));
    cf.x.push_back(n);
    cf.y.push_back(f[static_cast<std::size_t>(n)]);
    fm.x.push_back(n);
    fm.y.push_back(model[static_cast<std::size_t>(n)]);
    pred["tv"].push_back(total_variation(f, model));
  }
  pred["closed_form_p_n"] = cf.y;
  pred["model_p_n"] = fm.y;
  append(out, write_pair(fig_base(out_dir, "fig10", config_name, seed), pred,
                         svg::line_chart({cf, fm}, "closed-form vs model P(count=n)",
                                         "n", "probability")));
  return out;
}

std::vector<std::string> emit_abspe_figures(
    const ModelConfig& cfg, const Params& params, int T, const std::string& out_dir,
    const std::string& config_name, std::uint64_t seed) {
  const AbsPEDecomposition dec = abspe_decompose(cfg, params, T);
  std::vector<std::string> out;

  json ctx;
  ctx["contextual"] = dec.contextual;
  append(out, write_pair(fig_base(out_dir, "fig17", config_name, seed), ctx,
                         svg::heatmap(dec.contextual, kVocabSize, kVocabSize,
                                      "contextual attention logits")));
  json pos;
  pos["T"] = T;
  pos["positional"] = dec.positional;
  pos["tok_pos"] = dec.tok_pos;
  pos["pos_tok"] = dec.pos_tok;
  append(out, write_pair(fig_base(out_dir, "fig18", config_name, seed), pos,
                         svg::heatmap(dec.positional, T, T,
                                      "positional attention logits")));
  return out;
}

std::vector<std::string> emit_rope_figure(
    const ModelConfig& cfg, const Params& params, const std::vector<Sample>& samples,
    const std::string& out_dir, const std::string& config_name, std::uint64_t seed) {
  const RopeSubspaceReport rep = rope_subspace_decompose(cfg, params, samples);
  svg::Series s{"mean |q.k| per plane", {}, {}};
  for (std::size_t p = 0; p < rep.mean_abs.size(); ++p) {
    s.x.push_back(static_cast<double>(p));
    s.y.push_back(rep.mean_abs[p]);
  }
  json data;
  data["theta"] = rep.theta;
  data["mean_abs"] = rep.mean_abs;
  data["max_reconstruction_error"] = rep.max_reconstruction_error;
  return write_pair(fig_base(out_dir, "fig21", config_name, seed), data,
                    svg::line_chart({s}, "rotary subspace contributions",
                                    "plane", "mean |contribution|"));
}

std::vector<std::string> emit_bias_figure(
    const ModelConfig& cfg, const Params& params, const std::vector<Sample>& samples,
    const std::string& out_dir, const std::string& config_name, std::uint64_t seed) {
  const BiasTokenReport rep = bias_token_report(cfg, params, samples);
  static const char* kTypeNames[] = {"0", "1", "[", "]", "BoS"};
  svg::Series s{"non-region attention mass", {}, {}};
  json data;
  for (const auto& [t, m] : rep.ranked_mass) {
    s.x.push_back(static_cast<double>(t));
    s.y.push_back(m);
    data["ranked_mass"].push_back({{"type", kTypeNames[t]}, {"mass", m}});
  }
  data["candidates"] = rep.candidates;
  data["v_eff_norm"] = rep.v_eff_norm;
  return write_pair(fig_base(out_dir, "fig12", config_name, seed), data,
                    svg::line_chart({s}, "bias-token attention mass by type",
                                    "token type code", "mass"));
}

}  // namespace ccount
