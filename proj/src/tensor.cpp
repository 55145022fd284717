#include "ccount/tensor.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>

namespace ccount {

namespace {

using MatMap = Eigen::Map<
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                   Eigen::Dynamic,
                                                   Eigen::RowMajor>>;

std::size_t shape_numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative dimension in shape");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_to_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

void require_2d(const Tensor& t, const char* op) {
  if (t.shape().size() != 2) {
    throw std::invalid_argument(std::string(op) + ": expected 2-D tensor, got " +
                                t.shape_str());
  }
}

thread_local Tape* g_active_tape = nullptr;

}  // namespace

// --- Tensor ---

Tensor::Tensor(std::vector<int> shape, double fill, bool requires_grad) {
  store_ = std::make_shared<Store>();
  store_->shape = std::move(shape);
  store_->data.assign(shape_numel(store_->shape), fill);
  store_->requires_grad = requires_grad;
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<double> data,
                         bool requires_grad) {
  if (shape_numel(shape) != data.size()) {
    throw std::invalid_argument("from_data: shape " + shape_to_str(shape) +
                                " does not match data length " +
                                std::to_string(data.size()));
  }
  Tensor t;
  t.store_ = std::make_shared<Store>();
  t.store_->shape = std::move(shape);
  t.store_->data = std::move(data);
  t.store_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::randn(const std::vector<int>& shape, std::mt19937_64& rng,
                     double stddev, bool requires_grad) {
  Tensor t(shape, 0.0, requires_grad);
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : t.vec()) v = dist(rng);
  return t;
}

Tensor Tensor::scalar(double v) {
  return from_data({1}, {v});
}

const std::vector<int>& Tensor::shape() const { return store_->shape; }

std::string Tensor::shape_str() const { return shape_to_str(store_->shape); }

std::size_t Tensor::size() const { return store_->data.size(); }

int Tensor::dim(int i) const {
  if (i < 0 || static_cast<std::size_t>(i) >= store_->shape.size()) {
    throw std::out_of_range("dim index out of range");
  }
  return store_->shape[static_cast<std::size_t>(i)];
}

double* Tensor::data() { return store_->data.data(); }
const double* Tensor::data() const { return store_->data.data(); }
std::vector<double>& Tensor::vec() { return store_->data; }
const std::vector<double>& Tensor::vec() const { return store_->data; }

bool Tensor::requires_grad() const {
  return store_ && store_->requires_grad;
}

void Tensor::set_requires_grad(bool v) { store_->requires_grad = v; }

double* Tensor::grad() {
  return store_->grad.empty() ? nullptr : store_->grad.data();
}
const double* Tensor::grad() const {
  return store_->grad.empty() ? nullptr : store_->grad.data();
}

void Tensor::ensure_grad() {
  if (store_->grad.empty()) store_->grad.assign(store_->data.size(), 0.0);
}

void Tensor::zero_grad() {
  if (!store_->grad.empty()) store_->grad.assign(store_->data.size(), 0.0);
}

double Tensor::operator()(int i) const { return store_->data[static_cast<std::size_t>(i)]; }
double& Tensor::operator()(int i) { return store_->data[static_cast<std::size_t>(i)]; }
double Tensor::operator()(int i, int j) const {
  return store_->data[static_cast<std::size_t>(i) * cols() + j];
}
double& Tensor::operator()(int i, int j) {
  return store_->data[static_cast<std::size_t>(i) * cols() + j];
}

// --- Tape ---

Tape::Tape() {
  prev_ = g_active_tape;
  g_active_tape = this;
}

Tape::~Tape() { g_active_tape = prev_; }

Tape* Tape::current() { return g_active_tape; }

void Tape::record(std::function<void()> backward_fn) {
  nodes_.push_back(std::move(backward_fn));
}

void Tape::track_output(const Tensor& out) { outputs_.push_back(out); }

void Tape::backward(Tensor& loss) {
  if (loss.size() != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                loss.shape_str());
  }
  for (Tensor& out : outputs_) out.zero_grad();
  loss.ensure_grad();
  loss.grad()[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

// --- op helpers ---

namespace {

bool grad_needed(std::initializer_list<const Tensor*> inputs) {
  if (Tape::current() == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

// Marks out as grad-carrying and allocates buffers for the chain.
void prepare_node(Tensor& out, std::initializer_list<Tensor*> inputs) {
  out.set_requires_grad(true);
  out.ensure_grad();
  Tape::current()->track_output(out);
  for (Tensor* t : inputs) t->ensure_grad();
}

}  // namespace

// --- ops ---

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions disagree: " +
                                a.shape_str() + " x " + b.shape_str());
  }
  const int m = a.rows(), k = a.cols(), n = b.cols();
  Tensor c({m, n});
  MatMap(c.data(), m, n).noalias() =
      ConstMatMap(a.data(), m, k) * ConstMatMap(b.data(), k, n);

  if (grad_needed({&a, &b})) {
    Tensor av = a, bv = b, cv = c;
    prepare_node(cv, {&av, &bv});
    Tape::current()->record([av, bv, cv, m, k, n]() mutable {
      ConstMatMap dc(cv.grad(), m, n);
      if (av.requires_grad()) {
        MatMap(av.grad(), m, k).noalias() +=
            dc * ConstMatMap(bv.data(), k, n).transpose();
      }
      if (bv.requires_grad()) {
        MatMap(bv.grad(), k, n).noalias() +=
            ConstMatMap(av.data(), m, k).transpose() * dc;
      }
    });
    return cv;
  }
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul_nt");
  require_2d(b, "matmul_nt");
  if (a.cols() != b.cols()) {
    throw std::invalid_argument("matmul_nt: inner dimensions disagree: " +
                                a.shape_str() + " x " + b.shape_str() + "^T");
  }
  const int m = a.rows(), k = a.cols(), n = b.rows();
  Tensor c({m, n});
  MatMap(c.data(), m, n).noalias() =
      ConstMatMap(a.data(), m, k) * ConstMatMap(b.data(), n, k).transpose();

  if (grad_needed({&a, &b})) {
    Tensor av = a, bv = b, cv = c;
    prepare_node(cv, {&av, &bv});
    Tape::current()->record([av, bv, cv, m, k, n]() mutable {
      ConstMatMap dc(cv.grad(), m, n);
      if (av.requires_grad()) {
        MatMap(av.grad(), m, k).noalias() += dc * ConstMatMap(bv.data(), n, k);
      }
      if (bv.requires_grad()) {
        MatMap(bv.grad(), n, k).noalias() +=
            dc.transpose() * ConstMatMap(av.data(), m, k);
      }
    });
    return cv;
  }
  return c;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument("add: shape mismatch: " + a.shape_str() +
                                " vs " + b.shape_str());
  }
  Tensor c(a.shape());
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] = a.data()[i] + b.data()[i];

  if (grad_needed({&a, &b})) {
    Tensor av = a, bv = b, cv = c;
    prepare_node(cv, {&av, &bv});
    Tape::current()->record([av, bv, cv]() mutable {
      const double* dc = cv.grad();
      if (av.requires_grad()) {
        for (std::size_t i = 0; i < av.size(); ++i) av.grad()[i] += dc[i];
      }
      if (bv.requires_grad()) {
        for (std::size_t i = 0; i < bv.size(); ++i) bv.grad()[i] += dc[i];
      }
    });
    return cv;
  }
  return c;
}

Tensor add_row_vector(const Tensor& x, const Tensor& b) {
  require_2d(x, "add_row_vector");
  if (b.shape().size() != 1 || b.dim(0) != x.cols()) {
    throw std::invalid_argument("add_row_vector: bias shape " + b.shape_str() +
                                " does not match row width of " + x.shape_str());
  }
  const int m = x.rows(), n = x.cols();
  Tensor c({m, n});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) c(i, j) = x(i, j) + b(j);
  }

  if (grad_needed({&x, &b})) {
    Tensor xv = x, bv = b, cv = c;
    prepare_node(cv, {&xv, &bv});
    Tape::current()->record([xv, bv, cv, m, n]() mutable {
      const double* dc = cv.grad();
      if (xv.requires_grad()) {
        for (std::size_t i = 0; i < xv.size(); ++i) xv.grad()[i] += dc[i];
      }
      if (bv.requires_grad()) {
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < n; ++j) bv.grad()[j] += dc[static_cast<std::size_t>(i) * n + j];
        }
      }
    });
    return cv;
  }
  return c;
}

Tensor scale(const Tensor& a, double c) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = a.data()[i] * c;

  if (grad_needed({&a})) {
    Tensor av = a, ov = out;
    prepare_node(ov, {&av});
    Tape::current()->record([av, ov, c]() mutable {
      for (std::size_t i = 0; i < av.size(); ++i) av.grad()[i] += c * ov.grad()[i];
    });
    return ov;
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument("mul: shape mismatch: " + a.shape_str() +
                                " vs " + b.shape_str());
  }
  Tensor c(a.shape());
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] = a.data()[i] * b.data()[i];

  if (grad_needed({&a, &b})) {
    Tensor av = a, bv = b, cv = c;
    prepare_node(cv, {&av, &bv});
    Tape::current()->record([av, bv, cv]() mutable {
      const double* dc = cv.grad();
      if (av.requires_grad()) {
        for (std::size_t i = 0; i < av.size(); ++i) av.grad()[i] += dc[i] * bv.data()[i];
      }
      if (bv.requires_grad()) {
        for (std::size_t i = 0; i < bv.size(); ++i) bv.grad()[i] += dc[i] * av.data()[i];
      }
    });
    return cv;
  }
  return c;
}

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double gelu_fwd(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }
double gelu_bwd(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
  const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}
}  // namespace

Tensor gelu(const Tensor& x) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = gelu_fwd(x.data()[i]);

  if (grad_needed({&x})) {
    Tensor xv = x, ov = out;
    prepare_node(ov, {&xv});
    Tape::current()->record([xv, ov]() mutable {
      for (std::size_t i = 0; i < xv.size(); ++i) {
        xv.grad()[i] += ov.grad()[i] * gelu_bwd(xv.data()[i]);
      }
    });
    return ov;
  }
  return out;
}

Tensor softmax_rows(const Tensor& x) {
  require_2d(x, "softmax_rows");
  const int m = x.rows(), n = x.cols();
  Tensor y({m, n});
  for (int i = 0; i < m; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (std::isnan(x(i, j))) {
        throw std::domain_error("softmax_rows: NaN in row " + std::to_string(i));
      }
      mx = std::max(mx, x(i, j));
    }
    // All-masked row would give 0/0; caller must leave one finite entry.
    double z = 0.0;
    for (int j = 0; j < n; ++j) {
      const double e = std::exp(x(i, j) - mx);
      y(i, j) = e;
      z += e;
    }
    for (int j = 0; j < n; ++j) y(i, j) /= z;
  }

  if (grad_needed({&x})) {
    Tensor xv = x, yv = y;
    prepare_node(yv, {&xv});
    Tape::current()->record([xv, yv, m, n]() mutable {
      for (int i = 0; i < m; ++i) {
        double dot = 0.0;
        for (int j = 0; j < n; ++j) dot += yv.grad()[static_cast<std::size_t>(i) * n + j] * yv(i, j);
        for (int j = 0; j < n; ++j) {
          const std::size_t idx = static_cast<std::size_t>(i) * n + j;
          xv.grad()[idx] += yv(i, j) * (yv.grad()[idx] - dot);
        }
      }
    });
    return yv;
  }
  return y;
}

Tensor embedding(const Tensor& table, const std::vector<int>& indices) {
  require_2d(table, "embedding");
  const int d = table.cols();
  const int n = static_cast<int>(indices.size());
  Tensor out({n, d});
  for (int i = 0; i < n; ++i) {
    const int r = indices[static_cast<std::size_t>(i)];
    if (r < 0 || r >= table.rows()) {
      throw std::out_of_range("embedding: index " + std::to_string(r) +
                              " out of range for table " + table.shape_str());
    }
    for (int j = 0; j < d; ++j) out(i, j) = table(r, j);
  }

  if (grad_needed({&table})) {
    Tensor tv = table, ov = out;
    prepare_node(ov, {&tv});
    Tape::current()->record([tv, ov, indices, n, d]() mutable {
      for (int i = 0; i < n; ++i) {
        const int r = indices[static_cast<std::size_t>(i)];
        for (int j = 0; j < d; ++j) {
          tv.grad()[static_cast<std::size_t>(r) * d + j] +=
              ov.grad()[static_cast<std::size_t>(i) * d + j];
        }
      }
    });
    return ov;
  }
  return out;
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x.data()[i];
  Tensor out = Tensor::scalar(s);

  if (grad_needed({&x})) {
    Tensor xv = x, ov = out;
    prepare_node(ov, {&xv});
    Tape::current()->record([xv, ov]() mutable {
      const double d = ov.grad()[0];
      for (std::size_t i = 0; i < xv.size(); ++i) xv.grad()[i] += d;
    });
    return ov;
  }
  return out;
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets) {
  require_2d(logits, "cross_entropy");
  const int r = logits.rows(), c = logits.cols();
  if (static_cast<int>(targets.size()) != r) {
    throw std::invalid_argument("cross_entropy: " + std::to_string(targets.size()) +
                                " targets for " + std::to_string(r) + " rows");
  }
  for (int t : targets) {
    if (t < 0 || t >= c) {
      throw std::out_of_range("cross_entropy: target " + std::to_string(t) +
                              " outside [0," + std::to_string(c) + ")");
    }
  }
  // Stable log-softmax; keep the probabilities for the backward rule.
  Tensor probs({r, c});
  double loss = 0.0;
  for (int i = 0; i < r; ++i) {
    double mx = logits(i, 0);
    for (int j = 1; j < c; ++j) mx = std::max(mx, logits(i, j));
    double z = 0.0;
    for (int j = 0; j < c; ++j) z += std::exp(logits(i, j) - mx);
    const double logz = std::log(z) + mx;
    loss += logz - logits(i, targets[static_cast<std::size_t>(i)]);
    for (int j = 0; j < c; ++j) probs(i, j) = std::exp(logits(i, j) - logz);
  }
  Tensor out = Tensor::scalar(loss / r);

  if (grad_needed({&logits})) {
    Tensor lv = logits, ov = out;
    prepare_node(ov, {&lv});
    Tape::current()->record([lv, ov, probs, targets, r, c]() mutable {
      const double d = ov.grad()[0] / r;
      for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) {
          const double onehot = (j == targets[static_cast<std::size_t>(i)]) ? 1.0 : 0.0;
          lv.grad()[static_cast<std::size_t>(i) * c + j] += d * (probs(i, j) - onehot);
        }
      }
    });
    return ov;
  }
  return out;
}

Tensor rope_rotate(const Tensor& x, const std::vector<int>& positions,
                   double base) {
  require_2d(x, "rope_rotate");
  const int t = x.rows(), d = x.cols();
  if (d % 2 != 0) {
    throw std::invalid_argument("rope_rotate: head width must be even, got " +
                                std::to_string(d));
  }
  if (static_cast<int>(positions.size()) != t) {
    throw std::invalid_argument("rope_rotate: " + std::to_string(positions.size()) +
                                " positions for " + std::to_string(t) + " rows");
  }
  std::vector<double> theta(static_cast<std::size_t>(d / 2));
  for (int j = 0; j < d / 2; ++j) {
    theta[static_cast<std::size_t>(j)] = std::pow(base, -2.0 * j / d);
  }
  Tensor y({t, d});
  for (int i = 0; i < t; ++i) {
    for (int j = 0; j < d / 2; ++j) {
      const double ang = positions[static_cast<std::size_t>(i)] * theta[static_cast<std::size_t>(j)];
      const double c = std::cos(ang), s = std::sin(ang);
      const double a = x(i, 2 * j), b = x(i, 2 * j + 1);
      y(i, 2 * j) = c * a - s * b;
      y(i, 2 * j + 1) = s * a + c * b;
    }
  }

  if (grad_needed({&x})) {
    Tensor xv = x, yv = y;
    prepare_node(yv, {&xv});
    Tape::current()->record([xv, yv, positions, theta, t, d]() mutable {
      for (int i = 0; i < t; ++i) {
        for (int j = 0; j < d / 2; ++j) {
          const double ang = positions[static_cast<std::size_t>(i)] * theta[static_cast<std::size_t>(j)];
          const double c = std::cos(ang), s = std::sin(ang);
          const double da = yv.grad()[static_cast<std::size_t>(i) * d + 2 * j];
          const double db = yv.grad()[static_cast<std::size_t>(i) * d + 2 * j + 1];
          // Transpose of the rotation.
          xv.grad()[static_cast<std::size_t>(i) * d + 2 * j] += c * da + s * db;
          xv.grad()[static_cast<std::size_t>(i) * d + 2 * j + 1] += -s * da + c * db;
        }
      }
    });
    return yv;
  }
  return y;
}

}  // namespace ccount
