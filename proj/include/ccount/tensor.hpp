#pragma once

// Dense f64 tensors with reverse-mode autodiff on an explicit tape.
// Storage is row-major and shared between copies; ops record their
// backward rule on the currently active Tape (if any input needs grad).

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace ccount {

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0,
                  bool requires_grad = false);

  static Tensor from_data(std::vector<int> shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor randn(const std::vector<int>& shape, std::mt19937_64& rng,
                      double stddev, bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return store_ != nullptr; }
  const std::vector<int>& shape() const;
  std::string shape_str() const;
  std::size_t size() const;
  int dim(int i) const;
  int rows() const { return dim(0); }
  int cols() const { return dim(1); }

  double* data();
  const double* data() const;
  std::vector<double>& vec();
  const std::vector<double>& vec() const;

  bool requires_grad() const;
  void set_requires_grad(bool v);
  // Null until ensure_grad() or the first recorded op touching this tensor.
  double* grad();
  const double* grad() const;
  void ensure_grad();
  void zero_grad();

  double operator()(int i) const;
  double operator()(int i, int j) const;
  double& operator()(int i);
  double& operator()(int i, int j);

  bool shares_storage(const Tensor& other) const {
    return store_ == other.store_;
  }

 private:
  struct Store {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until needed
    bool requires_grad = false;
  };
  std::shared_ptr<Store> store_;
};

// Tape of recorded operations. Constructing a Tape makes it the active tape
// for the current thread; destruction restores the previous one. Rebuilt per
// forward pass, single-threaded per instance.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* current();
  void record(std::function<void()> backward_fn);
  // Registers an op output so backward can reset its grad buffer.
  void track_output(const Tensor& out);
  std::size_t node_count() const { return nodes_.size(); }

  // Seeds grad(loss)=1 and replays recorded rules in reverse order. Op
  // outputs recorded on this tape have their grads reset first, so repeated
  // calls without zero_grad accumulate linearly into leaf grads.
  void backward(Tensor& loss);

 private:
  std::vector<std::function<void()>> nodes_;
  std::vector<Tensor> outputs_;
  Tape* prev_ = nullptr;
};

// --- differentiable ops ---

Tensor matmul(const Tensor& a, const Tensor& b);           // [m,k]x[k,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);        // a * b^T
Tensor add(const Tensor& a, const Tensor& b);              // same shape
Tensor add_row_vector(const Tensor& x, const Tensor& b);   // [m,n] + [n]
Tensor scale(const Tensor& a, double c);
Tensor mul(const Tensor& a, const Tensor& b);              // elementwise
Tensor gelu(const Tensor& x);
Tensor softmax_rows(const Tensor& x);
Tensor embedding(const Tensor& table, const std::vector<int>& indices);
Tensor sum(const Tensor& x);
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets);
// Rotates consecutive coordinate pairs (2j, 2j+1) of row i by
// positions[i] * base^(-2j/d), the usual rotary embedding.
Tensor rope_rotate(const Tensor& x, const std::vector<int>& positions,
                   double base);

}  // namespace ccount
