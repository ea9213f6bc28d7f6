#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "psygen/common.hpp"

namespace psygen::nn {

using Mat = Eigen::MatrixXd;

/// A trainable tensor with Adam state. Owned by a ParamStore; forward passes
/// reference it through Tape::param without copying.
struct Param {
  std::string name;
  Mat value;
  Mat grad;
  Mat adam_m;
  Mat adam_v;

  void zero_grad() { grad.setZero(); }
};

class ParamStore {
 public:
  Param& create(const std::string& name, Eigen::Index rows, Eigen::Index cols, double init_scale,
                Rng& rng);
  Param& create_zeros(const std::string& name, Eigen::Index rows, Eigen::Index cols);
  Param& create_const(const std::string& name, Eigen::Index rows, Eigen::Index cols, double v);

  Param* find(const std::string& name);
  const Param* find(const std::string& name) const;

  std::vector<std::unique_ptr<Param>>& items() { return items_; }
  const std::vector<std::unique_ptr<Param>>& items() const { return items_; }

  size_t total_values() const;
  void zero_grads();

 private:
  std::vector<std::unique_ptr<Param>> items_;
};

class Tape;

/// Lightweight handle to a tape node.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Mat& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

/// Reverse-mode tape. Nodes are created in topological order by the eager op
/// functions below; backward walks them in reverse. Values are dense double
/// matrices; row vectors (1 x d) represent single states.
class Tape {
 public:
  Var leaf(const Mat& value, bool needs_grad = false);
  Var param(Param& p);
  Var constant(Mat value) {
    Var v = make_node(std::move(value), false);
    return v;
  }

  // Runs backward from a scalar (1x1) node, accumulating parameter gradients
  // into their Param::grad.
  void backward(Var root);

  int size() const { return static_cast<int>(nodes_.size()); }
  void clear() { nodes_.clear(); }
  // Rolls back to an earlier node count. Lets generation keep the encoder
  // subgraph while rebuilding the decoder part per step.
  void truncate(int n) { nodes_.resize(static_cast<size_t>(n)); }

  // --- internal, used by op implementations ---
  struct Node {
    Mat owned;
    const Mat* external = nullptr;
    Mat grad;
    bool needs_grad = false;
    std::function<void(Tape&)> back;

    const Mat& val() const { return external ? *external : owned; }
  };

  Var make_node(Mat value, bool needs_grad);
  Node& node(int id) { return nodes_[id]; }
  const Mat& val(int id) const { return nodes_[id].val(); }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  // Gradient buffer for a node, zero-allocated on first touch.
  Mat& grad(int id);
  bool has_grad(int id) const { return nodes_[id].grad.size() > 0; }
  void accumulate(int id, const Mat& g) {
    if (nodes_[id].needs_grad) grad(id) += g;
  }

 private:
  std::vector<Node> nodes_;
};

// ----- primitive ops (eager value, recorded backward) -----

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var cmul(Var a, Var b);                 // elementwise product
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var matmul(Var a, Var b);               // a * b
Var matmul_nt(Var a, Var b);            // a * b^T
Var tanh_(Var a);
Var sigmoid_(Var a);
Var gelu(Var a);
Var one_minus(Var a);                   // 1 - a, elementwise
Var concat_cols(Var a, Var b);
Var concat_rows(Var a, Var b);
Var stack_rows(const std::vector<Var>& rows);
Var slice_cols(Var a, Eigen::Index c0, Eigen::Index n);
Var slice_rows(Var a, Eigen::Index r0, Eigen::Index n);
Var row(Var a, Eigen::Index r);
Var mean_rows(Var a);                   // 1 x d mean over rows
Var sum_all(Var a);                     // 1 x 1
Var add_row_broadcast(Var a, Var bias); // bias is 1 x d, added to every row

// Row-wise softmax of (a + mask); mask entries are 0 or -inf-like penalties.
Var softmax_rows(Var a);
Var softmax_rows_masked(Var a, const Mat& additive_mask);

// Row-wise layer norm with learned gain/bias (1 x d each).
Var layer_norm(Var a, Var gain, Var bias, double eps = 1e-5);

// Rows of an embedding matrix selected by ids (gather); backward scatters.
Var gather_rows(Var table, const std::vector<int>& ids);

// Mean over targets of label-smoothed NLL. logits is T x V; targets.size()==T.
// Smoothing mass eps is spread uniformly over the V-1 non-target entries.
Var cross_entropy_smoothed(Var logits, const std::vector<int>& targets, double eps);

// Inverted dropout; identity when rate == 0. Mask drawn from rng.
Var dropout(Var a, double rate, Rng& rng);

// ----- optimizer -----

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(ParamStore& params, AdamConfig cfg) : params_(&params), cfg_(cfg) {}

  void step();
  int64_t steps_done() const { return t_; }
  void set_steps_done(int64_t t) { t_ = t; }
  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

 private:
  ParamStore* params_;
  AdamConfig cfg_;
  int64_t t_ = 0;
};

}  // namespace psygen::nn
