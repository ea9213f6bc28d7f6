#include "psygen/nn.hpp"

#include <cmath>

namespace psygen::nn {

Param& ParamStore::create(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                          double init_scale, Rng& rng) {
  PSYGEN_CONTRACT(find(name) == nullptr, "duplicate parameter name: " + name);
  auto p = std::make_unique<Param>();
  p->name = name;
  p->value.resize(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) p->value(r, c) = init_scale * rng.normal();
  p->grad = Mat::Zero(rows, cols);
  p->adam_m = Mat::Zero(rows, cols);
  p->adam_v = Mat::Zero(rows, cols);
  items_.push_back(std::move(p));
  return *items_.back();
}

Param& ParamStore::create_zeros(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  return create_const(name, rows, cols, 0.0);
}

Param& ParamStore::create_const(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                                double v) {
  PSYGEN_CONTRACT(find(name) == nullptr, "duplicate parameter name: " + name);
  auto p = std::make_unique<Param>();
  p->name = name;
  p->value = Mat::Constant(rows, cols, v);
  p->grad = Mat::Zero(rows, cols);
  p->adam_m = Mat::Zero(rows, cols);
  p->adam_v = Mat::Zero(rows, cols);
  items_.push_back(std::move(p));
  return *items_.back();
}

Param* ParamStore::find(const std::string& name) {
  for (auto& p : items_)
    if (p->name == name) return p.get();
  return nullptr;
}

const Param* ParamStore::find(const std::string& name) const {
  for (const auto& p : items_)
    if (p->name == name) return p.get();
  return nullptr;
}

size_t ParamStore::total_values() const {
  size_t n = 0;
  for (const auto& p : items_) n += static_cast<size_t>(p->value.size());
  return n;
}

void ParamStore::zero_grads() {
  for (auto& p : items_) p->zero_grad();
}

const Mat& Var::value() const { return tape->val(id); }

Var Tape::make_node(Mat value, bool needs_grad) {
  Node n;
  n.owned = std::move(value);
  n.needs_grad = needs_grad;
  nodes_.push_back(std::move(n));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(const Mat& value, bool needs_grad) { return make_node(value, needs_grad); }

Var Tape::param(Param& p) {
  Node n;
  n.external = &p.value;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  int id = static_cast<int>(nodes_.size()) - 1;
  Param* pp = &p;
  nodes_[id].back = [id, pp](Tape& t) { pp->grad += t.grad(id); };
  return Var{this, id};
}

Mat& Tape::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Mat::Zero(n.val().rows(), n.val().cols());
  return n.grad;
}

void Tape::backward(Var root) {
  PSYGEN_CONTRACT(root.tape == this, "backward on foreign tape");
  PSYGEN_CONTRACT(val(root.id).rows() == 1 && val(root.id).cols() == 1,
                  "backward root must be scalar");
  // Node grads are scratch state; stale values from an earlier pass over a
  // truncated tape must not leak into this one. Param grads do accumulate.
  for (int i = 0; i <= root.id; ++i)
    if (nodes_[i].grad.size() > 0) nodes_[i].grad.setZero();
  grad(root.id)(0, 0) += 1.0;
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.needs_grad && n.back && n.grad.size() > 0) n.back(*this);
  }
}

namespace {

bool any_grad(std::initializer_list<Var> vs) {
  for (const Var& v : vs)
    if (v.tape->needs_grad(v.id)) return true;
  return false;
}

void check_same_tape(Var a, Var b) {
  PSYGEN_CONTRACT(a.tape == b.tape, "op arguments on different tapes");
}

}  // namespace

Var add(Var a, Var b) {
  check_same_tape(a, b);
  PSYGEN_CONTRACT(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  Tape& t = *a.tape;
  Var out = t.make_node(Mat(a.value() + b.value()), any_grad({a, b}));
  if (out.tape->needs_grad(out.id)) {
    int oa = a.id, ob = b.id, oo = out.id;
    t.node(oo).back = [oa, ob, oo](Tape& tp) {
      tp.accumulate(oa, tp.grad(oo));
      tp.accumulate(ob, tp.grad(oo));
    };
  }
  return out;
}

Var sub(Var a, Var b) {
  check_same_tape(a, b);
  PSYGEN_CONTRACT(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
  Tape& t = *a.tape;
  Var out = t.make_node(Mat(a.value() - b.value()), any_grad({a, b}));
  if (out.tape->needs_grad(out.id)) {
    int oa = a.id, ob = b.id, oo = out.id;
    t.node(oo).back = [oa, ob, oo](Tape& tp) {
      tp.accumulate(oa, tp.grad(oo));
      if (tp.needs_grad(ob)) tp.grad(ob) -= tp.grad(oo);
    };
  }
  return out;
}

Var cmul(Var a, Var b) {
  check_same_tape(a, b);
  PSYGEN_CONTRACT(a.rows() == b.rows() && a.cols() == b.cols(), "cmul: shape mismatch");
  Tape& t = *a.tape;
  Var out = t.make_node(Mat(a.value().cwiseProduct(b.value())), any_grad({a, b}));
  if (out.tape->needs_grad(out.id)) {
    int oa = a.id, ob = b.id, oo = out.id;
    t.node(oo).back = [oa, ob, oo](Tape& tp) {
      if (tp.needs_grad(oa)) tp.grad(oa) += tp.grad(oo).cwiseProduct(tp.val(ob));
      if (tp.needs_grad(ob)) tp.grad(ob) += tp.grad(oo).cwiseProduct(tp.val(oa));
    };
  }
  return out;
}

Var scale(Var a, double s) {
  Tape& t = *a.tape;
  Var out = t.make_node(Mat(a.value() * s), t.needs_grad(a.id));
  if (out.tape->needs_grad(out.id)) {
    int oa = a.id, oo = out.id;
    t.node(oo).back = [oa, oo, s](Tape& tp) { tp.grad(oa) += tp.grad(oo) * s; };
  }
  return out;
}

Var add_scalar(Var a, double s) {
  Tape& t = *a.tape;
  Var out = t.make_node(Mat((a.value().array() + s).matrix()), t.needs_grad(a.id));
  if (out.tape->needs_grad(out.id)) {
    int oa = a.id, oo = out.id;
    t.node(oo).back = [oa, oo](Tape& tp) { tp.grad(oa) += tp.grad(oo); };
  }
  return out;
}

Var one_minus(Var a) {
  Tape& t = *a.tape;
  Var out = t.make_node(Mat((1.0 - a.value().array()).matrix()), t.needs_grad(a.id));
  if (out.tape->needs_grad(out.id)) {
    int oa = a.id, oo = out.id;
    t.node(oo).back = [oa, oo](Tape& tp) { tp.grad(oa) -= tp.grad(oo); };
  }
  return out;
}

Var matmul(Var a, Var b) {
  check_same_tape(a, b);
  PSYGEN_CONTRACT(a.cols() == b.rows(), "matmul: inner dimension mismatch");
  Tape& t = *a.tape;
  Var out = t.make_node(Mat(a.value() * b.value()), any_grad({a, b}));
  if (out.tape->needs_grad(out.id)) {
    int oa = a.id, ob = b.id, oo = out.id;
    t.node(oo).back = [oa, ob, oo](Tape& tp) {
      if (tp.needs_grad(oa)) tp.grad(oa) += tp.grad(oo) * tp.val(ob).transpose();
      if (tp.needs_grad(ob)) tp.grad(ob) += tp.val(oa).transpose() * tp.grad(oo);
    };
  }
  return out;
}

Var matmul_nt(Var a, Var b) {
  check_same_tape(a, b);
  PSYGEN_CONTRACT(a.cols() == b.cols(), "matmul_nt: inner dimension mismatch");
  Tape& t = *a.tape;
  Var out = t.make_node(Mat(a.value() * b.value().transpose()), any_grad({a, b}));
  if (out.tape->needs_grad(out.id)) {
    int oa = a.id, ob = b.id, oo = out.id;
    t.node(oo).back = [oa, ob, oo](Tape& tp) {
      if (tp.needs_grad(oa)) tp.grad(oa) += tp.grad(oo) * tp.val(ob);
      if (tp.needs_grad(ob)) tp.grad(ob) += tp.grad(oo).transpose() * tp.val(oa);
    };
  }
  return out;
}

Var tanh_(Var a) {
  Tape& t = *a.tape;
  Var out = t.make_node(Mat(a.value().array().tanh().matrix()), t.needs_grad(a.id));
  if (out.tape->needs_grad(out.id)) {
    int oa = a.id, oo = out.id;
    t.node(oo).back = [oa, oo](Tape& tp) {
      tp.grad(oa) += tp.grad(oo).cwiseProduct(Mat((1.0 - tp.val(oo).array().square()).matrix()));
    };
  }
  return out;
}

Var sigmoid_(Var a) {
  Tape& t = *a.tape;
  Mat y = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  Var out = t.make_node(std::move(y), t.needs_grad(a.id));
  if (out.tape->needs_grad(out.id)) {
    int oa = a.id, oo = out.id;
    t.node(oo).back = [oa, oo](Tape& tp) {
      const Mat& s = tp.val(oo);
      tp.grad(oa) += tp.grad(oo).cwiseProduct(Mat((s.array() * (1.0 - s.array())).matrix()));
    };
  }
  return out;
}

Var gelu(Var a) {
  Tape& t = *a.tape;
  const Mat& x = a.value();
  Mat y = x.unaryExpr([](double v) { return 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2)); });
  Var out = t.make_node(std::move(y), t.needs_grad(a.id));
  if (out.tape->needs_grad(out.id)) {
    int oa = a.id, oo = out.id;
    t.node(oo).back = [oa, oo](Tape& tp) {
      const Mat& xin = tp.val(oa);
      Mat d = xin.unaryExpr([](double v) {
        double phi = std::exp(-0.5 * v * v) / std::sqrt(2.0 * M_PI);
        double Phi = 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
        return Phi + v * phi;
      });
      tp.grad(oa) += tp.grad(oo).cwiseProduct(d);
    };
  }
  return out;
}

Var concat_cols(Var a, Var b) {
  check_same_tape(a, b);
  PSYGEN_CONTRACT(a.rows() == b.rows(), "concat_cols: row mismatch");
  Tape& t = *a.tape;
  Mat y(a.rows(), a.cols() + b.cols());
  y << a.value(), b.value();
  Var out = t.make_node(std::move(y), any_grad({a, b}));
  if (out.tape->needs_grad(out.id)) {
    int oa = a.id, ob = b.id, oo = out.id;
    Eigen::Index ca = a.cols(), cb = b.cols();
    t.node(oo).back = [oa, ob, oo, ca, cb](Tape& tp) {
      if (tp.needs_grad(oa)) tp.grad(oa) += tp.grad(oo).leftCols(ca);
      if (tp.needs_grad(ob)) tp.grad(ob) += tp.grad(oo).rightCols(cb);
    };
  }
  return out;
}

Var concat_rows(Var a, Var b) {
  check_same_tape(a, b);
  PSYGEN_CONTRACT(a.cols() == b.cols(), "concat_rows: col mismatch");
  Tape& t = *a.tape;
  Mat y(a.rows() + b.rows(), a.cols());
  y << a.value(), b.value();
  Var out = t.make_node(std::move(y), any_grad({a, b}));
  if (out.tape->needs_grad(out.id)) {
    int oa = a.id, ob = b.id, oo = out.id;
    Eigen::Index ra = a.rows(), rb = b.rows();
    t.node(oo).back = [oa, ob, oo, ra, rb](Tape& tp) {
      if (tp.needs_grad(oa)) tp.grad(oa) += tp.grad(oo).topRows(ra);
      if (tp.needs_grad(ob)) tp.grad(ob) += tp.grad(oo).bottomRows(rb);
    };
  }
  return out;
}

Var stack_rows(const std::vector<Var>& rows) {
  PSYGEN_CONTRACT(!rows.empty(), "stack_rows: empty input");
  Tape& t = *rows[0].tape;
  Eigen::Index total = 0;
  bool ng = false;
  for (const Var& v : rows) {
    PSYGEN_CONTRACT(v.cols() == rows[0].cols(), "stack_rows: col mismatch");
    total += v.rows();
    ng = ng || t.needs_grad(v.id);
  }
  Mat y(total, rows[0].cols());
  Eigen::Index r = 0;
  for (const Var& v : rows) {
    y.middleRows(r, v.rows()) = v.value();
    r += v.rows();
  }
  Var out = t.make_node(std::move(y), ng);
  if (out.tape->needs_grad(out.id)) {
    std::vector<std::pair<int, Eigen::Index>> parts;
    parts.reserve(rows.size());
    for (const Var& v : rows) parts.emplace_back(v.id, v.rows());
    int oo = out.id;
    t.node(oo).back = [parts, oo](Tape& tp) {
      Eigen::Index rr = 0;
      for (auto [pid, nr] : parts) {
        if (tp.needs_grad(pid)) tp.grad(pid) += tp.grad(oo).middleRows(rr, nr);
        rr += nr;
      }
    };
  }
  return out;
}

Var slice_cols(Var a, Eigen::Index c0, Eigen::Index n) {
  PSYGEN_CONTRACT(c0 >= 0 && c0 + n <= a.cols(), "slice_cols: out of range");
  Tape& t = *a.tape;
  Var out = t.make_node(Mat(a.value().middleCols(c0, n)), t.needs_grad(a.id));
  if (out.tape->needs_grad(out.id)) {
    int oa = a.id, oo = out.id;
    t.node(oo).back = [oa, oo, c0, n](Tape& tp) {
      tp.grad(oa).middleCols(c0, n) += tp.grad(oo);
    };
  }
  return out;
}

Var slice_rows(Var a, Eigen::Index r0, Eigen::Index n) {
  PSYGEN_CONTRACT(r0 >= 0 && r0 + n <= a.rows(), "slice_rows: out of range");
  Tape& t = *a.tape;
  Var out = t.make_node(Mat(a.value().middleRows(r0, n)), t.needs_grad(a.id));
  if (out.tape->needs_grad(out.id)) {
    int oa = a.id, oo = out.id;
    t.node(oo).back = [oa, oo, r0, n](Tape& tp) {
      tp.grad(oa).middleRows(r0, n) += tp.grad(oo);
    };
  }
  return out;
}

Var row(Var a, Eigen::Index r) { return slice_rows(a, r, 1); }

Var mean_rows(Var a) {
  Tape& t = *a.tape;
  Mat y = a.value().colwise().mean();
  Var out = t.make_node(std::move(y), t.needs_grad(a.id));
  if (out.tape->needs_grad(out.id)) {
    int oa = a.id, oo = out.id;
    double inv = 1.0 / static_cast<double>(a.rows());
    t.node(oo).back = [oa, oo, inv](Tape& tp) {
      tp.grad(oa).rowwise() += Eigen::RowVectorXd(tp.grad(oo).row(0) * inv);
    };
  }
  return out;
}

Var sum_all(Var a) {
  Tape& t = *a.tape;
  Mat y(1, 1);
  y(0, 0) = a.value().sum();
  Var out = t.make_node(std::move(y), t.needs_grad(a.id));
  if (out.tape->needs_grad(out.id)) {
    int oa = a.id, oo = out.id;
    t.node(oo).back = [oa, oo](Tape& tp) {
      tp.grad(oa).array() += tp.grad(oo)(0, 0);
    };
  }
  return out;
}

Var add_row_broadcast(Var a, Var bias) {
  check_same_tape(a, bias);
  PSYGEN_CONTRACT(bias.rows() == 1 && bias.cols() == a.cols(), "add_row_broadcast: bad bias shape");
  Tape& t = *a.tape;
  Mat y = a.value();
  y.rowwise() += Eigen::RowVectorXd(bias.value().row(0));
  Var out = t.make_node(std::move(y), any_grad({a, bias}));
  if (out.tape->needs_grad(out.id)) {
    int oa = a.id, ob = bias.id, oo = out.id;
    t.node(oo).back = [oa, ob, oo](Tape& tp) {
      tp.accumulate(oa, tp.grad(oo));
      if (tp.needs_grad(ob)) tp.grad(ob) += tp.grad(oo).colwise().sum();
    };
  }
  return out;
}

namespace {

Var softmax_impl(Var a, const Mat* mask) {
  Tape& t = *a.tape;
  Mat z = a.value();
  if (mask) {
    PSYGEN_CONTRACT(mask->rows() == z.rows() && mask->cols() == z.cols(),
                    "softmax mask shape mismatch");
    z += *mask;
  }
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    double mx = z.row(r).maxCoeff();
    auto e = (z.row(r).array() - mx).exp().eval();
    z.row(r) = (e / e.sum()).matrix();
  }
  Var out = t.make_node(std::move(z), t.needs_grad(a.id));
  if (out.tape->needs_grad(out.id)) {
    int oa = a.id, oo = out.id;
    t.node(oo).back = [oa, oo](Tape& tp) {
      const Mat& s = tp.val(oo);
      const Mat& gs = tp.grad(oo);
      Mat gx(s.rows(), s.cols());
      for (Eigen::Index r = 0; r < s.rows(); ++r) {
        double dot = gs.row(r).dot(s.row(r));
        gx.row(r) = s.row(r).cwiseProduct((gs.row(r).array() - dot).matrix());
      }
      tp.grad(oa) += gx;
    };
  }
  return out;
}

}  // namespace

Var softmax_rows(Var a) { return softmax_impl(a, nullptr); }

Var softmax_rows_masked(Var a, const Mat& additive_mask) { return softmax_impl(a, &additive_mask); }

Var layer_norm(Var a, Var gain, Var bias, double eps) {
  check_same_tape(a, gain);
  check_same_tape(a, bias);
  PSYGEN_CONTRACT(gain.rows() == 1 && gain.cols() == a.cols(), "layer_norm: bad gain shape");
  PSYGEN_CONTRACT(bias.rows() == 1 && bias.cols() == a.cols(), "layer_norm: bad bias shape");
  Tape& t = *a.tape;
  const Mat& x = a.value();
  Eigen::Index R = x.rows(), C = x.cols();
  Mat xhat(R, C);
  Eigen::VectorXd inv_std(R);
  for (Eigen::Index r = 0; r < R; ++r) {
    double mu = x.row(r).mean();
    auto d = (x.row(r).array() - mu).eval();
    double var = d.square().mean();
    double is = 1.0 / std::sqrt(var + eps);
    inv_std(r) = is;
    xhat.row(r) = (d * is).matrix();
  }
  Mat y = xhat;
  for (Eigen::Index r = 0; r < R; ++r)
    y.row(r) = y.row(r).cwiseProduct(gain.value().row(0)) + bias.value().row(0);
  Var out = t.make_node(std::move(y), any_grad({a, gain, bias}));
  if (out.tape->needs_grad(out.id)) {
    int oa = a.id, og = gain.id, ob = bias.id, oo = out.id;
    auto xh = std::make_shared<Mat>(std::move(xhat));
    auto is = std::make_shared<Eigen::VectorXd>(std::move(inv_std));
    t.node(oo).back = [oa, og, ob, oo, xh, is](Tape& tp) {
      const Mat& gy = tp.grad(oo);
      const Mat& g = tp.val(og);
      Eigen::Index R2 = gy.rows(), C2 = gy.cols();
      if (tp.needs_grad(ob)) tp.grad(ob) += gy.colwise().sum();
      if (tp.needs_grad(og)) tp.grad(og) += gy.cwiseProduct(*xh).colwise().sum();
      if (tp.needs_grad(oa)) {
        Mat gx(R2, C2);
        for (Eigen::Index r = 0; r < R2; ++r) {
          Eigen::RowVectorXd dxhat = gy.row(r).cwiseProduct(g.row(0));
          double m1 = dxhat.mean();
          double m2 = dxhat.cwiseProduct(xh->row(r)).mean();
          gx.row(r) =
              ((*is)(r)) * (dxhat.array() - m1 - xh->row(r).array() * m2).matrix();
        }
        tp.grad(oa) += gx;
      }
    };
  }
  return out;
}

Var gather_rows(Var table, const std::vector<int>& ids) {
  Tape& t = *table.tape;
  Mat y(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    PSYGEN_CONTRACT(ids[i] >= 0 && ids[i] < table.rows(), "gather_rows: id out of range");
    y.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
  }
  Var out = t.make_node(std::move(y), t.needs_grad(table.id));
  if (out.tape->needs_grad(out.id)) {
    int oa = table.id, oo = out.id;
    auto idv = std::make_shared<std::vector<int>>(ids);
    t.node(oo).back = [oa, oo, idv](Tape& tp) {
      Mat& g = tp.grad(oa);
      const Mat& gy = tp.grad(oo);
      for (size_t i = 0; i < idv->size(); ++i)
        g.row((*idv)[i]) += gy.row(static_cast<Eigen::Index>(i));
    };
  }
  return out;
}

Var cross_entropy_smoothed(Var logits, const std::vector<int>& targets, double eps) {
  Tape& t = *logits.tape;
  Eigen::Index T = logits.rows(), V = logits.cols();
  PSYGEN_CONTRACT(static_cast<Eigen::Index>(targets.size()) == T,
                  "cross_entropy: target length mismatch");
  PSYGEN_CONTRACT(T >= 1, "cross_entropy: empty target");
  PSYGEN_CONTRACT(V >= 2, "cross_entropy: vocab too small");
  // log-softmax rows, then loss = -(1/T) sum_t sum_v q_tv * logp_tv with
  // q putting 1-eps on the target and eps/(V-1) on every other entry.
  Mat logp(T, V);
  const Mat& x = logits.value();
  for (Eigen::Index r = 0; r < T; ++r) {
    double mx = x.row(r).maxCoeff();
    double lse = std::log((x.row(r).array() - mx).exp().sum()) + mx;
    logp.row(r) = (x.row(r).array() - lse).matrix();
  }
  double off = eps / static_cast<double>(V - 1);
  double loss = 0.0;
  for (Eigen::Index r = 0; r < T; ++r) {
    int y = targets[r];
    PSYGEN_CONTRACT(y >= 0 && y < V, "cross_entropy: target id out of range");
    double row_sum = logp.row(r).sum();
    loss += -(1.0 - eps) * logp(r, y) - off * (row_sum - logp(r, y));
  }
  loss /= static_cast<double>(T);
  Mat ym(1, 1);
  ym(0, 0) = loss;
  Var out = t.make_node(std::move(ym), t.needs_grad(logits.id));
  if (out.tape->needs_grad(out.id)) {
    int oa = logits.id, oo = out.id;
    auto lp = std::make_shared<Mat>(std::move(logp));
    auto tg = std::make_shared<std::vector<int>>(targets);
    t.node(oo).back = [oa, oo, lp, tg, eps](Tape& tp) {
      double gscale = tp.grad(oo)(0, 0);
      Eigen::Index T2 = lp->rows(), V2 = lp->cols();
      double off2 = eps / static_cast<double>(V2 - 1);
      Mat g(T2, V2);
      for (Eigen::Index r = 0; r < T2; ++r) {
        auto p = lp->row(r).array().exp().eval();
        g.row(r) = p.matrix();
        g.row(r).array() -= off2;
        g(r, (*tg)[r]) -= (1.0 - eps) - off2;
      }
      tp.grad(oa) += g * (gscale / static_cast<double>(T2));
    };
  }
  return out;
}

Var dropout(Var a, double rate, Rng& rng) {
  if (rate <= 0.0) return a;
  PSYGEN_CONTRACT(rate < 1.0, "dropout rate must be < 1");
  Tape& t = *a.tape;
  double keep = 1.0 - rate;
  Mat mask(a.rows(), a.cols());
  for (Eigen::Index c = 0; c < a.cols(); ++c)
    for (Eigen::Index r = 0; r < a.rows(); ++r)
      mask(r, c) = rng.coin(keep) ? 1.0 / keep : 0.0;
  Var out = t.make_node(Mat(a.value().cwiseProduct(mask)), t.needs_grad(a.id));
  if (out.tape->needs_grad(out.id)) {
    int oa = a.id, oo = out.id;
    auto mk = std::make_shared<Mat>(std::move(mask));
    t.node(oo).back = [oa, oo, mk](Tape& tp) { tp.grad(oa) += tp.grad(oo).cwiseProduct(*mk); };
  }
  return out;
}

void Adam::step() {
  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& p : params_->items()) {
    p->adam_m = cfg_.beta1 * p->adam_m + (1.0 - cfg_.beta1) * p->grad;
    p->adam_v = cfg_.beta2 * p->adam_v + (1.0 - cfg_.beta2) * p->grad.cwiseProduct(p->grad);
    p->value.array() -=
        cfg_.lr * (p->adam_m.array() / bc1) / ((p->adam_v.array() / bc2).sqrt() + cfg_.eps);
  }
}

}  // namespace psygen::nn
