#include "psygen/planner.hpp"

#include <algorithm>
#include <sstream>

namespace psygen {

using namespace nn;

GruCell::GruCell(ParamStore& store, int in_dim, int hidden, const std::string& prefix, Rng& rng)
    : hidden_(hidden) {
  wr_ = &store.create(prefix + ".wr", hidden, in_dim, 0.02, rng);
  ur_ = &store.create(prefix + ".ur", hidden, hidden, 0.02, rng);
  br_ = &store.create_zeros(prefix + ".br", 1, hidden);
  wz_ = &store.create(prefix + ".wz", hidden, in_dim, 0.02, rng);
  uz_ = &store.create(prefix + ".uz", hidden, hidden, 0.02, rng);
  bz_ = &store.create_zeros(prefix + ".bz", 1, hidden);
  wc_ = &store.create(prefix + ".wc", hidden, in_dim, 0.02, rng);
  uc_ = &store.create(prefix + ".uc", hidden, hidden, 0.02, rng);
  bc_ = &store.create_zeros(prefix + ".bc", 1, hidden);
}

Var GruCell::step(Tape& tape, Var x, Var h) const {
  PSYGEN_CONTRACT(x.rows() == 1 && h.rows() == 1 && h.cols() == hidden_,
                  "gru step expects 1 x in and 1 x hidden rows");
  Var r = sigmoid_(add(add(matmul_nt(x, tape.param(*wr_)), matmul_nt(h, tape.param(*ur_))),
                       tape.param(*br_)));
  Var z = sigmoid_(add(add(matmul_nt(x, tape.param(*wz_)), matmul_nt(h, tape.param(*uz_))),
                       tape.param(*bz_)));
  Var c = tanh_(add(add(matmul_nt(x, tape.param(*wc_)), matmul_nt(cmul(r, h), tape.param(*uc_))),
                    tape.param(*bc_)));
  return add(cmul(one_minus(z), c), cmul(z, h));
}

BiGru::BiGru(ParamStore& store, int in_dim, int hidden, const std::string& prefix, Rng& rng)
    : fwd_(store, in_dim, hidden, prefix + ".fwd", rng),
      bwd_(store, in_dim, hidden, prefix + ".bwd", rng) {}

std::vector<Var> BiGru::run(Tape& tape, const std::vector<Var>& xs) const {
  PSYGEN_CONTRACT(!xs.empty(), "bigru needs a nonempty sequence");
  const size_t n = xs.size();
  const int hid = fwd_.hidden();
  Var h0 = tape.constant(Mat::Zero(1, hid));
  std::vector<Var> fstates(n), bstates(n);
  Var h = h0;
  for (size_t i = 0; i < n; ++i) {
    h = fwd_.step(tape, xs[i], h);
    fstates[i] = h;
  }
  h = h0;
  for (size_t i = n; i-- > 0;) {
    h = bwd_.step(tape, xs[i], h);
    bstates[i] = h;
  }
  std::vector<Var> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = concat_cols(fstates[i], bstates[i]);
  return out;
}

ChainPlanner::ChainPlanner(ParamStore& store, const ModelConfig& cfg, int num_labels,
                           const std::string& prefix)
    : table_(nullptr),
      gru_([&store, &cfg, &prefix]() -> BiGru {
        Rng rng(cfg.seed ^ fnv1a(prefix + ".gru"));
        return BiGru(store, cfg.d_plan, cfg.d_plan, prefix + ".gru", rng);
      }()) {
  Rng rng(cfg.seed ^ fnv1a(prefix + ".table"));
  table_ = &store.create(prefix + ".table", num_labels, cfg.d_plan, 0.02, rng);
}

std::vector<Var> ChainPlanner::plan(Tape& tape, const std::vector<int>& chain) const {
  PSYGEN_CONTRACT(chain.size() == kEventsPerStory, "chain must have exactly 5 labels");
  Var rows = gather_rows(tape.param(*table_), chain);
  std::vector<Var> xs;
  xs.reserve(chain.size());
  for (size_t i = 0; i < chain.size(); ++i) xs.push_back(row(rows, static_cast<Eigen::Index>(i)));
  return gru_.run(tape, xs);
}

Var select_plan(const std::vector<Var>& t, int j) {
  PSYGEN_CONTRACT(j >= 1 && j <= static_cast<int>(t.size()), "plan index out of range");
  return t[static_cast<size_t>(j - 1)];
}

int overlay_label_vectors(Param* table, const std::vector<std::string>& names,
                          const std::string& path) {
  PSYGEN_CONTRACT(table != nullptr, "overlay needs a table");
  PSYGEN_CONTRACT(static_cast<size_t>(table->value.rows()) == names.size(),
                  "label name list must match table rows");
  std::istringstream is(read_file(path));
  std::string line;
  int replaced = 0;
  size_t rowno = 0;
  while (std::getline(is, line)) {
    ++rowno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    auto it = std::find(names.begin(), names.end(), word);
    if (it == names.end()) continue;
    Eigen::Index r = static_cast<Eigen::Index>(it - names.begin());
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    PSYGEN_CHECK(static_cast<Eigen::Index>(vals.size()) == table->value.cols(), Status::Config,
                 path + ":" + std::to_string(rowno) + ": vector width " +
                     std::to_string(vals.size()) + " does not match planner width " +
                     std::to_string(table->value.cols()));
    for (Eigen::Index c = 0; c < table->value.cols(); ++c)
      table->value(r, c) = vals[static_cast<size_t>(c)];
    ++replaced;
  }
  return replaced;
}

}  // namespace psygen
