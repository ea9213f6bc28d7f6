#include "psygen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace psygen {

namespace {

using Gram = std::vector<std::string>;

std::map<Gram, int> gram_counts(const std::vector<std::string>& toks, int n) {
  std::map<Gram, int> counts;
  if (static_cast<int>(toks.size()) < n) return counts;
  for (size_t i = 0; i + static_cast<size_t>(n) <= toks.size(); ++i)
    ++counts[Gram(toks.begin() + static_cast<long>(i), toks.begin() + static_cast<long>(i) + n)];
  return counts;
}

}  // namespace

std::string MetricReport::to_json() const {
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  std::ostringstream os;
  os << "{\"ppl\":" << num(ppl) << ",\"bleu1\":" << num(bleu1) << ",\"bleu2\":" << num(bleu2)
     << ",\"rouge1\":" << num(rouge1) << ",\"rouge2\":" << num(rouge2)
     << ",\"rougeL\":" << num(rougeL) << ",\"nc\":" << num(nc) << ",\"ec\":" << num(ec) << "}";
  return os.str();
}

double bleu_corpus(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                   int n) {
  PSYGEN_CHECK(n >= 1 && n <= 4, Status::Contract, "bleu order must be 1..4");
  PSYGEN_CHECK(hyps.size() == refs.size() && !hyps.empty(), Status::Contract,
               "bleu needs aligned nonempty hypothesis/reference lists");
  size_t hyp_len = 0, ref_len = 0;
  std::vector<long> matches(static_cast<size_t>(n), 0), totals(static_cast<size_t>(n), 0);
  for (size_t i = 0; i < hyps.size(); ++i) {
    auto h = tokenize(hyps[i]);
    auto r = tokenize(refs[i]);
    hyp_len += h.size();
    ref_len += r.size();
    for (int k = 1; k <= n; ++k) {
      auto hc = gram_counts(h, k);
      auto rc = gram_counts(r, k);
      for (const auto& [g, c] : hc) {
        totals[static_cast<size_t>(k - 1)] += c;
        auto it = rc.find(g);
        if (it != rc.end())
          matches[static_cast<size_t>(k - 1)] += std::min(c, it->second);
      }
    }
  }
  if (hyp_len == 0) return 0.0;

  double log_prec = 0.0;
  for (int k = 1; k <= n; ++k) {
    double m = static_cast<double>(matches[static_cast<size_t>(k - 1)]);
    double t = static_cast<double>(totals[static_cast<size_t>(k - 1)]);
    double p;
    if (k == 1) {
      p = t > 0.0 ? m / t : 0.0;
    } else {
      // add-one smoothing keeps higher orders finite on sparse matches
      p = (m > 0.0) ? m / t : (m + 1.0) / (t + 1.0);
    }
    if (p <= 0.0) return 0.0;
    log_prec += std::log(p) / static_cast<double>(n);
  }
  double bp = hyp_len >= ref_len
                  ? 1.0
                  : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return bp * std::exp(log_prec);
}

double rouge_n(const std::string& hyp, const std::string& ref, int n) {
  PSYGEN_CHECK(n >= 1 && n <= 4, Status::Contract, "rouge order must be 1..4");
  auto h = tokenize(hyp);
  auto r = tokenize(ref);
  PSYGEN_CHECK(!r.empty(), Status::Contract, "rouge needs a nonempty reference");
  auto hc = gram_counts(h, n);
  auto rc = gram_counts(r, n);
  long overlap = 0, hyp_total = 0, ref_total = 0;
  for (const auto& [g, c] : hc) hyp_total += c;
  for (const auto& [g, c] : rc) ref_total += c;
  for (const auto& [g, c] : hc) {
    auto it = rc.find(g);
    if (it != rc.end()) overlap += std::min(c, it->second);
  }
  if (hyp_total == 0 || ref_total == 0 || overlap == 0) return 0.0;
  double precision = static_cast<double>(overlap) / static_cast<double>(hyp_total);
  double recall = static_cast<double>(overlap) / static_cast<double>(ref_total);
  return 2.0 * precision * recall / (precision + recall);
}

double rouge_l(const std::string& hyp, const std::string& ref) {
  auto h = tokenize(hyp);
  auto r = tokenize(ref);
  PSYGEN_CHECK(!r.empty(), Status::Contract, "rouge needs a nonempty reference");
  if (h.empty()) return 0.0;
  const size_t n = h.size(), m = r.size();
  std::vector<std::vector<int>> dp(n + 1, std::vector<int>(m + 1, 0));
  for (size_t i = 1; i <= n; ++i)
    for (size_t j = 1; j <= m; ++j)
      dp[i][j] = h[i - 1] == r[j - 1] ? dp[i - 1][j - 1] + 1 : std::max(dp[i - 1][j], dp[i][j - 1]);
  int lcs = dp[n][m];
  if (lcs == 0) return 0.0;
  double precision = static_cast<double>(lcs) / static_cast<double>(n);
  double recall = static_cast<double>(lcs) / static_cast<double>(m);
  return 2.0 * precision * recall / (precision + recall);
}

double rouge_corpus(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                    int variant) {
  PSYGEN_CHECK(hyps.size() == refs.size() && !hyps.empty(), Status::Contract,
               "rouge needs aligned nonempty lists");
  double total = 0.0;
  for (size_t i = 0; i < hyps.size(); ++i)
    total += variant == 0 ? rouge_l(hyps[i], refs[i]) : rouge_n(hyps[i], refs[i], variant);
  return total / static_cast<double>(hyps.size());
}

double perplexity(const StoryModel& model, const std::vector<TrainingSample>& samples,
                  const AblationFlags& flags) {
  PSYGEN_CHECK(!samples.empty(), Status::Contract, "perplexity over an empty sample set");
  double nll_sum = 0.0;
  long tokens = 0;
  for (const auto& s : samples) {
    int t = model.target_token_count(s);
    nll_sum += model.loss_value(s, flags, 0.0) * static_cast<double>(t);
    tokens += t;
  }
  return std::exp(nll_sum / static_cast<double>(tokens));
}

}  // namespace psygen
