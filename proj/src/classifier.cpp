#include "psygen/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace psygen {

using nn::Mat;
using nn::Tape;
using nn::Var;

BagClassifier::BagClassifier(int num_labels, ClassifierConfig cfg)
    : num_labels_(num_labels), cfg_(cfg) {
  PSYGEN_CHECK(num_labels >= 2, Status::Contract, "classifier needs at least two labels");
  PSYGEN_CHECK(cfg_.d_embed > 0 && cfg_.epochs > 0 && cfg_.batch_size > 0 && cfg_.lr > 0.0,
               Status::Config, "classifier config values must be positive");
}

std::vector<int> BagClassifier::token_ids(const std::string& text) const {
  std::vector<int> ids;
  for (const auto& tok : tokenize(text)) {
    auto it = token_to_id_.find(tok);
    ids.push_back(it == token_to_id_.end() ? 0 : it->second);
  }
  if (ids.empty()) ids.push_back(0);
  return ids;
}

ClassifierEval BagClassifier::fit(const std::vector<LabeledEvent>& train,
                                  const std::vector<LabeledEvent>& dev) {
  PSYGEN_CHECK(!train.empty(), Status::Data, "classifier training set is empty");
  std::set<int> seen;
  for (const auto& ev : train) {
    PSYGEN_CHECK(ev.label >= 0 && ev.label < num_labels_, Status::Data,
                 "label index out of range: " + std::to_string(ev.label));
    seen.insert(ev.label);
  }
  PSYGEN_CHECK(seen.size() >= 2, Status::Data,
               "classifier training data carries a single label; nothing to separate");

  // Frequency-filtered token table; id 0 stays reserved for unknowns.
  std::map<std::string, int> freq;
  for (const auto& ev : train)
    for (const auto& tok : tokenize(ev.text)) ++freq[tok];
  token_to_id_.clear();
  int next = 1;
  for (const auto& [tok, n] : freq)
    if (n >= cfg_.min_freq) token_to_id_[tok] = next++;

  Rng rng(cfg_.seed);
  store_ = nn::ParamStore();
  emb_ = &store_.create("cls.emb", next, cfg_.d_embed, 0.1, rng);
  head_w_ = &store_.create("cls.head_w", num_labels_, cfg_.d_embed, 0.1, rng);
  head_b_ = &store_.create_zeros("cls.head_b", 1, num_labels_);

  nn::AdamConfig acfg;
  acfg.lr = cfg_.lr;
  nn::Adam opt(store_, acfg);

  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    rng.shuffle(order);
    for (size_t at = 0; at < order.size(); at += static_cast<size_t>(cfg_.batch_size)) {
      size_t end = std::min(order.size(), at + static_cast<size_t>(cfg_.batch_size));
      store_.zero_grads();
      double inv = 1.0 / static_cast<double>(end - at);
      for (size_t k = at; k < end; ++k) {
        const auto& ev = train[order[k]];
        Tape tape;
        Var pooled = nn::mean_rows(nn::gather_rows(tape.param(*emb_), token_ids(ev.text)));
        Var logits = nn::add(nn::matmul_nt(pooled, tape.param(*head_w_)), tape.param(*head_b_));
        Var loss = nn::cross_entropy_smoothed(logits, {ev.label}, 0.0);
        tape.backward(nn::scale(loss, inv));
      }
      opt.step();
    }
  }
  return evaluate_labeler(*this, dev.empty() ? train : dev);
}

Eigen::RowVectorXd BagClassifier::encode(const std::string& text) const {
  auto ids = token_ids(text);
  Eigen::RowVectorXd pooled = Eigen::RowVectorXd::Zero(cfg_.d_embed);
  for (int id : ids) pooled += emb_->value.row(id);
  return pooled / static_cast<double>(ids.size());
}

Eigen::VectorXd BagClassifier::probs(const std::string& text) const {
  PSYGEN_CHECK(emb_ != nullptr, Status::Contract, "classifier queried before fit");
  Eigen::RowVectorXd pooled = encode(text);
  Eigen::VectorXd logits = head_w_->value * pooled.transpose() + head_b_->value.transpose();
  double mx = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - mx).exp();
  return e / e.sum();
}

int BagClassifier::predict(const std::string& text) const {
  Eigen::VectorXd p = probs(text);
  int best = 0;
  p.maxCoeff(&best);
  return best;
}

ClassifierEval evaluate_labeler(const TextLabeler& labeler,
                                const std::vector<LabeledEvent>& data) {
  PSYGEN_CHECK(!data.empty(), Status::Contract, "evaluating a labeler on an empty set");
  const int n = labeler.num_labels();
  std::vector<long> tp(static_cast<size_t>(n), 0), fp(static_cast<size_t>(n), 0),
      fn(static_cast<size_t>(n), 0);
  long correct = 0;
  for (const auto& ev : data) {
    int pred = labeler.predict(ev.text);
    if (pred == ev.label) {
      ++correct;
      ++tp[static_cast<size_t>(pred)];
    } else {
      ++fp[static_cast<size_t>(pred)];
      ++fn[static_cast<size_t>(ev.label)];
    }
  }
  ClassifierEval out;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  double f1_sum = 0.0;
  int f1_count = 0;
  for (int c = 0; c < n; ++c) {
    auto i = static_cast<size_t>(c);
    long support = tp[i] + fp[i] + fn[i];
    if (support == 0) continue;  // label absent from gold and predictions alike
    double denom = static_cast<double>(2 * tp[i] + fp[i] + fn[i]);
    f1_sum += denom > 0.0 ? 2.0 * static_cast<double>(tp[i]) / denom : 0.0;
    ++f1_count;
  }
  out.macro_f1 = f1_count > 0 ? f1_sum / static_cast<double>(f1_count) : 0.0;
  return out;
}

KeywordScorer::KeywordScorer(Kind kind, const Lexicon& lexicon) {
  validate_lexicon(lexicon);
  if (kind == Kind::Need) {
    num_labels_ = kNumNeeds;
    for (int c = 1; c < kNumNeeds; ++c)
      for (const auto& kw : lexicon.need_keywords[static_cast<size_t>(c)])
        keyword_to_label_[kw] = c;
  } else {
    num_labels_ = kNumEmotions;
    for (int c = 1; c < kNumEmotions; ++c)
      for (const auto& kw : lexicon.emotion_keywords[static_cast<size_t>(c)])
        keyword_to_label_[kw] = c;
  }
}

int KeywordScorer::predict(const std::string& text) const {
  int found = 0;
  for (const auto& tok : tokenize(text)) {
    auto it = keyword_to_label_.find(tok);
    if (it == keyword_to_label_.end()) continue;
    PSYGEN_CHECK(found == 0 || found == it->second, Status::Data,
                 "event mixes keywords from different labels: " + text);
    found = it->second;
  }
  return found;
}

ConsistencyResult nc_ec(const std::vector<std::array<std::string, kEventsPerStory>>& stories,
                        const std::vector<NeedChain>& need_chains,
                        const std::vector<EmotionChain>& emotion_chains,
                        const TextLabeler& need_labeler, const TextLabeler& emotion_labeler,
                        bool all_positions) {
  PSYGEN_CHECK(stories.size() == need_chains.size() && stories.size() == emotion_chains.size(),
               Status::Contract, "stories and chains must align one to one");
  PSYGEN_CHECK(!stories.empty(), Status::Contract, "consistency over an empty story set");
  // Generated text may violate a strict labeler's input contract (for the
  // keyword scorer: keywords of two labels in one event). That is a failed
  // prediction for the event, not a scoring abort.
  auto safe_predict = [](const TextLabeler& lab, const std::string& text) {
    try {
      return lab.predict(text);
    } catch (const Error&) {
      return -1;
    }
  };
  long n_match = 0, e_match = 0, scored = 0;
  const int first = all_positions ? 0 : 1;
  for (size_t s = 0; s < stories.size(); ++s) {
    for (int i = first; i < kEventsPerStory; ++i) {
      auto idx = static_cast<size_t>(i);
      ++scored;
      if (safe_predict(need_labeler, stories[s][idx]) == static_cast<int>(need_chains[s][idx]))
        ++n_match;
      if (safe_predict(emotion_labeler, stories[s][idx]) ==
          static_cast<int>(emotion_chains[s][idx]))
        ++e_match;
    }
  }
  ConsistencyResult out;
  out.nc = static_cast<double>(n_match) / static_cast<double>(scored);
  out.ec = static_cast<double>(e_match) / static_cast<double>(scored);
  return out;
}

}  // namespace psygen
