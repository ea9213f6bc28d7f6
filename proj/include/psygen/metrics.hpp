#pragma once

#include <string>
#include <vector>

#include "psygen/model.hpp"

namespace psygen {

/// Flat metric bundle; nc/ec stay negative when no labeler was available.
struct MetricReport {
  double ppl = 0.0;
  double bleu1 = 0.0;
  double bleu2 = 0.0;
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
  double nc = -1.0;
  double ec = -1.0;

  std::string to_json() const;
};

// Corpus-level BLEU-n: geometric mean of modified k-gram precisions for
// k = 1..n with brevity penalty. Zero-count orders k >= 2 get add-one
// smoothing; order 1 does not, so disjoint texts score exactly 0.
double bleu_corpus(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                   int n);

// Sentence-level F1 scores.
double rouge_n(const std::string& hyp, const std::string& ref, int n);
double rouge_l(const std::string& hyp, const std::string& ref);

// Mean over aligned pairs. variant: 1, 2, or 0 for L.
double rouge_corpus(const std::vector<std::string>& hyps, const std::vector<std::string>& refs,
                    int variant);

// exp of token-mean unsmoothed NLL over the sample set.
double perplexity(const StoryModel& model, const std::vector<TrainingSample>& samples,
                  const AblationFlags& flags);

}  // namespace psygen
