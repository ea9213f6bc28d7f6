#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

namespace psygen {

struct BeamOptions {
  int beam = 5;
  int max_len = 32;    // generated tokens, excluding bos/eos
  int min_len = 1;     // eos is not allowed before this many tokens
  int bos = 1;
  int eos = 2;
  double length_exponent = 1.0;
  bool block_trigrams = true;
};

// prefix starts with bos; returns normalized log-probabilities over the
// vocabulary for the next token.
using StepFn = std::function<Eigen::VectorXd(const std::vector<int>&)>;

struct BeamResult {
  std::vector<int> tokens;  // generated ids, without bos/eos
  double score = 0.0;       // length-normalized log-probability
  bool used_fallback = false;  // trigram blocking starved the beam; greedy
                               // decoding without blocking produced the output
};

// Length-normalized beam search with in-hypothesis trigram blocking. Any
// expansion that repeats a trigram already present in the hypothesis is
// discarded. If blocking removes every candidate before any hypothesis
// finishes, decoding restarts greedily without blocking and flags it.
BeamResult beam_search(const StepFn& step, const BeamOptions& opts);

}  // namespace psygen
