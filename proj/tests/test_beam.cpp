#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "psygen/beam.hpp"

using namespace psygen;

namespace {

bool has_repeated_trigram(const std::vector<int>& toks) {
  std::set<std::vector<int>> seen;
  for (size_t i = 0; i + 3 <= toks.size(); ++i)
    if (!seen.insert({toks[i], toks[i + 1], toks[i + 2]}).second) return true;
  return false;
}

}  // namespace

TEST_CASE("beam: a wide beam equals exhaustive search on a four-token vocabulary") {
  // Three expandable tokens: at most 3^3 alive prefixes entering step 3 and
  // 108 pooled candidates, so width 128 makes the beam provably exhaustive.
  BeamOptions opts;
  opts.beam = 128;
  opts.max_len = 4;
  opts.min_len = 1;
  opts.bos = 1;
  opts.eos = 2;
  opts.length_exponent = 0.7;
  opts.block_trigrams = false;

  for (uint64_t seed = 0; seed < 40; ++seed) {
    StepFn step = oracle::hashed_step_fn(4, seed);
    BeamResult got = beam_search(step, opts);
    oracle::SeqScore want = oracle::enumerate_best(step, opts);
    CAPTURE(seed);
    CHECK_FALSE(got.used_fallback);
    CHECK(got.tokens == want.toks);
    CHECK(got.score == doctest::Approx(want.score).epsilon(1e-12));
  }
}

TEST_CASE("beam: width one reproduces greedy decoding") {
  for (bool block : {false, true}) {
    for (uint64_t seed = 100; seed < 120; ++seed) {
      BeamOptions opts;
      opts.beam = 1;
      opts.max_len = 12;
      opts.min_len = 2;
      opts.bos = 1;
      opts.eos = 2;
      opts.length_exponent = 1.0;
      opts.block_trigrams = block;

      StepFn step = oracle::hashed_step_fn(9, seed, block ? 4.0 : 1.0);
      BeamResult got = beam_search(step, opts);
      oracle::GreedyOut want = oracle::greedy_ref(step, opts);
      CAPTURE(seed);
      CAPTURE(block);
      CHECK(got.tokens == want.toks);
      CHECK(got.used_fallback == want.fallback);
      CHECK(got.score == doctest::Approx(want.score).epsilon(1e-12));
    }
  }
}

TEST_CASE("beam: minimum length holds and blocking prevents repeated trigrams") {
  for (uint64_t seed = 0; seed < 50; ++seed) {
    BeamOptions opts;
    opts.beam = 5;
    opts.max_len = 24;
    opts.min_len = 5;
    opts.bos = 1;
    opts.eos = 2;
    opts.length_exponent = 0.7;
    opts.block_trigrams = true;

    // Sharp distributions make unblocked decoding loop, stressing the rule.
    StepFn step = oracle::hashed_step_fn(7, seed, 5.0);
    BeamResult got = beam_search(step, opts);
    CAPTURE(seed);
    CHECK(got.tokens.size() >= static_cast<size_t>(opts.min_len));
    CHECK(got.tokens.size() <= static_cast<size_t>(opts.max_len));
    if (!got.used_fallback) CHECK_FALSE(has_repeated_trigram(got.tokens));
    for (int t : got.tokens) CHECK(t != opts.eos);
  }
}

TEST_CASE("beam: decoding is deterministic") {
  BeamOptions opts;
  opts.beam = 4;
  opts.max_len = 16;
  opts.min_len = 3;
  opts.bos = 1;
  opts.eos = 2;
  opts.length_exponent = 0.7;
  StepFn step = oracle::hashed_step_fn(11, 77);
  BeamResult a = beam_search(step, opts);
  BeamResult b = beam_search(step, opts);
  CHECK(a.tokens == b.tokens);
  CHECK(a.score == b.score);
  CHECK(a.used_fallback == b.used_fallback);
}

TEST_CASE("beam: starved blocking falls back to unblocked greedy") {
  // One real token: any continuation past three tokens repeats the trigram
  // (0,0,0) and min_len forbids eos, so blocking starves the beam.
  BeamOptions opts;
  opts.beam = 3;
  opts.max_len = 6;
  opts.min_len = 6;
  opts.bos = 1;
  opts.eos = 2;
  opts.length_exponent = 1.0;
  opts.block_trigrams = true;

  StepFn step = [](const std::vector<int>&) {
    Eigen::VectorXd lp(3);
    lp << 0.0, -std::numeric_limits<double>::infinity(),
        -std::numeric_limits<double>::infinity();
    return lp;
  };
  BeamResult got = beam_search(step, opts);
  CHECK(got.used_fallback);
  CHECK(got.score == 0.0);
  REQUIRE(got.tokens.size() == 6);
  for (int t : got.tokens) CHECK(t == 0);
}
