#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "satdiff/corpus.hpp"
#include "satdiff/diffusion.hpp"
#include "satdiff/model.hpp"
#include "satdiff/rng.hpp"
#include "satdiff/sat.hpp"

using namespace satdiff;
using namespace satdiff::diffusion;

namespace {

Canvas small_canvas(std::size_t len) {
  Canvas c;
  c.sym.assign(len, 2);  // some real symbol id
  c.mod.assign(len, 2);
  return c;
}

// A denoiser that records the masked count of every state it sees.
class ProbeDenoiser : public Denoiser {
 public:
  ProbeDenoiser(Canvas truth, std::size_t s, std::size_t m)
      : inner_(std::move(truth), s, m) {}

  TokenDistribution predict(const Canvas& obs,
                            const DiffusionState& state) const override {
    masked_history.push_back(state.masked_count());
    return inner_.predict(obs, state);
  }

  mutable std::vector<std::size_t> masked_history;

 private:
  model::OracleDenoiser inner_;
};

// Draws per-position distributions from a seeded stream; peaks are arbitrary
// but deterministic.
class RandomDenoiser : public Denoiser {
 public:
  RandomDenoiser(std::size_t s, std::size_t m, std::uint64_t seed)
      : sym_vocab_(s), mod_vocab_(m), seed_(seed) {}

  TokenDistribution predict(const Canvas& obs,
                            const DiffusionState& state) const override {
    TokenDistribution dist;
    dist.resize(obs.size(), sym_vocab_, mod_vocab_);
    // Depend only on (seed, t, state) so replays are reproducible.
    std::uint64_t mix = seed_ ^ (static_cast<std::uint64_t>(state.t) << 32);
    for (std::size_t i = 0; i < obs.size(); ++i) mix ^= state.canvas.sym[i] + i;
    Rng rng(mix, 0);
    for (std::size_t i = 0; i < obs.size(); ++i) {
      auto srow = dist.sym_row(i);
      double sum = 0.0;
      for (double& v : srow) sum += (v = rng.uniform() + 1e-3);
      for (double& v : srow) v /= sum;
      auto mrow = dist.mod_row(i);
      sum = 0.0;
      for (double& v : mrow) sum += (v = rng.uniform() + 1e-3);
      for (double& v : mrow) v /= sum;
    }
    return dist;
  }

 private:
  std::size_t sym_vocab_;
  std::size_t mod_vocab_;
  std::uint64_t seed_;
};

}  // namespace

TEST_CASE("forward_mask at t=0 and t=T") {
  Canvas x0 = small_canvas(16);
  Rng rng(1, 0);
  DiffusionState zero = forward_mask(x0, 0, 10, rng);
  CHECK(zero.masked_count() == 0);
  CHECK(zero.canvas == x0);

  DiffusionState full = forward_mask(x0, 10, 10, rng);
  CHECK(full.masked_count() == 16);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(full.canvas.sym[i] == sat::k_sym_mask);
    CHECK(full.canvas.mod[i] == sat::k_mod_mask);
  }
}

TEST_CASE("forward_mask rejects invalid times") {
  Canvas x0 = small_canvas(4);
  Rng rng(1, 0);
  CHECK_THROWS_AS(forward_mask(x0, -1, 10, rng), Error);
  CHECK_THROWS_AS(forward_mask(x0, 11, 10, rng), Error);
  CHECK_THROWS_AS(forward_mask(x0, 0, 0, rng), Error);
}

TEST_CASE("forward_mask hits the t/T masking rate within Monte Carlo bounds") {
  // Derived: mean of Bernoulli(t/T) over 10000 canvases of length 64.
  Canvas x0 = small_canvas(64);
  Rng rng(99, 0);
  const int T = 10;
  const int t = 5;
  std::size_t masked = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    masked += forward_mask(x0, t, T, rng).masked_count();
  }
  double fraction = static_cast<double>(masked) / (10000.0 * 64.0);
  CHECK(fraction == doctest::Approx(0.5).epsilon(0.02));
  CHECK(std::abs(fraction - 0.5) < 0.01);
}

TEST_CASE("mask flags mirror the MASK symbol exactly") {
  Canvas x0 = small_canvas(32);
  Rng rng(7, 0);
  DiffusionState state = forward_mask(x0, 3, 7, rng);
  for (std::size_t i = 0; i < state.canvas.size(); ++i) {
    CHECK((state.mask_flags[i] == 1) == (state.canvas.sym[i] == sat::k_sym_mask));
  }
}

TEST_CASE("remask count follows ceil(len*(t-1)/T)") {
  Canvas pred = small_canvas(8);
  TokenDistribution dist;
  dist.resize(8, 4, 4);
  for (std::size_t i = 0; i < 8; ++i) {
    dist.sym_row(i)[2] = 1.0;
    dist.mod_row(i)[2] = 1.0;
  }
  Rng rng(1, 0);
  // t=1 -> k=0: the prediction stands as the final x0 candidate
  DiffusionState final_state =
      remask(pred, dist, 1, 4, RemaskPolicy::low_confidence, rng);
  CHECK(final_state.masked_count() == 0);
  CHECK(final_state.t == 0);
  // len=8, T=4, t=T: k = ceil(8*3/4) = 6, matching the closed form
  auto ceil_div = [](std::size_t a, std::size_t b) { return (a + b - 1) / b; };
  DiffusionState top = remask(pred, dist, 4, 4, RemaskPolicy::low_confidence, rng);
  CHECK(top.masked_count() == ceil_div(8 * 3, 4));
  CHECK(top.masked_count() == 6);

  CHECK_THROWS_AS(remask(pred, dist, 0, 4, RemaskPolicy::low_confidence, rng), Error);
  CHECK_THROWS_AS(remask(pred, dist, 5, 4, RemaskPolicy::low_confidence, rng), Error);
}

TEST_CASE("low-confidence remask hides the least certain position") {
  Canvas pred = small_canvas(3);
  TokenDistribution dist;
  dist.resize(3, 16, 4);
  const double confidences[3] = {0.9, 0.1, 0.5};
  for (std::size_t i = 0; i < 3; ++i) {
    // peak at index 2, the remaining mass spread thin so the peak is the max
    auto row = dist.sym_row(i);
    for (std::size_t v = 0; v < 16; ++v) row[v] = (1.0 - confidences[i]) / 15.0;
    row[2] = confidences[i];
    dist.mod_row(i)[2] = 1.0;
  }
  Rng rng(1, 0);
  // T=3, t=2 -> k = ceil(3*1/3) = 1
  DiffusionState state = remask(pred, dist, 2, 3, RemaskPolicy::low_confidence, rng);
  REQUIRE(state.masked_count() == 1);
  CHECK(state.mask_flags[1] == 1);
}

TEST_CASE("low-confidence ties break toward the lower index") {
  Canvas pred = small_canvas(4);
  TokenDistribution dist;
  dist.resize(4, 4, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    dist.sym_row(i)[2] = 0.5;
    dist.sym_row(i)[3] = 0.5;
    dist.mod_row(i)[2] = 1.0;
  }
  Rng rng(1, 0);
  // T=4, t=3 -> k = ceil(4*2/4) = 2; all confidences equal
  DiffusionState state = remask(pred, dist, 3, 4, RemaskPolicy::low_confidence, rng);
  CHECK(state.mask_flags[0] == 1);
  CHECK(state.mask_flags[1] == 1);
  CHECK(state.mask_flags[2] == 0);
  CHECK(state.mask_flags[3] == 0);
}

TEST_CASE("random remask picks exactly k distinct positions") {
  Canvas pred = small_canvas(10);
  TokenDistribution dist;
  dist.resize(10, 4, 4);
  for (std::size_t i = 0; i < 10; ++i) {
    dist.sym_row(i)[2] = 1.0;
    dist.mod_row(i)[2] = 1.0;
  }
  Rng rng(33, 0);
  DiffusionState state = remask(pred, dist, 5, 5, RemaskPolicy::random, rng);
  CHECK(state.masked_count() == (10 * 4 + 4) / 5);
}

TEST_CASE("oracle decoding is exact for any horizon") {
  corpus::GrammarConfig cfg = corpus::GrammarConfig::defaults();
  cfg.seed = 21;
  cfg.max_sat_len = 24;
  auto asts = corpus::generate(cfg, 50);
  std::vector<sat::SatSequence> seqs;
  for (const auto& ast : asts) seqs.push_back(sat::sat_tokenize(ast));
  sat::Vocabulary vocab = sat::Vocabulary::build(seqs);
  for (int T : {1, 2, 10, 50}) {
    for (const auto& seq : seqs) {
      Canvas truth = sat::encode(seq, vocab, 24);
      model::OracleDenoiser oracle(truth, vocab.symbol_count(), vocab.path_count());
      Rng rng(5, static_cast<std::uint64_t>(T));
      Canvas decoded = reverse_decode(truth, oracle, T, 24,
                                      RemaskPolicy::low_confidence, rng);
      REQUIRE(decoded == truth);
    }
  }
}

TEST_CASE("T=1 is a single-shot parallel decode") {
  Canvas truth = small_canvas(6);
  model::OracleDenoiser oracle(truth, 5, 5);
  Rng rng(3, 0);
  Canvas decoded = reverse_decode(truth, oracle, 1, 6, RemaskPolicy::low_confidence,
                                  rng);
  CHECK(decoded == truth);
}

TEST_CASE("masked count is monotone along the reverse loop and ends at zero") {
  Canvas truth = small_canvas(16);
  ProbeDenoiser probe(truth, 5, 5);
  Rng rng(9, 0);
  Canvas decoded =
      reverse_decode(truth, probe, 8, 16, RemaskPolicy::low_confidence, rng);
  REQUIRE(probe.masked_history.size() == 8);
  CHECK(probe.masked_history.front() == 16);  // x_T is fully masked
  for (std::size_t i = 1; i < probe.masked_history.size(); ++i) {
    CHECK(probe.masked_history[i] <= probe.masked_history[i - 1]);
  }
  CHECK(decoded == truth);  // final state has zero masks
}

TEST_CASE("identical seeds give bitwise-identical decodes") {
  Canvas obs = small_canvas(12);
  RandomDenoiser denoiser(6, 6, 12345);
  auto run = [&](std::uint64_t seed) {
    Rng rng(seed, 0);
    return reverse_decode(obs, denoiser, 6, 12, RemaskPolicy::random, rng);
  };
  CHECK(run(42) == run(42));
  // and a different seed may differ
  bool differs = !(run(42) == run(43)) || !(run(42) == run(44));
  CHECK(differs);
}

TEST_CASE("per-step prediction has no positional ordering dependence") {
  Canvas obs = small_canvas(9);
  RandomDenoiser denoiser(7, 7, 777);
  DiffusionState state;
  state.t = 3;
  state.horizon = 5;
  state.canvas = obs;
  state.mask_flags.assign(9, 0);
  TokenDistribution dist = denoiser.predict(obs, state);
  Canvas forward_order = argmax_canvas(dist);
  // recompute the argmax scanning positions in reverse
  Canvas reverse_order = forward_order;
  for (std::size_t r = 0; r < dist.len; ++r) {
    std::size_t i = dist.len - 1 - r;
    auto srow = dist.sym_row(i);
    auto mrow = dist.mod_row(i);
    reverse_order.sym[i] = static_cast<std::uint32_t>(
        std::max_element(srow.begin(), srow.end()) - srow.begin());
    reverse_order.mod[i] = static_cast<std::uint32_t>(
        std::max_element(mrow.begin(), mrow.end()) - mrow.begin());
  }
  CHECK(forward_order == reverse_order);
}

TEST_CASE("decode_n with the oracle gives one distinct output") {
  Canvas truth = small_canvas(8);
  model::OracleDenoiser oracle(truth, 5, 5);
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 10; ++s) seeds.push_back(s);
  auto runs = decode_n(truth, oracle, 4, 8, RemaskPolicy::random, seeds);
  REQUIRE(runs.size() == 10);
  for (const Canvas& c : runs) CHECK(c == truth);
}

TEST_CASE("decode_n with one seed returns a singleton") {
  Canvas truth = small_canvas(4);
  model::OracleDenoiser oracle(truth, 5, 5);
  CHECK(decode_n(truth, oracle, 2, 4, RemaskPolicy::random, {7}).size() == 1);
  CHECK_THROWS_AS(decode_n(truth, oracle, 2, 4, RemaskPolicy::random, {}), Error);
}

TEST_CASE("trace emits one line per step") {
  sat::SatSequence seq;
  seq.tokens = {{"x", {}}, {"2", {sat::ModifierTag::sup}}};
  sat::Vocabulary vocab = sat::Vocabulary::build({seq});
  Canvas truth = sat::encode(seq, vocab, 4);
  model::OracleDenoiser oracle(truth, vocab.symbol_count(), vocab.path_count());
  Rng rng(2, 0);
  std::vector<std::string> trace;
  reverse_decode(truth, oracle, 5, 4, RemaskPolicy::low_confidence, rng, &vocab,
                 &trace);
  REQUIRE(trace.size() == 5);
  CHECK(trace.front().rfind("t=4 ", 0) == 0);
  CHECK(trace.back().rfind("t=0 masked=0 canvas=x/_ 2/SUP", 0) == 0);
}
