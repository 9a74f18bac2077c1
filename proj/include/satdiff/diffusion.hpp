#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "satdiff/error.hpp"
#include "satdiff/rng.hpp"
#include "satdiff/sat.hpp"

namespace satdiff::diffusion {

using sat::Canvas;

// Partially masked canvas x_t together with its position on the schedule.
struct DiffusionState {
  Canvas canvas;
  int t = 0;
  int horizon = 1;  // T
  std::vector<std::uint8_t> mask_flags;

  std::size_t masked_count() const;
};

// Per-position categorical weights over both channels, row-major.
struct TokenDistribution {
  std::size_t len = 0;
  std::size_t sym_vocab = 0;
  std::size_t mod_vocab = 0;
  std::vector<double> sym;  // len x sym_vocab
  std::vector<double> mod;  // len x mod_vocab

  void resize(std::size_t n, std::size_t s, std::size_t m) {
    len = n;
    sym_vocab = s;
    mod_vocab = m;
    sym.assign(n * s, 0.0);
    mod.assign(n * m, 0.0);
  }
  std::span<double> sym_row(std::size_t i) { return {sym.data() + i * sym_vocab, sym_vocab}; }
  std::span<const double> sym_row(std::size_t i) const {
    return {sym.data() + i * sym_vocab, sym_vocab};
  }
  std::span<double> mod_row(std::size_t i) { return {mod.data() + i * mod_vocab, mod_vocab}; }
  std::span<const double> mod_row(std::size_t i) const {
    return {mod.data() + i * mod_vocab, mod_vocab};
  }
};

// Anything that can turn (conditioning observation, current state) into
// per-position distributions. Must be defined for every state, fully masked
// and fully unmasked included.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual TokenDistribution predict(const Canvas& observation,
                                    const DiffusionState& state) const = 0;
};

enum class RemaskPolicy { low_confidence, random };

// Independently masks each position with probability t/T; both channels get
// their MASK sentinel. PAD positions are maskable like any other.
DiffusionState forward_mask(const Canvas& x0, int t, int horizon, Rng& rng);

// Re-hides exactly ceil(len * (t-1)/T) positions of a fully unmasked
// prediction, yielding the state for time t-1. Low-confidence keeps the
// positions the denoiser was most sure about (confidence = product of the two
// channel maxima, ties to the lower index); random picks uniformly.
DiffusionState remask(const Canvas& pred, const TokenDistribution& dist, int t,
                      int horizon, RemaskPolicy policy, Rng& rng);

// Per-position argmax over both channels; first maximum wins.
Canvas argmax_canvas(const TokenDistribution& dist);

// The reverse loop: T iterations of predict / remask starting from the
// all-MASK canvas. Each step fills the masked positions with the denoiser's
// argmax and carries unmasked tokens forward; a carried token can still be
// corrected later by being remasked. Optional trace receives one line per
// step.
Canvas reverse_decode(const Canvas& observation, const Denoiser& denoiser,
                      int horizon, std::size_t canvas_len, RemaskPolicy policy,
                      Rng& rng, const sat::Vocabulary* trace_vocab = nullptr,
                      std::vector<std::string>* trace = nullptr);

// n independent reverse decodes, one per seed.
std::vector<Canvas> decode_n(const Canvas& observation, const Denoiser& denoiser,
                             int horizon, std::size_t canvas_len,
                             RemaskPolicy policy,
                             const std::vector<std::uint64_t>& seeds);

}  // namespace satdiff::diffusion
