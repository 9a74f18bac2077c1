#include "satdiff/diffusion.hpp"

#include <algorithm>
#include <numeric>

namespace satdiff::diffusion {

namespace {

void check_time(int t, int horizon, int min_t) {
  if (horizon < 1 || t < min_t || t > horizon) {
    throw Error(Errc::invalid_time, "time index " + std::to_string(t) +
                                        " outside [" + std::to_string(min_t) + ", " +
                                        std::to_string(horizon) + "]");
  }
}

std::size_t remask_target(std::size_t len, int t, int horizon) {
  // ceil(len * (t-1) / T): the reverse marginal mirrors the forward one.
  std::size_t num = len * static_cast<std::size_t>(t - 1);
  return (num + static_cast<std::size_t>(horizon) - 1) /
         static_cast<std::size_t>(horizon);
}

std::string trace_cell(const Canvas& canvas, const DiffusionState& state,
                       const sat::Vocabulary& vocab, std::size_t i) {
  if (state.mask_flags[i] != 0) return "□";  // white square for MASK
  std::uint32_t s = canvas.sym[i];
  if (s == sat::k_sym_pad) return "#";
  std::uint32_t m = canvas.mod[i];
  sat::ModifierPath path;
  if (m != sat::k_mod_pad && m != sat::k_mod_mask) path = vocab.path(m);
  return vocab.symbol_name(s) + "/" + sat::path_text(path);
}

std::string trace_line(const DiffusionState& state, const sat::Vocabulary& vocab) {
  std::string line = "t=" + std::to_string(state.t) +
                     " masked=" + std::to_string(state.masked_count()) + " canvas=";
  // Trailing PAD run is noise; keep interior cells aligned.
  std::size_t last = state.canvas.size();
  while (last > 0 && state.mask_flags[last - 1] == 0 &&
         state.canvas.sym[last - 1] == sat::k_sym_pad) {
    --last;
  }
  for (std::size_t i = 0; i < last; ++i) {
    if (i > 0) line += ' ';
    line += trace_cell(state.canvas, state, vocab, i);
  }
  return line;
}

}  // namespace

std::size_t DiffusionState::masked_count() const {
  return static_cast<std::size_t>(
      std::count(mask_flags.begin(), mask_flags.end(), std::uint8_t{1}));
}

DiffusionState forward_mask(const Canvas& x0, int t, int horizon, Rng& rng) {
  check_time(t, horizon, /*min_t=*/0);
  DiffusionState state;
  state.t = t;
  state.horizon = horizon;
  state.canvas = x0;
  state.mask_flags.assign(x0.size(), 0);
  const double threshold = static_cast<double>(t) / static_cast<double>(horizon);
  for (std::size_t i = 0; i < x0.size(); ++i) {
    if (rng.uniform() < threshold) {
      state.canvas.sym[i] = sat::k_sym_mask;
      state.canvas.mod[i] = sat::k_mod_mask;
      state.mask_flags[i] = 1;
    }
  }
  return state;
}

Canvas argmax_canvas(const TokenDistribution& dist) {
  Canvas out;
  out.sym.resize(dist.len);
  out.mod.resize(dist.len);
  for (std::size_t i = 0; i < dist.len; ++i) {
    auto srow = dist.sym_row(i);
    auto mrow = dist.mod_row(i);
    out.sym[i] = static_cast<std::uint32_t>(
        std::max_element(srow.begin(), srow.end()) - srow.begin());
    out.mod[i] = static_cast<std::uint32_t>(
        std::max_element(mrow.begin(), mrow.end()) - mrow.begin());
  }
  return out;
}

DiffusionState remask(const Canvas& pred, const TokenDistribution& dist, int t,
                      int horizon, RemaskPolicy policy, Rng& rng) {
  check_time(t, horizon, /*min_t=*/1);
  const std::size_t len = pred.size();
  const std::size_t k = remask_target(len, t, horizon);

  std::vector<std::size_t> chosen;
  if (k > 0 && policy == RemaskPolicy::low_confidence) {
    std::vector<double> confidence(len);
    for (std::size_t i = 0; i < len; ++i) {
      auto srow = dist.sym_row(i);
      auto mrow = dist.mod_row(i);
      confidence[i] = *std::max_element(srow.begin(), srow.end()) *
                      *std::max_element(mrow.begin(), mrow.end());
    }
    chosen.resize(len);
    std::iota(chosen.begin(), chosen.end(), 0);
    std::stable_sort(chosen.begin(), chosen.end(),
                     [&](std::size_t a, std::size_t b) {
                       return confidence[a] < confidence[b];
                     });
    chosen.resize(k);
  } else if (k > 0) {
    // Partial Fisher-Yates over an index pool.
    std::vector<std::size_t> pool(len);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + rng.below(len - i);
      std::swap(pool[i], pool[j]);
    }
    chosen.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
  }

  DiffusionState state;
  state.t = t - 1;
  state.horizon = horizon;
  state.canvas = pred;
  state.mask_flags.assign(len, 0);
  for (std::size_t i : chosen) {
    state.canvas.sym[i] = sat::k_sym_mask;
    state.canvas.mod[i] = sat::k_mod_mask;
    state.mask_flags[i] = 1;
  }
  return state;
}

Canvas reverse_decode(const Canvas& observation, const Denoiser& denoiser,
                      int horizon, std::size_t canvas_len, RemaskPolicy policy,
                      Rng& rng, const sat::Vocabulary* trace_vocab,
                      std::vector<std::string>* trace) {
  check_time(horizon, horizon, /*min_t=*/1);
  DiffusionState state;
  state.t = horizon;
  state.horizon = horizon;
  state.canvas.sym.assign(canvas_len, sat::k_sym_mask);
  state.canvas.mod.assign(canvas_len, sat::k_mod_mask);
  state.mask_flags.assign(canvas_len, 1);

  for (int t = horizon; t >= 1; --t) {
    TokenDistribution dist = denoiser.predict(observation, state);
    Canvas pred = argmax_canvas(dist);
    // Masked-diffusion reverse kernel: an unmasked token is carried forward,
    // not re-sampled. Refinement happens through remasking — a kept token the
    // denoiser has become unsure about scores a low confidence and gets
    // re-opened below.
    for (std::size_t i = 0; i < canvas_len; ++i) {
      if (state.mask_flags[i] == 0) {
        pred.sym[i] = state.canvas.sym[i];
        pred.mod[i] = state.canvas.mod[i];
      }
    }
    state = remask(pred, dist, t, horizon, policy, rng);
    if (trace != nullptr && trace_vocab != nullptr) {
      trace->push_back(trace_line(state, *trace_vocab));
    }
  }
  return state.canvas;
}

std::vector<Canvas> decode_n(const Canvas& observation, const Denoiser& denoiser,
                             int horizon, std::size_t canvas_len,
                             RemaskPolicy policy,
                             const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) {
    throw Error(Errc::bad_config, "decode_n requires at least one seed");
  }
  std::vector<Canvas> out;
  out.reserve(seeds.size());
  for (std::uint64_t seed : seeds) {
    Rng rng(seed, /*stream=*/0xDEC0DE);
    out.push_back(reverse_decode(observation, denoiser, horizon, canvas_len, policy,
                                 rng));
  }
  return out;
}

}  // namespace satdiff::diffusion
