#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "satdiff/channel.hpp"
#include "satdiff/diffusion.hpp"
#include "satdiff/rng.hpp"
#include "satdiff/sat.hpp"

namespace satdiff::model {

using diffusion::Canvas;
using diffusion::Denoiser;
using diffusion::DiffusionState;
using diffusion::TokenDistribution;

// ---------------------------------------------------------------------------
// Test and baseline denoisers
// ---------------------------------------------------------------------------

// Point mass on the ground truth at every position, whatever the state.
class OracleDenoiser : public Denoiser {
 public:
  OracleDenoiser(Canvas truth, std::size_t sym_vocab, std::size_t mod_vocab)
      : truth_(std::move(truth)), sym_vocab_(sym_vocab), mod_vocab_(mod_vocab) {}

  TokenDistribution predict(const Canvas& observation,
                            const DiffusionState& state) const override;

 private:
  Canvas truth_;
  std::size_t sym_vocab_;
  std::size_t mod_vocab_;
};

// Point mass on the observation: the no-learning lower bound whose corpus CER
// equals the channel's effective corruption rate.
class CopyDenoiser : public Denoiser {
 public:
  CopyDenoiser(std::size_t sym_vocab, std::size_t mod_vocab)
      : sym_vocab_(sym_vocab), mod_vocab_(mod_vocab) {}

  TokenDistribution predict(const Canvas& observation,
                            const DiffusionState& state) const override;

 private:
  std::size_t sym_vocab_;
  std::size_t mod_vocab_;
};

// Uniform over both channels; only useful for exercising the engine.
class UniformDenoiser : public Denoiser {
 public:
  UniformDenoiser(std::size_t sym_vocab, std::size_t mod_vocab)
      : sym_vocab_(sym_vocab), mod_vocab_(mod_vocab) {}

  TokenDistribution predict(const Canvas& observation,
                            const DiffusionState& state) const override;

 private:
  std::size_t sym_vocab_;
  std::size_t mod_vocab_;
};

// ---------------------------------------------------------------------------
// Trainable mean-pooled context model
// ---------------------------------------------------------------------------

// Per position i over a canvas of length L:
//   f_i = E_sym[state_i] + E_mod[state_i] + E_sym[obs_i] + E_mod[obs_i] + E_pos[i]
//   c   = (1/L) * W * sum_j f_j
//   sym logits_i = Hs^T (f_i + c),  mod logits_i = Hm^T (f_i + c)
// with both channels softmax-normalized per position.
struct ModelParams {
  std::size_t d = 0;
  std::size_t canvas_len = 0;
  std::size_t sym_vocab = 0;
  std::size_t mod_vocab = 0;
  std::vector<double> sym_emb;   // sym_vocab x d
  std::vector<double> mod_emb;   // mod_vocab x d
  std::vector<double> pos_emb;   // canvas_len x d
  std::vector<double> ctx_proj;  // d x d
  std::vector<double> sym_head;  // d x sym_vocab
  std::vector<double> mod_head;  // d x mod_vocab

  static ModelParams init(std::size_t d, std::size_t canvas_len,
                          std::size_t sym_vocab, std::size_t mod_vocab, Rng& rng);

  // Blocks in a fixed order, for generic iteration (gradient check, SGD).
  std::vector<std::pair<const char*, std::vector<double>*>> blocks();
  std::vector<std::pair<const char*, const std::vector<double>*>> blocks() const;
};

struct Gradients {
  std::vector<double> sym_emb, mod_emb, pos_emb, ctx_proj, sym_head, mod_head;

  static Gradients zeros_like(const ModelParams& params);
  void scale(double factor);
};

struct ForwardCache {
  std::vector<double> features;      // L x d
  std::vector<double> feature_sum;   // d
  std::vector<double> context;       // d
  TokenDistribution dist;
};

TokenDistribution forward_model(const ModelParams& params, const Canvas& observation,
                                const DiffusionState& state,
                                ForwardCache* cache = nullptr);

// Accumulates parameter gradients for one forward pass, given the gradient of
// the loss with respect to the (pre-softmax) logits of both channels.
void backward_model(const ModelParams& params, const Canvas& observation,
                    const DiffusionState& state, const ForwardCache& cache,
                    const std::vector<double>& dlogits_sym,
                    const std::vector<double>& dlogits_mod, Gradients& grads);

// Mean over masked positions of both channels' negative log-likelihoods.
// Returns 0 when nothing is masked.
double loss_ce(const TokenDistribution& dist, const Canvas& truth,
               const std::vector<std::uint8_t>& mask_flags);

// Adds d(loss_ce)/d(logits) into the per-channel logit gradients.
void loss_ce_backward(const TokenDistribution& dist, const Canvas& truth,
                      const std::vector<std::uint8_t>& mask_flags,
                      std::vector<double>& dlogits_sym,
                      std::vector<double>& dlogits_mod);

constexpr double k_kl_epsilon = 1e-12;

// Symmetric KL of Random-Masking Mutual Learning, summed over both channels
// and averaged over the evaluated positions (all non-PAD positions of the
// truth canvas). Nonnegative by construction; exactly symmetric in (a, b).
double loss_rmml(const TokenDistribution& a, const TokenDistribution& b,
                 const std::vector<std::uint8_t>& eval_positions);

void loss_rmml_backward(const TokenDistribution& a, const TokenDistribution& b,
                        const std::vector<std::uint8_t>& eval_positions,
                        double weight, std::vector<double>& dlogits_sym_a,
                        std::vector<double>& dlogits_mod_a,
                        std::vector<double>& dlogits_sym_b,
                        std::vector<double>& dlogits_mod_b);

std::vector<std::uint8_t> non_pad_positions(const Canvas& truth);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  std::size_t d = 48;
  std::size_t canvas_len = 64;
  int steps = 10;  // diffusion horizon T during training
  bool rmml_enabled = true;
  double lambda_kl = 1.0;
  std::uint64_t seed = 1;
};

struct StepLosses {
  double total = 0.0;
  double ce1 = 0.0;
  double ce2 = 0.0;
  double kl = 0.0;
};

// Loss and gradient for one example; exposed so the finite-difference oracle
// can probe exactly what the training loop optimizes.
StepLosses example_loss(const ModelParams& params, const Canvas& truth,
                        const Canvas& observation, const DiffusionState& view1,
                        const DiffusionState* view2, double lambda_kl,
                        Gradients* grads);

struct TrainResult {
  ModelParams params;
  std::vector<std::string> log;
};

// Plain SGD over the corpus; every random draw is derived from cfg.seed, so
// identical configs give bitwise-identical parameters. Per example and step:
// sample t uniformly from {1..T}, draw one observation, mask one or two
// independent views at that t, and descend on CE(+RMML).
TrainResult train(const std::vector<sat::SatSequence>& train_set,
                  const std::vector<sat::SatSequence>& valid_set,
                  const sat::Vocabulary& vocab,
                  const channel::ConfusionChannel& chan, const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Checkpoints and inference
// ---------------------------------------------------------------------------

class ModelDenoiser : public Denoiser {
 public:
  ModelDenoiser(const ModelParams& params) : params_(params) {}

  TokenDistribution predict(const Canvas& observation,
                            const DiffusionState& state) const override;

 private:
  const ModelParams& params_;
};

struct Checkpoint {
  ModelParams params;
  sat::Vocabulary vocab;
};

// Versioned text container: vocabulary hash + tables, shapes, and hexfloat
// parameter blocks (lossless round-trip). Loading recomputes the vocabulary
// hash and refuses mismatches.
std::string save_checkpoint(const ModelParams& params, const sat::Vocabulary& vocab);
Checkpoint load_checkpoint(const std::string& text);

}  // namespace satdiff::model
