#include "satdiff/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <sstream>

#include "satdiff/latex.hpp"
#include "satdiff/metrics.hpp"

namespace satdiff::model {

namespace {

void point_mass(TokenDistribution& dist, const Canvas& source) {
  for (std::size_t i = 0; i < dist.len; ++i) {
    dist.sym_row(i)[source.sym[i]] = 1.0;
    dist.mod_row(i)[source.mod[i]] = 1.0;
  }
}

void softmax_inplace(std::span<double> row) {
  double max = row[0];
  for (double v : row) max = std::max(max, v);
  double sum = 0.0;
  for (double& v : row) {
    v = std::exp(v - max);
    sum += v;
  }
  for (double& v : row) v /= sum;
}

inline double safe_log(double p) { return std::log(std::max(p, 1e-300)); }

}  // namespace

TokenDistribution OracleDenoiser::predict(const Canvas& observation,
                                          const DiffusionState& state) const {
  (void)observation;
  (void)state;
  TokenDistribution dist;
  dist.resize(truth_.size(), sym_vocab_, mod_vocab_);
  point_mass(dist, truth_);
  return dist;
}

TokenDistribution CopyDenoiser::predict(const Canvas& observation,
                                        const DiffusionState& state) const {
  (void)state;
  TokenDistribution dist;
  dist.resize(observation.size(), sym_vocab_, mod_vocab_);
  point_mass(dist, observation);
  return dist;
}

TokenDistribution UniformDenoiser::predict(const Canvas& observation,
                                           const DiffusionState& state) const {
  (void)state;
  TokenDistribution dist;
  dist.resize(observation.size(), sym_vocab_, mod_vocab_);
  for (double& v : dist.sym) v = 1.0 / static_cast<double>(sym_vocab_);
  for (double& v : dist.mod) v = 1.0 / static_cast<double>(mod_vocab_);
  return dist;
}

ModelParams ModelParams::init(std::size_t d, std::size_t canvas_len,
                              std::size_t sym_vocab, std::size_t mod_vocab,
                              Rng& rng) {
  if (d < 2) throw Error(Errc::bad_config, "embedding width must be at least 2");
  ModelParams p;
  p.d = d;
  p.canvas_len = canvas_len;
  p.sym_vocab = sym_vocab;
  p.mod_vocab = mod_vocab;
  auto fill = [&rng](std::vector<double>& block, std::size_t n) {
    block.resize(n);
    for (double& v : block) v = 0.1 * rng.normal();
  };
  fill(p.sym_emb, sym_vocab * d);
  fill(p.mod_emb, mod_vocab * d);
  fill(p.pos_emb, canvas_len * d);
  fill(p.ctx_proj, d * d);
  fill(p.sym_head, d * sym_vocab);
  fill(p.mod_head, d * mod_vocab);
  return p;
}

std::vector<std::pair<const char*, std::vector<double>*>> ModelParams::blocks() {
  return {{"sym_emb", &sym_emb},   {"mod_emb", &mod_emb},
          {"pos_emb", &pos_emb},   {"ctx_proj", &ctx_proj},
          {"sym_head", &sym_head}, {"mod_head", &mod_head}};
}

std::vector<std::pair<const char*, const std::vector<double>*>> ModelParams::blocks()
    const {
  return {{"sym_emb", &sym_emb},   {"mod_emb", &mod_emb},
          {"pos_emb", &pos_emb},   {"ctx_proj", &ctx_proj},
          {"sym_head", &sym_head}, {"mod_head", &mod_head}};
}

Gradients Gradients::zeros_like(const ModelParams& params) {
  Gradients g;
  g.sym_emb.assign(params.sym_emb.size(), 0.0);
  g.mod_emb.assign(params.mod_emb.size(), 0.0);
  g.pos_emb.assign(params.pos_emb.size(), 0.0);
  g.ctx_proj.assign(params.ctx_proj.size(), 0.0);
  g.sym_head.assign(params.sym_head.size(), 0.0);
  g.mod_head.assign(params.mod_head.size(), 0.0);
  return g;
}

void Gradients::scale(double factor) {
  for (auto* block : {&sym_emb, &mod_emb, &pos_emb, &ctx_proj, &sym_head, &mod_head}) {
    for (double& v : *block) v *= factor;
  }
}

TokenDistribution forward_model(const ModelParams& params, const Canvas& observation,
                                const DiffusionState& state, ForwardCache* cache) {
  const std::size_t L = params.canvas_len;
  const std::size_t d = params.d;
  if (observation.size() != L || state.canvas.size() != L) {
    throw Error(Errc::shape_mismatch, "canvas length does not match the model");
  }
  for (std::size_t i = 0; i < L; ++i) {
    if (state.canvas.sym[i] >= params.sym_vocab ||
        observation.sym[i] >= params.sym_vocab ||
        state.canvas.mod[i] >= params.mod_vocab ||
        observation.mod[i] >= params.mod_vocab) {
      throw Error(Errc::shape_mismatch, "token id outside the model vocabulary");
    }
  }

  std::vector<double> features(L * d);
  std::vector<double> feature_sum(d, 0.0);
  for (std::size_t i = 0; i < L; ++i) {
    double* f = features.data() + i * d;
    const double* es = params.sym_emb.data() + state.canvas.sym[i] * d;
    const double* em = params.mod_emb.data() + state.canvas.mod[i] * d;
    const double* os = params.sym_emb.data() + observation.sym[i] * d;
    const double* om = params.mod_emb.data() + observation.mod[i] * d;
    const double* ep = params.pos_emb.data() + i * d;
    for (std::size_t a = 0; a < d; ++a) {
      f[a] = es[a] + em[a] + os[a] + om[a] + ep[a];
      feature_sum[a] += f[a];
    }
  }

  std::vector<double> context(d, 0.0);
  const double inv_len = 1.0 / static_cast<double>(L);
  for (std::size_t a = 0; a < d; ++a) {
    const double* w = params.ctx_proj.data() + a * d;
    double acc = 0.0;
    for (std::size_t b = 0; b < d; ++b) acc += w[b] * feature_sum[b];
    context[a] = acc * inv_len;
  }

  TokenDistribution dist;
  dist.resize(L, params.sym_vocab, params.mod_vocab);
  std::vector<double> g(d);
  for (std::size_t i = 0; i < L; ++i) {
    const double* f = features.data() + i * d;
    for (std::size_t a = 0; a < d; ++a) g[a] = f[a] + context[a];
    auto srow = dist.sym_row(i);
    for (std::size_t a = 0; a < d; ++a) {
      const double* h = params.sym_head.data() + a * params.sym_vocab;
      const double ga = g[a];
      for (std::size_t v = 0; v < params.sym_vocab; ++v) srow[v] += ga * h[v];
    }
    softmax_inplace(srow);
    auto mrow = dist.mod_row(i);
    for (std::size_t a = 0; a < d; ++a) {
      const double* h = params.mod_head.data() + a * params.mod_vocab;
      const double ga = g[a];
      for (std::size_t v = 0; v < params.mod_vocab; ++v) mrow[v] += ga * h[v];
    }
    softmax_inplace(mrow);
  }

  if (cache != nullptr) {
    cache->features = std::move(features);
    cache->feature_sum = std::move(feature_sum);
    cache->context = std::move(context);
    cache->dist = dist;
  }
  return dist;
}

void backward_model(const ModelParams& params, const Canvas& observation,
                    const DiffusionState& state, const ForwardCache& cache,
                    const std::vector<double>& dlogits_sym,
                    const std::vector<double>& dlogits_mod, Gradients& grads) {
  const std::size_t L = params.canvas_len;
  const std::size_t d = params.d;
  const std::size_t S = params.sym_vocab;
  const std::size_t M = params.mod_vocab;

  std::vector<double> dg(L * d, 0.0);
  std::vector<double> dcontext(d, 0.0);

  for (std::size_t i = 0; i < L; ++i) {
    const double* f = cache.features.data() + i * d;
    const double* dls = dlogits_sym.data() + i * S;
    const double* dlm = dlogits_mod.data() + i * M;
    double* dgi = dg.data() + i * d;
    for (std::size_t a = 0; a < d; ++a) {
      const double ga = f[a] + cache.context[a];
      double* dhs = grads.sym_head.data() + a * S;
      const double* hs = params.sym_head.data() + a * S;
      double acc = 0.0;
      for (std::size_t v = 0; v < S; ++v) {
        dhs[v] += ga * dls[v];
        acc += hs[v] * dls[v];
      }
      double* dhm = grads.mod_head.data() + a * M;
      const double* hm = params.mod_head.data() + a * M;
      for (std::size_t v = 0; v < M; ++v) {
        dhm[v] += ga * dlm[v];
        acc += hm[v] * dlm[v];
      }
      dgi[a] = acc;
      dcontext[a] += acc;
    }
  }

  // context = (1/L) * W * feature_sum
  const double inv_len = 1.0 / static_cast<double>(L);
  std::vector<double> dfeature_sum(d, 0.0);
  for (std::size_t a = 0; a < d; ++a) {
    double* dw = grads.ctx_proj.data() + a * d;
    const double* w = params.ctx_proj.data() + a * d;
    const double dca = dcontext[a] * inv_len;
    for (std::size_t b = 0; b < d; ++b) {
      dw[b] += dca * cache.feature_sum[b];
      dfeature_sum[b] += dca * w[b];
    }
  }

  for (std::size_t i = 0; i < L; ++i) {
    const double* dgi = dg.data() + i * d;
    double* d_es = grads.sym_emb.data() + state.canvas.sym[i] * d;
    double* d_em = grads.mod_emb.data() + state.canvas.mod[i] * d;
    double* d_os = grads.sym_emb.data() + observation.sym[i] * d;
    double* d_om = grads.mod_emb.data() + observation.mod[i] * d;
    double* d_ep = grads.pos_emb.data() + i * d;
    for (std::size_t a = 0; a < d; ++a) {
      const double df = dgi[a] + dfeature_sum[a];
      d_es[a] += df;
      d_em[a] += df;
      d_os[a] += df;
      d_om[a] += df;
      d_ep[a] += df;
    }
  }
}

double loss_ce(const TokenDistribution& dist, const Canvas& truth,
               const std::vector<std::uint8_t>& mask_flags) {
  std::size_t masked = 0;
  double nll = 0.0;
  for (std::size_t i = 0; i < dist.len; ++i) {
    if (mask_flags[i] == 0) continue;
    ++masked;
    nll -= safe_log(dist.sym_row(i)[truth.sym[i]]);
    nll -= safe_log(dist.mod_row(i)[truth.mod[i]]);
  }
  if (masked == 0) return 0.0;  // by convention; the trainer logs this case
  return nll / static_cast<double>(masked);
}

void loss_ce_backward(const TokenDistribution& dist, const Canvas& truth,
                      const std::vector<std::uint8_t>& mask_flags,
                      std::vector<double>& dlogits_sym,
                      std::vector<double>& dlogits_mod) {
  std::size_t masked = 0;
  for (std::uint8_t f : mask_flags) masked += f;
  if (masked == 0) return;
  const double scale = 1.0 / static_cast<double>(masked);
  for (std::size_t i = 0; i < dist.len; ++i) {
    if (mask_flags[i] == 0) continue;
    auto srow = dist.sym_row(i);
    double* ds = dlogits_sym.data() + i * dist.sym_vocab;
    for (std::size_t v = 0; v < dist.sym_vocab; ++v) ds[v] += scale * srow[v];
    ds[truth.sym[i]] -= scale;
    auto mrow = dist.mod_row(i);
    double* dm = dlogits_mod.data() + i * dist.mod_vocab;
    for (std::size_t v = 0; v < dist.mod_vocab; ++v) dm[v] += scale * mrow[v];
    dm[truth.mod[i]] -= scale;
  }
}

std::vector<std::uint8_t> non_pad_positions(const Canvas& truth) {
  std::vector<std::uint8_t> flags(truth.size(), 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    flags[i] = truth.sym[i] != sat::k_sym_pad ? 1 : 0;
  }
  return flags;
}

namespace {

// Symmetric KL of one categorical row pair with shared epsilon smoothing:
// sum_v (p_v - q_v) * (log(p_v+eps) - log(q_v+eps)). Every term is a product
// of two same-signed factors, so the sum is nonnegative and exactly symmetric.
double sym_kl_row(std::span<const double> p, std::span<const double> q) {
  double acc = 0.0;
  for (std::size_t v = 0; v < p.size(); ++v) {
    acc += (p[v] - q[v]) *
           (std::log(p[v] + k_kl_epsilon) - std::log(q[v] + k_kl_epsilon));
  }
  return acc;
}

// d/d(logits of p) and d/d(logits of q) for sym_kl_row, scaled by `weight`,
// routed through the softmax Jacobian.
void sym_kl_row_backward(std::span<const double> p, std::span<const double> q,
                         double weight, double* dlogits_p, double* dlogits_q) {
  const std::size_t n = p.size();
  std::vector<double> gp(n), gq(n);
  for (std::size_t v = 0; v < n; ++v) {
    const double log_ratio =
        std::log(p[v] + k_kl_epsilon) - std::log(q[v] + k_kl_epsilon);
    const double diff = p[v] - q[v];
    gp[v] = log_ratio + diff / (p[v] + k_kl_epsilon);
    gq[v] = -log_ratio - diff / (q[v] + k_kl_epsilon);
  }
  double dot_p = 0.0, dot_q = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    dot_p += p[v] * gp[v];
    dot_q += q[v] * gq[v];
  }
  for (std::size_t v = 0; v < n; ++v) {
    dlogits_p[v] += weight * p[v] * (gp[v] - dot_p);
    dlogits_q[v] += weight * q[v] * (gq[v] - dot_q);
  }
}

}  // namespace

double loss_rmml(const TokenDistribution& a, const TokenDistribution& b,
                 const std::vector<std::uint8_t>& eval_positions) {
  std::size_t evaluated = 0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.len; ++i) {
    if (eval_positions[i] == 0) continue;
    ++evaluated;
    acc += sym_kl_row(a.sym_row(i), b.sym_row(i));
    acc += sym_kl_row(a.mod_row(i), b.mod_row(i));
  }
  if (evaluated == 0) return 0.0;
  return acc / static_cast<double>(evaluated);
}

void loss_rmml_backward(const TokenDistribution& a, const TokenDistribution& b,
                        const std::vector<std::uint8_t>& eval_positions,
                        double weight, std::vector<double>& dlogits_sym_a,
                        std::vector<double>& dlogits_mod_a,
                        std::vector<double>& dlogits_sym_b,
                        std::vector<double>& dlogits_mod_b) {
  std::size_t evaluated = 0;
  for (std::uint8_t f : eval_positions) evaluated += f;
  if (evaluated == 0) return;
  const double scale = weight / static_cast<double>(evaluated);
  for (std::size_t i = 0; i < a.len; ++i) {
    if (eval_positions[i] == 0) continue;
    sym_kl_row_backward(a.sym_row(i), b.sym_row(i), scale,
                        dlogits_sym_a.data() + i * a.sym_vocab,
                        dlogits_sym_b.data() + i * b.sym_vocab);
    sym_kl_row_backward(a.mod_row(i), b.mod_row(i), scale,
                        dlogits_mod_a.data() + i * a.mod_vocab,
                        dlogits_mod_b.data() + i * b.mod_vocab);
  }
}

StepLosses example_loss(const ModelParams& params, const Canvas& truth,
                        const Canvas& observation, const DiffusionState& view1,
                        const DiffusionState* view2, double lambda_kl,
                        Gradients* grads) {
  StepLosses losses;
  ForwardCache cache1;
  TokenDistribution dist1 = forward_model(params, observation, view1, &cache1);
  losses.ce1 = loss_ce(dist1, truth, view1.mask_flags);

  std::vector<double> dls1(params.canvas_len * params.sym_vocab, 0.0);
  std::vector<double> dlm1(params.canvas_len * params.mod_vocab, 0.0);
  if (grads != nullptr) {
    loss_ce_backward(dist1, truth, view1.mask_flags, dls1, dlm1);
  }

  if (view2 == nullptr) {
    losses.total = losses.ce1;
    if (grads != nullptr) {
      backward_model(params, observation, view1, cache1, dls1, dlm1, *grads);
    }
    return losses;
  }

  ForwardCache cache2;
  TokenDistribution dist2 = forward_model(params, observation, *view2, &cache2);
  losses.ce2 = loss_ce(dist2, truth, view2->mask_flags);
  std::vector<std::uint8_t> eval = non_pad_positions(truth);
  losses.kl = loss_rmml(dist1, dist2, eval);
  losses.total = losses.ce1 + losses.ce2 + lambda_kl * losses.kl;

  if (grads != nullptr) {
    std::vector<double> dls2(params.canvas_len * params.sym_vocab, 0.0);
    std::vector<double> dlm2(params.canvas_len * params.mod_vocab, 0.0);
    loss_ce_backward(dist2, truth, view2->mask_flags, dls2, dlm2);
    loss_rmml_backward(dist1, dist2, eval, lambda_kl, dls1, dlm1, dls2, dlm2);
    backward_model(params, observation, view1, cache1, dls1, dlm1, *grads);
    backward_model(params, observation, *view2, cache2, dls2, dlm2, *grads);
  }
  return losses;
}

namespace {

void sgd_step(ModelParams& params, const Gradients& grads, double lr) {
  auto apply = [lr](std::vector<double>& block, const std::vector<double>& grad) {
    for (std::size_t i = 0; i < block.size(); ++i) block[i] -= lr * grad[i];
  };
  apply(params.sym_emb, grads.sym_emb);
  apply(params.mod_emb, grads.mod_emb);
  apply(params.pos_emb, grads.pos_emb);
  apply(params.ctx_proj, grads.ctx_proj);
  apply(params.sym_head, grads.sym_head);
  apply(params.mod_head, grads.mod_head);
}

double validation_cer(const ModelParams& params, const sat::Vocabulary& vocab,
                      const std::vector<Canvas>& valid_truth,
                      const std::vector<Canvas>& valid_obs, int steps) {
  ModelDenoiser denoiser(params);
  std::vector<metrics::TokenList> refs, hyps;
  for (std::size_t i = 0; i < valid_truth.size(); ++i) {
    Rng rng(0x7a11d, i);
    Canvas decoded =
        diffusion::reverse_decode(valid_obs[i], denoiser, steps, params.canvas_len,
                                  diffusion::RemaskPolicy::low_confidence, rng);
    auto to_tokens = [&vocab](const Canvas& canvas) {
      metrics::TokenList tokens;
      for (const auto& raw : latex::lex(sat::render_canvas(canvas, vocab))) {
        tokens.push_back(raw.text);
      }
      return tokens;
    };
    refs.push_back(to_tokens(valid_truth[i]));
    hyps.push_back(to_tokens(decoded));
  }
  return metrics::corpus_cer(refs, hyps);
}

}  // namespace

TrainResult train(const std::vector<sat::SatSequence>& train_set,
                  const std::vector<sat::SatSequence>& valid_set,
                  const sat::Vocabulary& vocab,
                  const channel::ConfusionChannel& chan, const TrainConfig& cfg) {
  if (train_set.empty()) {
    throw Error(Errc::empty_corpus, "training corpus is empty");
  }
  if (cfg.learning_rate <= 0.0) {
    throw Error(Errc::bad_config, "learning rate must be positive");
  }
  if (cfg.lambda_kl < 0.0) {
    throw Error(Errc::bad_config, "lambda_kl must be nonnegative");
  }
  if (cfg.steps < 1) {
    throw Error(Errc::bad_config, "diffusion horizon must be at least 1");
  }

  std::vector<Canvas> truth;
  truth.reserve(train_set.size());
  for (const sat::SatSequence& seq : train_set) {
    truth.push_back(sat::encode(seq, vocab, cfg.canvas_len));
  }
  std::vector<Canvas> valid_truth;
  for (const sat::SatSequence& seq : valid_set) {
    valid_truth.push_back(sat::encode(seq, vocab, cfg.canvas_len));
  }

  Rng init_rng(cfg.seed, /*stream=*/0x1417);
  TrainResult result;
  result.params = ModelParams::init(cfg.d, cfg.canvas_len, vocab.symbol_count(),
                                    vocab.path_count(), init_rng);

  // Fixed validation observations: the reported CER trend is then a property
  // of the parameters alone.
  Rng valid_rng(cfg.seed, /*stream=*/0x7a11d);
  std::vector<Canvas> valid_obs;
  for (const Canvas& canvas : valid_truth) {
    valid_obs.push_back(chan.observe(canvas, valid_rng));
  }

  Rng order_rng(cfg.seed, /*stream=*/0x0bde5);
  Rng data_rng(cfg.seed, /*stream=*/0xda7a);

  std::vector<std::size_t> order(truth.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t no_mask_steps = 0;
  std::size_t step_index = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::size_t j = order_rng.below(i);
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss = 0.0, epoch_ce = 0.0, epoch_kl = 0.0;
    std::size_t batch_begin = 0;
    while (batch_begin < order.size()) {
      std::size_t batch_end =
          std::min(batch_begin + cfg.batch_size, order.size());
      Gradients grads = Gradients::zeros_like(result.params);
      for (std::size_t b = batch_begin; b < batch_end; ++b) {
        ++step_index;
        const Canvas& x0 = truth[order[b]];
        int t = 1 + static_cast<int>(data_rng.below(static_cast<std::uint64_t>(cfg.steps)));
        Canvas observation = chan.observe(x0, data_rng);
        DiffusionState view1 = diffusion::forward_mask(x0, t, cfg.steps, data_rng);
        StepLosses losses;
        if (cfg.rmml_enabled) {
          DiffusionState view2 = diffusion::forward_mask(x0, t, cfg.steps, data_rng);
          losses = example_loss(result.params, x0, observation, view1, &view2,
                                cfg.lambda_kl, &grads);
        } else {
          losses = example_loss(result.params, x0, observation, view1, nullptr,
                                cfg.lambda_kl, &grads);
        }
        if (!std::isfinite(losses.total)) {
          throw Error(Errc::non_finite_loss,
                      "non-finite loss at step " + std::to_string(step_index));
        }
        if (view1.masked_count() == 0) ++no_mask_steps;
        epoch_loss += losses.total;
        epoch_ce += losses.ce1 + losses.ce2;
        epoch_kl += losses.kl;
      }
      grads.scale(1.0 / static_cast<double>(batch_end - batch_begin));
      sgd_step(result.params, grads, cfg.learning_rate);
      batch_begin = batch_end;
    }

    const double n = static_cast<double>(truth.size());
    std::ostringstream line;
    line << "epoch=" << epoch << " loss=" << epoch_loss / n << " ce=" << epoch_ce / n
         << " kl=" << epoch_kl / n;
    if (!valid_truth.empty()) {
      line << " valid_cer="
           << validation_cer(result.params, vocab, valid_truth, valid_obs, cfg.steps);
    }
    result.log.push_back(line.str());
  }
  if (no_mask_steps > 0) {
    result.log.push_back("note: " + std::to_string(no_mask_steps) +
                         " steps had no masked positions (ce contribution 0)");
  }
  return result;
}

TokenDistribution ModelDenoiser::predict(const Canvas& observation,
                                         const DiffusionState& state) const {
  return forward_model(params_, observation, state);
}

// ---------------------------------------------------------------------------
// Checkpoint format
// ---------------------------------------------------------------------------

namespace {

std::string hexfloat(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

}  // namespace

std::string save_checkpoint(const ModelParams& params, const sat::Vocabulary& vocab) {
  std::ostringstream out;
  char hash_buf[24];
  std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                static_cast<unsigned long long>(vocab.hash()));
  out << "satdiff-model v1\n";
  out << "vocab_hash " << hash_buf << "\n";
  out << "d " << params.d << "\n";
  out << "canvas_len " << params.canvas_len << "\n";
  out << vocab.serialize();
  for (auto& [name, block] : params.blocks()) {
    out << "param " << name << " " << block->size() << "\n";
    for (std::size_t i = 0; i < block->size(); ++i) {
      out << hexfloat((*block)[i]);
      out << ((i + 1) % 8 == 0 || i + 1 == block->size() ? '\n' : ' ');
    }
  }
  out << "end\n";
  return out.str();
}

Checkpoint load_checkpoint(const std::string& text) {
  std::istringstream in(text);
  std::string word;
  auto expect = [&in, &word](const char* what) {
    if (!(in >> word) || word != what) {
      throw Error(Errc::bad_format, std::string("checkpoint: expected '") + what +
                                        "', got '" + word + "'");
    }
  };
  expect("satdiff-model");
  expect("v1");
  expect("vocab_hash");
  std::string hash_text;
  in >> hash_text;

  expect("d");
  std::size_t d = 0;
  in >> d;
  expect("canvas_len");
  std::size_t canvas_len = 0;
  in >> canvas_len;

  expect("symbols");
  std::size_t n_symbols = 0;
  in >> n_symbols;
  std::vector<std::string> symbols(n_symbols);
  for (auto& s : symbols) in >> s;
  expect("paths");
  std::size_t n_paths = 0;
  in >> n_paths;
  std::vector<std::string> paths(n_paths);
  for (auto& p : paths) in >> p;
  if (!in) throw Error(Errc::bad_format, "checkpoint: truncated vocabulary");

  Checkpoint ckpt;
  ckpt.vocab = sat::Vocabulary::deserialize_tables(symbols, paths);
  char hash_buf[24];
  std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                static_cast<unsigned long long>(ckpt.vocab.hash()));
  if (hash_text != hash_buf) {
    throw Error(Errc::bad_format,
                "checkpoint: vocabulary hash mismatch (file " + hash_text +
                    ", tables " + hash_buf + ")");
  }

  ckpt.params.d = d;
  ckpt.params.canvas_len = canvas_len;
  ckpt.params.sym_vocab = ckpt.vocab.symbol_count();
  ckpt.params.mod_vocab = ckpt.vocab.path_count();
  for (auto& [name, block] : ckpt.params.blocks()) {
    expect("param");
    expect(name);
    std::size_t count = 0;
    in >> count;
    block->resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      if (!(in >> word)) {
        throw Error(Errc::bad_format, "checkpoint: truncated parameter block");
      }
      (*block)[i] = std::strtod(word.c_str(), nullptr);
    }
  }
  expect("end");

  const std::size_t expected[] = {ckpt.params.sym_vocab * d, ckpt.params.mod_vocab * d,
                                  canvas_len * d,            d * d,
                                  d * ckpt.params.sym_vocab, d * ckpt.params.mod_vocab};
  std::size_t idx = 0;
  for (auto& [name, block] : ckpt.params.blocks()) {
    (void)name;
    if (block->size() != expected[idx++]) {
      throw Error(Errc::bad_format, "checkpoint: parameter block size mismatch");
    }
  }
  return ckpt;
}

}  // namespace satdiff::model
