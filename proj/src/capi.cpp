#include "satdiff/capi.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "satdiff/channel.hpp"
#include "satdiff/corpus.hpp"
#include "satdiff/diffusion.hpp"
#include "satdiff/error.hpp"
#include "satdiff/latex.hpp"
#include "satdiff/metrics.hpp"
#include "satdiff/model.hpp"
#include "satdiff/sat.hpp"

using namespace satdiff;

struct satdiff_channel_s {
  channel::ChannelSpec spec;
};

struct satdiff_model_s {
  model::ModelParams params;
  sat::Vocabulary vocab;
};

namespace {

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void set_error(char** errmsg, const std::string& message) {
  if (errmsg != nullptr) *errmsg = dup_string(message);
}

satdiff_status status_from(const Error& e, char** errmsg) {
  set_error(errmsg, std::string(errc_name(e.code())) + ": " + e.what());
  return static_cast<satdiff_status>(errc_category(e.code()));
}

satdiff_status status_unknown(const std::exception& e, char** errmsg) {
  set_error(errmsg, std::string("Internal: ") + e.what());
  return SATDIFF_ERR_INTERNAL;
}

// Splits newline-joined text; a trailing newline does not create a line.
std::vector<std::string> split_lines(const char* text) {
  std::vector<std::string> lines;
  if (text == nullptr) return lines;
  const char* p = text;
  while (*p != '\0') {
    const char* nl = std::strchr(p, '\n');
    if (nl == nullptr) {
      lines.emplace_back(p);
      break;
    }
    lines.emplace_back(p, nl);
    p = nl + 1;
  }
  for (std::string& line : lines) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
  }
  return lines;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const std::string& line : lines) {
    out += line;
    out += '\n';
  }
  return out;
}

std::string canvas_symbol_key(const sat::Canvas& canvas, const sat::Vocabulary& vocab) {
  sat::SatSequence seq = sat::decode_canvas(canvas, vocab);
  std::string key;
  for (const auto& tok : seq.tokens) {
    if (!key.empty()) key += ' ';
    key += tok.symbol;
  }
  return key;
}

diffusion::RemaskPolicy to_policy(satdiff_remask_policy p) {
  return p == SATDIFF_POLICY_RANDOM ? diffusion::RemaskPolicy::random
                                    : diffusion::RemaskPolicy::low_confidence;
}

struct DecodeSetup {
  std::vector<sat::SatSequence> observations;
  std::size_t canvas_len = 0;
};

DecodeSetup parse_observations(const char* obs_sat_lines) {
  DecodeSetup setup;
  std::size_t line_no = 0;
  for (const std::string& line : split_lines(obs_sat_lines)) {
    ++line_no;
    try {
      setup.observations.push_back(sat::parse_sat(line));
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
    setup.canvas_len = std::max(setup.canvas_len, setup.observations.back().size());
  }
  return setup;
}

std::string run_decode_loop(
    const std::vector<sat::SatSequence>& observations, const sat::Vocabulary& vocab,
    std::size_t canvas_len, const satdiff_decode_opts& opts,
    const std::function<std::unique_ptr<diffusion::Denoiser>(std::size_t, const sat::Canvas&)>&
        make_denoiser,
    std::string* trace_out) {
  std::vector<std::string> out_lines;
  std::vector<std::string> trace_lines;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    sat::Canvas obs = sat::encode(observations[i], vocab, canvas_len);
    auto denoiser = make_denoiser(i, obs);
    Rng rng(opts.seed, /*stream=*/0xDEC0DE + i);
    std::vector<std::string> trace;
    sat::Canvas decoded = diffusion::reverse_decode(
        obs, *denoiser, opts.steps, canvas_len, to_policy(opts.policy), rng,
        opts.want_trace != 0 ? &vocab : nullptr,
        opts.want_trace != 0 ? &trace : nullptr);
    out_lines.push_back(sat::render_canvas(decoded, vocab));
    if (opts.want_trace != 0) {
      for (std::string& line : trace) {
        trace_lines.push_back("expr=" + std::to_string(i) + " " + std::move(line));
      }
    }
  }
  if (trace_out != nullptr) *trace_out = join_lines(trace_lines);
  return join_lines(out_lines);
}

}  // namespace

extern "C" {

const char* satdiff_version(void) { return "0.1.0"; }

void satdiff_free(char* ptr) { std::free(ptr); }

satdiff_status satdiff_normalize_line(const char* latex_in, char** out,
                                      char** errmsg) {
  try {
    *out = dup_string(latex::normalize(latex_in));
    return SATDIFF_OK;
  } catch (const Error& e) {
    return status_from(e, errmsg);
  } catch (const std::exception& e) {
    return status_unknown(e, errmsg);
  }
}

satdiff_status satdiff_tokenize_line(const char* latex_in, char** out_sat,
                                     char** errmsg) {
  try {
    latex::Ast ast = latex::parse(latex::lex(latex_in));
    *out_sat = dup_string(sat::format_sat(sat::sat_tokenize(ast)));
    return SATDIFF_OK;
  } catch (const Error& e) {
    return status_from(e, errmsg);
  } catch (const std::exception& e) {
    return status_unknown(e, errmsg);
  }
}

satdiff_status satdiff_detokenize_line(const char* sat_in, char** out_latex,
                                       char** errmsg) {
  try {
    sat::SatSequence seq = sat::parse_sat(sat_in);
    *out_latex = dup_string(latex::render(sat::sat_detokenize(seq)));
    return SATDIFF_OK;
  } catch (const Error& e) {
    return status_from(e, errmsg);
  } catch (const std::exception& e) {
    return status_unknown(e, errmsg);
  }
}

satdiff_status satdiff_inkml_extract_truth(const char* xml, char** out_latex,
                                           char** errmsg) {
  try {
    *out_latex = dup_string(corpus::inkml_truth_from_text(xml));
    return SATDIFF_OK;
  } catch (const Error& e) {
    return status_from(e, errmsg);
  } catch (const std::exception& e) {
    return status_unknown(e, errmsg);
  }
}

satdiff_generate_opts satdiff_generate_opts_default(void) {
  satdiff_generate_opts opts;
  corpus::GrammarConfig cfg = corpus::GrammarConfig::defaults();
  opts.n = 100;
  opts.seed = 1;
  opts.max_depth = cfg.max_depth;
  opts.max_row_len = cfg.max_row_len;
  opts.max_sat_len = cfg.max_sat_len;
  return opts;
}

satdiff_status satdiff_generate(const satdiff_generate_opts* opts,
                                char** out_latex_lines, char** errmsg) {
  try {
    corpus::GrammarConfig cfg = corpus::GrammarConfig::defaults();
    cfg.seed = opts->seed;
    cfg.max_depth = opts->max_depth;
    cfg.max_row_len = opts->max_row_len;
    cfg.max_sat_len = opts->max_sat_len;
    std::vector<std::string> lines;
    for (const latex::Ast& ast : corpus::generate(cfg, opts->n)) {
      lines.push_back(latex::render(ast));
    }
    *out_latex_lines = dup_string(join_lines(lines));
    return SATDIFF_OK;
  } catch (const Error& e) {
    return status_from(e, errmsg);
  } catch (const std::exception& e) {
    return status_unknown(e, errmsg);
  }
}

satdiff_channel* satdiff_channel_parse(const char* spec_text, char** errmsg) {
  try {
    return new satdiff_channel_s{channel::ChannelSpec::parse(spec_text)};
  } catch (const Error& e) {
    status_from(e, errmsg);
    return nullptr;
  } catch (const std::exception& e) {
    status_unknown(e, errmsg);
    return nullptr;
  }
}

satdiff_channel* satdiff_channel_identity(void) {
  return new satdiff_channel_s{channel::ChannelSpec::identity()};
}

satdiff_channel* satdiff_channel_default_preset(void) {
  return new satdiff_channel_s{channel::ChannelSpec::default_ambiguity_preset()};
}

satdiff_status satdiff_channel_format(const satdiff_channel* chan, char** out,
                                      char** errmsg) {
  (void)errmsg;
  *out = dup_string(chan->spec.format());
  return SATDIFF_OK;
}

void satdiff_channel_free(satdiff_channel* chan) { delete chan; }

satdiff_status satdiff_corrupt(const satdiff_channel* chan, const char* sat_lines,
                               uint64_t seed, char** out_sat_lines, char** errmsg) {
  try {
    std::vector<sat::SatSequence> seqs;
    std::size_t line_no = 0;
    for (const std::string& line : split_lines(sat_lines)) {
      ++line_no;
      try {
        seqs.push_back(sat::parse_sat(line));
      } catch (const Error& e) {
        throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (seqs.empty()) throw Error(Errc::empty_corpus, "no input expressions");
    sat::Vocabulary vocab = sat::Vocabulary::build(seqs);
    channel::ConfusionChannel resolved(chan->spec, vocab);
    Rng rng(seed, /*stream=*/0xC0881);
    std::vector<std::string> out_lines;
    for (const sat::SatSequence& seq : seqs) {
      sat::Canvas truth = sat::encode(seq, vocab, seq.size());
      sat::Canvas observed = resolved.observe(truth, rng);
      out_lines.push_back(sat::format_sat(sat::decode_canvas(observed, vocab)));
    }
    *out_sat_lines = dup_string(join_lines(out_lines));
    return SATDIFF_OK;
  } catch (const Error& e) {
    return status_from(e, errmsg);
  } catch (const std::exception& e) {
    return status_unknown(e, errmsg);
  }
}

satdiff_train_opts satdiff_train_opts_default(void) {
  satdiff_train_opts opts;
  model::TrainConfig cfg;
  opts.learning_rate = cfg.learning_rate;
  opts.epochs = cfg.epochs;
  opts.batch_size = cfg.batch_size;
  opts.embed_dim = cfg.d;
  opts.canvas_len = cfg.canvas_len;
  opts.steps = cfg.steps;
  opts.rmml = cfg.rmml_enabled ? 1 : 0;
  opts.lambda_kl = cfg.lambda_kl;
  opts.valid_frac = 0.05;
  opts.seed = cfg.seed;
  return opts;
}

satdiff_model* satdiff_train(const char* latex_lines, const satdiff_channel* chan,
                             const satdiff_train_opts* opts, char** log_out,
                             char** errmsg) {
  try {
    corpus::LoadResult loaded = corpus::load_lines_text(latex_lines);
    if (!loaded.errors.empty()) {
      const corpus::LineError& first = loaded.errors.front();
      throw Error(Errc::bad_format, "line " + std::to_string(first.line) + ": " +
                                        first.message);
    }
    if (loaded.asts.empty()) throw Error(Errc::empty_corpus, "no input expressions");

    std::vector<sat::SatSequence> seqs;
    for (const latex::Ast& ast : loaded.asts) seqs.push_back(sat::sat_tokenize(ast));

    model::TrainConfig cfg;
    cfg.learning_rate = opts->learning_rate;
    cfg.epochs = opts->epochs;
    cfg.batch_size = opts->batch_size == 0 ? 1 : opts->batch_size;
    cfg.d = opts->embed_dim;
    cfg.canvas_len = opts->canvas_len;
    cfg.steps = opts->steps;
    cfg.rmml_enabled = opts->rmml != 0;
    cfg.lambda_kl = opts->lambda_kl;
    cfg.seed = opts->seed;

    sat::Vocabulary vocab = sat::Vocabulary::build(seqs);

    std::vector<sat::SatSequence> train_set, valid_set;
    if (opts->valid_frac > 0.0 && seqs.size() >= 20) {
      std::size_t n_valid = std::max<std::size_t>(
          1, static_cast<std::size_t>(opts->valid_frac *
                                      static_cast<double>(seqs.size())));
      // Deterministic tail split; the caller controls corpus order.
      valid_set.assign(seqs.end() - static_cast<std::ptrdiff_t>(n_valid), seqs.end());
      train_set.assign(seqs.begin(), seqs.end() - static_cast<std::ptrdiff_t>(n_valid));
    } else {
      train_set = seqs;
    }

    channel::ConfusionChannel resolved(chan->spec, vocab);
    model::TrainResult trained =
        model::train(train_set, valid_set, vocab, resolved, cfg);
    if (log_out != nullptr) *log_out = dup_string(join_lines(trained.log));
    return new satdiff_model_s{std::move(trained.params), std::move(vocab)};
  } catch (const Error& e) {
    status_from(e, errmsg);
    return nullptr;
  } catch (const std::exception& e) {
    status_unknown(e, errmsg);
    return nullptr;
  }
}

satdiff_status satdiff_model_save_text(const satdiff_model* model, char** out,
                                       char** errmsg) {
  try {
    *out = dup_string(model::save_checkpoint(model->params, model->vocab));
    return SATDIFF_OK;
  } catch (const Error& e) {
    return status_from(e, errmsg);
  } catch (const std::exception& e) {
    return status_unknown(e, errmsg);
  }
}

satdiff_model* satdiff_model_load_text(const char* text, char** errmsg) {
  try {
    model::Checkpoint ckpt = model::load_checkpoint(text);
    return new satdiff_model_s{std::move(ckpt.params), std::move(ckpt.vocab)};
  } catch (const Error& e) {
    status_from(e, errmsg);
    return nullptr;
  } catch (const std::exception& e) {
    status_unknown(e, errmsg);
    return nullptr;
  }
}

uint64_t satdiff_model_vocab_hash(const satdiff_model* model) {
  return model->vocab.hash();
}

void satdiff_model_free(satdiff_model* model) { delete model; }

satdiff_decode_opts satdiff_decode_opts_default(void) {
  satdiff_decode_opts opts;
  opts.steps = 50;
  opts.policy = SATDIFF_POLICY_LOW_CONFIDENCE;
  opts.seed = 1;
  opts.want_trace = 0;
  return opts;
}

satdiff_status satdiff_decode(const satdiff_model* model, const char* obs_sat_lines,
                              const satdiff_decode_opts* opts,
                              char** out_latex_lines, char** trace_out,
                              char** errmsg) {
  try {
    DecodeSetup setup = parse_observations(obs_sat_lines);
    std::string trace;
    std::string out = run_decode_loop(
        setup.observations, model->vocab, model->params.canvas_len, *opts,
        [&model](std::size_t, const sat::Canvas&) {
          return std::unique_ptr<diffusion::Denoiser>(
              new model::ModelDenoiser(model->params));
        },
        opts->want_trace != 0 ? &trace : nullptr);
    *out_latex_lines = dup_string(out);
    if (trace_out != nullptr) {
      *trace_out = opts->want_trace != 0 ? dup_string(trace) : nullptr;
    }
    return SATDIFF_OK;
  } catch (const Error& e) {
    return status_from(e, errmsg);
  } catch (const std::exception& e) {
    return status_unknown(e, errmsg);
  }
}

satdiff_status satdiff_decode_reference(satdiff_reference_denoiser kind,
                                        const char* truth_sat_lines,
                                        const char* obs_sat_lines,
                                        const satdiff_decode_opts* opts,
                                        char** out_latex_lines, char** trace_out,
                                        char** errmsg) {
  try {
    DecodeSetup setup = parse_observations(obs_sat_lines);
    std::vector<sat::SatSequence> truths;
    if (kind == SATDIFF_DENOISER_ORACLE) {
      if (truth_sat_lines == nullptr) {
        throw Error(Errc::bad_config, "oracle decoding needs a truth corpus");
      }
      DecodeSetup truth_setup = parse_observations(truth_sat_lines);
      truths = std::move(truth_setup.observations);
      if (truths.size() != setup.observations.size()) {
        throw Error(Errc::size_mismatch,
                    "truth corpus and observation corpus differ in size");
      }
      setup.canvas_len = std::max(setup.canvas_len, truth_setup.canvas_len);
    }

    // Build a joint vocabulary from everything we must represent.
    std::vector<sat::SatSequence> all = setup.observations;
    all.insert(all.end(), truths.begin(), truths.end());
    if (all.empty()) throw Error(Errc::empty_corpus, "no input expressions");
    sat::Vocabulary vocab = sat::Vocabulary::build(all);

    std::string trace;
    std::string out = run_decode_loop(
        setup.observations, vocab, std::max<std::size_t>(setup.canvas_len, 1), *opts,
        [&](std::size_t i, const sat::Canvas& obs) -> std::unique_ptr<diffusion::Denoiser> {
          if (kind == SATDIFF_DENOISER_ORACLE) {
            sat::Canvas truth = sat::encode(truths[i], vocab, obs.size());
            return std::make_unique<model::OracleDenoiser>(
                std::move(truth), vocab.symbol_count(), vocab.path_count());
          }
          return std::make_unique<model::CopyDenoiser>(vocab.symbol_count(),
                                                       vocab.path_count());
        },
        opts->want_trace != 0 ? &trace : nullptr);
    *out_latex_lines = dup_string(out);
    if (trace_out != nullptr) {
      *trace_out = opts->want_trace != 0 ? dup_string(trace) : nullptr;
    }
    return SATDIFF_OK;
  } catch (const Error& e) {
    return status_from(e, errmsg);
  } catch (const std::exception& e) {
    return status_unknown(e, errmsg);
  }
}

satdiff_status satdiff_diversity(const satdiff_model* model,
                                 const char* obs_sat_lines, int runs,
                                 const satdiff_decode_opts* opts, char** hist_out,
                                 char** errmsg) {
  try {
    if (runs < 1) throw Error(Errc::bad_config, "runs must be at least 1");
    DecodeSetup setup = parse_observations(obs_sat_lines);
    if (setup.observations.empty()) {
      throw Error(Errc::empty_corpus, "no input expressions");
    }
    model::ModelDenoiser denoiser(model->params);
    std::vector<std::vector<std::string>> keys;
    Rng seed_rng(opts->seed, /*stream=*/0xD1BE);
    std::vector<std::uint64_t> seeds;
    for (int j = 0; j < runs; ++j) seeds.push_back(seed_rng.next_u64());
    for (const sat::SatSequence& seq : setup.observations) {
      sat::Canvas obs = sat::encode(seq, model->vocab, model->params.canvas_len);
      std::vector<sat::Canvas> decoded =
          diffusion::decode_n(obs, denoiser, opts->steps, model->params.canvas_len,
                              to_policy(opts->policy), seeds);
      std::vector<std::string> run_keys;
      for (const sat::Canvas& canvas : decoded) {
        run_keys.push_back(canvas_symbol_key(canvas, model->vocab));
      }
      keys.push_back(std::move(run_keys));
    }
    auto histogram = metrics::diversity_histogram(keys);
    std::vector<std::string> lines;
    for (int bucket = 1; bucket <= runs; ++bucket) {
      auto it = histogram.find(static_cast<std::size_t>(bucket));
      lines.push_back(std::to_string(bucket) + " " +
                      std::to_string(it == histogram.end() ? 0 : it->second));
    }
    *hist_out = dup_string(join_lines(lines));
    return SATDIFF_OK;
  } catch (const Error& e) {
    return status_from(e, errmsg);
  } catch (const std::exception& e) {
    return status_unknown(e, errmsg);
  }
}

satdiff_status satdiff_evaluate(const char* ref_latex_lines,
                                const char* hyp_latex_lines, int as_json,
                                char** report_out, char** errmsg) {
  try {
    std::vector<std::string> refs = split_lines(ref_latex_lines);
    std::vector<std::string> hyps = split_lines(hyp_latex_lines);
    if (refs.size() != hyps.size()) {
      throw Error(Errc::size_mismatch,
                  "reference corpus has " + std::to_string(refs.size()) +
                      " lines, hypothesis corpus has " + std::to_string(hyps.size()));
    }
    auto tokens_of = [](const std::string& line, bool strict) {
      metrics::TokenList tokens;
      std::string source;
      try {
        source = latex::normalize(line);
      } catch (const Error&) {
        if (strict) throw;
        source = line;  // unparseable hypothesis: fall back to raw lexemes
      }
      try {
        for (const auto& tok : latex::lex(source)) tokens.push_back(tok.text);
      } catch (const Error&) {
        if (strict) throw;
        tokens.clear();  // not even lexable: counts as an empty hypothesis
      }
      return tokens;
    };
    std::vector<metrics::TokenList> ref_tokens, hyp_tokens;
    for (std::size_t i = 0; i < refs.size(); ++i) {
      try {
        ref_tokens.push_back(tokens_of(refs[i], /*strict=*/true));
      } catch (const Error& e) {
        throw Error(e.code(),
                    "reference line " + std::to_string(i + 1) + ": " + e.what());
      }
      hyp_tokens.push_back(tokens_of(hyps[i], /*strict=*/false));
    }
    metrics::MetricsReport report = metrics::evaluate(ref_tokens, hyp_tokens, hyps);

    std::ostringstream out;
    out.precision(17);
    if (as_json != 0) {
      out << "{\"n_samples\":" << report.n_samples << ",\"cer\":" << report.cer
          << ",\"em\":" << report.em;
      for (const auto& [k, v] : report.er_le) out << ",\"er_le_" << k << "\":" << v;
      out << ",\"ser\":" << report.ser << "}";
    } else {
      out << "n_samples=" << report.n_samples << "\n";
      out << "cer=" << report.cer << "\n";
      out << "em=" << report.em << "\n";
      for (const auto& [k, v] : report.er_le) out << "er_le_" << k << "=" << v << "\n";
      out << "ser=" << report.ser << "\n";
      char table[256];
      std::snprintf(table, sizeof(table),
                    "%8s %8s %8s %8s %8s %8s %8s\n"
                    "%8.4f %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f\n",
                    "cer", "em", "er<=1", "er<=2", "er<=3", "er<=4", "ser",
                    report.cer, report.em, report.er_le[1], report.er_le[2],
                    report.er_le[3], report.er_le[4], report.ser);
      out << table;
    }
    *report_out = dup_string(out.str());
    return SATDIFF_OK;
  } catch (const Error& e) {
    return status_from(e, errmsg);
  } catch (const std::exception& e) {
    return status_unknown(e, errmsg);
  }
}

}  // extern "C"
