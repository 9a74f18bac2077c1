// satdiff command-line front end. Everything domain-side goes through the C
// API in satdiff/capi.h; this file only does argument parsing, file IO and
// run manifests.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "satdiff/capi.h"

using nlohmann::json;

namespace {

struct CString {
  char* ptr = nullptr;
  ~CString() { satdiff_free(ptr); }
  std::string str() const { return ptr == nullptr ? std::string() : std::string(ptr); }
};

struct ChannelHandle {
  satdiff_channel* ptr = nullptr;
  ~ChannelHandle() { satdiff_channel_free(ptr); }
};

struct ModelHandle {
  satdiff_model* ptr = nullptr;
  ~ModelHandle() { satdiff_model_free(ptr); }
};

int fail(satdiff_status status, const CString& err) {
  std::cerr << "error: " << (err.ptr != nullptr ? err.ptr : "unknown failure")
            << "\n";
  return static_cast<int>(status);
}

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buf;
  buf << in.rdbuf();
  out = buf.str();
  return true;
}

bool write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return false;
  out << content;
  return out.good();
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  for (std::string& line : lines) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
  }
  return lines;
}

std::string hex64(uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Every artifact-producing run drops <out>.manifest.json next to its output;
// `satdiff replay` re-executes one and must reproduce the artifact bitwise.
bool write_manifest(const std::string& command, const json& options,
                    const std::vector<std::string>& outputs,
                    const std::string& vocab_hash = "") {
  json manifest;
  manifest["tool"] = "satdiff";
  manifest["version"] = satdiff_version();
  manifest["command"] = command;
  manifest["options"] = options;
  manifest["outputs"] = outputs;
  if (!vocab_hash.empty()) manifest["vocab_hash"] = vocab_hash;
  return write_file(outputs.front() + ".manifest.json", manifest.dump(2) + "\n");
}

int resolve_channel(const std::string& spec, ChannelHandle& handle) {
  if (spec == "identity") {
    handle.ptr = satdiff_channel_identity();
    return 0;
  }
  if (spec == "preset") {
    handle.ptr = satdiff_channel_default_preset();
    return 0;
  }
  std::string text;
  if (!read_file(spec, text)) {
    std::cerr << "error: cannot read channel file " << spec << "\n";
    return 2;
  }
  CString err;
  handle.ptr = satdiff_channel_parse(text.c_str(), &err.ptr);
  if (handle.ptr == nullptr) return fail(SATDIFF_ERR_CONFIG, err);
  return 0;
}

int load_model(const std::string& path, ModelHandle& handle) {
  std::string text;
  if (!read_file(path, text)) {
    std::cerr << "error: cannot read checkpoint " << path << "\n";
    return 1;
  }
  CString err;
  handle.ptr = satdiff_model_load_text(text.c_str(), &err.ptr);
  if (handle.ptr == nullptr) return fail(SATDIFF_ERR_INPUT, err);
  return 0;
}

// ---- subcommand bodies (shared by the parser and by `replay`) ------------

int run_line_transform(const json& o, bool to_sat) {
  std::string input;
  if (!read_file(o["in"], input)) {
    std::cerr << "error: cannot read " << o["in"].get<std::string>() << "\n";
    return 1;
  }
  const bool lenient = o["lenient"].get<bool>();
  std::string output;
  std::size_t line_no = 0;
  for (const std::string& line : split_lines(input)) {
    ++line_no;
    if (line.empty()) continue;
    CString out, err;
    satdiff_status status =
        to_sat ? satdiff_tokenize_line(line.c_str(), &out.ptr, &err.ptr)
               : satdiff_detokenize_line(line.c_str(), &out.ptr, &err.ptr);
    if (status != SATDIFF_OK) {
      std::cerr << (lenient ? "warning" : "error") << ": line " << line_no << ": "
                << err.str() << "\n";
      if (!lenient) return static_cast<int>(status);
      continue;
    }
    output += out.str();
    output += '\n';
  }
  if (!write_file(o["out"], output)) {
    std::cerr << "error: cannot write " << o["out"].get<std::string>() << "\n";
    return 1;
  }
  write_manifest(to_sat ? "tokenize" : "detokenize", o, {o["out"]});
  return 0;
}

int run_tokenize(const json& o) { return run_line_transform(o, true); }
int run_detokenize(const json& o) { return run_line_transform(o, false); }

int run_generate(const json& o) {
  satdiff_generate_opts opts = satdiff_generate_opts_default();
  opts.n = o["n"].get<std::size_t>();
  opts.seed = o["seed"].get<uint64_t>();
  opts.max_depth = o["max_depth"].get<std::size_t>();
  opts.max_row_len = o["max_row"].get<std::size_t>();
  opts.max_sat_len = o["max_sat_len"].get<std::size_t>();
  CString out, err;
  satdiff_status status = satdiff_generate(&opts, &out.ptr, &err.ptr);
  if (status != SATDIFF_OK) return fail(status, err);
  if (!write_file(o["out"], out.str())) {
    std::cerr << "error: cannot write " << o["out"].get<std::string>() << "\n";
    return 1;
  }
  write_manifest("generate", o, {o["out"]});
  return 0;
}

int run_corrupt(const json& o) {
  ChannelHandle channel;
  if (int rc = resolve_channel(o["channel"], channel); rc != 0) return rc;
  std::string input;
  if (!read_file(o["in"], input)) {
    std::cerr << "error: cannot read " << o["in"].get<std::string>() << "\n";
    return 1;
  }
  CString out, err;
  satdiff_status status = satdiff_corrupt(channel.ptr, input.c_str(),
                                          o["seed"].get<uint64_t>(), &out.ptr,
                                          &err.ptr);
  if (status != SATDIFF_OK) return fail(status, err);
  if (!write_file(o["out"], out.str())) {
    std::cerr << "error: cannot write " << o["out"].get<std::string>() << "\n";
    return 1;
  }
  write_manifest("corrupt", o, {o["out"]});
  return 0;
}

int run_train(const json& o) {
  ChannelHandle channel;
  if (int rc = resolve_channel(o["channel"], channel); rc != 0) return rc;
  std::string input;
  if (!read_file(o["in"], input)) {
    std::cerr << "error: cannot read " << o["in"].get<std::string>() << "\n";
    return 1;
  }
  satdiff_train_opts opts = satdiff_train_opts_default();
  opts.learning_rate = o["lr"].get<double>();
  opts.epochs = o["epochs"].get<std::size_t>();
  opts.batch_size = o["batch"].get<std::size_t>();
  opts.embed_dim = o["dim"].get<std::size_t>();
  opts.canvas_len = o["canvas_len"].get<std::size_t>();
  opts.steps = o["steps"].get<int>();
  opts.rmml = o["rmml"].get<bool>() ? 1 : 0;
  opts.lambda_kl = o["lambda_kl"].get<double>();
  opts.valid_frac = o["valid_frac"].get<double>();
  opts.seed = o["seed"].get<uint64_t>();

  CString log, err;
  ModelHandle model;
  model.ptr = satdiff_train(input.c_str(), channel.ptr, &opts, &log.ptr, &err.ptr);
  if (model.ptr == nullptr) return fail(SATDIFF_ERR_INPUT, err);

  CString checkpoint;
  CString save_err;
  if (satdiff_model_save_text(model.ptr, &checkpoint.ptr, &save_err.ptr) !=
      SATDIFF_OK) {
    return fail(SATDIFF_ERR_INTERNAL, save_err);
  }
  const std::string out_path = o["out"];
  if (!write_file(out_path, checkpoint.str()) ||
      !write_file(out_path + ".log", log.str())) {
    std::cerr << "error: cannot write " << out_path << "\n";
    return 1;
  }
  write_manifest("train", o, {out_path, out_path + ".log"},
                 hex64(satdiff_model_vocab_hash(model.ptr)));
  return 0;
}

int run_decode(const json& o) {
  std::string obs;
  if (!read_file(o["in"], obs)) {
    std::cerr << "error: cannot read " << o["in"].get<std::string>() << "\n";
    return 1;
  }
  satdiff_decode_opts opts = satdiff_decode_opts_default();
  opts.steps = o["steps"].get<int>();
  opts.policy = o["policy"] == "random" ? SATDIFF_POLICY_RANDOM
                                        : SATDIFF_POLICY_LOW_CONFIDENCE;
  opts.seed = o["seed"].get<uint64_t>();
  const std::string trace_path = o.value("trace", "");
  opts.want_trace = trace_path.empty() ? 0 : 1;

  CString out, trace, err;
  satdiff_status status = SATDIFF_OK;
  std::string vocab_hash;
  const std::string oracle = o.value("oracle", "");
  if (!oracle.empty()) {
    std::string truth;
    if (!read_file(oracle, truth)) {
      std::cerr << "error: cannot read " << oracle << "\n";
      return 1;
    }
    status = satdiff_decode_reference(SATDIFF_DENOISER_ORACLE, truth.c_str(),
                                      obs.c_str(), &opts, &out.ptr, &trace.ptr,
                                      &err.ptr);
  } else if (o.value("copy", false)) {
    status = satdiff_decode_reference(SATDIFF_DENOISER_COPY, nullptr, obs.c_str(),
                                      &opts, &out.ptr, &trace.ptr, &err.ptr);
  } else {
    const std::string model_path = o.value("model", "");
    if (model_path.empty()) {
      std::cerr << "error: decode needs --model, --oracle or --copy\n";
      return 2;
    }
    ModelHandle model;
    if (int rc = load_model(model_path, model); rc != 0) return rc;
    vocab_hash = hex64(satdiff_model_vocab_hash(model.ptr));
    status = satdiff_decode(model.ptr, obs.c_str(), &opts, &out.ptr, &trace.ptr,
                            &err.ptr);
  }
  if (status != SATDIFF_OK) return fail(status, err);
  if (!write_file(o["out"], out.str())) {
    std::cerr << "error: cannot write " << o["out"].get<std::string>() << "\n";
    return 1;
  }
  std::vector<std::string> outputs = {o["out"]};
  if (!trace_path.empty()) {
    if (!write_file(trace_path, trace.str())) {
      std::cerr << "error: cannot write " << trace_path << "\n";
      return 1;
    }
    outputs.push_back(trace_path);
  }
  write_manifest("decode", o, outputs, vocab_hash);
  return 0;
}

int run_eval(const json& o) {
  std::string refs, hyps;
  if (!read_file(o["refs"], refs)) {
    std::cerr << "error: cannot read " << o["refs"].get<std::string>() << "\n";
    return 1;
  }
  if (!read_file(o["hyps"], hyps)) {
    std::cerr << "error: cannot read " << o["hyps"].get<std::string>() << "\n";
    return 1;
  }
  CString report, err;
  satdiff_status status = satdiff_evaluate(refs.c_str(), hyps.c_str(),
                                           o["json"].get<bool>() ? 1 : 0,
                                           &report.ptr, &err.ptr);
  if (status != SATDIFF_OK) return fail(status, err);
  const std::string out_path = o.value("out", "");
  if (out_path.empty()) {
    std::cout << report.str();
    if (o["json"].get<bool>()) std::cout << "\n";
  } else {
    std::string text = report.str();
    if (o["json"].get<bool>()) text += "\n";
    if (!write_file(out_path, text)) {
      std::cerr << "error: cannot write " << out_path << "\n";
      return 1;
    }
    write_manifest("eval", o, {out_path});
  }
  return 0;
}

int run_diversity(const json& o) {
  ModelHandle model;
  if (int rc = load_model(o["model"], model); rc != 0) return rc;
  std::string obs;
  if (!read_file(o["in"], obs)) {
    std::cerr << "error: cannot read " << o["in"].get<std::string>() << "\n";
    return 1;
  }
  satdiff_decode_opts opts = satdiff_decode_opts_default();
  opts.steps = o["steps"].get<int>();
  opts.policy = o["policy"] == "lowconf" ? SATDIFF_POLICY_LOW_CONFIDENCE
                                         : SATDIFF_POLICY_RANDOM;
  opts.seed = o["seed"].get<uint64_t>();
  CString hist, err;
  satdiff_status status = satdiff_diversity(model.ptr, obs.c_str(),
                                            o["runs"].get<int>(), &opts, &hist.ptr,
                                            &err.ptr);
  if (status != SATDIFF_OK) return fail(status, err);
  const std::string out_path = o.value("out", "");
  if (out_path.empty()) {
    std::cout << hist.str();
  } else {
    if (!write_file(out_path, hist.str())) {
      std::cerr << "error: cannot write " << out_path << "\n";
      return 1;
    }
    write_manifest("diversity", o, {out_path},
                   hex64(satdiff_model_vocab_hash(model.ptr)));
  }
  return 0;
}

int run_replay(const std::string& manifest_path) {
  std::string text;
  if (!read_file(manifest_path, text)) {
    std::cerr << "error: cannot read manifest " << manifest_path << "\n";
    return 1;
  }
  json manifest = json::parse(text, nullptr, false);
  if (manifest.is_discarded() || !manifest.contains("command") ||
      !manifest.contains("options")) {
    std::cerr << "error: malformed manifest " << manifest_path << "\n";
    return 2;
  }
  const std::string command = manifest["command"];
  const json& o = manifest["options"];
  if (command == "tokenize") return run_tokenize(o);
  if (command == "detokenize") return run_detokenize(o);
  if (command == "generate") return run_generate(o);
  if (command == "corrupt") return run_corrupt(o);
  if (command == "train") return run_train(o);
  if (command == "decode") return run_decode(o);
  if (command == "eval") return run_eval(o);
  if (command == "diversity") return run_diversity(o);
  std::cerr << "error: manifest for unknown command '" << command << "'\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete-diffusion recognizer pipeline over symbol-aware "
               "LaTeX tokens"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(satdiff_version()));

  // Options are parsed into locals, then packed into flat json records so
  // `replay` can re-run any manifest through the exact same code path.
  struct {
    std::string in, out;
    bool lenient = false;
  } tok, detok;
  auto* cmd_tok = app.add_subcommand("tokenize", "LaTeX lines -> SAT lines");
  cmd_tok->add_option("--in", tok.in)->required();
  cmd_tok->add_option("--out", tok.out)->required();
  cmd_tok->add_flag("--lenient", tok.lenient, "skip malformed lines with a warning");

  auto* cmd_detok = app.add_subcommand("detokenize", "SAT lines -> LaTeX lines");
  cmd_detok->add_option("--in", detok.in)->required();
  cmd_detok->add_option("--out", detok.out)->required();
  cmd_detok->add_flag("--lenient", detok.lenient);

  struct {
    std::string out;
    std::uint64_t n = 1000, seed = 1, max_depth = 3, max_row = 10, max_sat_len = 60;
  } gen;
  auto* cmd_gen = app.add_subcommand("generate", "sample a synthetic corpus");
  cmd_gen->add_option("--out", gen.out)->required();
  cmd_gen->add_option("--n", gen.n);
  cmd_gen->add_option("--seed", gen.seed);
  cmd_gen->add_option("--max-depth", gen.max_depth);
  cmd_gen->add_option("--max-row", gen.max_row);
  cmd_gen->add_option("--max-sat-len", gen.max_sat_len,
                      "reject draws longer than this many SAT tokens (0 = off)");

  struct {
    std::string in, out, channel = "preset";
    std::uint64_t seed = 1;
  } cor;
  auto* cmd_cor =
      app.add_subcommand("corrupt", "apply a confusion channel to a SAT corpus");
  cmd_cor->add_option("--in", cor.in)->required();
  cmd_cor->add_option("--out", cor.out)->required();
  cmd_cor->add_option("--channel", cor.channel,
                      "channel file, or 'identity' / 'preset'");
  cmd_cor->add_option("--seed", cor.seed);

  struct {
    std::string in, out, channel = "preset";
    double lr = 0.05, lambda_kl = 1.0, valid_frac = 0.05;
    std::uint64_t epochs = 30, batch = 8, dim = 48, canvas_len = 64, seed = 1;
    int steps = 10;
    bool rmml = false;
  } trn;
  auto* cmd_trn = app.add_subcommand("train", "train the context denoiser");
  cmd_trn->add_option("--in", trn.in)->required();
  cmd_trn->add_option("--out", trn.out)->required();
  cmd_trn->add_option("--channel", trn.channel);
  cmd_trn->add_option("--lr", trn.lr);
  cmd_trn->add_option("--epochs", trn.epochs);
  cmd_trn->add_option("--batch", trn.batch);
  cmd_trn->add_option("--dim", trn.dim);
  cmd_trn->add_option("--canvas-len", trn.canvas_len);
  cmd_trn->add_option("--steps", trn.steps, "diffusion horizon T during training");
  cmd_trn->add_flag("--rmml", trn.rmml, "add the mutual-learning KL term");
  cmd_trn->add_option("--lambda-kl", trn.lambda_kl);
  cmd_trn->add_option("--valid-frac", trn.valid_frac);
  cmd_trn->add_option("--seed", trn.seed);

  struct {
    std::string in, out, model, oracle, trace, policy = "lowconf";
    bool copy = false;
    int steps = 50;
    std::uint64_t seed = 1;
  } dec;
  auto* cmd_dec =
      app.add_subcommand("decode", "reverse-diffuse an observation corpus");
  cmd_dec->add_option("--in", dec.in)->required();
  cmd_dec->add_option("--out", dec.out)->required();
  cmd_dec->add_option("--model", dec.model, "trained checkpoint");
  cmd_dec->add_option("--oracle", dec.oracle,
                      "decode with the oracle denoiser over this truth corpus");
  cmd_dec->add_flag("--copy", dec.copy, "decode with the copy baseline");
  cmd_dec->add_option("--steps", dec.steps);
  cmd_dec->add_option("--policy", dec.policy)
      ->check(CLI::IsMember({"lowconf", "random"}));
  cmd_dec->add_option("--seed", dec.seed);
  cmd_dec->add_option("--trace", dec.trace,
                      "write one line per reverse step to this file");

  struct {
    std::string refs, hyps, out;
    bool as_json = false;
  } evl;
  auto* cmd_evl = app.add_subcommand("eval", "CER / EM / ER<=k / SER report");
  cmd_evl->add_option("--refs", evl.refs)->required();
  cmd_evl->add_option("--hyps", evl.hyps)->required();
  cmd_evl->add_flag("--json", evl.as_json);
  cmd_evl->add_option("--out", evl.out);

  struct {
    std::string model, in, out, policy = "random";
    int runs = 10, steps = 50;
    std::uint64_t seed = 1;
  } div;
  auto* cmd_div =
      app.add_subcommand("diversity", "distinct-output histogram over n runs");
  cmd_div->add_option("--model", div.model)->required();
  cmd_div->add_option("--in", div.in)->required();
  cmd_div->add_option("--out", div.out);
  cmd_div->add_option("--runs", div.runs);
  cmd_div->add_option("--steps", div.steps);
  cmd_div->add_option("--policy", div.policy)
      ->check(CLI::IsMember({"lowconf", "random"}));
  cmd_div->add_option("--seed", div.seed);

  std::string manifest_path;
  auto* cmd_rep = app.add_subcommand("replay", "re-run a recorded manifest");
  cmd_rep->add_option("--manifest", manifest_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // config errors exit 2
  }

  if (cmd_tok->parsed()) {
    return run_tokenize({{"in", tok.in}, {"out", tok.out}, {"lenient", tok.lenient}});
  }
  if (cmd_detok->parsed()) {
    return run_detokenize(
        {{"in", detok.in}, {"out", detok.out}, {"lenient", detok.lenient}});
  }
  if (cmd_gen->parsed()) {
    return run_generate({{"out", gen.out},
                         {"n", gen.n},
                         {"seed", gen.seed},
                         {"max_depth", gen.max_depth},
                         {"max_row", gen.max_row},
                         {"max_sat_len", gen.max_sat_len}});
  }
  if (cmd_cor->parsed()) {
    return run_corrupt({{"in", cor.in},
                        {"out", cor.out},
                        {"channel", cor.channel},
                        {"seed", cor.seed}});
  }
  if (cmd_trn->parsed()) {
    return run_train({{"in", trn.in},
                      {"out", trn.out},
                      {"channel", trn.channel},
                      {"lr", trn.lr},
                      {"epochs", trn.epochs},
                      {"batch", trn.batch},
                      {"dim", trn.dim},
                      {"canvas_len", trn.canvas_len},
                      {"steps", trn.steps},
                      {"rmml", trn.rmml},
                      {"lambda_kl", trn.lambda_kl},
                      {"valid_frac", trn.valid_frac},
                      {"seed", trn.seed}});
  }
  if (cmd_dec->parsed()) {
    return run_decode({{"in", dec.in},
                       {"out", dec.out},
                       {"model", dec.model},
                       {"oracle", dec.oracle},
                       {"copy", dec.copy},
                       {"steps", dec.steps},
                       {"policy", dec.policy},
                       {"seed", dec.seed},
                       {"trace", dec.trace}});
  }
  if (cmd_evl->parsed()) {
    return run_eval({{"refs", evl.refs},
                     {"hyps", evl.hyps},
                     {"json", evl.as_json},
                     {"out", evl.out}});
  }
  if (cmd_div->parsed()) {
    return run_diversity({{"model", div.model},
                          {"in", div.in},
                          {"out", div.out},
                          {"runs", div.runs},
                          {"steps", div.steps},
                          {"policy", div.policy},
                          {"seed", div.seed}});
  }
  if (cmd_rep->parsed()) return run_replay(manifest_path);
  return 2;
}
