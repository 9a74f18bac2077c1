#include "satdiff/corpus.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <utility>

#include "satdiff/error.hpp"
#include "satdiff/sat.hpp"

namespace satdiff::corpus {

GrammarConfig GrammarConfig::defaults() {
  GrammarConfig cfg;
  cfg.alphabet = {
      {"x", 6}, {"y", 6}, {"a", 6}, {"b", 6}, {"c", 6},
      {"+", 5}, {"-", 5}, {"=", 4},
      {"0", 7}, {"1", 7}, {"2", 7},
      {"3", 1}, {"4", 1}, {"5", 1}, {"6", 1}, {"7", 1}, {"8", 1}, {"9", 1},
      {"n", 2}, {"k", 2}, {"t", 2},
      {"z", 1}, {"l", 1}, {"O", 1},
      {"\\gamma", 1}, {"\\alpha", 2}, {"\\beta", 2}, {"\\pi", 2},
  };
  return cfg;
}

namespace {

class Generator {
 public:
  Generator(const GrammarConfig& cfg, Rng rng) : cfg_(cfg), rng_(std::move(rng)) {
    total_weight_ = 0.0;
    for (const auto& [sym, w] : cfg_.alphabet) total_weight_ += w;
    if (cfg_.alphabet.empty() || total_weight_ <= 0.0) {
      throw Error(Errc::bad_config, "grammar alphabet is empty");
    }
    double p = cfg_.probs.symbol + cfg_.probs.frac + cfg_.probs.sqrt +
               cfg_.probs.sup + cfg_.probs.sub;
    if (std::abs(p - 1.0) > 1e-9) {
      throw Error(Errc::bad_config, "construct probabilities must sum to 1");
    }
    if (cfg_.max_depth > sat::k_max_depth) {
      throw Error(Errc::bad_config, "grammar max_depth exceeds the SAT depth limit");
    }
  }

  latex::Ast expression() {
    for (int attempt = 0; attempt < 200; ++attempt) {
      latex::Ast ast = row(0, cfg_.max_row_len);
      if (acceptable(ast)) return ast;
    }
    throw Error(Errc::internal, "grammar rejection sampling did not converge");
  }

 private:
  const GrammarConfig& cfg_;
  Rng rng_;
  double total_weight_ = 0.0;

  std::string pick_symbol() {
    double r = rng_.uniform() * total_weight_;
    for (const auto& [sym, w] : cfg_.alphabet) {
      r -= w;
      if (r < 0.0) return sym;
    }
    return cfg_.alphabet.back().first;
  }

  latex::Ast row(std::size_t depth, std::size_t max_len) {
    std::size_t len = 1 + rng_.below(max_len);
    std::vector<latex::Ast> items;
    items.reserve(len);
    for (std::size_t i = 0; i < len; ++i) items.push_back(atom(depth));
    return latex::make_row(std::move(items));
  }

  latex::Ast atom(std::size_t depth) {
    if (depth >= cfg_.max_depth) return latex::make_symbol(pick_symbol());
    double r = rng_.uniform();
    const ConstructProbs& p = cfg_.probs;
    if ((r -= p.symbol) < 0.0) return latex::make_symbol(pick_symbol());
    if ((r -= p.frac) < 0.0) {
      return latex::make_frac(row(depth + 1, cfg_.max_arg_len),
                              row(depth + 1, cfg_.max_arg_len));
    }
    if ((r -= p.sqrt) < 0.0) return latex::make_sqrt(row(depth + 1, cfg_.max_arg_len));
    bool is_sup = (r -= p.sup) < 0.0;
    latex::Ast base = script_base(depth);
    latex::Ast arg = row(depth + 1, cfg_.max_arg_len);
    // One in five scripted atoms carries both scripts.
    if (rng_.uniform() < 0.2 && depth + 1 <= cfg_.max_depth) {
      latex::Ast other = row(depth + 1, cfg_.max_arg_len);
      return is_sup ? latex::make_scripted(std::move(base), &arg, &other)
                    : latex::make_scripted(std::move(base), &other, &arg);
    }
    return latex::make_scripted(std::move(base), is_sup ? &arg : nullptr,
                                is_sup ? nullptr : &arg);
  }

  // A script base must stay a single atom so the SAT round-trip can re-attach
  // the script to it unambiguously. Structured bases only appear when their
  // construct has nonzero probability in the grammar.
  latex::Ast script_base(std::size_t depth) {
    double r = rng_.uniform();
    bool frac_ok = cfg_.probs.frac > 0.0 && depth + 1 <= cfg_.max_depth;
    bool sqrt_ok = cfg_.probs.sqrt > 0.0 && depth + 1 <= cfg_.max_depth;
    if (frac_ok && r >= 0.85 && r < 0.93) {
      return latex::make_frac(row(depth + 1, 2), row(depth + 1, 2));
    }
    if (sqrt_ok && r >= 0.93) {
      return latex::make_sqrt(row(depth + 1, 2));
    }
    return latex::make_symbol(pick_symbol());
  }

  bool acceptable(const latex::Ast& ast) {
    std::string rendered = latex::render(ast);
    if (latex::parse(latex::lex(rendered)) != ast) return false;
    sat::SatSequence seq = sat::sat_tokenize(ast);
    if (cfg_.max_sat_len != 0 && seq.size() > cfg_.max_sat_len) return false;
    if (seq.size() == 0) return false;
    return sat::sat_detokenize(seq) == ast;
  }
};

}  // namespace

std::vector<latex::Ast> generate(const GrammarConfig& cfg, std::size_t n) {
  Generator gen(cfg, Rng(cfg.seed, /*stream=*/0xC0DE));
  std::vector<latex::Ast> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(gen.expression());
  return out;
}

LoadResult load_lines_text(const std::string& text) {
  LoadResult result;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      result.asts.push_back(latex::parse(latex::lex(line)));
      result.lines.push_back(line_no);
    } catch (const Error& e) {
      result.errors.push_back({line_no, std::string(errc_name(e.code())) + ": " +
                                            e.what()});
    }
  }
  return result;
}

LoadResult load_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_lines_text(buf.str());
}

namespace {

std::string xml_unescape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '&') {
      std::size_t semi = s.find(';', i);
      if (semi != std::string_view::npos && semi - i <= 6) {
        std::string_view ent = s.substr(i + 1, semi - i - 1);
        if (ent == "lt") { out += '<'; i = semi + 1; continue; }
        if (ent == "gt") { out += '>'; i = semi + 1; continue; }
        if (ent == "amp") { out += '&'; i = semi + 1; continue; }
        if (ent == "quot") { out += '"'; i = semi + 1; continue; }
        if (ent == "apos") { out += '\''; i = semi + 1; continue; }
      }
    }
    out += s[i++];
  }
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string inkml_truth_from_text(const std::string& xml) {
  // Scan <annotation ...> elements; take the one whose type attribute is
  // "truth". A full XML parser buys nothing here: InkML annotation elements
  // carry plain text content.
  std::size_t pos = 0;
  while ((pos = xml.find("<annotation", pos)) != std::string::npos) {
    std::size_t tag_end = xml.find('>', pos);
    if (tag_end == std::string::npos) break;
    std::string attrs = xml.substr(pos, tag_end - pos);
    bool is_truth = attrs.find("type=\"truth\"") != std::string::npos ||
                    attrs.find("type='truth'") != std::string::npos;
    std::size_t close = xml.find("</annotation>", tag_end);
    if (close == std::string::npos) break;
    if (is_truth) {
      return xml_unescape(trim(xml.substr(tag_end + 1, close - tag_end - 1)));
    }
    pos = close + 1;
  }
  throw Error(Errc::missing_truth_annotation,
              "no <annotation type=\"truth\"> element found");
}

std::string load_inkml_truth(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return inkml_truth_from_text(buf.str());
}

CorpusSplit split(std::size_t n, const std::array<double, 3>& ratios,
                  std::uint64_t seed) {
  double sum = ratios[0] + ratios[1] + ratios[2];
  if (ratios[0] <= 0.0 || ratios[1] <= 0.0 || ratios[2] <= 0.0 ||
      std::abs(sum - 1.0) > 1e-9) {
    throw Error(Errc::bad_ratios, "split ratios must be positive and sum to 1");
  }
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  Rng rng(seed, /*stream=*/0x5B117);
  for (std::size_t i = n; i > 1; --i) {
    std::size_t j = rng.below(i);
    std::swap(ids[i - 1], ids[j]);
  }
  std::array<std::size_t, 3> sizes{};
  std::size_t assigned = 0;
  for (int k = 0; k < 3; ++k) {
    sizes[k] = static_cast<std::size_t>(std::floor(ratios[k] * static_cast<double>(n)));
    assigned += sizes[k];
  }
  for (int k = 0; assigned < n; k = (k + 1) % 3) {
    ++sizes[k];
    ++assigned;
  }
  CorpusSplit out;
  auto it = ids.begin();
  out.train.assign(it, it + static_cast<std::ptrdiff_t>(sizes[0]));
  it += static_cast<std::ptrdiff_t>(sizes[0]);
  out.valid.assign(it, it + static_cast<std::ptrdiff_t>(sizes[1]));
  it += static_cast<std::ptrdiff_t>(sizes[1]);
  out.test.assign(it, it + static_cast<std::ptrdiff_t>(sizes[2]));
  return out;
}

}  // namespace satdiff::corpus
