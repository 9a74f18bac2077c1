#include "satdiff/sat.hpp"

#include <algorithm>
#include <set>
#include <utility>

namespace satdiff::sat {

namespace {

constexpr std::string_view k_mask_symbol = "<MASK>";
constexpr std::string_view k_pad_symbol = "<PAD>";
constexpr std::string_view k_pad_path_text = "<PADPATH>";
constexpr std::string_view k_mask_path_text = "<MASKPATH>";

constexpr std::string_view k_tag_names[] = {"SUP", "SUB", "FRAC_NUM", "FRAC_DEN",
                                            "SQRT_ARG"};

void tokenize_into(const latex::Ast& ast, ModifierPath& path, SatSequence& out) {
  using latex::NodeKind;
  if (path.size() > k_max_depth) {
    throw Error(Errc::depth_exceeded,
                "nesting depth exceeds " + std::to_string(k_max_depth) +
                    " at token index " + std::to_string(out.size()));
  }
  switch (ast.kind) {
    case NodeKind::row:
      for (const latex::Ast& child : ast.children) tokenize_into(child, path, out);
      return;
    case NodeKind::symbol:
      out.tokens.push_back({ast.symbol, path});
      return;
    case NodeKind::group:
      // Grouping braces are rendering artifacts, not structure.
      tokenize_into(ast.group_child(), path, out);
      return;
    case NodeKind::frac:
      path.push_back(ModifierTag::frac_num);
      tokenize_into(ast.numerator(), path, out);
      path.back() = ModifierTag::frac_den;
      tokenize_into(ast.denominator(), path, out);
      path.pop_back();
      return;
    case NodeKind::sqrt:
      path.push_back(ModifierTag::sqrt_arg);
      tokenize_into(ast.radicand(), path, out);
      path.pop_back();
      return;
    case NodeKind::scripted:
      tokenize_into(ast.base(), path, out);
      if (ast.has_sup) {
        path.push_back(ModifierTag::sup);
        tokenize_into(ast.sup(), path, out);
        path.pop_back();
      }
      if (ast.has_sub) {
        path.push_back(ModifierTag::sub);
        tokenize_into(ast.sub(), path, out);
        path.pop_back();
      }
      return;
  }
}

// Detokenizer over a token span [begin, end) whose paths all extend a common
// prefix of length `depth`.
class Rebuilder {
 public:
  explicit Rebuilder(const SatSequence& seq) : seq_(seq) {}

  latex::Ast build(std::size_t begin, std::size_t end, std::size_t depth) {
    std::vector<latex::Ast> items;
    std::size_t i = begin;
    while (i < end) {
      const SatToken& tok = seq_.tokens[i];
      if (tok.path.size() == depth) {
        items.push_back(latex::make_symbol(tok.symbol));
        ++i;
        continue;
      }
      ModifierTag head = tok.path[depth];
      std::size_t run_end = run(i, end, depth, head);
      switch (head) {
        case ModifierTag::frac_num: {
          if (run_end >= end ||
              seq_.tokens[run_end].path.size() <= depth ||
              seq_.tokens[run_end].path[depth] != ModifierTag::frac_den) {
            throw Error(Errc::incoherent_structure,
                        "FRAC_NUM run without following FRAC_DEN run", i);
          }
          std::size_t den_end = run(run_end, end, depth, ModifierTag::frac_den);
          latex::Ast num = build(i, run_end, depth + 1);
          latex::Ast den = build(run_end, den_end, depth + 1);
          items.push_back(latex::make_frac(std::move(num), std::move(den)));
          i = den_end;
          break;
        }
        case ModifierTag::frac_den:
          throw Error(Errc::incoherent_structure,
                      "FRAC_DEN run without preceding FRAC_NUM run", i);
        case ModifierTag::sqrt_arg:
          items.push_back(latex::make_sqrt(build(i, run_end, depth + 1)));
          i = run_end;
          break;
        case ModifierTag::sup:
        case ModifierTag::sub: {
          latex::Ast arg = build(i, run_end, depth + 1);
          attach_script(items, head == ModifierTag::sup, std::move(arg), i);
          i = run_end;
          break;
        }
      }
    }
    return latex::make_row(std::move(items));
  }

 private:
  const SatSequence& seq_;

  std::size_t run(std::size_t i, std::size_t end, std::size_t depth,
                  ModifierTag tag) const {
    std::size_t j = i;
    while (j < end && seq_.tokens[j].path.size() > depth &&
           seq_.tokens[j].path[depth] == tag) {
      ++j;
    }
    return j;
  }

  void attach_script(std::vector<latex::Ast>& items, bool is_sup, latex::Ast arg,
                     std::size_t pos) {
    if (items.empty()) {
      throw Error(Errc::incoherent_structure,
                  std::string(is_sup ? "SUP" : "SUB") + " run with no base symbol",
                  pos);
    }
    latex::Ast base = std::move(items.back());
    items.pop_back();
    if (base.kind == latex::NodeKind::scripted) {
      if ((is_sup && base.has_sup) || (!is_sup && base.has_sub)) {
        throw Error(Errc::incoherent_structure,
                    std::string("repeated ") + (is_sup ? "SUP" : "SUB") +
                        " run on one base",
                    pos);
      }
      if (is_sup) {
        base.has_sup = true;
        base.children.insert(base.children.begin() + 1, std::move(arg));
      } else {
        base.has_sub = true;
        base.children.push_back(std::move(arg));
      }
      items.push_back(std::move(base));
      return;
    }
    items.push_back(latex::make_scripted(std::move(base), is_sup ? &arg : nullptr,
                                         is_sup ? nullptr : &arg));
  }
};

}  // namespace

std::string_view tag_name(ModifierTag tag) {
  return k_tag_names[static_cast<std::size_t>(tag)];
}

SatSequence sat_tokenize(const latex::Ast& ast) {
  SatSequence out;
  ModifierPath path;
  tokenize_into(ast, path, out);
  return out;
}

latex::Ast sat_detokenize(const SatSequence& seq) {
  return Rebuilder(seq).build(0, seq.size(), 0);
}

latex::Ast sat_detokenize_lenient(const SatSequence& seq) {
  SatSequence repaired = seq;
  for (std::size_t attempt = 0; attempt <= seq.size(); ++attempt) {
    try {
      return sat_detokenize(repaired);
    } catch (const Error& e) {
      std::size_t pos = e.position();
      if (e.code() != Errc::incoherent_structure || pos >= repaired.size() ||
          repaired.tokens[pos].path.empty()) {
        break;
      }
      repaired.tokens[pos].path.clear();
    }
  }
  // Nothing structural survived repair; keep the symbols.
  std::vector<latex::Ast> symbols;
  symbols.reserve(seq.size());
  for (const SatToken& tok : seq.tokens) {
    symbols.push_back(latex::make_symbol(tok.symbol));
  }
  return latex::make_row(std::move(symbols));
}

std::string path_text(const ModifierPath& path) {
  if (path.empty()) return "_";
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i > 0) out += '.';
    out += tag_name(path[i]);
  }
  return out;
}

ModifierPath parse_path_text(std::string_view text) {
  if (text == "_") return {};
  ModifierPath path;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t dot = text.find('.', start);
    std::string_view part =
        text.substr(start, dot == std::string_view::npos ? dot : dot - start);
    bool found = false;
    for (std::size_t t = 0; t < 5; ++t) {
      if (part == k_tag_names[t]) {
        path.push_back(static_cast<ModifierTag>(t));
        found = true;
        break;
      }
    }
    if (!found) {
      throw Error(Errc::bad_format, "unknown modifier tag '" + std::string(part) + "'");
    }
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  if (path.size() > k_max_depth) {
    throw Error(Errc::depth_exceeded, "modifier path longer than " +
                                          std::to_string(k_max_depth));
  }
  return path;
}

std::string format_sat(const SatSequence& seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += seq.tokens[i].symbol;
    out += '/';
    out += path_text(seq.tokens[i].path);
  }
  return out;
}

SatSequence parse_sat(std::string_view line) {
  SatSequence seq;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    if (i >= line.size()) break;
    std::size_t end = line.find(' ', i);
    if (end == std::string_view::npos) end = line.size();
    std::string_view item = line.substr(i, end - i);
    // The symbol itself may be '/', so split at the last slash.
    std::size_t slash = item.rfind('/');
    if (slash == std::string_view::npos || slash == 0 || slash + 1 >= item.size()) {
      throw Error(Errc::bad_format, "malformed SAT item '" + std::string(item) + "'",
                  i);
    }
    std::string symbol(item.substr(0, slash));
    ModifierPath path = parse_path_text(item.substr(slash + 1));
    seq.tokens.push_back({std::move(symbol), std::move(path)});
    i = end;
  }
  return seq;
}

Vocabulary Vocabulary::build(const std::vector<SatSequence>& corpus) {
  if (corpus.empty()) {
    throw Error(Errc::empty_corpus, "cannot build a vocabulary from an empty corpus");
  }
  std::set<std::string> symbols;
  std::set<std::vector<std::uint8_t>> paths;
  for (const SatSequence& seq : corpus) {
    for (const SatToken& tok : seq.tokens) {
      symbols.insert(tok.symbol);
      std::vector<std::uint8_t> raw;
      raw.reserve(tok.path.size());
      for (ModifierTag t : tok.path) raw.push_back(static_cast<std::uint8_t>(t));
      paths.insert(std::move(raw));
    }
  }
  Vocabulary v;
  v.symbols_.emplace_back(k_mask_symbol);
  v.symbols_.emplace_back(k_pad_symbol);
  v.symbols_.insert(v.symbols_.end(), symbols.begin(), symbols.end());
  v.paths_.emplace_back();  // PAD path sentinel, index 0
  v.paths_.emplace_back();  // MASK path sentinel, index 1
  for (const auto& raw : paths) {
    ModifierPath p;
    p.reserve(raw.size());
    for (std::uint8_t t : raw) p.push_back(static_cast<ModifierTag>(t));
    v.paths_.push_back(std::move(p));
  }
  v.index();
  return v;
}

void Vocabulary::index() {
  symbol_ids_.clear();
  path_ids_.clear();
  for (std::uint32_t id = 0; id < symbols_.size(); ++id) symbol_ids_[symbols_[id]] = id;
  for (std::uint32_t id = first_real_path(); id < paths_.size(); ++id) {
    path_ids_[path_text(paths_[id])] = id;
  }
}

bool Vocabulary::has_symbol(std::string_view name) const {
  return symbol_ids_.find(std::string(name)) != symbol_ids_.end();
}

bool Vocabulary::has_path(const ModifierPath& path) const {
  return path_ids_.find(path_text(path)) != path_ids_.end();
}

std::uint32_t Vocabulary::symbol_id(std::string_view name) const {
  auto it = symbol_ids_.find(std::string(name));
  if (it == symbol_ids_.end()) {
    throw Error(Errc::out_of_vocabulary, "symbol '" + std::string(name) +
                                             "' not in vocabulary");
  }
  return it->second;
}

std::uint32_t Vocabulary::path_id(const ModifierPath& path) const {
  auto it = path_ids_.find(path_text(path));
  if (it == path_ids_.end()) {
    throw Error(Errc::out_of_vocabulary,
                "modifier path '" + path_text(path) + "' not in vocabulary");
  }
  return it->second;
}

std::uint64_t Vocabulary::hash() const {
  // FNV-1a over the canonical serialization.
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::string_view s) {
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ull;
    }
    h ^= 0xff;
    h *= 0x100000001b3ull;
  };
  mix("symbols");
  for (std::size_t i = first_real_symbol(); i < symbols_.size(); ++i) mix(symbols_[i]);
  mix("paths");
  for (std::size_t i = first_real_path(); i < paths_.size(); ++i) {
    mix(path_text(paths_[i]));
  }
  return h;
}

std::string Vocabulary::serialize() const {
  std::string out;
  out += "symbols " + std::to_string(symbols_.size() - first_real_symbol()) + "\n";
  for (std::size_t i = first_real_symbol(); i < symbols_.size(); ++i) {
    out += symbols_[i];
    out += '\n';
  }
  out += "paths " + std::to_string(paths_.size() - first_real_path()) + "\n";
  for (std::size_t i = first_real_path(); i < paths_.size(); ++i) {
    out += path_text(paths_[i]);
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::deserialize_tables(const std::vector<std::string>& symbols,
                                          const std::vector<std::string>& paths) {
  Vocabulary v;
  v.symbols_.emplace_back(k_mask_symbol);
  v.symbols_.emplace_back(k_pad_symbol);
  for (const std::string& s : symbols) v.symbols_.push_back(s);
  v.paths_.emplace_back();
  v.paths_.emplace_back();
  for (const std::string& p : paths) v.paths_.push_back(parse_path_text(p));
  v.index();
  return v;
}

Canvas encode(const SatSequence& seq, const Vocabulary& vocab,
              std::size_t canvas_len) {
  if (seq.size() > canvas_len) {
    throw Error(Errc::sequence_too_long,
                "sequence of length " + std::to_string(seq.size()) +
                    " does not fit canvas of length " + std::to_string(canvas_len));
  }
  Canvas canvas;
  canvas.sym.assign(canvas_len, k_sym_pad);
  canvas.mod.assign(canvas_len, k_mod_pad);
  for (std::size_t i = 0; i < seq.size(); ++i) {
    canvas.sym[i] = vocab.symbol_id(seq.tokens[i].symbol);
    canvas.mod[i] = vocab.path_id(seq.tokens[i].path);
  }
  return canvas;
}

SatSequence decode_canvas(const Canvas& canvas, const Vocabulary& vocab) {
  SatSequence seq;
  for (std::size_t i = 0; i < canvas.size(); ++i) {
    std::uint32_t s = canvas.sym[i];
    if (s == k_sym_pad || s == k_sym_mask) continue;
    std::uint32_t m = canvas.mod[i];
    ModifierPath path;
    if (m != k_mod_pad && m != k_mod_mask) path = vocab.path(m);
    seq.tokens.push_back({vocab.symbol_name(s), std::move(path)});
  }
  return seq;
}

std::string render_canvas(const Canvas& canvas, const Vocabulary& vocab) {
  return latex::render(sat_detokenize_lenient(decode_canvas(canvas, vocab)));
}

}  // namespace satdiff::sat
