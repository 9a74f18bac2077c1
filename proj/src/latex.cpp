#include "satdiff/latex.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <utility>

namespace satdiff::latex {

namespace {

constexpr std::string_view k_symbol_punct = "+-=()[],./<>!|";

// Closed, versioned command set. Greek alphabet plus the handful of named
// operators the corpus grammar can produce. Structural commands \frac and
// \sqrt take arguments; everything else is a visible atom.
constexpr std::array<std::string_view, 49> k_atom_commands = {
    "alpha", "beta",  "gamma",   "delta", "epsilon", "zeta",  "eta",
    "theta", "iota",  "kappa",   "lambda", "mu",     "nu",    "xi",
    "pi",    "rho",   "sigma",   "tau",   "upsilon", "phi",   "chi",
    "psi",   "omega", "Gamma",   "Delta", "Theta",   "Lambda", "Xi",
    "Pi",    "Sigma", "Upsilon", "Phi",   "Psi",     "Omega", "sum",
    "int",   "infty", "cdot",    "pm",    "leq",     "geq",   "neq",
    "times", "log",   "sin",     "cos",   "tan",     "lim",   "rightarrow",
};

bool is_atom_command(std::string_view name) {
  return std::find(k_atom_commands.begin(), k_atom_commands.end(), name) !=
         k_atom_commands.end();
}

bool is_symbol_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 ||
         k_symbol_punct.find(c) != std::string_view::npos;
}

}  // namespace

bool is_supported_command(std::string_view name_with_backslash) {
  if (name_with_backslash.size() < 2 || name_with_backslash[0] != '\\') return false;
  std::string_view name = name_with_backslash.substr(1);
  return name == "frac" || name == "sqrt" || is_atom_command(name);
}

std::vector<RawToken> lex(std::string_view input) {
  std::vector<RawToken> out;
  std::size_t i = 0;
  while (i < input.size()) {
    char c = input[i];
    if (std::isspace(static_cast<unsigned char>(c)) != 0) {
      ++i;
      continue;
    }
    switch (c) {
      case '{':
        out.push_back({TokenKind::open_brace, "{", i});
        ++i;
        continue;
      case '}':
        out.push_back({TokenKind::close_brace, "}", i});
        ++i;
        continue;
      case '^':
        out.push_back({TokenKind::caret, "^", i});
        ++i;
        continue;
      case '_':
        out.push_back({TokenKind::underscore, "_", i});
        ++i;
        continue;
      case '\\': {
        std::size_t start = i;
        std::size_t j = i + 1;
        while (j < input.size() &&
               std::isalpha(static_cast<unsigned char>(input[j])) != 0) {
          ++j;
        }
        if (j == i + 1) {
          throw Error(Errc::unknown_command,
                      "lone backslash at offset " + std::to_string(start), start);
        }
        std::string name(input.substr(i, j - i));
        if (!is_supported_command(name)) {
          throw Error(Errc::unknown_command, "unsupported command " + name, start);
        }
        out.push_back({TokenKind::command, std::move(name), start});
        i = j;
        continue;
      }
      default:
        if (is_symbol_char(c)) {
          out.push_back({TokenKind::symbol, std::string(1, c), i});
          ++i;
          continue;
        }
        throw Error(Errc::unknown_character,
                    "unsupported character '" + std::string(1, c) + "' at offset " +
                        std::to_string(i),
                    i);
    }
  }
  return out;
}

Ast make_symbol(std::string name) {
  Ast node;
  node.kind = NodeKind::symbol;
  node.symbol = std::move(name);
  return node;
}

Ast make_row(std::vector<Ast> items) {
  std::vector<Ast> flat;
  flat.reserve(items.size());
  for (Ast& item : items) {
    if (item.kind == NodeKind::row) {
      for (Ast& child : item.children) flat.push_back(std::move(child));
    } else {
      flat.push_back(std::move(item));
    }
  }
  if (flat.size() == 1) return std::move(flat[0]);
  Ast node;
  node.kind = NodeKind::row;
  node.children = std::move(flat);
  return node;
}

Ast make_group(Ast child) {
  Ast node;
  node.kind = NodeKind::group;
  node.children.push_back(std::move(child));
  return node;
}

Ast make_frac(Ast numerator, Ast denominator) {
  Ast node;
  node.kind = NodeKind::frac;
  node.children.push_back(std::move(numerator));
  node.children.push_back(std::move(denominator));
  return node;
}

Ast make_sqrt(Ast radicand) {
  Ast node;
  node.kind = NodeKind::sqrt;
  node.children.push_back(std::move(radicand));
  return node;
}

Ast make_scripted(Ast base, const Ast* sup, const Ast* sub) {
  Ast node;
  node.kind = NodeKind::scripted;
  node.children.push_back(std::move(base));
  if (sup != nullptr) {
    node.has_sup = true;
    node.children.push_back(*sup);
  }
  if (sub != nullptr) {
    node.has_sub = true;
    node.children.push_back(*sub);
  }
  return node;
}

namespace {

class Parser {
 public:
  explicit Parser(const std::vector<RawToken>& tokens) : tokens_(tokens) {}

  Ast parse_all() {
    Ast result = parse_row(/*inside_group=*/false);
    if (pos_ < tokens_.size()) {
      // parse_row only stops early on an unmatched close brace.
      throw Error(Errc::unbalanced_braces,
                  "unmatched '}' at offset " + std::to_string(cur().pos), cur().pos);
    }
    return result;
  }

 private:
  const std::vector<RawToken>& tokens_;
  std::size_t pos_ = 0;

  bool done() const { return pos_ >= tokens_.size(); }
  const RawToken& cur() const { return tokens_[pos_]; }

  std::size_t here() const { return done() ? tokens_.size() : cur().pos; }

  Ast parse_row(bool inside_group) {
    std::vector<Ast> items;
    while (!done()) {
      const RawToken& tok = cur();
      switch (tok.kind) {
        case TokenKind::close_brace:
          if (!inside_group) {
            throw Error(Errc::unbalanced_braces,
                        "unmatched '}' at offset " + std::to_string(tok.pos), tok.pos);
          }
          return make_row(std::move(items));
        case TokenKind::open_brace:
          items.push_back(make_group(parse_braced()));
          break;
        case TokenKind::caret:
        case TokenKind::underscore:
          attach_script(items, tok.kind == TokenKind::caret, tok.pos);
          break;
        case TokenKind::symbol:
          items.push_back(make_symbol(tok.text));
          ++pos_;
          break;
        case TokenKind::command:
          items.push_back(parse_command());
          break;
      }
    }
    if (inside_group) {
      throw Error(Errc::unbalanced_braces, "missing '}' at end of input", here());
    }
    return make_row(std::move(items));
  }

  // Consumes "{ row }" and returns the row content; the braces leave no node.
  Ast parse_braced() {
    ++pos_;  // '{'
    Ast content = parse_row(/*inside_group=*/true);
    if (done() || cur().kind != TokenKind::close_brace) {
      throw Error(Errc::unbalanced_braces, "missing '}' at end of input", here());
    }
    ++pos_;  // '}'
    return content;
  }

  Ast parse_command() {
    const RawToken tok = cur();
    ++pos_;
    std::string_view name = std::string_view(tok.text).substr(1);
    if (name == "frac") {
      Ast num = parse_argument(tok);
      Ast den = parse_argument(tok);
      return make_frac(std::move(num), std::move(den));
    }
    if (name == "sqrt") {
      return make_sqrt(parse_argument(tok));
    }
    return make_symbol(tok.text);
  }

  // One mandatory argument: a braced row, a single symbol, or a command
  // construct (so \frac{a}{b} works as an unbraced argument).
  Ast parse_argument(const RawToken& command) {
    if (done()) {
      throw Error(Errc::arity_error, command.text + " missing argument", command.pos);
    }
    switch (cur().kind) {
      case TokenKind::open_brace:
        return parse_braced();
      case TokenKind::symbol: {
        Ast node = make_symbol(cur().text);
        ++pos_;
        return node;
      }
      case TokenKind::command:
        return parse_command();
      default:
        throw Error(Errc::arity_error,
                    command.text + " argument may not start with '" + cur().text + "'",
                    cur().pos);
    }
  }

  void attach_script(std::vector<Ast>& items, bool is_sup, std::size_t pos) {
    if (items.empty()) {
      throw Error(Errc::dangling_script, "script with no base", pos);
    }
    ++pos_;  // '^' or '_'
    if (done()) {
      throw Error(Errc::dangling_script, "script with no argument", pos);
    }
    Ast arg = parse_script_argument(pos);

    Ast base = std::move(items.back());
    items.pop_back();
    // `{x}^{2}` assigns the braces to the base: the group dissolves.
    if (base.kind == NodeKind::group) {
      base = std::move(base.children[0]);
    }
    if (base.kind == NodeKind::scripted) {
      if ((is_sup && base.has_sup) || (!is_sup && base.has_sub)) {
        throw Error(Errc::dangling_script,
                    std::string("double ") + (is_sup ? "superscript" : "subscript"),
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
    items.push_back(make_scripted(std::move(base), is_sup ? &arg : nullptr,
                                  is_sup ? nullptr : &arg));
  }

  Ast parse_script_argument(std::size_t script_pos) {
    switch (cur().kind) {
      case TokenKind::open_brace:
        return parse_braced();
      case TokenKind::symbol: {
        Ast node = make_symbol(cur().text);
        ++pos_;
        return node;
      }
      case TokenKind::command:
        return parse_command();
      default:
        throw Error(Errc::dangling_script,
                    "script argument may not start with '" + cur().text + "'",
                    script_pos);
    }
  }
};

// Rendering produces a lexeme stream, then joins it. A space is required
// exactly where gluing would fuse a command with following letters.
void collect_lexemes(const Ast& ast, std::vector<std::string>& out);

void collect_braced(const Ast& ast, std::vector<std::string>& out) {
  out.emplace_back("{");
  collect_lexemes(ast, out);
  out.emplace_back("}");
}

void collect_lexemes(const Ast& ast, std::vector<std::string>& out) {
  switch (ast.kind) {
    case NodeKind::row:
      for (const Ast& child : ast.children) collect_lexemes(child, out);
      return;
    case NodeKind::symbol:
      out.push_back(ast.symbol);
      return;
    case NodeKind::group:
      collect_braced(ast.group_child(), out);
      return;
    case NodeKind::frac:
      out.emplace_back("\\frac");
      collect_braced(ast.numerator(), out);
      collect_braced(ast.denominator(), out);
      return;
    case NodeKind::sqrt:
      out.emplace_back("\\sqrt");
      collect_braced(ast.radicand(), out);
      return;
    case NodeKind::scripted:
      collect_braced(ast.base(), out);
      if (ast.has_sup) {
        out.emplace_back("^");
        collect_braced(ast.sup(), out);
      }
      if (ast.has_sub) {
        out.emplace_back("_");
        collect_braced(ast.sub(), out);
      }
      return;
  }
}

bool needs_space(const std::string& prev, const std::string& next) {
  if (prev.size() < 2 || prev[0] != '\\') return false;
  char c = next[0];
  return c == '\\' || std::isalpha(static_cast<unsigned char>(c)) != 0;
}

}  // namespace

Ast parse(const std::vector<RawToken>& tokens) { return Parser(tokens).parse_all(); }

std::string render(const Ast& ast) {
  std::vector<std::string> lexemes;
  collect_lexemes(ast, lexemes);
  std::string out;
  for (std::size_t i = 0; i < lexemes.size(); ++i) {
    if (i > 0 && needs_space(lexemes[i - 1], lexemes[i])) out += ' ';
    out += lexemes[i];
  }
  return out;
}

std::string normalize(std::string_view input) { return render(parse(lex(input))); }

}  // namespace satdiff::latex
