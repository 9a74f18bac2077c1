#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "satdiff/error.hpp"

namespace satdiff::latex {

// ---------------------------------------------------------------------------
// Lexing
// ---------------------------------------------------------------------------

enum class TokenKind {
  command,      // \frac, \alpha, ...
  symbol,       // single visible character
  open_brace,   // {
  close_brace,  // }
  caret,        // ^
  underscore,   // _
};

struct RawToken {
  TokenKind kind;
  std::string text;  // command text includes the backslash
  std::size_t pos;   // byte offset in the source string

  bool operator==(const RawToken&) const = default;
};

// Splits a math-mode string into raw tokens. Whitespace is insignificant.
// Throws Error{unknown_character} / Error{unknown_command}.
std::vector<RawToken> lex(std::string_view input);

bool is_supported_command(std::string_view name_with_backslash);

// ---------------------------------------------------------------------------
// AST
// ---------------------------------------------------------------------------

enum class NodeKind {
  row,       // ordered juxtaposition; children are non-row nodes
  symbol,    // one visible symbol, possibly a command like \alpha
  group,     // redundant braces kept from row position: {x}
  frac,      // children = {numerator, denominator}
  sqrt,      // children = {radicand}
  scripted,  // children = {base, sup?, sub?}; base is never scripted
};

struct Ast {
  NodeKind kind = NodeKind::row;
  std::string symbol;          // NodeKind::symbol only
  std::vector<Ast> children;
  bool has_sup = false;        // NodeKind::scripted only
  bool has_sub = false;

  bool operator==(const Ast&) const = default;

  const Ast& base() const { return children[0]; }
  const Ast& sup() const { return children[1]; }
  const Ast& sub() const { return children[has_sup ? 2 : 1]; }
  const Ast& numerator() const { return children[0]; }
  const Ast& denominator() const { return children[1]; }
  const Ast& radicand() const { return children[0]; }
  const Ast& group_child() const { return children[0]; }
};

Ast make_symbol(std::string name);
// Flattens nested rows and unwraps singleton rows.
Ast make_row(std::vector<Ast> items);
Ast make_group(Ast child);
Ast make_frac(Ast numerator, Ast denominator);
Ast make_sqrt(Ast radicand);
Ast make_scripted(Ast base, const Ast* sup, const Ast* sub);

// Parses a lexed token stream. Braces around script/frac/sqrt arguments are
// delimiters and leave no node; braces in row position become a Group node.
// Throws Error{unbalanced_braces | dangling_script | arity_error}.
Ast parse(const std::vector<RawToken>& tokens);

// Canonical rendering: script and \frac/\sqrt arguments (and script bases)
// are always brace-wrapped, superscript before subscript, single space only
// where needed to keep command tokens apart. parse(lex(render(a))) == a.
std::string render(const Ast& ast);

// render . parse . lex — idempotent on anything that parses.
std::string normalize(std::string_view input);

}  // namespace satdiff::latex
