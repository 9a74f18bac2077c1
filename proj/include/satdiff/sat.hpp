#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "satdiff/error.hpp"
#include "satdiff/latex.hpp"

namespace satdiff::sat {

// Structural roles a visible symbol can sit inside, root to leaf.
enum class ModifierTag : std::uint8_t {
  sup = 0,
  sub = 1,
  frac_num = 2,
  frac_den = 3,
  sqrt_arg = 4,
};

using ModifierPath = std::vector<ModifierTag>;

constexpr std::size_t k_max_depth = 4;

struct SatToken {
  std::string symbol;
  ModifierPath path;

  bool operator==(const SatToken&) const = default;
};

// Equal-length pairing of visible symbols with their structural paths; the
// left-to-right order is the in-order traversal of the source AST's leaves.
struct SatSequence {
  std::vector<SatToken> tokens;

  std::size_t size() const { return tokens.size(); }
  bool operator==(const SatSequence&) const = default;
};

std::string_view tag_name(ModifierTag tag);

// Decomposes an AST into aligned (symbol, path) pairs. Grouping braces leave
// no trace; a script base keeps the shorter path while SUP/SUB attach to the
// arguments. Throws Error{depth_exceeded} past k_max_depth.
SatSequence sat_tokenize(const latex::Ast& ast);

// Inverse mapping: consecutive tokens sharing a path prefix are grouped under
// one structural node (maximal-run grouping). Throws
// Error{incoherent_structure} when the path sequence has no realization,
// e.g. a FRAC_DEN run with no preceding FRAC_NUM run, or a leading script.
latex::Ast sat_detokenize(const SatSequence& seq);

// Decode-pipeline variant: a denoiser may emit path sequences with no
// realization, so offending tokens are dropped to the baseline path one at a
// time until the sequence detokenizes. Total on any input; symbols are never
// altered, so the output always renders with balanced braces.
latex::Ast sat_detokenize_lenient(const SatSequence& seq);

// Text form, one expression per line: `symbol/PATH` items separated by single
// spaces, PATH = '.'-joined tag names or '_' when empty. Round-trips
// byte-exactly.
std::string format_sat(const SatSequence& seq);
SatSequence parse_sat(std::string_view line);

// ---------------------------------------------------------------------------
// Vocabulary and canvas encoding
// ---------------------------------------------------------------------------

// Reserved ids. The symbol table holds MASK and PAD; the modifier table holds
// a PAD path and a MASK path (the forward process hides both channels).
constexpr std::uint32_t k_sym_mask = 0;
constexpr std::uint32_t k_sym_pad = 1;
constexpr std::uint32_t k_mod_pad = 0;
constexpr std::uint32_t k_mod_mask = 1;

class Vocabulary {
 public:
  // Deterministic: observed symbols and paths are sorted, so rebuilding from
  // a permuted corpus yields an identical vocabulary.
  static Vocabulary build(const std::vector<SatSequence>& corpus);

  std::size_t symbol_count() const { return symbols_.size(); }
  std::size_t path_count() const { return paths_.size(); }

  const std::string& symbol_name(std::uint32_t id) const { return symbols_.at(id); }
  const ModifierPath& path(std::uint32_t id) const { return paths_.at(id); }

  bool has_symbol(std::string_view name) const;
  bool has_path(const ModifierPath& path) const;
  std::uint32_t symbol_id(std::string_view name) const;   // throws out_of_vocabulary
  std::uint32_t path_id(const ModifierPath& path) const;  // throws out_of_vocabulary

  // Real (non-reserved) entries start after the sentinels.
  std::size_t first_real_symbol() const { return 2; }
  std::size_t first_real_path() const { return 2; }

  std::uint64_t hash() const;

  // Round-trippable table listing, used by the model checkpoint format.
  std::string serialize() const;
  static Vocabulary deserialize_tables(const std::vector<std::string>& symbols,
                                       const std::vector<std::string>& paths);

  bool operator==(const Vocabulary& other) const {
    return symbols_ == other.symbols_ && paths_ == other.paths_;
  }

 private:
  std::vector<std::string> symbols_;        // [0]=MASK, [1]=PAD, rest sorted
  std::vector<ModifierPath> paths_;         // [0]=PAD, [1]=MASK, rest sorted
  std::unordered_map<std::string, std::uint32_t> symbol_ids_;
  std::unordered_map<std::string, std::uint32_t> path_ids_;  // keyed by dotted text

  void index();
};

std::string path_text(const ModifierPath& path);           // "_" when empty
ModifierPath parse_path_text(std::string_view text);

// Fixed-length id canvas the diffusion process operates on.
struct Canvas {
  std::vector<std::uint32_t> sym;
  std::vector<std::uint32_t> mod;

  std::size_t size() const { return sym.size(); }
  bool operator==(const Canvas&) const = default;
};

// Places the sequence at the front of a canvas_len canvas and PAD-fills the
// tail. Throws Error{sequence_too_long} and Error{out_of_vocabulary}.
Canvas encode(const SatSequence& seq, const Vocabulary& vocab, std::size_t canvas_len);

// Lifts a decoded canvas back to a sequence: PAD/MASK symbol cells are
// dropped, reserved modifier ids on real symbols fall back to the empty path.
SatSequence decode_canvas(const Canvas& canvas, const Vocabulary& vocab);

// decode_canvas + lenient detokenization + canonical rendering.
std::string render_canvas(const Canvas& canvas, const Vocabulary& vocab);

}  // namespace satdiff::sat
