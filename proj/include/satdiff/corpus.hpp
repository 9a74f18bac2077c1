#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "satdiff/latex.hpp"
#include "satdiff/rng.hpp"

namespace satdiff::corpus {

// Weighted choice of what each generated atom becomes.
struct ConstructProbs {
  double symbol = 0.70;
  double frac = 0.09;
  double sqrt = 0.07;
  double sup = 0.08;
  double sub = 0.06;
};

struct GrammarConfig {
  std::size_t max_depth = 3;       // must stay <= sat::k_max_depth
  std::size_t max_row_len = 10;    // atoms in the top-level row
  std::size_t max_arg_len = 3;     // atoms in nested rows
  ConstructProbs probs;
  // Visible alphabet with sampling weights; defaults skew digits common and
  // their confusable look-alikes (z, l, O, \gamma) rare.
  std::vector<std::pair<std::string, double>> alphabet;
  std::size_t max_sat_len = 0;     // 0 = unbounded
  std::uint64_t seed = 1;

  static GrammarConfig defaults();
};

// Samples n expressions from the probabilistic grammar. Every returned AST
// survives render -> lex -> parse and the SAT round-trip (draws that collide
// under path-based tokenization, e.g. adjacent radicals, are re-sampled).
std::vector<latex::Ast> generate(const GrammarConfig& cfg, std::size_t n);

struct LineError {
  std::size_t line;  // 1-based
  std::string message;
};

struct LoadResult {
  std::vector<latex::Ast> asts;
  std::vector<std::size_t> lines;  // source line per AST, parallel to asts
  std::vector<LineError> errors;
};

// One expression per line; a bad line is recorded, never fatal.
LoadResult load_lines(const std::string& path);
LoadResult load_lines_text(const std::string& text);

// Extracts the LaTeX ground truth from an InkML document; stroke data is
// ignored entirely. Throws Error{missing_truth_annotation} / Error{io_error}.
std::string load_inkml_truth(const std::string& path);
std::string inkml_truth_from_text(const std::string& xml);

struct CorpusSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;
};

// Deterministic shuffled partition of [0, n). Ratios must be positive and
// sum to 1; sizes are floor-assigned with the remainder going left to right.
CorpusSplit split(std::size_t n, const std::array<double, 3>& ratios,
                  std::uint64_t seed);

}  // namespace satdiff::corpus
