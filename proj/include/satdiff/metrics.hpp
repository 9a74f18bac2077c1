#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "satdiff/error.hpp"

namespace satdiff::metrics {

using TokenList = std::vector<std::string>;

struct MetricsReport {
  double cer = 0.0;
  double em = 0.0;
  std::map<int, double> er_le;  // k in {1,2,3,4}
  double ser = 0.0;
  std::size_t n_samples = 0;
};

// Levenshtein distance with unit insert/delete/substitute costs.
std::size_t token_edit_distance(const TokenList& ref, const TokenList& hyp);

// Micro-average: pooled edit distance over pooled reference token count.
// May exceed 1 for very long hypotheses; deliberately not clamped.
double corpus_cer(const std::vector<TokenList>& refs,
                  const std::vector<TokenList>& hyps);

double exact_match_rate(const std::vector<TokenList>& refs,
                        const std::vector<TokenList>& hyps);

// Fraction of hypotheses within k token edits of the reference; ER<=0 == EM.
double er_le_k(const std::vector<TokenList>& refs,
               const std::vector<TokenList>& hyps, std::size_t k);

// Fraction of raw strings whose '{' and '}' counts disagree.
double syntax_error_rate(const std::vector<std::string>& hyps);

// decoded_runs[i] holds the n outputs for input i, already reduced to the
// comparison key (normalized visible-symbol sequence). Returns a histogram
// distinct-count -> number of inputs, buckets 1..n.
std::map<std::size_t, std::size_t> diversity_histogram(
    const std::vector<std::vector<std::string>>& decoded_runs);

MetricsReport evaluate(const std::vector<TokenList>& ref_tokens,
                       const std::vector<TokenList>& hyp_tokens,
                       const std::vector<std::string>& raw_hyps);

}  // namespace satdiff::metrics
