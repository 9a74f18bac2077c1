#include "satdiff/metrics.hpp"

#include <algorithm>
#include <set>

namespace satdiff::metrics {

std::size_t token_edit_distance(const TokenList& ref, const TokenList& hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  if (n == 0) return m;
  if (m == 0) return n;
  // Two-row DP.
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

namespace {

void check_sizes(std::size_t refs, std::size_t hyps) {
  if (refs != hyps) {
    throw Error(Errc::size_mismatch,
                "reference corpus has " + std::to_string(refs) +
                    " entries, hypothesis corpus has " + std::to_string(hyps));
  }
}

}  // namespace

double corpus_cer(const std::vector<TokenList>& refs,
                  const std::vector<TokenList>& hyps) {
  check_sizes(refs.size(), hyps.size());
  std::size_t errors = 0;
  std::size_t tokens = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    errors += token_edit_distance(refs[i], hyps[i]);
    tokens += refs[i].size();
  }
  if (tokens == 0) return 0.0;
  return static_cast<double>(errors) / static_cast<double>(tokens);
}

double exact_match_rate(const std::vector<TokenList>& refs,
                        const std::vector<TokenList>& hyps) {
  return er_le_k(refs, hyps, 0);
}

double er_le_k(const std::vector<TokenList>& refs,
               const std::vector<TokenList>& hyps, std::size_t k) {
  check_sizes(refs.size(), hyps.size());
  if (refs.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    if (token_edit_distance(refs[i], hyps[i]) <= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(refs.size());
}

double syntax_error_rate(const std::vector<std::string>& hyps) {
  if (hyps.empty()) return 0.0;
  std::size_t bad = 0;
  for (const std::string& s : hyps) {
    std::size_t open = static_cast<std::size_t>(std::count(s.begin(), s.end(), '{'));
    std::size_t close = static_cast<std::size_t>(std::count(s.begin(), s.end(), '}'));
    if (open != close) ++bad;
  }
  return static_cast<double>(bad) / static_cast<double>(hyps.size());
}

std::map<std::size_t, std::size_t> diversity_histogram(
    const std::vector<std::vector<std::string>>& decoded_runs) {
  std::map<std::size_t, std::size_t> histogram;
  if (decoded_runs.empty()) return histogram;
  const std::size_t n = decoded_runs.front().size();
  for (const auto& runs : decoded_runs) {
    if (runs.size() != n) {
      throw Error(Errc::uneven_run_counts,
                  "all inputs must have the same number of decoding runs");
    }
    std::set<std::string> distinct(runs.begin(), runs.end());
    ++histogram[distinct.size()];
  }
  return histogram;
}

MetricsReport evaluate(const std::vector<TokenList>& ref_tokens,
                       const std::vector<TokenList>& hyp_tokens,
                       const std::vector<std::string>& raw_hyps) {
  check_sizes(ref_tokens.size(), hyp_tokens.size());
  MetricsReport report;
  report.n_samples = ref_tokens.size();
  report.cer = corpus_cer(ref_tokens, hyp_tokens);
  report.em = exact_match_rate(ref_tokens, hyp_tokens);
  for (int k = 1; k <= 4; ++k) {
    report.er_le[k] = er_le_k(ref_tokens, hyp_tokens, static_cast<std::size_t>(k));
  }
  report.ser = syntax_error_rate(raw_hyps);
  return report;
}

}  // namespace satdiff::metrics
