#include <map>
#include <string>

#include "doctest.h"
#include "satdiff/metrics.hpp"
#include "satdiff/rng.hpp"

using namespace satdiff;
using namespace satdiff::metrics;

namespace {

// Brute-force oracle: the textbook recursive definition with memoization,
// independent of the DP implementation under test.
std::size_t lev_oracle_impl(const TokenList& a, const TokenList& b, std::size_t i,
                            std::size_t j,
                            std::map<std::pair<std::size_t, std::size_t>,
                                     std::size_t>& memo) {
  if (i == 0) return j;
  if (j == 0) return i;
  auto key = std::make_pair(i, j);
  auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  std::size_t best = lev_oracle_impl(a, b, i - 1, j, memo) + 1;
  best = std::min(best, lev_oracle_impl(a, b, i, j - 1, memo) + 1);
  std::size_t sub = lev_oracle_impl(a, b, i - 1, j - 1, memo) +
                    (a[i - 1] == b[j - 1] ? 0 : 1);
  best = std::min(best, sub);
  memo[key] = best;
  return best;
}

std::size_t lev_oracle(const TokenList& a, const TokenList& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  return lev_oracle_impl(a, b, a.size(), b.size(), memo);
}

TokenList random_tokens(Rng& rng, std::size_t max_len) {
  static const std::string alphabet[] = {"a", "b", "c", "d"};
  TokenList out;
  std::size_t len = rng.below(max_len + 1);
  for (std::size_t i = 0; i < len; ++i) out.push_back(alphabet[rng.below(4)]);
  return out;
}

}  // namespace

TEST_CASE("edit distance basics") {
  CHECK(token_edit_distance({"a", "+", "b"}, {"a", "+", "b"}) == 0);
  CHECK(token_edit_distance({"a", "+", "b"}, {"a", "-", "b"}) == 1);
  CHECK(token_edit_distance({}, {"x", "y"}) == 2);
  CHECK(token_edit_distance({"x", "y", "z", "w", "v"}, {}) == 5);
}

TEST_CASE("edit distance equals the brute-force oracle on 1000 random pairs") {
  Rng rng(404, 0);
  for (int round = 0; round < 1000; ++round) {
    TokenList a = random_tokens(rng, 6);
    TokenList b = random_tokens(rng, 6);
    CHECK(token_edit_distance(a, b) == lev_oracle(a, b));
  }
}

TEST_CASE("edit distance is a metric") {
  Rng rng(405, 0);
  for (int round = 0; round < 500; ++round) {
    TokenList a = random_tokens(rng, 5);
    TokenList b = random_tokens(rng, 5);
    TokenList c = random_tokens(rng, 5);
    std::size_t ab = token_edit_distance(a, b);
    std::size_t ba = token_edit_distance(b, a);
    std::size_t ac = token_edit_distance(a, c);
    std::size_t bc = token_edit_distance(b, c);
    CHECK(ab == ba);                       // symmetry
    CHECK((ab == 0) == (a == b));          // identity of indiscernibles
    CHECK(ac <= ab + bc);                  // triangle inequality
  }
}

TEST_CASE("corpus CER pools counts (micro-average)") {
  std::vector<TokenList> refs = {{"a", "b", "c"},
                                 {"a", "b", "c", "d", "e", "f", "g"}};
  std::vector<TokenList> hyps = {{"a", "x", "c"},
                                 {"a", "b", "c", "d", "e", "f", "x"}};
  // distances 1 and 1 over 3+7 reference tokens: 2/10, not mean(1/3, 1/7)
  CHECK(corpus_cer(refs, hyps) == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("corpus CER of exact hypotheses is zero") {
  std::vector<TokenList> refs = {{"a"}, {"b", "c"}};
  CHECK(corpus_cer(refs, refs) == 0.0);
}

TEST_CASE("empty hypothesis contributes its full reference length") {
  std::vector<TokenList> refs = {{"a", "b", "c", "d", "e"}};
  std::vector<TokenList> hyps = {{}};
  CHECK(corpus_cer(refs, hyps) == doctest::Approx(1.0));
}

TEST_CASE("CER can exceed one and is not clamped") {
  std::vector<TokenList> refs = {{"a"}};
  std::vector<TokenList> hyps = {{"x", "y", "z"}};
  CHECK(corpus_cer(refs, hyps) == doctest::Approx(3.0));
}

TEST_CASE("corpus metrics reject size mismatches") {
  std::vector<TokenList> refs = {{"a"}};
  std::vector<TokenList> hyps;
  CHECK_THROWS_AS(corpus_cer(refs, hyps), Error);
  CHECK_THROWS_AS(exact_match_rate(refs, hyps), Error);
}

TEST_CASE("EM counts exact equality; one substitution lands in ER<=1") {
  std::vector<TokenList> refs = {{"a", "b"}, {"c", "d"}};
  std::vector<TokenList> hyps = {{"a", "b"}, {"c", "x"}};
  CHECK(exact_match_rate(refs, hyps) == doctest::Approx(0.5));
  CHECK(er_le_k(refs, hyps, 1) == doctest::Approx(1.0));
  CHECK(er_le_k(refs, hyps, 2) == doctest::Approx(1.0));
  CHECK(exact_match_rate(refs, refs) == doctest::Approx(1.0));
  CHECK(er_le_k(refs, refs, 4) == doctest::Approx(1.0));
}

TEST_CASE("ER<=k is monotone in k on random corpora") {
  Rng rng(406, 0);
  for (int round = 0; round < 1000; ++round) {
    std::vector<TokenList> refs, hyps;
    std::size_t n = 1 + rng.below(6);
    for (std::size_t i = 0; i < n; ++i) {
      refs.push_back(random_tokens(rng, 6));
      hyps.push_back(random_tokens(rng, 6));
    }
    double em = exact_match_rate(refs, hyps);
    double prev = em;
    for (std::size_t k = 1; k <= 4; ++k) {
      double er = er_le_k(refs, hyps, k);
      CHECK(er >= prev);
      prev = er;
    }
    CHECK(prev <= 1.0);
  }
}

TEST_CASE("syntax error rate counts unbalanced braces") {
  CHECK(syntax_error_rate({"\\frac{a}{b"}) == doctest::Approx(1.0));
  CHECK(syntax_error_rate({"{x}^{2}"}) == doctest::Approx(0.0));
  CHECK(syntax_error_rate({"\\frac{a}{b", "{x}^{2}", "ab"}) ==
        doctest::Approx(1.0 / 3.0));
  CHECK(syntax_error_rate({}) == 0.0);
}

TEST_CASE("diversity histogram counts distinct outputs") {
  // constructed run set {a,a,b,c} -> distinct count 3
  std::vector<std::vector<std::string>> runs = {{"a", "a", "b", "c"}};
  auto hist = diversity_histogram(runs);
  REQUIRE(hist.size() == 1);
  CHECK(hist[3] == 1);

  // n identical strings -> bucket 1
  runs = {{"x", "x", "x", "x"}};
  hist = diversity_histogram(runs);
  CHECK(hist[1] == 1);

  // buckets sum to the number of inputs
  runs = {{"a", "b"}, {"a", "a"}, {"c", "d"}};
  hist = diversity_histogram(runs);
  std::size_t total = 0;
  for (const auto& [bucket, count] : hist) total += count;
  CHECK(total == 3);
}

TEST_CASE("diversity histogram rejects uneven run counts") {
  std::vector<std::vector<std::string>> runs = {{"a", "b"}, {"a"}};
  CHECK_THROWS_AS(diversity_histogram(runs), Error);
}

TEST_CASE("evaluate assembles a report with ordered ER columns") {
  std::vector<TokenList> refs = {{"a", "b"}, {"c"}, {"d", "e", "f"}};
  std::vector<TokenList> hyps = {{"a", "b"}, {"x"}, {"d", "x", "y"}};
  std::vector<std::string> raw = {"ab", "{x", "dxy"};
  MetricsReport report = evaluate(refs, hyps, raw);
  CHECK(report.n_samples == 3);
  CHECK(report.em <= report.er_le[1]);
  CHECK(report.er_le[1] <= report.er_le[2]);
  CHECK(report.er_le[2] <= report.er_le[3]);
  CHECK(report.er_le[3] <= report.er_le[4]);
  CHECK(report.er_le[4] <= 1.0);
  CHECK(report.ser == doctest::Approx(1.0 / 3.0));
  CHECK(report.cer == doctest::Approx(3.0 / 6.0));
}
