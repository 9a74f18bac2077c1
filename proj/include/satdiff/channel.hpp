#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "satdiff/rng.hpp"
#include "satdiff/sat.hpp"

namespace satdiff::channel {

// Name-level description of a symbol-confusion channel: off-diagonal flip
// masses per source symbol plus the modifier corruption rate. Symbols not
// mentioned keep identity rows when the spec is resolved.
struct ChannelSpec {
  struct Entry {
    std::string from;
    std::string to;
    double probability;
  };
  std::vector<Entry> entries;
  double eps_mod = 0.0;

  // Plain tabular text: an `eps_mod <rate>` header line, then
  // `<symbol> <observed_symbol> <probability>` triples. '#' starts a comment.
  static ChannelSpec parse(const std::string& text);
  std::string format() const;

  static ChannelSpec identity();
  // Confusable groups {z,2}, {2,\gamma}, {1,l}, {O,0}, 0.25 flip mass each;
  // eps_mod = 0.1.
  static ChannelSpec default_ambiguity_preset();
};

// The spec resolved against a vocabulary: one dense categorical row per
// symbol id. Immutable after construction.
class ConfusionChannel {
 public:
  ConfusionChannel(const ChannelSpec& spec, const sat::Vocabulary& vocab);

  double eps_mod() const { return eps_mod_; }
  std::size_t row_count() const { return rows_.size() / row_width_; }
  std::vector<double> row(std::uint32_t sym_id) const;

  // Samples the observation: each symbol from its confusion row, each
  // modifier replaced by a uniformly random real path with probability
  // eps_mod. PAD cells pass through untouched. Throws Error{missing_row} for
  // ids outside the resolved table.
  sat::Canvas observe(const sat::Canvas& truth, Rng& rng) const;

 private:
  std::vector<double> rows_;  // row_count x row_width, row-major
  std::size_t row_width_ = 0;
  double eps_mod_ = 0.0;
  std::vector<std::uint32_t> real_paths_;  // candidates for modifier noise
};

}  // namespace satdiff::channel
