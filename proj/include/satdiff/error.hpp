#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace satdiff {

enum class Errc {
  unknown_character,
  unknown_command,
  unbalanced_braces,
  dangling_script,
  arity_error,
  depth_exceeded,
  incoherent_structure,
  empty_corpus,
  sequence_too_long,
  out_of_vocabulary,
  invalid_time,
  missing_row,
  shape_mismatch,
  size_mismatch,
  uneven_run_counts,
  bad_ratios,
  io_error,
  missing_truth_annotation,
  non_finite_loss,
  bad_config,
  bad_format,
  internal,
};

// Structured failure: machine-checkable code plus (where meaningful) the
// offending position in the input token/character stream.
class Error : public std::runtime_error {
 public:
  static constexpr std::size_t k_no_position = static_cast<std::size_t>(-1);

  Error(Errc code, std::string message, std::size_t position = k_no_position)
      : std::runtime_error(std::move(message)), code_(code), position_(position) {}

  Errc code() const { return code_; }
  std::size_t position() const { return position_; }

 private:
  Errc code_;
  std::size_t position_;
};

const char* errc_name(Errc code);

// Coarse classification used for process exit codes and the C API:
// 1 = malformed input, 2 = bad configuration, 3 = internal invariant broken.
int errc_category(Errc code);

}  // namespace satdiff
