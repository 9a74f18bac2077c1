#include "satdiff/error.hpp"

namespace satdiff {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::unknown_character: return "UnknownCharacter";
    case Errc::unknown_command: return "UnknownCommand";
    case Errc::unbalanced_braces: return "UnbalancedBraces";
    case Errc::dangling_script: return "DanglingScript";
    case Errc::arity_error: return "ArityError";
    case Errc::depth_exceeded: return "DepthExceeded";
    case Errc::incoherent_structure: return "IncoherentStructure";
    case Errc::empty_corpus: return "EmptyCorpus";
    case Errc::sequence_too_long: return "SequenceTooLong";
    case Errc::out_of_vocabulary: return "OutOfVocabulary";
    case Errc::invalid_time: return "InvalidTime";
    case Errc::missing_row: return "MissingRow";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::size_mismatch: return "SizeMismatch";
    case Errc::uneven_run_counts: return "UnevenRunCounts";
    case Errc::bad_ratios: return "BadRatios";
    case Errc::io_error: return "IoError";
    case Errc::missing_truth_annotation: return "MissingTruthAnnotation";
    case Errc::non_finite_loss: return "NonFiniteLoss";
    case Errc::bad_config: return "BadConfig";
    case Errc::bad_format: return "BadFormat";
    case Errc::internal: return "Internal";
  }
  return "Unknown";
}

int errc_category(Errc code) {
  switch (code) {
    case Errc::unknown_character:
    case Errc::unknown_command:
    case Errc::unbalanced_braces:
    case Errc::dangling_script:
    case Errc::arity_error:
    case Errc::depth_exceeded:
    case Errc::incoherent_structure:
    case Errc::sequence_too_long:
    case Errc::out_of_vocabulary:
    case Errc::missing_row:
    case Errc::size_mismatch:
    case Errc::uneven_run_counts:
    case Errc::io_error:
    case Errc::missing_truth_annotation:
    case Errc::bad_format:
      return 1;
    case Errc::empty_corpus:
    case Errc::invalid_time:
    case Errc::bad_ratios:
    case Errc::bad_config:
      return 2;
    case Errc::shape_mismatch:
    case Errc::non_finite_loss:
    case Errc::internal:
      return 3;
  }
  return 3;
}

}  // namespace satdiff
