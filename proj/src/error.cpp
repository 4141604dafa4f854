#include "relhoare/error.hpp"

namespace relhoare {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::schema_mismatch: return "SchemaMismatch";
    case ErrorCode::side_condition_failed: return "SideConditionFailed";
    case ErrorCode::step_fn_unresolvable: return "StepFnUnresolvable";
    case ErrorCode::asymmetric_enumeration: return "AsymmetricEnumeration";
    case ErrorCode::factorization_witness_missing: return "FactorizationWitnessMissing";
    case ErrorCode::not_deterministic: return "NotDeterministic";
    case ErrorCode::missing_promotion_evidence: return "MissingPromotionEvidence";
    case ErrorCode::precondition_violated: return "PreconditionViolated";
    case ErrorCode::partition_overlap: return "PartitionOverlap";
    case ErrorCode::unknown_mnemonic: return "UnknownMnemonic";
    case ErrorCode::undefined_label: return "UndefinedLabel";
    case ErrorCode::offset_out_of_range: return "OffsetOutOfRange";
    case ErrorCode::immediate_out_of_range: return "ImmediateOutOfRange";
    case ErrorCode::length_not_aligned: return "LengthNotAligned";
    case ErrorCode::misaligned_base: return "MisalignedBase";
    case ErrorCode::syntax_error: return "SyntaxError";
    case ErrorCode::template_expansion_failure: return "TemplateExpansionFailure";
    case ErrorCode::anchor_mismatch: return "AnchorMismatch";
    case ErrorCode::promotion_failed: return "PromotionFailed";
    case ErrorCode::unknown_section: return "UnknownSection";
    case ErrorCode::undeclared_param: return "UndeclaredParam";
    case ErrorCode::domain_too_large: return "DomainTooLarge";
    case ErrorCode::io_error: return "IoError";
  }
  return "Error";
}

namespace {

std::string decorate(ErrorCode code, const std::string& message, int line) {
  std::string out(to_string(code));
  if (line > 0) out += " (line " + std::to_string(line) + ")";
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, int line)
    : std::runtime_error(decorate(code, message, line)), code_(code), line_(line) {}

}  // namespace relhoare
