#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace relhoare {

enum class ErrorCode {
  schema_mismatch,
  side_condition_failed,
  step_fn_unresolvable,
  asymmetric_enumeration,
  factorization_witness_missing,
  not_deterministic,
  missing_promotion_evidence,
  precondition_violated,
  partition_overlap,
  unknown_mnemonic,
  undefined_label,
  offset_out_of_range,
  immediate_out_of_range,
  length_not_aligned,
  misaligned_base,
  syntax_error,
  template_expansion_failure,
  anchor_mismatch,
  promotion_failed,
  unknown_section,
  undeclared_param,
  domain_too_large,
  io_error,
};

std::string_view to_string(ErrorCode code);

/// Every failure the toolkit reports is an Error carrying a code and, for
/// text inputs, the 1-based line it refers to (0 when not applicable).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, int line = 0);

  ErrorCode code() const noexcept { return code_; }
  int line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  int line_;
};

}  // namespace relhoare
