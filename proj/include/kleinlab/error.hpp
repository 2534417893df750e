#pragma once

#include <stdexcept>
#include <string>

namespace kleinlab {

enum class ErrorCode {
  dimension_mismatch,
  domain,            // argument outside the operation's domain
  pole,              // evaluation at a singular point
  ambiguous,         // numerically undecidable classification
  collision,         // two reduced words gave the same element of a Schottky group
  invalid_group,     // presentation invariants violated
  uncertified,       // a certified distance was required but unavailable
  not_covered,       // no dome along the queried direction
  shrink_epsilon0,   // propagated family breaks the shape bound
  insufficient_data, // an estimator has too few usable samples
  locator_failed,
  schema,            // malformed group-definition file
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace kleinlab
