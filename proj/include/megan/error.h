//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MEGAN_ERROR_H_
#define MEGAN_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace megan {

// Base of every error raised by the library. `kind()` is the stable name used
// in preprocessing reports and CLI diagnostics.
class Error: public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual std::string_view kind() const noexcept { return "Error"; }
};

#define MEGAN_DEFINE_ERROR(Name)                                               \
  class Name: public Error {                                                   \
  public:                                                                      \
    using Error::Error;                                                        \
    std::string_view kind() const noexcept override { return #Name; }          \
  }

MEGAN_DEFINE_ERROR(ValenceError);
MEGAN_DEFINE_ERROR(UnsupportedFeatureError);
MEGAN_DEFINE_ERROR(AlreadyPresentError);
MEGAN_DEFINE_ERROR(InvalidTargetError);
MEGAN_DEFINE_ERROR(MappingError);
MEGAN_DEFINE_ERROR(UnreachableAtomsError);
MEGAN_DEFINE_ERROR(InternalInconsistencyError);
MEGAN_DEFINE_ERROR(ShapeMismatchError);
MEGAN_DEFINE_ERROR(GraphDetachedError);
MEGAN_DEFINE_ERROR(ConfigError);
MEGAN_DEFINE_ERROR(DataError);
MEGAN_DEFINE_ERROR(NonFiniteLossError);
MEGAN_DEFINE_ERROR(SequenceTooLongError);
MEGAN_DEFINE_ERROR(ReconstructionError);

#undef MEGAN_DEFINE_ERROR

class SyntaxError: public Error {
public:
  SyntaxError(std::size_t position, const std::string &message)
      : Error("syntax error at position " + std::to_string(position) + ": "
              + message),
        position_(position) { }

  std::string_view kind() const noexcept override { return "SyntaxError"; }
  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

}  // namespace megan

#endif  // MEGAN_ERROR_H_
