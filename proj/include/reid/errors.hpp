#pragma once

#include <stdexcept>
#include <string>

namespace reid {

// Base of every error thrown by the library. The message can be prefixed
// with context (e.g. a pipeline stage) while the dynamic type is kept.
class Error : public std::exception {
 public:
  explicit Error(std::string msg) : msg_(std::move(msg)) {}

  const char* what() const noexcept override { return msg_.c_str(); }

  void add_context(const std::string& ctx) { msg_ = ctx + ": " + msg_; }

 private:
  std::string msg_;
};

#define REID_DEFINE_ERROR(Name)              \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  }

REID_DEFINE_ERROR(FormatError);  // malformed file contents
REID_DEFINE_ERROR(DataError);    // values violate a data invariant
REID_DEFINE_ERROR(IoError);      // filesystem failure
REID_DEFINE_ERROR(ShapeError);   // incompatible dimensions
REID_DEFINE_ERROR(ConfigError);  // invalid parameters
REID_DEFINE_ERROR(BatchError);   // loss batch lacks positives/negatives
REID_DEFINE_ERROR(EvalError);    // nothing to evaluate

#undef REID_DEFINE_ERROR

}  // namespace reid
