#pragma once

#include <stdexcept>
#include <string>

namespace negens {

enum class ErrorKind {
  kValidation,
  kAlignment,
  kParse,
  kIo,
  kNotFound,
};

// All library failures surface as this exception; the C API maps `kind` onto
// its status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error ValidationError(const std::string& what) {
  return Error(ErrorKind::kValidation, what);
}
inline Error AlignmentError(const std::string& what) {
  return Error(ErrorKind::kAlignment, what);
}
inline Error ParseError(const std::string& what) {
  return Error(ErrorKind::kParse, what);
}

}  // namespace negens
