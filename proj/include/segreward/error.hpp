#pragma once

#include <stdexcept>
#include <string>

namespace segreward {

// Raised for precondition violations and malformed inputs. `kind` lets the
// CLI map failures onto exit codes without string matching.
class Error : public std::runtime_error {
 public:
  enum class Kind { InvalidArgument, Io, Degenerate };

  Error(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline Error invalid_argument(const std::string& what) {
  return Error(Error::Kind::InvalidArgument, what);
}
inline Error io_error(const std::string& what) {
  return Error(Error::Kind::Io, what);
}
inline Error degenerate(const std::string& what) {
  return Error(Error::Kind::Degenerate, what);
}

}  // namespace segreward
