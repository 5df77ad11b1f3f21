#pragma once

#include <stdexcept>
#include <string>

namespace fsl {

enum class ErrorKind {
  Domain,       // parameter outside its admissible range (e.g. alpha)
  Shape,        // inconsistent vector/matrix sizes
  Coefficient,  // beta or q violate the positivity assumption
  Solver,       // singular factorization, NaN, line-search breakdown
  SizeGuard,    // oracle invoked above its size limits
  Config,       // problem-file validation
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) throw Error(kind, msg);
}

}  // namespace fsl
