// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace qtl {

// Base of every error raised by the library. `kind()` is a stable tag used by
// the CLI and the Python bindings.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string &msg)
      : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
  const std::string &kind() const { return kind_; }

private:
  std::string kind_;
};

#define QTL_DEFINE_ERROR(Name)                                                 \
  class Name : public Error {                                                  \
  public:                                                                      \
    explicit Name(const std::string &msg) : Error(#Name, msg) {}               \
  };

QTL_DEFINE_ERROR(ParseError)
QTL_DEFINE_ERROR(DimensionMismatch)
QTL_DEFINE_ERROR(SingularMatrix)
QTL_DEFINE_ERROR(ToleranceAmbiguity)
QTL_DEFINE_ERROR(NotPositive)
QTL_DEFINE_ERROR(MalformedState)
QTL_DEFINE_ERROR(MalformedProgram)
QTL_DEFINE_ERROR(NotDeterministic)
QTL_DEFINE_ERROR(NoExitLocation)
QTL_DEFINE_ERROR(NonClassicalCoherence)
QTL_DEFINE_ERROR(SelectorExplosion)
QTL_DEFINE_ERROR(SyntaxError)
QTL_DEFINE_ERROR(UndeclaredOperator)
QTL_DEFINE_ERROR(ArityMismatch)
QTL_DEFINE_ERROR(UnknownAtom)
QTL_DEFINE_ERROR(UnknownConfiguration)
QTL_DEFINE_ERROR(AlmostOperatorOnNonAtom)
QTL_DEFINE_ERROR(PreconditionViolated)
QTL_DEFINE_ERROR(BudgetExceeded)
QTL_DEFINE_ERROR(UnsupportedFormula)

#undef QTL_DEFINE_ERROR

} // namespace qtl
