#pragma once
#include <stdexcept>
#include <string>

namespace folia {

enum class ErrorKind {
  Domain,
  UnsupportedOrder,
  Parameter,
  Interpolation,
  Precondition,
  Chart,
  Construction,
  Certification,
  Budget,
  BudgetExceeded,
  Gluing,
  Input,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::UnsupportedOrder: return "unsupported-order error";
    case ErrorKind::Parameter: return "parameter error";
    case ErrorKind::Interpolation: return "interpolation error";
    case ErrorKind::Precondition: return "precondition error";
    case ErrorKind::Chart: return "chart error";
    case ErrorKind::Construction: return "construction error";
    case ErrorKind::Certification: return "certification error";
    case ErrorKind::Budget: return "budget violation";
    case ErrorKind::BudgetExceeded: return "budget-exceeded error";
    case ErrorKind::Gluing: return "gluing error";
    case ErrorKind::Input: return "input error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Carries the offending numbers so callers can report them.
class BudgetViolation : public Error {
 public:
  BudgetViolation(double achieved, double budget, const std::string& what)
      : Error(ErrorKind::Budget, what), achieved(achieved), budget(budget) {}
  double achieved;
  double budget;
};

class CertificationFailure : public Error {
 public:
  CertificationFailure(std::string check, double residual, const std::string& what)
      : Error(ErrorKind::Certification, what), check(std::move(check)), residual(residual) {}
  std::string check;
  double residual;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& what) { throw Error(k, what); }

}  // namespace folia
