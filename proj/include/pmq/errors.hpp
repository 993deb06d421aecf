#pragma once

#include <stdexcept>
#include <string>

namespace pmq {

// Failure categories; the CLI maps each to its own exit code.
enum class ErrorKind : int {
  parse = 2,
  config = 3,
  unstable = 4,
  infeasible_budget = 5,
  budget_too_loose = 6,
  infeasible = 7,
  no_closed_form = 8,
  io = 9,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::parse: return "ParseError";
    case ErrorKind::config: return "ConfigError";
    case ErrorKind::unstable: return "UnstableSystem";
    case ErrorKind::infeasible_budget: return "InfeasibleBudget";
    case ErrorKind::budget_too_loose: return "BudgetTooLoose";
    case ErrorKind::infeasible: return "Infeasible";
    case ErrorKind::no_closed_form: return "NoClosedForm";
    case ErrorKind::io: return "IoError";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

struct ParseError : Error {
  explicit ParseError(const std::string& w) : Error(ErrorKind::parse, w) {}
};
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorKind::config, w) {}
};
struct UnstableSystem : Error {
  explicit UnstableSystem(const std::string& w) : Error(ErrorKind::unstable, w) {}
};
struct InfeasibleBudget : Error {
  explicit InfeasibleBudget(const std::string& w) : Error(ErrorKind::infeasible_budget, w) {}
};
struct BudgetTooLoose : Error {
  explicit BudgetTooLoose(const std::string& w) : Error(ErrorKind::budget_too_loose, w) {}
};
struct Infeasible : Error {
  explicit Infeasible(const std::string& w) : Error(ErrorKind::infeasible, w) {}
};
struct NoClosedForm : Error {
  explicit NoClosedForm(const std::string& w) : Error(ErrorKind::no_closed_form, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::io, w) {}
};

}  // namespace pmq
