#ifndef SARC_ERRORS_HPP_
#define SARC_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace sarc {

enum class ErrorKind {
  MissingColumn,
  EmptyText,
  BadLabel,
  BadRecord,
  DegenerateSplit,
  VocabOverflow,
  AllMasked,
  ShapeMismatch,
  BadCategory,
  NonFiniteLoss,
  TaskMismatch,
  LengthMismatch,
  EmptyEnsemble,
  EmptyInput,
  BadConfig,
  IoError,
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::MissingColumn: return "MissingColumn";
    case ErrorKind::EmptyText: return "EmptyText";
    case ErrorKind::BadLabel: return "BadLabel";
    case ErrorKind::BadRecord: return "BadRecord";
    case ErrorKind::DegenerateSplit: return "DegenerateSplit";
    case ErrorKind::VocabOverflow: return "VocabOverflow";
    case ErrorKind::AllMasked: return "AllMasked";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::BadCategory: return "BadCategory";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::TaskMismatch: return "TaskMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

class SarcError : public std::runtime_error {
 public:
  SarcError(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace sarc

#endif  // SARC_ERRORS_HPP_
