#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bvreach {

enum class ErrorKind {
  Syntax,
  Unsupported,
  DuplicateRegister,
  UnknownLabel,
  WidthMismatch,
  SsaViolation,
  Format,
  Io,
  Internal,
};

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Syntax: return "syntax";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::DuplicateRegister: return "duplicate register";
    case ErrorKind::UnknownLabel: return "unknown label";
    case ErrorKind::WidthMismatch: return "width mismatch";
    case ErrorKind::SsaViolation: return "ssa violation";
    case ErrorKind::Format: return "format";
    case ErrorKind::Io: return "io";
    case ErrorKind::Internal: return "internal";
  }
  return "unknown";
}

// Thrown by parsers and by internal consistency checks. Line and column are
// 1-based; 0 means "no position".
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message, int line = 0, int column = 0)
      : std::runtime_error(format(kind, message, line, column)),
        kind_(kind),
        line_(line),
        column_(column),
        message_(std::move(message)) {}

  ErrorKind kind() const { return kind_; }
  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& message() const { return message_; }

 private:
  static std::string format(ErrorKind kind, const std::string& message, int line, int column) {
    std::string out;
    if (line > 0) {
      out += std::to_string(line);
      if (column > 0) out += ":" + std::to_string(column);
      out += ": ";
    }
    out += std::string(to_string(kind)) + " error: " + message;
    return out;
  }

  ErrorKind kind_;
  int line_;
  int column_;
  std::string message_;
};

}  // namespace bvreach
