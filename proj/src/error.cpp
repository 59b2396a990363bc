#include "flowfed/error.hpp"

#include <sstream>

namespace flowfed {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::Validation: return "ValidationError";
    case ErrorCode::Schema: return "SchemaError";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::DuplicateLink: return "DuplicateLink";
    case ErrorCode::InvalidCount: return "InvalidCount";
    case ErrorCode::NoPath: return "NoPath";
    case ErrorCode::StalledSimulation: return "StalledSimulation";
    case ErrorCode::TraceFormat: return "TraceFormatError";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::InvalidArgs: return "InvalidArgs";
    case ErrorCode::NumericalDivergence: return "NumericalDivergence";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::Bind: return "BindError";
  }
  return "Unknown";
}

std::string format_violations(const std::vector<Violation>& violations) {
  std::ostringstream out;
  out << violations.size() << " violation(s)";
  for (const auto& v : violations) out << "\n  " << v.path << ": " << v.message;
  return out.str();
}

ParseError::ParseError(std::string file, std::int64_t line, std::string key,
                       const std::string& detail)
    : Error(ErrorCode::Parse,
            file + ":" + std::to_string(line) +
                (key.empty() ? "" : " [" + key + "]") + ": " + detail),
      file_(std::move(file)),
      line_(line),
      key_(std::move(key)) {}

DisconnectedGraphError::DisconnectedGraphError(
    std::vector<std::string> unreachable)
    : Error(ErrorCode::DisconnectedGraph,
            [&] {
              std::string msg = "topology is disconnected; unreachable:";
              for (const auto& n : unreachable) msg += " " + n;
              return msg;
            }()),
      unreachable_(std::move(unreachable)) {}

}  // namespace flowfed
