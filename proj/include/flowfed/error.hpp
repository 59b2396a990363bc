#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace flowfed {

enum class ErrorCode {
  MissingFile,
  Parse,
  Validation,
  Schema,
  DisconnectedGraph,
  DuplicateLink,
  InvalidCount,
  NoPath,
  StalledSimulation,
  TraceFormat,
  NonMonotonicTime,
  InvalidArgs,
  NumericalDivergence,
  ShapeMismatch,
  Io,
  Bind,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// A single violated invariant. `path` names the offending key(s), e.g.
/// "fl.n_clients vs topology client hosts".
struct Violation {
  std::string path;
  std::string message;
  bool operator==(const Violation&) const = default;
};

std::string format_violations(const std::vector<Violation>& violations);

class MissingFileError : public Error {
 public:
  explicit MissingFileError(std::string file)
      : Error(ErrorCode::MissingFile, "missing config file: " + file),
        file_(std::move(file)) {}
  const std::string& file() const noexcept { return file_; }

 private:
  std::string file_;
};

class ParseError : public Error {
 public:
  ParseError(std::string file, std::int64_t line, std::string key,
             const std::string& detail);
  const std::string& file() const noexcept { return file_; }
  std::int64_t line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

 private:
  std::string file_;
  std::int64_t line_;
  std::string key_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations)
      : Error(ErrorCode::Validation, format_violations(violations)),
        violations_(std::move(violations)) {}
  const std::vector<Violation>& violations() const noexcept {
    return violations_;
  }

 private:
  std::vector<Violation> violations_;
};

class DisconnectedGraphError : public Error {
 public:
  explicit DisconnectedGraphError(std::vector<std::string> unreachable);
  const std::vector<std::string>& unreachable() const noexcept {
    return unreachable_;
  }

 private:
  std::vector<std::string> unreachable_;
};

class StalledSimulationError : public Error {
 public:
  explicit StalledSimulationError(std::uint64_t flow_id)
      : Error(ErrorCode::StalledSimulation,
              "simulation stalled: elastic flow " + std::to_string(flow_id) +
                  " has zero rate"),
        flow_id_(flow_id) {}
  std::uint64_t flow_id() const noexcept { return flow_id_; }

 private:
  std::uint64_t flow_id_;
};

class TraceFormatError : public Error {
 public:
  TraceFormatError(ErrorCode code, std::size_t line, const std::string& detail)
      : Error(code, "trace line " + std::to_string(line) + ": " + detail),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NumericalDivergenceError : public Error {
 public:
  NumericalDivergenceError(int epoch, std::size_t batch)
      : Error(ErrorCode::NumericalDivergence,
              "loss became non-finite at epoch " + std::to_string(epoch) +
                  ", batch " + std::to_string(batch)),
        epoch_(epoch),
        batch_(batch) {}
  int epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  int epoch_;
  std::size_t batch_;
};

}  // namespace flowfed
