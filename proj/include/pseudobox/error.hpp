#pragma once

#include <stdexcept>
#include <string>

namespace pbox {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Out-of-range tunable or inconsistent configuration (exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Missing, unreadable or malformed file (exit code 2). The message names the path.
class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// Violated operation precondition: empty set, zero norm, size mismatch, ...
class DomainError : public Error {
 public:
  using Error::Error;
};

enum class GeometryErrorKind { InvalidDepth, OutOfBounds, BehindCamera };

class GeometryError : public DomainError {
 public:
  GeometryError(GeometryErrorKind kind, const std::string& what)
      : DomainError(what), kind_(kind) {}
  GeometryErrorKind kind() const noexcept { return kind_; }

 private:
  GeometryErrorKind kind_;
};

// A pipeline stage failed (exit code 3).
class PipelineError : public Error {
 public:
  PipelineError(const std::string& stage, const std::string& what)
      : Error(stage + ": " + what), stage_(stage) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace pbox
