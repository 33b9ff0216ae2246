#pragma once

#include <stdexcept>
#include <string>

namespace parahom {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (epsilon <= 0, empty region, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent configuration; `key` names the offending entry when known.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& what, int line = -1)
      : Error(format(key, what, line)), key_(key), line_(line) {}

  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  static std::string format(const std::string& key, const std::string& what, int line) {
    std::string msg = key.empty() ? what : key + ": " + what;
    if (line >= 0) msg += " (line " + std::to_string(line) + ")";
    return msg;
  }

  std::string key_;
  int line_;
};

/// Coefficient field violates the declared ellipticity constant at a sampled point.
class EllipticityError : public Error {
 public:
  using Error::Error;
};

/// Grid does not resolve the oscillation scale of a rescaled coefficient.
class ResolutionError : public Error {
 public:
  ResolutionError(const std::string& what, double required_h, double required_tau)
      : Error(what), required_h_(required_h), required_tau_(required_tau) {}

  double required_h() const { return required_h_; }
  double required_tau() const { return required_tau_; }

 private:
  double required_h_;
  double required_tau_;
};

/// Linear solve or fixed-point iteration failed to reach its tolerance.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, int iterations, double residual)
      : Error(what + " (iterations " + std::to_string(iterations) + ", residual " +
              std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}

  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

/// Reading or writing an artifact failed; `path` names the file.
class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what) : Error(path + ": " + what), path_(path) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// A computed certificate contradicts a bound that must hold.
class CheckFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace parahom
