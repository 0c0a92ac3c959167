#pragma once

#include <stdexcept>
#include <string>

namespace glio {

// Error taxonomy mirrored by the CLI exit codes:
// usage -> 2, data -> 3, training -> 4, internal -> 1.
enum class ErrorKind { usage, data, training, internal };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_usage(const std::string& msg) { throw Error(ErrorKind::usage, msg); }
[[noreturn]] inline void throw_data(const std::string& msg) { throw Error(ErrorKind::data, msg); }
[[noreturn]] inline void throw_training(const std::string& msg) { throw Error(ErrorKind::training, msg); }
[[noreturn]] inline void throw_internal(const std::string& msg) { throw Error(ErrorKind::internal, msg); }

inline void check_data(bool cond, const std::string& msg) {
  if (!cond) throw_data(msg);
}

}  // namespace glio
