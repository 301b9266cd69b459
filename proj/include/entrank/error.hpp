#pragma once

#include <stdexcept>
#include <string>

namespace entrank {

// Error categories map onto the CLI exit codes.
enum class ErrorKind {
  kConfig,   // exit 1
  kData,     // exit 2
  kBackend,  // exit 3
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string module, const std::string& message);

  ErrorKind kind() const { return kind_; }
  const std::string& module() const { return module_; }

 private:
  ErrorKind kind_;
  std::string module_;
};

int exit_code(ErrorKind kind);

[[noreturn]] void config_error(const std::string& module, const std::string& message);
[[noreturn]] void data_error(const std::string& module, const std::string& message);
[[noreturn]] void backend_error(const std::string& module, const std::string& message);

}  // namespace entrank
