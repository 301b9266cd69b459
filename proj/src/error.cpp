#include "entrank/error.hpp"

namespace entrank {

Error::Error(ErrorKind kind, std::string module, const std::string& message)
    : std::runtime_error("[" + module + "] " + message),
      kind_(kind),
      module_(std::move(module)) {}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
      return 1;
    case ErrorKind::kData:
      return 2;
    case ErrorKind::kBackend:
      return 3;
  }
  return 2;
}

void config_error(const std::string& module, const std::string& message) {
  throw Error(ErrorKind::kConfig, module, message);
}

void data_error(const std::string& module, const std::string& message) {
  throw Error(ErrorKind::kData, module, message);
}

void backend_error(const std::string& module, const std::string& message) {
  throw Error(ErrorKind::kBackend, module, message);
}

}  // namespace entrank
