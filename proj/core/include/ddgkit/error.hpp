#pragma once

#include <stdexcept>
#include <string>

namespace ddgkit {

// Error categories map 1:1 onto CLI exit codes, see tools/ddgkit.
struct IngestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ddgkit
