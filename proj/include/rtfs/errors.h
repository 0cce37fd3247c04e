#pragma once

#include <stdexcept>
#include <string>

namespace rtfs {

// Error taxonomy used across the library. The CLI maps these onto its
// stable exit codes: io_error/format_error/shape_error -> 3,
// numeric_error -> 4, CLI usage problems -> 2.

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct shape_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rtfs
