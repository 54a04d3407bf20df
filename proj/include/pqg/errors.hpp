#ifndef PQG_ERRORS_HPP
#define PQG_ERRORS_HPP

// Exception taxonomy mirrored by the CLI exit codes: configuration problems
// (bad keys, unstable profiles, malformed inputs) exit 2, numerical failures
// (singular operators, non-converged iterations, unstable columns) exit 3.

#include <stdexcept>

namespace pqg {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct solver_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pqg

#endif  // PQG_ERRORS_HPP
