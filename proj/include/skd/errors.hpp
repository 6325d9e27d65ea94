#ifndef SKD_ERRORS_HPP
#define SKD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace skd {

// Violated input contract (bad shapes, out-of-range parameters, empty data).
// The CLI maps this to exit code 2.
class precondition_error : public std::invalid_argument {
 public:
  explicit precondition_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Numerical failure that the caller chose to treat as fatal
// (e.g. an initialization decomposition that did not converge).
// The CLI maps this to exit code 3.
class solver_error : public std::runtime_error {
 public:
  explicit solver_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw precondition_error(msg);
}

}  // namespace skd

#endif  // SKD_ERRORS_HPP
