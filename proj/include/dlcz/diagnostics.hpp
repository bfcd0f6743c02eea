#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dlcz {

/// Bad input: out-of-range parameters, malformed configuration or data.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A well-posed request whose evaluation failed numerically
/// (vanishing denominators, truncation cap reached, non-convergence).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using WarningHandler = std::function<void(std::string_view)>;

/// Installs a process-wide warning sink and returns the previous one.
/// The default sink writes "dlcz: warning: ..." to stderr.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(std::string_view message);

/// Collects warnings for the lifetime of the object, restoring the previous
/// handler on destruction.
class WarningCapture {
 public:
  WarningCapture();
  ~WarningCapture();
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  [[nodiscard]] std::vector<std::string> messages() const;
  [[nodiscard]] bool contains(std::string_view needle) const;

 private:
  struct State;
  std::unique_ptr<State> state_;
  WarningHandler previous_;
};

}  // namespace dlcz
