#include "dlcz/diagnostics.hpp"

#include <iostream>
#include <memory>
#include <mutex>

namespace dlcz {

namespace {

std::mutex& handler_mutex() {
  static std::mutex m;
  return m;
}

WarningHandler& handler_slot() {
  static WarningHandler h = [](std::string_view msg) {
    std::cerr << "dlcz: warning: " << msg << '\n';
  };
  return h;
}

}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(handler_mutex());
  WarningHandler previous = std::move(handler_slot());
  handler_slot() = std::move(handler);
  return previous;
}

void warn(std::string_view message) {
  std::lock_guard lock(handler_mutex());
  if (handler_slot()) handler_slot()(message);
}

struct WarningCapture::State {
  mutable std::mutex mutex;
  std::vector<std::string> messages;
};

WarningCapture::WarningCapture() : state_(std::make_unique<State>()) {
  State* s = state_.get();
  previous_ = set_warning_handler([s](std::string_view msg) {
    std::lock_guard lock(s->mutex);
    s->messages.emplace_back(msg);
  });
}

WarningCapture::~WarningCapture() {
  set_warning_handler(std::move(previous_));
}

std::vector<std::string> WarningCapture::messages() const {
  std::lock_guard lock(state_->mutex);
  return state_->messages;
}

bool WarningCapture::contains(std::string_view needle) const {
  std::lock_guard lock(state_->mutex);
  for (const auto& m : state_->messages) {
    if (m.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace dlcz
