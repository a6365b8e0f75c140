#pragma once

#include <stdexcept>
#include <string>

namespace softseg {

// Thrown on any precondition violation or unrecoverable operation failure.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace softseg
