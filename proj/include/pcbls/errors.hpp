#pragma once

#include <stdexcept>

namespace pcbls {

/// A file did not match its declared layout (bad magic, wrong length, bad field).
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace pcbls
