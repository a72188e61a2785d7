#pragma once

#include <stdexcept>
#include <string>

namespace dvhpen {

/// Invalid user-supplied parameters (grid sizes, levels, regions, config keys).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string &what) : std::runtime_error(what) {}
};

/// Arrays whose shape does not match the grid or region they are used with.
class DimensionError : public std::logic_error {
public:
  explicit DimensionError(const std::string &what) : std::logic_error(what) {}
};

/// File-system failures; the message carries the offending path.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string &what) : std::runtime_error(what) {}
};

} // namespace dvhpen
