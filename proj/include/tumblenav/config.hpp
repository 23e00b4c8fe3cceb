#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "tumblenav/simulation.hpp"

namespace tumblenav {

/// Scenario file error. line() is 1-based, 0 when no single line is at fault.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

/// Parses `key = value` lines onto the default scenario. '#' starts a
/// comment; vectors are whitespace or comma separated. The result is
/// validated. Unknown keys, malformed values and repeated keys are errors,
/// except occlusion_s which may repeat (one window per line, or "none").
Scenario parse_config(std::istream& in, const std::string& source = "<config>");

Scenario load_config(const std::filesystem::path& path);

/// Writes every key so that parse_config(format_config(s)) reproduces s.
std::string format_config(const Scenario& scenario);

}  // namespace tumblenav
