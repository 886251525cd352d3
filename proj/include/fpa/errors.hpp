#pragma once

#include <stdexcept>
#include <string>

namespace fpa {

/// Invalid scenario or solver parameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Field sampled on the wrong grid.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The mollified density dropped below the floor, so the filtration (and the
/// solution it drives) cannot be continued.
class DensityDegeneracy : public std::runtime_error {
 public:
  DensityDegeneracy(const std::string& where, double min_value, double location,
                    double time = 0.0)
      : std::runtime_error("density degeneracy in " + where + ": min " +
                           std::to_string(min_value) + " at x=" +
                           std::to_string(location)),
        where_(where),
        min_value_(min_value),
        location_(location),
        time_(time) {}

  const std::string& where() const noexcept { return where_; }
  double min_value() const noexcept { return min_value_; }
  double location() const noexcept { return location_; }
  double time() const noexcept { return time_; }

 private:
  std::string where_;
  double min_value_;
  double location_;
  double time_;
};

}  // namespace fpa
