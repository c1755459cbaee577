#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "powmfg/errors.hpp"

namespace powmfg {

// Uniform grid on [0, upper] with `points` nodes.
class UniformGrid {
public:
  UniformGrid() = default;
  UniformGrid(double upper, std::size_t points) : upper_(upper), points_(points) {
    detail::require(points >= 2, "a wealth grid needs at least two points");
    detail::require(upper > 0.0 && std::isfinite(upper), "grid upper bound must be positive");
    step_ = upper / static_cast<double>(points - 1);
  }

  std::size_t size() const { return points_; }
  double upper() const { return upper_; }
  double step() const { return step_; }

  // Last node is pinned to `upper` so the grid end is exact.
  double operator[](std::size_t i) const {
    return i + 1 == points_ ? upper_ : static_cast<double>(i) * step_;
  }

  std::vector<double> nodes() const {
    std::vector<double> out(points_);
    for (std::size_t i = 0; i < points_; ++i) out[i] = (*this)[i];
    return out;
  }

  // Bracketing node index and the weight of the upper neighbour, after clamping
  // y into [0, upper].
  struct Bracket {
    std::size_t lower;
    double upper_weight;
  };

  Bracket locate(double y) const {
    if (!(y > 0.0)) return {0, 0.0};
    if (y >= upper_) return {points_ - 1, 0.0};
    const double pos = y / step_;
    auto i = static_cast<std::size_t>(pos);
    if (i >= points_ - 1) return {points_ - 1, 0.0};
    return {i, pos - static_cast<double>(i)};
  }

  // Piecewise-linear interpolation of nodal values, clamped at both ends.
  double interpolate(std::span<const double> values, double y) const {
    const Bracket b = locate(y);
    if (b.upper_weight == 0.0) return values[b.lower];
    return values[b.lower] + b.upper_weight * (values[b.lower + 1] - values[b.lower]);
  }

  // Mass-conserving linear deposition of `mass` at y into `masses`.
  void deposit(std::span<double> masses, double y, double mass) const {
    const Bracket b = locate(y);
    if (b.upper_weight == 0.0) {
      masses[b.lower] += mass;
      return;
    }
    masses[b.lower] += mass * (1.0 - b.upper_weight);
    masses[b.lower + 1] += mass * b.upper_weight;
  }

private:
  double upper_ = 1.0;
  std::size_t points_ = 2;
  double step_ = 1.0;
};

// Dense (time, grid index) table.
class TimeTable {
public:
  TimeTable() = default;
  TimeTable(std::size_t steps, std::size_t points, double fill = 0.0)
      : steps_(steps), points_(points), data_(steps * points, fill) {}

  std::size_t steps() const { return steps_; }
  std::size_t points() const { return points_; }

  double& operator()(std::size_t t, std::size_t i) { return data_[t * points_ + i]; }
  double operator()(std::size_t t, std::size_t i) const { return data_[t * points_ + i]; }

  std::span<double> row(std::size_t t) { return {data_.data() + t * points_, points_}; }
  std::span<const double> row(std::size_t t) const {
    return {data_.data() + t * points_, points_};
  }

  const std::vector<double>& data() const { return data_; }
  bool operator==(const TimeTable&) const = default;

private:
  std::size_t steps_ = 0;
  std::size_t points_ = 0;
  std::vector<double> data_;
};

}  // namespace powmfg
