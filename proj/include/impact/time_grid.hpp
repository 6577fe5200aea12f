#pragma once

#include <vector>

#include "impact/errors.hpp"

namespace impact {

// Partition 0 = t_0 < ... < t_n = T of the trading horizon.
class TimeGrid {
 public:
  static TimeGrid uniform(double horizon, int n_steps) {
    if (horizon <= 0.0) throw ConfigError("time grid: horizon must be positive");
    if (n_steps < 1) throw ConfigError("time grid: need at least one step");
    std::vector<double> nodes(n_steps + 1);
    for (int i = 0; i <= n_steps; ++i)
      nodes[i] = horizon * static_cast<double>(i) / n_steps;
    nodes.front() = 0.0;
    nodes.back() = horizon;
    return TimeGrid(std::move(nodes));
  }

  static TimeGrid from_nodes(std::vector<double> nodes) {
    return TimeGrid(std::move(nodes));
  }

  // Splits every step in two; shares the coarse nodes exactly.
  TimeGrid refined() const {
    std::vector<double> nodes;
    nodes.reserve(2 * n_steps() + 1);
    for (int i = 0; i < n_steps(); ++i) {
      nodes.push_back(nodes_[i]);
      nodes.push_back(0.5 * (nodes_[i] + nodes_[i + 1]));
    }
    nodes.push_back(nodes_.back());
    return TimeGrid(std::move(nodes));
  }

  double horizon() const { return nodes_.back(); }
  int n_steps() const { return static_cast<int>(nodes_.size()) - 1; }
  double node(int i) const { return nodes_[i]; }
  double dt(int i) const { return nodes_[i + 1] - nodes_[i]; }
  const std::vector<double>& nodes() const { return nodes_; }

 private:
  explicit TimeGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 2) throw ConfigError("time grid: need >= 2 nodes");
    if (nodes_.front() != 0.0) throw ConfigError("time grid: first node must be 0");
    for (std::size_t i = 1; i < nodes_.size(); ++i)
      if (nodes_[i] <= nodes_[i - 1])
        throw ConfigError("time grid: nodes must be strictly increasing");
  }

  std::vector<double> nodes_;
};

}  // namespace impact
