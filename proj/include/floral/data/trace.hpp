#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "floral/errors.hpp"

namespace floral::data {

// Finite multivariate discrete-time signal: `steps` rows by `channels`
// columns, row-major. Row t is the signal value at time step start_time + t.
class Trace {
 public:
  Trace() = default;

  Trace(std::size_t steps, std::size_t channels, double fill = 0.0)
      : steps_(steps), channels_(channels), values_(steps * channels, fill) {}

  static Trace from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw InputError("trace needs at least one row");
    Trace trace(rows.size(), rows.front().size());
    for (std::size_t t = 0; t < rows.size(); ++t) {
      if (rows[t].size() != trace.channels_)
        throw InputError("trace rows have inconsistent channel counts");
      for (std::size_t c = 0; c < trace.channels_; ++c) trace.at(t, c) = rows[t][c];
    }
    return trace;
  }

  // Univariate convenience.
  static Trace from_column(const std::vector<double>& column) {
    if (column.empty()) throw InputError("trace needs at least one row");
    Trace trace(column.size(), 1);
    trace.values_ = column;
    return trace;
  }

  double at(std::size_t t, std::size_t c) const { return values_[t * channels_ + c]; }
  double& at(std::size_t t, std::size_t c) { return values_[t * channels_ + c]; }

  std::span<const double> row(std::size_t t) const {
    return {values_.data() + t * channels_, channels_};
  }

  std::size_t steps() const { return steps_; }
  std::size_t channels() const { return channels_; }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  void require_finite() const {
    if (steps_ == 0) throw InputError("trace needs at least one row");
    for (double v : values_)
      if (!std::isfinite(v)) throw InputError("trace contains a non-finite value");
  }

  int start_time = 0;

 private:
  std::size_t steps_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> values_;
};

}  // namespace floral::data
