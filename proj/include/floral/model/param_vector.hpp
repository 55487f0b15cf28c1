#pragma once

#include <span>
#include <string>
#include <vector>

#include "floral/errors.hpp"

namespace floral::model {

// Flat parameter vector tagged with its architecture. Arithmetic between two
// vectors requires matching tags; this is the unit all aggregation math
// operates on.
struct ParamVector {
  std::string tag;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }

  static void check_compatible(const ParamVector& a, const ParamVector& b) {
    if (a.tag != b.tag)
      throw ContractError("parameter vectors carry different architecture tags: '" + a.tag +
                          "' vs '" + b.tag + "'");
    if (a.values.size() != b.values.size())
      throw ContractError("parameter vectors differ in dimension");
  }

  ParamVector& operator+=(const ParamVector& other) {
    check_compatible(*this, other);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += other.values[i];
    return *this;
  }

  ParamVector& operator-=(const ParamVector& other) {
    check_compatible(*this, other);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= other.values[i];
    return *this;
  }

  ParamVector& operator*=(double s) {
    for (double& v : values) v *= s;
    return *this;
  }

  // this += s * other
  void axpy(double s, const ParamVector& other) {
    check_compatible(*this, other);
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += s * other.values[i];
  }

  double l2_norm() const;
};

ParamVector operator+(ParamVector a, const ParamVector& b);
ParamVector operator-(ParamVector a, const ParamVector& b);
ParamVector operator*(double s, ParamVector a);

double l2_distance(const ParamVector& a, const ParamVector& b);
double dot(const ParamVector& a, const ParamVector& b);

// Array-text checkpoint with an architecture-tag header; values round-trip
// exactly.
void save_checkpoint(const std::string& path, const ParamVector& params);
ParamVector load_checkpoint(const std::string& path);

}  // namespace floral::model
