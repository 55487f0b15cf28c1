#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "floral/errors.hpp"

namespace floral::stl {

enum class Comparator { Ge, Le, Gt, Lt };

const char* comparator_symbol(Comparator cmp);

// Closed integer step range [lo, hi], both ends inclusive. Half-open source
// notation is normalized to this form by the parser.
struct Interval {
  int lo = 0;
  int hi = 0;
  bool operator==(const Interval&) const = default;
};

enum class NodeKind { Predicate, Not, And, Or, Implies, Always, Eventually, Until };

class Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

// Immutable STL syntax node. Predicates compare one trace channel against a
// constant threshold; temporal operators carry a closed step interval.
class Formula {
 public:
  NodeKind kind() const { return kind_; }

  int channel() const { return channel_; }
  Comparator comparator() const { return comparator_; }
  double threshold() const { return threshold_; }

  const FormulaPtr& left() const { return left_; }
  const FormulaPtr& right() const { return right_; }
  const Interval& interval() const { return interval_; }

  static FormulaPtr predicate(int channel, Comparator cmp, double threshold);
  static FormulaPtr negation(FormulaPtr operand);
  static FormulaPtr conjunction(FormulaPtr lhs, FormulaPtr rhs);
  static FormulaPtr disjunction(FormulaPtr lhs, FormulaPtr rhs);
  static FormulaPtr implication(FormulaPtr lhs, FormulaPtr rhs);
  static FormulaPtr always(Interval window, FormulaPtr operand);
  static FormulaPtr eventually(Interval window, FormulaPtr operand);
  static FormulaPtr until(Interval window, FormulaPtr lhs, FormulaPtr rhs);

 private:
  Formula() = default;

  static FormulaPtr build(NodeKind kind, int channel, Comparator cmp, double threshold,
                          FormulaPtr left, FormulaPtr right, Interval window);

  NodeKind kind_ = NodeKind::Predicate;
  int channel_ = 0;
  Comparator comparator_ = Comparator::Ge;
  double threshold_ = 0.0;
  FormulaPtr left_;
  FormulaPtr right_;
  Interval interval_;
};

// Shorthand builders.
FormulaPtr pred_ge(int channel, double threshold);
FormulaPtr pred_le(int channel, double threshold);
FormulaPtr pred_gt(int channel, double threshold);
FormulaPtr pred_lt(int channel, double threshold);

// Left fold of And over one or more formulas.
FormulaPtr conjoin(std::span<const FormulaPtr> parts);

bool structurally_equal(const FormulaPtr& a, const FormulaPtr& b);

// Largest future offset the formula can inspect from its evaluation step.
int formula_horizon(const FormulaPtr& formula);

// Highest referenced channel index + 1.
int formula_channel_count(const FormulaPtr& formula);

}  // namespace floral::stl
