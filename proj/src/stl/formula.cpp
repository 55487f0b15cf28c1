#include "floral/stl/formula.hpp"

#include <algorithm>
#include <cmath>

namespace floral::stl {

const char* comparator_symbol(Comparator cmp) {
  switch (cmp) {
    case Comparator::Ge: return ">=";
    case Comparator::Le: return "<=";
    case Comparator::Gt: return ">";
    case Comparator::Lt: return "<";
  }
  return "?";
}

namespace {

void check_interval(const Interval& window) {
  if (window.lo < 0 || window.lo > window.hi)
    throw SchemaError("temporal interval must satisfy 0 <= lo <= hi");
}

FormulaPtr require(FormulaPtr f) {
  if (!f) throw SchemaError("null subformula");
  return f;
}

}  // namespace

FormulaPtr Formula::build(NodeKind kind, int channel, Comparator cmp, double threshold,
                          FormulaPtr left, FormulaPtr right, Interval window) {
  auto node = std::shared_ptr<Formula>(new Formula());
  node->kind_ = kind;
  node->channel_ = channel;
  node->comparator_ = cmp;
  node->threshold_ = threshold;
  node->left_ = std::move(left);
  node->right_ = std::move(right);
  node->interval_ = window;
  return node;
}

FormulaPtr Formula::predicate(int channel, Comparator cmp, double threshold) {
  if (channel < 0) throw SchemaError("predicate channel must be nonnegative");
  if (std::isnan(threshold)) throw SchemaError("predicate threshold is NaN");
  return build(NodeKind::Predicate, channel, cmp, threshold, nullptr, nullptr, {});
}

FormulaPtr Formula::negation(FormulaPtr operand) {
  return build(NodeKind::Not, 0, Comparator::Ge, 0.0, require(std::move(operand)), nullptr, {});
}

FormulaPtr Formula::conjunction(FormulaPtr lhs, FormulaPtr rhs) {
  return build(NodeKind::And, 0, Comparator::Ge, 0.0, require(std::move(lhs)),
               require(std::move(rhs)), {});
}

FormulaPtr Formula::disjunction(FormulaPtr lhs, FormulaPtr rhs) {
  return build(NodeKind::Or, 0, Comparator::Ge, 0.0, require(std::move(lhs)),
               require(std::move(rhs)), {});
}

FormulaPtr Formula::implication(FormulaPtr lhs, FormulaPtr rhs) {
  return build(NodeKind::Implies, 0, Comparator::Ge, 0.0, require(std::move(lhs)),
               require(std::move(rhs)), {});
}

FormulaPtr Formula::always(Interval window, FormulaPtr operand) {
  check_interval(window);
  return build(NodeKind::Always, 0, Comparator::Ge, 0.0, require(std::move(operand)), nullptr,
               window);
}

FormulaPtr Formula::eventually(Interval window, FormulaPtr operand) {
  check_interval(window);
  return build(NodeKind::Eventually, 0, Comparator::Ge, 0.0, require(std::move(operand)), nullptr,
               window);
}

FormulaPtr Formula::until(Interval window, FormulaPtr lhs, FormulaPtr rhs) {
  check_interval(window);
  return build(NodeKind::Until, 0, Comparator::Ge, 0.0, require(std::move(lhs)),
               require(std::move(rhs)), window);
}

FormulaPtr pred_ge(int channel, double threshold) {
  return Formula::predicate(channel, Comparator::Ge, threshold);
}
FormulaPtr pred_le(int channel, double threshold) {
  return Formula::predicate(channel, Comparator::Le, threshold);
}
FormulaPtr pred_gt(int channel, double threshold) {
  return Formula::predicate(channel, Comparator::Gt, threshold);
}
FormulaPtr pred_lt(int channel, double threshold) {
  return Formula::predicate(channel, Comparator::Lt, threshold);
}

FormulaPtr conjoin(std::span<const FormulaPtr> parts) {
  if (parts.empty()) throw SchemaError("conjoin needs at least one formula");
  FormulaPtr acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = Formula::conjunction(acc, parts[i]);
  return acc;
}

bool structurally_equal(const FormulaPtr& a, const FormulaPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind() != b->kind()) return false;
  switch (a->kind()) {
    case NodeKind::Predicate:
      return a->channel() == b->channel() && a->comparator() == b->comparator() &&
             a->threshold() == b->threshold();
    case NodeKind::Not:
      return structurally_equal(a->left(), b->left());
    case NodeKind::And:
    case NodeKind::Or:
    case NodeKind::Implies:
      return structurally_equal(a->left(), b->left()) &&
             structurally_equal(a->right(), b->right());
    case NodeKind::Always:
    case NodeKind::Eventually:
      return a->interval() == b->interval() && structurally_equal(a->left(), b->left());
    case NodeKind::Until:
      return a->interval() == b->interval() && structurally_equal(a->left(), b->left()) &&
             structurally_equal(a->right(), b->right());
  }
  return false;
}

int formula_horizon(const FormulaPtr& formula) {
  switch (formula->kind()) {
    case NodeKind::Predicate:
      return 0;
    case NodeKind::Not:
      return formula_horizon(formula->left());
    case NodeKind::And:
    case NodeKind::Or:
    case NodeKind::Implies:
      return std::max(formula_horizon(formula->left()), formula_horizon(formula->right()));
    case NodeKind::Always:
    case NodeKind::Eventually:
      return formula->interval().hi + formula_horizon(formula->left());
    case NodeKind::Until:
      return formula->interval().hi +
             std::max(formula_horizon(formula->left()), formula_horizon(formula->right()));
  }
  return 0;
}

int formula_channel_count(const FormulaPtr& formula) {
  switch (formula->kind()) {
    case NodeKind::Predicate:
      return formula->channel() + 1;
    case NodeKind::Not:
    case NodeKind::Always:
    case NodeKind::Eventually:
      return formula_channel_count(formula->left());
    default:
      return std::max(formula_channel_count(formula->left()),
                      formula_channel_count(formula->right()));
  }
}

}  // namespace floral::stl
