#include "floral/stl/eval.hpp"

#include <algorithm>
#include <limits>

namespace floral::stl {

namespace {

int last_step(const data::Trace& trace) { return static_cast<int>(trace.steps()) - 1; }

void check_time(const data::Trace& trace, int t) {
  if (t < 0 || t > last_step(trace)) throw EvalError("evaluation step outside the trace");
}

double predicate_value(const Formula& f, const data::Trace& trace, int t) {
  if (f.channel() >= static_cast<int>(trace.channels()))
    throw SchemaError("predicate channel outside the trace");
  return trace.at(static_cast<std::size_t>(t), static_cast<std::size_t>(f.channel()));
}

bool predicate_holds(const Formula& f, double value) {
  switch (f.comparator()) {
    case Comparator::Ge: return value >= f.threshold();
    case Comparator::Le: return value <= f.threshold();
    case Comparator::Gt: return value > f.threshold();
    case Comparator::Lt: return value < f.threshold();
  }
  return false;
}

// Margin g(x) - alpha; mirrored for upper bounds. Strict comparators use the
// same margin (the distinction is measure-zero).
double predicate_margin(const Formula& f, double value) {
  switch (f.comparator()) {
    case Comparator::Ge:
    case Comparator::Gt:
      return value - f.threshold();
    case Comparator::Le:
    case Comparator::Lt:
      return f.threshold() - value;
  }
  return 0.0;
}

// Clips [t+lo, t+hi] to the trace. Empty result -> EvalError.
std::pair<int, int> clipped_window(const data::Trace& trace, int t, const Interval& window) {
  const int lo = t + window.lo;
  const int hi = std::min(t + window.hi, last_step(trace));
  if (lo > hi) throw EvalError("temporal window clips to nothing at this step");
  return {lo, hi};
}

bool eval_bool(const Formula& f, const data::Trace& trace, int t) {
  switch (f.kind()) {
    case NodeKind::Predicate:
      return predicate_holds(f, predicate_value(f, trace, t));
    case NodeKind::Not:
      return !eval_bool(*f.left(), trace, t);
    case NodeKind::And:
      return eval_bool(*f.left(), trace, t) && eval_bool(*f.right(), trace, t);
    case NodeKind::Or:
      return eval_bool(*f.left(), trace, t) || eval_bool(*f.right(), trace, t);
    case NodeKind::Implies:
      return !eval_bool(*f.left(), trace, t) || eval_bool(*f.right(), trace, t);
    case NodeKind::Always: {
      auto [lo, hi] = clipped_window(trace, t, f.interval());
      for (int s = lo; s <= hi; ++s)
        if (!eval_bool(*f.left(), trace, s)) return false;
      return true;
    }
    case NodeKind::Eventually: {
      auto [lo, hi] = clipped_window(trace, t, f.interval());
      for (int s = lo; s <= hi; ++s)
        if (eval_bool(*f.left(), trace, s)) return true;
      return false;
    }
    case NodeKind::Until: {
      // Witness s in [t+lo, t+hi] for the right side, left side on [t, s].
      auto [lo, hi] = clipped_window(trace, t, f.interval());
      for (int s = lo; s <= hi; ++s) {
        if (!eval_bool(*f.right(), trace, s)) continue;
        bool held = true;
        for (int u = t; u <= s && held; ++u) held = eval_bool(*f.left(), trace, u);
        if (held) return true;
      }
      return false;
    }
  }
  return false;
}

double eval_rho(const Formula& f, const data::Trace& trace, int t) {
  switch (f.kind()) {
    case NodeKind::Predicate:
      return predicate_margin(f, predicate_value(f, trace, t));
    case NodeKind::Not:
      return -eval_rho(*f.left(), trace, t);
    case NodeKind::And:
      return std::min(eval_rho(*f.left(), trace, t), eval_rho(*f.right(), trace, t));
    case NodeKind::Or:
      return std::max(eval_rho(*f.left(), trace, t), eval_rho(*f.right(), trace, t));
    case NodeKind::Implies:
      return std::max(-eval_rho(*f.left(), trace, t), eval_rho(*f.right(), trace, t));
    case NodeKind::Always: {
      auto [lo, hi] = clipped_window(trace, t, f.interval());
      double acc = eval_rho(*f.left(), trace, lo);
      for (int s = lo + 1; s <= hi; ++s) acc = std::min(acc, eval_rho(*f.left(), trace, s));
      return acc;
    }
    case NodeKind::Eventually: {
      auto [lo, hi] = clipped_window(trace, t, f.interval());
      double acc = eval_rho(*f.left(), trace, lo);
      for (int s = lo + 1; s <= hi; ++s) acc = std::max(acc, eval_rho(*f.left(), trace, s));
      return acc;
    }
    case NodeKind::Until: {
      auto [lo, hi] = clipped_window(trace, t, f.interval());
      double best = -std::numeric_limits<double>::infinity();
      double left_prefix = std::numeric_limits<double>::infinity();
      int prefix_end = t - 1;
      for (int s = lo; s <= hi; ++s) {
        while (prefix_end < s) {
          ++prefix_end;
          left_prefix = std::min(left_prefix, eval_rho(*f.left(), trace, prefix_end));
        }
        best = std::max(best, std::min(eval_rho(*f.right(), trace, s), left_prefix));
      }
      return best;
    }
  }
  return 0.0;
}

}  // namespace

bool eval_qualitative(const FormulaPtr& formula, const data::Trace& trace, int t) {
  if (!formula) throw SchemaError("null formula");
  trace.require_finite();
  check_time(trace, t);
  return eval_bool(*formula, trace, t);
}

double eval_robustness(const FormulaPtr& formula, const data::Trace& trace, int t) {
  if (!formula) throw SchemaError("null formula");
  trace.require_finite();
  check_time(trace, t);
  return eval_rho(*formula, trace, t);
}

std::vector<bool> satisfaction_vector(const FormulaPtr& formula, const data::Trace& trace) {
  std::vector<bool> result(trace.steps());
  for (std::size_t t = 0; t < trace.steps(); ++t)
    result[t] = eval_qualitative(formula, trace, static_cast<int>(t));
  return result;
}

}  // namespace floral::stl
