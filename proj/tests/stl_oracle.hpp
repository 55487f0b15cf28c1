#pragma once

// Test-only brute-force STL semantics, written independently of the library
// evaluator: absolute-step scans with explicit membership checks instead of
// clipped-window recursion. Used as the reference for the oracle-equivalence
// suites. Keep this file free of floral/stl/eval.hpp.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "floral/data/trace.hpp"
#include "floral/stl/formula.hpp"
#include "floral/util/rng.hpp"

namespace floral::testing {

using stl::Comparator;
using stl::Formula;
using stl::FormulaPtr;
using stl::Interval;
using stl::NodeKind;

inline bool oracle_pred(const FormulaPtr& f, double v) {
  switch (f->comparator()) {
    case Comparator::Ge: return v >= f->threshold();
    case Comparator::Le: return v <= f->threshold();
    case Comparator::Gt: return v > f->threshold();
    case Comparator::Lt: return v < f->threshold();
  }
  return false;
}

inline double oracle_margin(const FormulaPtr& f, double v) {
  if (f->comparator() == Comparator::Ge || f->comparator() == Comparator::Gt)
    return v - f->threshold();
  return f->threshold() - v;
}

// `in_window(s)` below means s lies in [t+lo, t+hi] intersected with the trace.
inline bool oracle_bool(const FormulaPtr& f, const data::Trace& x, int t) {
  const int T = static_cast<int>(x.steps());
  switch (f->kind()) {
    case NodeKind::Predicate:
      return oracle_pred(f, x.at(t, f->channel()));
    case NodeKind::Not:
      return !oracle_bool(f->left(), x, t);
    case NodeKind::And:
      return oracle_bool(f->left(), x, t) && oracle_bool(f->right(), x, t);
    case NodeKind::Or:
      return oracle_bool(f->left(), x, t) || oracle_bool(f->right(), x, t);
    case NodeKind::Implies:
      return !oracle_bool(f->left(), x, t) || oracle_bool(f->right(), x, t);
    case NodeKind::Always: {
      bool all = true;
      bool any_step = false;
      for (int s = 0; s < T; ++s) {
        if (s < t + f->interval().lo || s > t + f->interval().hi) continue;
        any_step = true;
        all = all && oracle_bool(f->left(), x, s);
      }
      if (!any_step) throw EvalError("oracle: empty window");
      return all;
    }
    case NodeKind::Eventually: {
      bool any = false;
      bool any_step = false;
      for (int s = 0; s < T; ++s) {
        if (s < t + f->interval().lo || s > t + f->interval().hi) continue;
        any_step = true;
        any = any || oracle_bool(f->left(), x, s);
      }
      if (!any_step) throw EvalError("oracle: empty window");
      return any;
    }
    case NodeKind::Until: {
      bool any_step = false;
      for (int s = 0; s < T; ++s) {
        if (s < t + f->interval().lo || s > t + f->interval().hi) continue;
        any_step = true;
        if (!oracle_bool(f->right(), x, s)) continue;
        bool prefix = true;
        for (int u = t; u <= s; ++u) prefix = prefix && oracle_bool(f->left(), x, u);
        if (prefix) return true;
      }
      if (!any_step) throw EvalError("oracle: empty window");
      return false;
    }
  }
  return false;
}

inline double oracle_rho(const FormulaPtr& f, const data::Trace& x, int t) {
  const int T = static_cast<int>(x.steps());
  const double inf = std::numeric_limits<double>::infinity();
  switch (f->kind()) {
    case NodeKind::Predicate:
      return oracle_margin(f, x.at(t, f->channel()));
    case NodeKind::Not:
      return -oracle_rho(f->left(), x, t);
    case NodeKind::And:
      return std::min(oracle_rho(f->left(), x, t), oracle_rho(f->right(), x, t));
    case NodeKind::Or:
      return std::max(oracle_rho(f->left(), x, t), oracle_rho(f->right(), x, t));
    case NodeKind::Implies:
      return std::max(-oracle_rho(f->left(), x, t), oracle_rho(f->right(), x, t));
    case NodeKind::Always: {
      double acc = inf;
      bool any = false;
      for (int s = 0; s < T; ++s) {
        if (s < t + f->interval().lo || s > t + f->interval().hi) continue;
        any = true;
        acc = std::min(acc, oracle_rho(f->left(), x, s));
      }
      if (!any) throw EvalError("oracle: empty window");
      return acc;
    }
    case NodeKind::Eventually: {
      double acc = -inf;
      bool any = false;
      for (int s = 0; s < T; ++s) {
        if (s < t + f->interval().lo || s > t + f->interval().hi) continue;
        any = true;
        acc = std::max(acc, oracle_rho(f->left(), x, s));
      }
      if (!any) throw EvalError("oracle: empty window");
      return acc;
    }
    case NodeKind::Until: {
      double best = -inf;
      bool any = false;
      for (int s = 0; s < T; ++s) {
        if (s < t + f->interval().lo || s > t + f->interval().hi) continue;
        any = true;
        double prefix = inf;
        for (int u = t; u <= s; ++u) prefix = std::min(prefix, oracle_rho(f->left(), x, u));
        best = std::max(best, std::min(oracle_rho(f->right(), x, s), prefix));
      }
      if (!any) throw EvalError("oracle: empty window");
      return best;
    }
  }
  return 0.0;
}

struct RandomFormulaOptions {
  int max_depth = 4;
  int max_interval = 8;
  int channels = 3;
  int budget = 15;          // total future steps the formula may inspect
  // Keep the formula DNF-normalizable: negation only over predicates and no
  // implication (its expansion negates the left side).
  bool dnf_safe = false;
};

// Random formula whose lookahead stays within `budget`, so evaluation at
// t = 0 on a trace with budget+1 steps never clips to an empty window.
inline FormulaPtr random_formula(util::Rng& rng, const RandomFormulaOptions& opt, int depth = 0,
                                 int budget = -1) {
  if (budget < 0) budget = opt.budget;
  const auto pred = [&] {
    const int channel = static_cast<int>(rng.below(opt.channels));
    const auto cmp = static_cast<Comparator>(rng.below(4));
    return Formula::predicate(channel, cmp, rng.uniform(-2.0, 2.0));
  };
  if (depth >= opt.max_depth) return pred();

  const auto sub_interval = [&]() {
    const int hi_cap = std::min(opt.max_interval, budget);
    const int lo = static_cast<int>(rng.below(hi_cap + 1));
    const int hi = lo + static_cast<int>(rng.below(hi_cap - lo + 1));
    return Interval{lo, hi};
  };

  switch (rng.below(8)) {
    case 0:
      return pred();
    case 1: {
      if (opt.dnf_safe) return Formula::negation(pred());
      return Formula::negation(random_formula(rng, opt, depth + 1, budget));
    }
    case 2:
      return Formula::conjunction(random_formula(rng, opt, depth + 1, budget),
                                  random_formula(rng, opt, depth + 1, budget));
    case 3:
      return Formula::disjunction(random_formula(rng, opt, depth + 1, budget),
                                  random_formula(rng, opt, depth + 1, budget));
    case 4: {
      FormulaPtr lhs = random_formula(rng, opt, depth + 1, budget);
      FormulaPtr rhs = random_formula(rng, opt, depth + 1, budget);
      if (opt.dnf_safe) return Formula::disjunction(std::move(lhs), std::move(rhs));
      return Formula::implication(std::move(lhs), std::move(rhs));
    }
    case 5: {
      Interval w = sub_interval();
      return Formula::always(w, random_formula(rng, opt, depth + 1, budget - w.hi));
    }
    case 6: {
      Interval w = sub_interval();
      return Formula::eventually(w, random_formula(rng, opt, depth + 1, budget - w.hi));
    }
    default: {
      Interval w = sub_interval();
      return Formula::until(w, random_formula(rng, opt, depth + 1, budget - w.hi),
                            random_formula(rng, opt, depth + 1, budget - w.hi));
    }
  }
}

inline data::Trace random_trace(util::Rng& rng, int steps, int channels) {
  data::Trace trace(steps, channels);
  for (int t = 0; t < steps; ++t)
    for (int c = 0; c < channels; ++c) trace.at(t, c) = rng.uniform(-2.0, 2.0);
  return trace;
}

}  // namespace floral::testing
