#pragma once

#include <vector>

#include "floral/data/trace.hpp"
#include "floral/stl/formula.hpp"

namespace floral::stl {

// Boolean satisfaction (x, t) |= phi. Temporal windows reaching past the end
// of the trace are clipped to [t+lo, T-1]; a window that clips to nothing is
// an EvalError rather than vacuous truth.
bool eval_qualitative(const FormulaPtr& formula, const data::Trace& trace, int t);

// Real-valued robustness margin rho(phi, x, t) under the min/max semantics.
// Positive iff satisfied whenever the margin is nonzero. Same clipping rules
// as eval_qualitative.
double eval_robustness(const FormulaPtr& formula, const data::Trace& trace, int t);

// eval_qualitative at every step of the trace.
std::vector<bool> satisfaction_vector(const FormulaPtr& formula, const data::Trace& trace);

}  // namespace floral::stl
