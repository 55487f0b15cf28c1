#pragma once

#include <vector>

#include "floral/stl/formula.hpp"

namespace floral::stl {

// Conjunction of literals. A literal is a predicate, a negated predicate, or
// a temporal subformula treated as atomic.
using DnfClause = std::vector<FormulaPtr>;

// Rewrites the propositional skeleton of `formula` into disjunctive normal
// form: the OR over the returned clauses of the AND over their literals is
// logically equivalent to the input. Negation applied to anything but a
// predicate is pushed inward first; negation over a temporal operator is an
// UnsupportedFormError (callers must supply negation-normal input).
std::vector<DnfClause> to_dnf_clauses(const FormulaPtr& formula);

}  // namespace floral::stl
