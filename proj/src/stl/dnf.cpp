#include "floral/stl/dnf.hpp"

namespace floral::stl {

namespace {

bool is_literal(const FormulaPtr& f) {
  switch (f->kind()) {
    case NodeKind::Predicate:
    case NodeKind::Always:
    case NodeKind::Eventually:
    case NodeKind::Until:
      return true;
    case NodeKind::Not:
      return f->left()->kind() == NodeKind::Predicate;
    default:
      return false;
  }
}

FormulaPtr negate(const FormulaPtr& f);

std::vector<DnfClause> clauses(const FormulaPtr& f) {
  if (is_literal(f)) return {{f}};
  switch (f->kind()) {
    case NodeKind::Or: {
      auto lhs = clauses(f->left());
      auto rhs = clauses(f->right());
      lhs.insert(lhs.end(), rhs.begin(), rhs.end());
      return lhs;
    }
    case NodeKind::And: {
      // Distribute: cross product of the two clause lists.
      auto lhs = clauses(f->left());
      auto rhs = clauses(f->right());
      std::vector<DnfClause> out;
      out.reserve(lhs.size() * rhs.size());
      for (const auto& a : lhs)
        for (const auto& b : rhs) {
          DnfClause merged = a;
          merged.insert(merged.end(), b.begin(), b.end());
          out.push_back(std::move(merged));
        }
      return out;
    }
    case NodeKind::Implies:
      return clauses(Formula::disjunction(negate(f->left()), f->right()));
    case NodeKind::Not:
      return clauses(negate(f->left()));
    default:
      throw UnsupportedFormError("formula cannot be normalized to DNF");
  }
}

FormulaPtr negate(const FormulaPtr& f) {
  switch (f->kind()) {
    case NodeKind::Predicate:
      return Formula::negation(f);
    case NodeKind::Not:
      return f->left();
    case NodeKind::And:
      return Formula::disjunction(negate(f->left()), negate(f->right()));
    case NodeKind::Or:
      return Formula::conjunction(negate(f->left()), negate(f->right()));
    case NodeKind::Implies:
      return Formula::conjunction(f->left(), negate(f->right()));
    case NodeKind::Always:
    case NodeKind::Eventually:
    case NodeKind::Until:
      throw UnsupportedFormError("negation over a temporal operator; supply negation-normal input");
  }
  throw UnsupportedFormError("unknown node");
}

}  // namespace

std::vector<DnfClause> to_dnf_clauses(const FormulaPtr& formula) {
  if (!formula) throw SchemaError("null formula");
  return clauses(formula);
}

}  // namespace floral::stl
