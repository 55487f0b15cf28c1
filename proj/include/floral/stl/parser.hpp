#pragma once

#include <string>
#include <string_view>

#include "floral/stl/formula.hpp"

namespace floral::stl {

// Textual STL grammar used in config files and on the command line:
//
//   G[0,5)(x1 >= 0.2 and x1 <= 2.5)
//   F[1,3](x2 > 0.5) or not (x1 < 0)
//   (x1 >= 0) U[0,4] (x2 >= 1)
//
// G/F/U are always/eventually/until; `and`, `or`, `not`, `->` the Boolean
// connectives; `xK` names channel K-1 (bare `x` is channel 0). Interval ends
// may be open or closed; they are normalized to closed integer step ranges
// at parse time ("[0,5)" becomes [0,4]). Thresholds accept `inf`/`-inf`.
// Throws ParseError with the offending character position.
FormulaPtr parse_formula(std::string_view text);

// Canonical form: closed intervals, 1-based channel names, fully
// parenthesized binary operators. parse_formula(print_formula(f)) is
// structurally equal to f.
std::string print_formula(const FormulaPtr& formula);

}  // namespace floral::stl
