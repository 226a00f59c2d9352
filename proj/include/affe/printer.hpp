#pragma once

#include <string>

#include "affe/syntax.hpp"

namespace affe {

// Kind rendering: un/aff/lin with level suffix (level 0 elided, infinity as
// `inf`); variables as 'k, 'k_1, ... in id order.
std::string print_kind(const Kind& k);

// Raw type rendering with machine names ('t3, 'k7); for diagnostics.
std::string print_type_raw(const TypePtr& t);

// Deterministic scheme rendering matching the surface conventions:
// quantifier prefix elided, variables renamed to 'a,'b,../'k,'k_1,..,
// nontrivial constraints and kind bounds as a `(...) => ` prefix, `->`
// sugar for unrestricted arrows, borrow kinds elided when unconstrained.
std::string print_scheme(const TypeScheme& s);

// Surface expression rendering; parses back to the same AST.
std::string print_surface(const SExprPtr& e);

// Elaborated expression rendering, for traces and debugging.
std::string print_elab(const EExprPtr& e);

// True iff the schemes are equal up to renaming of quantified variables and
// constraint-set equality up to mutual entailment.
bool alpha_equiv(const TypeScheme& a, const TypeScheme& b);

}  // namespace affe
