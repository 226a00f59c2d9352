#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <variant>

#include "affe/lattice.hpp"
#include "affe/syntax.hpp"

namespace affe {

// ---------------------------------------------------------------------------
// Substitutions: finite maps from type variables to types and kind variables
// to kinds. Idempotent on their domain after normalization.

struct Subst {
  std::unordered_map<int, TypePtr> tvars;
  std::unordered_map<int, Kind> kvars;

  Kind resolve(Kind k) const;          // follow kind-variable chains
  TypePtr resolve_head(TypePtr t) const;  // follow type-variable chains at the head
  TypePtr apply(const TypePtr& t) const;  // deep rewrite
  Kind apply_kind(Kind k) const { return resolve(k); }
  Constraint apply(const Constraint& c) const;
  TypeScheme apply(const TypeScheme& s) const;  // quantified vars must be out of domain
  void compress();  // make entries fully resolved (idempotent)

  bool has(int tvar) const { return tvars.count(tvar) != 0; }
  bool has_kvar(int kvar) const { return kvars.count(kvar) != 0; }
};

// Merge two substitutions produced on disjoint branches of inference.
// Overlapping entries must agree (they do by construction: inference threads
// one substitution through).
Subst subst_merge(const Subst& a, const Subst& b);

// ---------------------------------------------------------------------------
// Normalization

struct Unsatisfiable {
  std::string reason;
};

struct NormalizeResult {
  Constraint solved;  // KindLeq atoms only, acyclic, no extremum edges
  Subst subst;
};

using NormalizeOutcome = std::variant<NormalizeResult, Unsatisfiable>;

// Steps (1)-(9): Herbrand unification of the type atoms (emitting kind atoms
// for arrow/borrow tags, arrows contravariant in their domain, constructor
// applications invariant), lattice saturation, satisfiability, SCC
// unification, transitive closure, existential elimination, transitive
// reduction, extremum removal.
NormalizeOutcome normalize(const Constraint& c, const Subst& psi, FreshSource& fresh);

// True iff `goal` holds in every lattice valuation satisfying the solved
// form `c` (graph saturation; agrees with the brute-force oracle).
bool entails(const Constraint& c, const KindLeq& goal);
bool entails_all(const Constraint& c, const Constraint& goal);

// Satisfiability of a solved form plus extra atoms, without rewriting.
bool satisfiable(const Constraint& c);

// Kind variables occurring only covariantly in the scheme body are replaced
// by their lower bounds, contravariant ones by their upper bounds; unused
// quantifiers dropped. Result is entailment-equivalent to the input. The
// applied substitution is reported through `applied` when given (callers
// rewrite dependent annotations with it).
TypeScheme simplify_variance(const TypeScheme& s, FreshSource& fresh,
                             Subst* applied = nullptr);

// Free variables (post-substitution views are the caller's business).
void free_kvars_type(const TypePtr& t, std::vector<int>& out);
void free_tvars_type(const TypePtr& t, std::vector<int>& out);
void free_vars_constraint(const Constraint& c, std::vector<int>& kv, std::vector<int>& tv);
void free_vars_scheme(const TypeScheme& s, std::vector<int>& kv, std::vector<int>& tv);

// Renders the saturated constraint graph in DOT format, for debugging.
std::string constraint_graph_dot(const Constraint& c);

}  // namespace affe
