#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "affe/constraint.hpp"
#include "affe/syntax.hpp"

namespace affe {

// ---------------------------------------------------------------------------
// Usage environments: what inference discovered about how variables and
// borrows were actually used.

struct UsageEntry {
  enum class Mode { Regular, Suspended, Borrow };
  Mode mode;
  std::string name;
  TypeScheme scheme;  // Regular: the binding's scheme; Suspended/Borrow: mono type
  Level level = 0;    // Suspended
  BorrowSpec spec = BorrowSpec::Shared;  // Suspended / Borrow
  Kind kind;          // Borrow
};

struct UsageEnv {
  std::vector<UsageEntry> entries;
  const UsageEntry* find(const std::string& x) const;
  void remove(const std::string& x);
};

// ---------------------------------------------------------------------------
// Errors

enum class ErrorClass {
  Unbound,
  Linearity,     // weakening or duplication violated
  RegionEscape,  // the lin_{n-1} region constraint failed
  BorrowError,   // borrow/suspension row mismatch
  KindMismatch,  // any other unsatisfiable constraint
  TypeMismatch,  // unification failure
  Internal,
};

struct InferError {
  ErrorClass cls;
  std::string message;
  SourceLoc loc;
};

struct InferFailure : std::runtime_error {
  InferError error;
  explicit InferFailure(InferError e) : std::runtime_error(e.message), error(std::move(e)) {}
};

// ---------------------------------------------------------------------------
// Inference context: one per pipeline run. The substitution and the solved
// constraint are threaded through the whole run; fresh names come from the
// injected counter.

struct InferCtx {
  FreshSource& fresh;
  const TypeEnv& globals;           // regular (and primitive) bindings + tycons
  Subst psi;                        // current most general unifier
  Constraint solved;                // current solved form (kind atoms)
  std::map<int, Kind> tvar_kinds;   // kind of every type variable in play
  int next_node = 0;

  explicit InferCtx(FreshSource& f, const TypeEnv& g) : fresh(f), globals(g) {}

  int fresh_tvar(Kind k) {
    int id = fresh.fresh_tvar();
    tvar_kinds[id] = k;
    return id;
  }
  Kind fresh_kvar() { return Kind::mk_var(fresh.fresh_kvar()); }
};

struct InferenceResult {
  UsageEnv usage;
  Constraint solved;   // psi-stable: psi(C) = C
  Subst psi;           // psi(tau) = tau
  TypePtr type;
  EExprPtr elab;
  TypeScheme scheme;   // generalized (top-level use)
};

// ---------------------------------------------------------------------------
// Operations

// Kind inference, syntax-directed over the type.
// Returns the constraint atoms to normalize plus the kind.
std::pair<Constraint, Kind> infer_kind(InferCtx& ctx, const TypeEnv& env, const TypePtr& t);

// Instantiates a scheme with fresh variables; returns the instantiated
// constraint and body plus the chosen arguments (for elaboration).
struct Instance {
  Constraint ctr;
  TypePtr body;
  std::vector<Kind> kind_args;
  std::vector<TypePtr> type_args;
};
Instance instantiate(InferCtx& ctx, const TypeScheme& s);

// Merge of two usage environments, emitting the splitting constraints and
// the per-variable row tags (the elaboration evidence).
struct SplitResult {
  Constraint ctr;
  UsageEnv merged;
  Splitting tags;
};
SplitResult split_infer(InferCtx& ctx, const UsageEnv& left, const UsageEnv& right);

// Region side of inference: replaces the borrow binding for x by a suspended
// binding, emitting the borrow-kind bracket constraints.
struct RegionResult {
  Constraint ctr;
  UsageEnv usage;
};
RegionResult region_infer(InferCtx& ctx, const std::string& x, BorrowSpec spec, Level n,
                          const UsageEnv& body_usage);

// Weaken: empty constraint when x was consumed (present as a Regular usage);
// otherwise the binding must be droppable.
Constraint weaken(InferCtx& ctx, const TypeEnv& env, const std::string& x,
                  const TypeScheme& scheme, const UsageEnv& usage);

// Conjunction over the environment entries of `entry-kind <= k`.
Constraint env_leq_constraint(InferCtx& ctx, const TypeEnv& env, const UsageEnv& usage, Kind k);

// Generalization over (fv(tau) ∪ fv(C)) \ fv(env); the residual constraint
// projects the quantified variables out and renormalizes the ambient form.
TypeScheme generalize(InferCtx& ctx, const TypeEnv& env, const TypePtr& type);

// Full inference of an annotated expression under `env` (regular and type
// bindings only). Throws InferFailure.
struct InferOut {
  UsageEnv usage;
  TypePtr type;
  std::shared_ptr<ElabExpr> elab;
};
InferOut infer(InferCtx& ctx, const TypeEnv& env, const SExprPtr& e);

// Applies the final substitution to every annotation in the tree and stamps
// node ids; returns the node count.
int finalize_elab(InferCtx& ctx, const std::shared_ptr<ElabExpr>& e);

// The schemes of the four resource primitives (fresh per call).
TypeScheme builtin_prim_scheme(InferCtx& ctx, ElabExpr::Tag prim);

}  // namespace affe
