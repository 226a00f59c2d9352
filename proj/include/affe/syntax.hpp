#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace affe {

// ---------------------------------------------------------------------------
// Kinds

enum class Quality : uint8_t { Un = 0, Aff = 1, Lin = 2 };

// Region nesting level; kLevelInf is the distinguished infinity.
using Level = uint32_t;
inline constexpr Level kLevelInf = UINT32_MAX;
inline constexpr Level kLevelMax = INT32_MAX;  // nesting deeper than 2^31 is rejected

struct KConst {
  Quality quality;
  Level level;
  friend bool operator==(const KConst&, const KConst&) = default;
  friend auto operator<=>(const KConst&, const KConst&) = default;  // storage order only
};

inline constexpr KConst kBottom{Quality::Un, 0};
inline constexpr KConst kTop{Quality::Lin, kLevelInf};

// A kind is a variable or a constant. Variables are run-local integer ids.
struct Kind {
  int var = -1;  // >= 0 when a variable
  KConst k{Quality::Un, 0};

  static Kind mk_var(int id) { return Kind{id, {}}; }
  static Kind mk_const(KConst c) { return Kind{-1, c}; }
  static Kind mk_const(Quality q, Level n) { return Kind{-1, {q, n}}; }
  bool is_var() const { return var >= 0; }
  friend bool operator==(const Kind&, const Kind&) = default;
};

// ---------------------------------------------------------------------------
// Types

enum class BorrowSpec : uint8_t { Shared = 0, Exclusive = 1 };

// Shared < Exclusive in the compatibility order used by suspended splitting.
inline bool spec_leq(BorrowSpec a, BorrowSpec b) {
  return static_cast<uint8_t>(a) <= static_cast<uint8_t>(b);
}

struct Type;
using TypePtr = std::shared_ptr<const Type>;

struct Type {
  enum class Tag { Var, App, Pair, Arrow, Borrow };
  Tag tag;
  int var = -1;               // Var
  std::string con;            // App: constructor name
  std::vector<TypePtr> args;  // App
  TypePtr left, right;        // Pair(l,r) | Arrow(dom,cod) | Borrow(inner=left)
  Kind kind;                  // Arrow and Borrow tags
  BorrowSpec spec = BorrowSpec::Shared;  // Borrow

  static TypePtr mk_var(int id);
  static TypePtr mk_app(std::string con, std::vector<TypePtr> args);
  static TypePtr mk_pair(TypePtr l, TypePtr r);
  static TypePtr mk_arrow(TypePtr dom, Kind k, TypePtr cod);
  static TypePtr mk_borrow(BorrowSpec spec, Kind k, TypePtr inner);
};

bool type_equal(const TypePtr& a, const TypePtr& b);

// ---------------------------------------------------------------------------
// Constraints

struct KindLeq {
  Kind lhs, rhs;
  friend bool operator==(const KindLeq&, const KindLeq&) = default;
};

struct TypeLeq {
  TypePtr lhs, rhs;
};

// Conjunction of atoms. Projections are kept flattened: the existential lists
// name variables bound by enclosing Project binders.
struct Constraint {
  std::vector<KindLeq> kinds;
  std::vector<TypeLeq> types;
  std::vector<int> exists_kvars;
  std::vector<int> exists_tvars;
  bool falsum = false;

  bool trivial() const {
    return kinds.empty() && types.empty() && !falsum;
  }
  void add_kind(Kind a, Kind b) { kinds.push_back({a, b}); }
  void add_type(TypePtr a, TypePtr b) { types.push_back({std::move(a), std::move(b)}); }
  void conjoin(const Constraint& other);
};

Constraint conjoin(Constraint a, const Constraint& b);

// ---------------------------------------------------------------------------
// Schemes

struct TypeScheme {
  std::vector<int> kvars;                      // quantified kind variables
  std::vector<std::pair<int, Kind>> tvars;     // quantified type variables with kind bound
  Constraint ctr;                              // solved-form kind atoms
  TypePtr body;

  bool mono() const { return kvars.empty() && tvars.empty(); }
  static TypeScheme of_type(TypePtr t) { return TypeScheme{{}, {}, {}, std::move(t)}; }
};

struct KindScheme {
  std::vector<int> kvars;
  Constraint ctr;
  std::vector<Kind> args;  // argument kinds; arrow form exists only here
  Kind result;
};

// ---------------------------------------------------------------------------
// Environments

struct Binding {
  enum class Mode { Regular, Suspended, Borrow, TypeVar, TyCon };
  Mode mode;
  std::string name;   // subject: variable or constructor name (TypeVar uses tvar id)
  TypeScheme scheme;  // Regular / Suspended / Borrow
  Level level = 0;    // Suspended: level of the target region
  BorrowSpec spec = BorrowSpec::Shared;  // Suspended / Borrow
  Kind kind;          // Borrow kind; TypeVar kind
  int tvar = -1;      // TypeVar id
  KindScheme kscheme; // TyCon
  bool primitive = false;  // Regular: declared primitive constant

  static Binding regular(std::string x, TypeScheme s, bool prim = false) {
    Binding b{Mode::Regular, std::move(x), std::move(s)};
    b.primitive = prim;
    return b;
  }
  static Binding suspended(std::string x, TypeScheme s, Level n, BorrowSpec sp) {
    Binding b{Mode::Suspended, std::move(x), std::move(s)};
    b.level = n;
    b.spec = sp;
    return b;
  }
  static Binding borrow(std::string x, BorrowSpec sp, Kind k, TypeScheme s) {
    Binding b{Mode::Borrow, std::move(x), std::move(s)};
    b.spec = sp;
    b.kind = k;
    return b;
  }
  static Binding type_var(int id, Kind k) {
    Binding b{Mode::TypeVar, {}, {}};
    b.tvar = id;
    b.kind = k;
    return b;
  }
  static Binding ty_con(std::string name, KindScheme ks) {
    Binding b{Mode::TyCon, std::move(name), {}};
    b.kscheme = std::move(ks);
    return b;
  }
};

// Ordered sequence of bindings with unique subjects.
struct TypeEnv {
  std::vector<Binding> bindings;

  // Throws std::invalid_argument on a duplicate subject.
  void bind(Binding b);
  const Binding* lookup(const std::string& x) const;
  const Binding* lookup_tvar(int id) const;
  const Binding* lookup_tycon(const std::string& name) const;
  void remove(const std::string& x);
};

// ---------------------------------------------------------------------------
// Constants and source positions

struct ConstVal;
using ConstPtr = std::shared_ptr<const ConstVal>;

struct ConstVal {
  enum class Tag { Unit, Int, String, Prim, PrimResult };
  Tag tag = Tag::Unit;
  int64_t int_val = 0;
  std::string str_val;   // String payload; Prim name
  // Prim partial application arguments live in the evaluator's Result type;
  // at the syntax level a Prim constant is just its name.
  friend bool operator==(const ConstVal& a, const ConstVal& b) {
    return a.tag == b.tag && a.int_val == b.int_val && a.str_val == b.str_val;
  }
};

struct SourceLoc {
  int line = 0;
  int column = 0;
};

// ---------------------------------------------------------------------------
// Surface expressions

struct SurfaceExpr;
using SExprPtr = std::shared_ptr<const SurfaceExpr>;

// Match specification: nullopt = id, otherwise the borrow spec.
using MatchSpec = std::optional<BorrowSpec>;

struct SurfaceExpr {
  enum class Tag {
    Const, Var, App, Lam, Let, Pair, Match, Region, Borrow, ReBorrow,
    Create, Observe, Update, Destroy
  };
  Tag tag;
  ConstVal cval;          // Const
  std::string var;        // Var name | Lam param | Let binder | Borrow target | Region variable
  std::string var2;       // Match second binder
  MatchSpec mspec;        // Match
  BorrowSpec bspec = BorrowSpec::Shared;  // Borrow / ReBorrow / Region
  bool marker = false;    // Region: explicit {| |} marker (pre-annotation)
  bool has_var = false;   // Region: carries (var, spec) after annotation
  Level level = 0;        // Region nesting level (post-annotation)
  SExprPtr a, b;          // children
  SourceLoc loc;

  static SExprPtr mk(Tag t);
};

SExprPtr s_const(ConstVal c, SourceLoc loc = {});
SExprPtr s_var(std::string x, SourceLoc loc = {});
SExprPtr s_app(SExprPtr f, SExprPtr a, SourceLoc loc = {});
SExprPtr s_lam(std::string x, SExprPtr body, SourceLoc loc = {});
SExprPtr s_let(std::string x, SExprPtr e1, SExprPtr e2, SourceLoc loc = {});
SExprPtr s_pair(SExprPtr l, SExprPtr r, SourceLoc loc = {});
SExprPtr s_match(MatchSpec m, std::string x, std::string y, SExprPtr scrut, SExprPtr body,
                 SourceLoc loc = {});
SExprPtr s_region_marker(SExprPtr body, SourceLoc loc = {});
SExprPtr s_region(std::string x, BorrowSpec sp, Level n, SExprPtr body, SourceLoc loc = {});
SExprPtr s_borrow(BorrowSpec sp, std::string x, SourceLoc loc = {});
SExprPtr s_reborrow(BorrowSpec sp, std::string x, SourceLoc loc = {});
SExprPtr s_prim(SurfaceExpr::Tag which, SourceLoc loc = {});

bool surface_equal(const SExprPtr& a, const SExprPtr& b);

// ---------------------------------------------------------------------------
// Elaborated (internal-language) expressions

enum class SplitTag : uint8_t { Both, Borrow, Left, Right, Susp, SuspB, SuspS };

// Per-binding replay of one splitting-table row for each variable in scope
// of a multi-subterm node.
struct Splitting {
  std::vector<std::pair<std::string, SplitTag>> tags;
  const SplitTag* find(const std::string& x) const {
    for (auto& [n, t] : tags)
      if (n == x) return &t;
    return nullptr;
  }
};

struct ElabExpr;
using EExprPtr = std::shared_ptr<const ElabExpr>;

struct ElabExpr {
  enum class Tag {
    Const, Var, VarInst, Lam, App, Pair, Match, Let, PolyLet, Region,
    Borrow, ReBorrow, Create, Observe, Update, Destroy
  };
  Tag tag;
  ConstVal cval;                   // Const
  std::string var;                 // Var/VarInst name | Lam param | binders | Region var
  std::string var2;                // Match second binder | PolyLet param
  std::vector<Kind> kind_args;     // VarInst
  std::vector<TypePtr> type_args;  // VarInst
  Kind kind;                       // Lam / Pair kind tag; PolyLet lambda tag
  Splitting split;                 // App / Pair / Match / Let / PolyLet
  MatchSpec mspec;                 // Match
  BorrowSpec bspec = BorrowSpec::Shared;  // Borrow / ReBorrow / Region
  Level level = 0;                 // Region
  TypeScheme scheme;               // PolyLet
  std::shared_ptr<ElabExpr> a, b;  // children (Lam body = a; PolyLet fun body = a, cont = b)
  int node_id = -1;                // instrumentation side-table index
  TypePtr type;                    // assigned type (after final substitution)

  static std::shared_ptr<ElabExpr> mk(Tag t);
};

// Structural check of the splitting-tag applicability invariant: tags
// attached to multi-subterm nodes must make sense for the bindings they
// distribute (validated against the evaluator's vsplit in eval.cpp and
// against the checker in check.cpp; this pass checks tree-local shape).
bool validate_splitting_shape(const EExprPtr& e, std::string* err);

// ---------------------------------------------------------------------------
// Fresh-variable source (one per pipeline; passed explicitly)

struct FreshSource {
  int next_tvar = 0;
  int next_kvar = 0;
  int fresh_tvar() { return next_tvar++; }
  int fresh_kvar() { return next_kvar++; }
};

}  // namespace affe
