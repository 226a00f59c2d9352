#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "affe/syntax.hpp"

namespace affe {

// ---------------------------------------------------------------------------
// Runtime objects

using Loc = uint32_t;

// A raw location dressed with a stack of borrow modifiers, outermost first.
// Wellformed iff every Shared modifier precedes every Exclusive one.
struct Address {
  Loc loc = 0;
  std::vector<BorrowSpec> mods;

  bool raw() const { return mods.empty(); }
  friend bool operator==(const Address&, const Address&) = default;
  friend auto operator<=>(const Address&, const Address&) = default;
};

bool address_wellformed(const Address& a);

// Pushes a modifier; empty result when the extension breaks wellformedness
// (an exclusive borrow of a shared borrow).
std::optional<Address> extend_borrow(const Address& a, BorrowSpec spec);

struct Value;
using Result = std::shared_ptr<const Value>;

// Results are addresses or constants; primitive constants may hold partially
// applied arguments (which are traced like any captured value).
struct Value {
  enum class Tag { Addr, Unit, Int, String, Prim, PrimResult };
  Tag tag = Tag::Unit;
  Address addr;         // Addr
  int64_t int_val = 0;  // Int
  std::string str_val;  // String payload; Prim name
  std::vector<Result> prim_args;  // Prim partial application
  int prim_arity = 0;             // Prim

  static Result mk_unit();
  static Result mk_int(int64_t v);
  static Result mk_string(std::string s);
  static Result mk_addr(Address a);
  static Result mk_prim(std::string name, int arity);
  static Result mk_prim_result(std::string name);
};

std::string show_result(const Result& r);

// Value environment.
struct VEnv {
  std::map<std::string, Result> vars;
  const Result* find(const std::string& x) const {
    auto it = vars.find(x);
    return it != vars.end() ? &it->second : nullptr;
  }
};

// Store cells.
struct Storable {
  enum class Tag { PolyClosure, Closure, Pair, Resource, Freed };
  Tag tag = Tag::Freed;
  VEnv env;                     // closures
  std::vector<int> kvars;      // PolyClosure: quantified kind variables
  std::vector<int> tvars;      // PolyClosure: quantified type variables
  Constraint ctr;              // PolyClosure
  Kind kind;                   // closures and pairs: the kind tag
  std::string param;           // closures
  std::shared_ptr<ElabExpr> body;  // closures
  Result fst, snd;             // Pair
  Result content;              // Resource
};

// Locations are monotonically increasing; cells are never removed, Freed
// marks release.
struct Store {
  std::vector<Storable> cells;
  bool valid(Loc l) const { return l < cells.size(); }
  const Storable& at(Loc l) const { return cells[l]; }
  Storable& at(Loc l) { return cells[l]; }
  size_t size() const { return cells.size(); }
};

// Allocates an unused location.
Loc salloc(Store& store, Storable w);

// A set of addresses that may be accessed; wellformed by representation
// (at most one address per raw location).
struct Permission {
  std::map<Loc, std::vector<BorrowSpec>> slots;

  bool contains(const Address& a) const {
    auto it = slots.find(a.loc);
    return it != slots.end() && it->second == a.mods;
  }
  bool contains_raw(Loc l) const { return slots.count(l) != 0; }
  void add(const Address& a) { slots[a.loc] = a.mods; }
  void remove(const Address& a) {
    auto it = slots.find(a.loc);
    if (it != slots.end() && it->second == a.mods) slots.erase(it);
  }
  std::vector<Address> addresses() const {
    std::vector<Address> out;
    out.reserve(slots.size());
    for (auto& [l, m] : slots) out.push_back({l, m});
    return out;
  }
  friend bool operator==(const Permission&, const Permission&) = default;
};

// ---------------------------------------------------------------------------
// Outcomes

struct OkOutcome {
  Store store;
  Permission perm;
  Result result;
};

struct Outcome {
  enum class Tag { Ok, TimeOut, Error };
  Tag tag = Tag::TimeOut;
  Store store;        // Ok
  Permission perm;    // Ok
  Result result;      // Ok
  std::string error;  // Error

  static Outcome ok(Store s, Permission p, Result r);
  static Outcome timeout();
  static Outcome mk_error(std::string msg);
  bool is_ok() const { return tag == Tag::Ok; }
};

// Distributes a value environment according to splitting evidence.
// Both/Borrow duplicate, Left/Right move, the suspension rows copy to both
// sides; untagged entries are dropped (their droppability was established
// at their binder).
std::pair<VEnv, VEnv> vsplit(const VEnv& env, const Splitting& split, std::string* err);

// Instrumentation hooks around every eval step.
class EvalHooks {
 public:
  virtual ~EvalHooks() = default;
  virtual void on_enter(const Store&, const Permission&, const VEnv&, const ElabExpr&) {}
  virtual void on_exit(const Store&, const Permission&, const VEnv&, const ElabExpr&,
                       const Store&, const Permission&, const Result&) {}
  virtual bool wants_snapshots() const { return false; }
};

// Line-oriented debug trace sink.
struct TraceSink {
  std::string text;
};

// The fuel-indexed big-step interpreter. Fuel is decremented on every
// recursive call; fuel 0 yields TimeOut.
Outcome eval(Store store, Permission perm, const VEnv& env, uint64_t fuel,
             const std::shared_ptr<ElabExpr>& e, EvalHooks* hooks = nullptr,
             TraceSink* trace = nullptr);

}  // namespace affe
