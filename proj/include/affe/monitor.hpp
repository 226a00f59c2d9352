#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "affe/eval.hpp"
#include "affe/syntax.hpp"

namespace affe {

// ---------------------------------------------------------------------------
// Environment partition: the type-directed split of a value environment used
// by the soundness conditions. Classifications are recorded per elaborated
// node by the internal-language checker.

enum class PartClass : uint8_t { Active, Mut, Immut, SuspAff, SuspUn };

struct NodeEnvClass {
  std::map<std::string, PartClass> vars;
};

using MonitorTable = std::vector<NodeEnvClass>;  // indexed by node_id

// ---------------------------------------------------------------------------
// Metatheory definitions, executable

// Multiset of raw locations under a result / environment range.
std::map<Loc, uint64_t> rawloc(const Result& r);
std::map<Loc, uint64_t> rawloc_env(const VEnv& env);
std::map<Loc, uint64_t> rawloc_perm(const Permission& p);

// Reachable addresses as a path-counted multiset; counts saturate at
// |store|+1, which stands in for "infinite".
struct ReachSet {
  std::map<Address, uint64_t> counts;
  uint64_t cap = 0;

  bool contains(const Address& a) const { return counts.count(a) != 0; }
  uint64_t count_raw(Loc l) const;
  std::set<Loc> raw_locs() const;
};

ReachSet reach(const Store& store, const VEnv& env);
ReachSet reach_result(const Store& store, const Result& r);

// All suffix-stripped addresses of the permission's members.
std::set<Address> perm_closure(const Permission& p);

// ---------------------------------------------------------------------------
// The monitor

struct Violation {
  std::string condition;  // e.g. "A6", "R10"
  std::string detail;
};

struct EnvPartition {
  VEnv active, mut, immut, susp_aff, susp_un;
};

EnvPartition partition_env(const VEnv& env, const NodeEnvClass& cls);

// Asserts the soundness theorem's entry conditions (A4-A7) and, around an Ok
// outcome, the exit conditions (R4-R10). Used as an eval hook.
class Monitor : public EvalHooks {
 public:
  explicit Monitor(const MonitorTable& table) : table_(table) {}

  void on_enter(const Store& store, const Permission& perm, const VEnv& env,
                const ElabExpr& node) override;
  void on_exit(const Store& pre_store, const Permission& pre_perm, const VEnv& env,
               const ElabExpr& node, const Store& post_store, const Permission& post_perm,
               const Result& result) override;
  bool wants_snapshots() const override { return true; }

  const std::vector<Violation>& violations() const { return violations_; }
  std::string report() const;

 private:
  const NodeEnvClass* classes_for(const ElabExpr& node) const;
  void flag(const std::string& cond, const std::string& detail);

  const MonitorTable& table_;
  std::vector<Violation> violations_;
};

}  // namespace affe
