#include "affe/monitor.hpp"

#include <sstream>

#include "affe/constraint.hpp"
#include "affe/eval.hpp"

namespace affe {

namespace {

std::string show_addr(const Address& a) {
  std::string out;
  for (auto m : a.mods) out += (m == BorrowSpec::Shared ? "U." : "A.");
  return out + "l" + std::to_string(a.loc);
}

void add_result_locs(const Result& r, std::map<Loc, uint64_t>& out) {
  if (!r) return;
  if (r->tag == Value::Tag::Addr) out[r->addr.loc]++;
  for (auto& a : r->prim_args) add_result_locs(a, out);
}

// direct addresses of a result (RS without store closure)
void rs_result(const Result& r, std::map<Address, uint64_t>& out) {
  if (!r) return;
  if (r->tag == Value::Tag::Addr) out[r->addr]++;
  for (auto& a : r->prim_args) rs_result(a, out);
}

void rs_env(const VEnv& env, std::map<Address, uint64_t>& out) {
  for (auto& [x, r] : env.vars) {
    (void)x;
    rs_result(r, out);
  }
}

void rs_storable(const Storable& w, std::map<Address, uint64_t>& out) {
  switch (w.tag) {
    case Storable::Tag::PolyClosure:
    case Storable::Tag::Closure:
      rs_env(w.env, out);
      return;
    case Storable::Tag::Pair:
      rs_result(w.fst, out);
      rs_result(w.snd, out);
      return;
    case Storable::Tag::Resource:
      rs_result(w.content, out);
      return;
    case Storable::Tag::Freed:
      return;
  }
}

uint64_t sat_add(uint64_t a, uint64_t b, uint64_t cap) {
  uint64_t s = a + b;
  return s > cap ? cap : s;
}

uint64_t sat_mul(uint64_t a, uint64_t b, uint64_t cap) {
  if (a == 0 || b == 0) return 0;
  if (a > cap / b) return cap;
  uint64_t s = a * b;
  return s > cap ? cap : s;
}

// Least fixed point of the reach equations. Multiplicity is path-counted:
// count(a) = direct(a) + sum over locations l of weight(l) * occ(l, a),
// where weight(l) totals the counts of addresses over l. Counts saturate at
// |store|+1, which stands in for the infinite multiplicity of cycles.
ReachSet reach_from(const Store& store, std::map<Address, uint64_t> base) {
  ReachSet r;
  r.cap = store.size() + 1;
  r.counts = base;
  for (bool changed = true; changed;) {
    changed = false;
    std::map<Loc, uint64_t> weight;
    for (auto& [a, n] : r.counts) weight[a.loc] = sat_add(weight[a.loc], n, r.cap);
    std::map<Address, uint64_t> next = base;
    for (auto& [l, wgt] : weight) {
      if (!store.valid(l)) continue;
      std::map<Address, uint64_t> contrib;
      rs_storable(store.at(l), contrib);
      for (auto& [a, occ] : contrib)
        next[a] = sat_add(next[a], sat_mul(wgt, occ, r.cap), r.cap);
    }
    if (next != r.counts) {
      r.counts = std::move(next);
      changed = true;
    }
  }
  return r;
}

}  // namespace

uint64_t ReachSet::count_raw(Loc l) const {
  uint64_t n = 0;
  for (auto& [a, c] : counts)
    if (a.loc == l) n = sat_add(n, c, cap ? cap : UINT64_MAX);
  return n;
}

std::set<Loc> ReachSet::raw_locs() const {
  std::set<Loc> out;
  for (auto& [a, c] : counts) {
    (void)c;
    out.insert(a.loc);
  }
  return out;
}

std::map<Loc, uint64_t> rawloc(const Result& r) {
  std::map<Loc, uint64_t> out;
  add_result_locs(r, out);
  return out;
}

std::map<Loc, uint64_t> rawloc_env(const VEnv& env) {
  std::map<Loc, uint64_t> out;
  for (auto& [x, r] : env.vars) {
    (void)x;
    add_result_locs(r, out);
  }
  return out;
}

std::map<Loc, uint64_t> rawloc_perm(const Permission& p) {
  std::map<Loc, uint64_t> out;
  for (auto& [l, mods] : p.slots) {
    (void)mods;
    out[l]++;
  }
  return out;
}

ReachSet reach(const Store& store, const VEnv& env) {
  std::map<Address, uint64_t> base;
  rs_env(env, base);
  return reach_from(store, std::move(base));
}

ReachSet reach_result(const Store& store, const Result& r) {
  std::map<Address, uint64_t> base;
  rs_result(r, base);
  return reach_from(store, std::move(base));
}

std::set<Address> perm_closure(const Permission& p) {
  std::set<Address> out;
  for (auto& [l, mods] : p.slots) {
    Address a{l, mods};
    out.insert(a);
    while (!a.mods.empty()) {
      a.mods.erase(a.mods.begin());
      out.insert(a);
    }
  }
  return out;
}

EnvPartition partition_env(const VEnv& env, const NodeEnvClass& cls) {
  EnvPartition p;
  for (auto& [x, r] : env.vars) {
    auto it = cls.vars.find(x);
    PartClass c = it != cls.vars.end() ? it->second : PartClass::Immut;
    switch (c) {
      case PartClass::Active: p.active.vars[x] = r; break;
      case PartClass::Mut: p.mut.vars[x] = r; break;
      case PartClass::Immut: p.immut.vars[x] = r; break;
      case PartClass::SuspAff: p.susp_aff.vars[x] = r; break;
      case PartClass::SuspUn: p.susp_un.vars[x] = r; break;
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// The owned spine: reachability that does not pass through unrestricted
// storables. The exactly-once conditions apply to it.

namespace {

bool storable_unrestricted(const Storable& w) {
  switch (w.tag) {
    case Storable::Tag::Pair:
    case Storable::Tag::Closure:
      return entails({}, {w.kind, Kind::mk_const(Quality::Un, kLevelInf)});
    case Storable::Tag::PolyClosure:
      return entails(w.ctr, {w.kind, Kind::mk_const(Quality::Un, kLevelInf)});
    case Storable::Tag::Resource:
      return false;
    case Storable::Tag::Freed:
      return true;
  }
  return true;
}

std::map<Loc, uint64_t> owned_spine(const Store& store, const VEnv& env) {
  uint64_t cap = store.size() + 1;
  std::map<Address, uint64_t> base;
  rs_env(env, base);
  std::map<Address, uint64_t> counts = base;
  for (bool changed = true; changed;) {
    changed = false;
    std::map<Loc, uint64_t> weight;
    for (auto& [a, n] : counts) weight[a.loc] = sat_add(weight[a.loc], n, cap);
    std::map<Address, uint64_t> next = base;
    for (auto& [l, wgt] : weight) {
      if (!store.valid(l)) continue;
      const Storable& w = store.at(l);
      if (storable_unrestricted(w)) continue;  // ownership stops here
      std::map<Address, uint64_t> contrib;
      rs_storable(w, contrib);
      for (auto& [a, occ] : contrib)
        next[a] = sat_add(next[a], sat_mul(wgt, occ, cap), cap);
    }
    if (next != counts) {
      counts = std::move(next);
      changed = true;
    }
  }
  std::map<Loc, uint64_t> out;
  for (auto& [a, n] : counts) {
    if (store.valid(a.loc) && storable_unrestricted(store.at(a.loc))) continue;
    out[a.loc] = sat_add(out[a.loc], n, cap);
  }
  return out;
}

bool value_equal(const Result& a, const Result& b) {
  if (a == b) return true;
  if (!a || !b || a->tag != b->tag) return false;
  switch (a->tag) {
    case Value::Tag::Unit: return true;
    case Value::Tag::Int: return a->int_val == b->int_val;
    case Value::Tag::String: return a->str_val == b->str_val;
    case Value::Tag::Addr: return a->addr == b->addr;
    case Value::Tag::Prim:
    case Value::Tag::PrimResult: {
      if (a->str_val != b->str_val || a->prim_args.size() != b->prim_args.size())
        return false;
      for (size_t i = 0; i < a->prim_args.size(); i++)
        if (!value_equal(a->prim_args[i], b->prim_args[i])) return false;
      return true;
    }
  }
  return false;
}

bool env_equal(const VEnv& a, const VEnv& b) {
  if (a.vars.size() != b.vars.size()) return false;
  for (auto& [x, r] : a.vars) {
    const Result* o = b.find(x);
    if (!o || !value_equal(r, *o)) return false;
  }
  return true;
}

bool storable_equal(const Storable& a, const Storable& b) {
  if (a.tag != b.tag) return false;
  switch (a.tag) {
    case Storable::Tag::Freed: return true;
    case Storable::Tag::Resource: return value_equal(a.content, b.content);
    case Storable::Tag::Pair:
      return a.kind == b.kind && value_equal(a.fst, b.fst) && value_equal(a.snd, b.snd);
    case Storable::Tag::Closure:
      return a.kind == b.kind && a.param == b.param && a.body == b.body &&
             env_equal(a.env, b.env);
    case Storable::Tag::PolyClosure:
      return a.kind == b.kind && a.param == b.param && a.body == b.body &&
             a.kvars == b.kvars && a.tvars == b.tvars && env_equal(a.env, b.env);
  }
  return false;
}

VEnv merge_envs(const VEnv& a, const VEnv& b) {
  VEnv out = a;
  for (auto& [x, r] : b.vars) out.vars[x] = r;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Monitor

const NodeEnvClass* Monitor::classes_for(const ElabExpr& node) const {
  if (node.node_id < 0 || node.node_id >= static_cast<int>(table_.size())) return nullptr;
  return &table_[node.node_id];
}

void Monitor::flag(const std::string& cond, const std::string& detail) {
  violations_.push_back({cond, detail});
}

void Monitor::on_enter(const Store& store, const Permission& perm, const VEnv& env,
                       const ElabExpr& node) {
  const NodeEnvClass* cls = classes_for(node);
  if (!cls) return;

  // A4: wellformed permission over live cells
  for (auto& [l, mods] : perm.slots) {
    if (!address_wellformed({l, mods})) flag("A4", "malformed address in permission");
    if (!store.valid(l) || store.at(l).tag == Storable::Tag::Freed)
      flag("A4", "permission on a freed or missing cell l" + std::to_string(l));
  }

  // A5: direct addresses permitted; reach within the permission closure
  std::map<Address, uint64_t> direct;
  rs_env(env, direct);
  for (auto& [a, n] : direct) {
    (void)n;
    if (!perm.contains(a)) flag("A5", "environment address not permitted: " + show_addr(a));
  }
  ReachSet rch = reach(store, env);
  std::set<Address> clo = perm_closure(perm);
  for (auto& [a, n] : rch.counts) {
    (void)n;
    if (!clo.count(a))
      flag("A5", "reachable address outside the permission closure: " + show_addr(a));
  }

  EnvPartition part = partition_env(env, *cls);

  // A6: pairwise disjoint raw locations of the four parts
  std::map<Loc, int> seen;
  auto mark = [&](const VEnv& sub, int bit) {
    auto locs = rawloc_env(sub);
    for (auto& [l, n] : locs) {
      (void)n;
      if (seen.count(l) && seen[l] != bit)
        flag("A6", "partition overlap on l" + std::to_string(l));
      seen[l] = bit;
    }
  };
  mark(part.active, 0);
  mark(part.mut, 1);
  mark(part.immut, 2);
  VEnv susp = merge_envs(part.susp_aff, part.susp_un);
  mark(susp, 3);

  // A7.1: nothing reachable is freed
  for (Loc l : rch.raw_locs()) {
    if (!store.valid(l) || store.at(l).tag == Storable::Tag::Freed)
      flag("A7", "freed cell reachable: l" + std::to_string(l));
  }
  // A7.2: owned cells have exactly one pointer
  VEnv owned = merge_envs(merge_envs(part.active, part.mut), part.susp_aff);
  for (auto& [l, n] : owned_spine(store, owned)) {
    if (n != 1)
      flag("A7", "owned cell l" + std::to_string(l) + " has " + std::to_string(n) +
                     " pointers");
  }
}

void Monitor::on_exit(const Store& pre_store, const Permission& pre_perm, const VEnv& env,
                      const ElabExpr& node, const Store& post_store,
                      const Permission& post_perm, const Result& result) {
  const NodeEnvClass* cls = classes_for(node);
  if (!cls) return;
  EnvPartition part = partition_env(env, *cls);

  // R4
  for (auto& [l, mods] : post_perm.slots) {
    if (!address_wellformed({l, mods})) flag("R4", "malformed address in permission");
    if (!post_store.valid(l) || post_store.at(l).tag == Storable::Tag::Freed)
      flag("R4", "permission on a freed cell l" + std::to_string(l));
  }

  // R5: result reach within closure(perm') and within pre-env reach minus
  // suspended reach, plus fresh cells
  {
    std::map<Address, uint64_t> direct;
    rs_result(result, direct);
    for (auto& [a, n] : direct) {
      (void)n;
      if (!post_perm.contains(a))
        flag("R5", "result address not permitted: " + show_addr(a));
    }
    ReachSet rres = reach_result(post_store, result);
    std::set<Address> clo = perm_closure(post_perm);
    ReachSet renv = reach(post_store, env);
    VEnv susp = merge_envs(part.susp_aff, part.susp_un);
    ReachSet rsusp = reach(post_store, susp);
    for (auto& [a, n] : rres.counts) {
      (void)n;
      if (!clo.count(a))
        flag("R5", "result reach outside permission closure: " + show_addr(a));
      bool fresh = a.loc >= pre_store.size();
      bool in_env = renv.contains(a) && !rsusp.contains(a);
      if (!fresh && !in_env)
        flag("R5", "result reaches an address that is neither inherited nor fresh: " +
                       show_addr(a));
    }
  }

  // R6 frame: unreachable cells unchanged, their permissions preserved
  {
    ReachSet renv = reach(post_store, env);
    std::set<Loc> reached = renv.raw_locs();
    for (Loc l = 0; l < pre_store.size(); l++) {
      if (reached.count(l)) continue;
      if (!storable_equal(pre_store.at(l), post_store.at(l)))
        flag("R6", "unreachable cell changed: l" + std::to_string(l));
      auto i = pre_perm.slots.find(l);
      auto j = post_perm.slots.find(l);
      bool in_pre = i != pre_perm.slots.end();
      bool in_post = j != post_perm.slots.end();
      if (in_pre != in_post || (in_pre && i->second != j->second))
        flag("R6", "permission changed on unreachable cell l" + std::to_string(l));
    }
  }

  // R7: unrestricted values and shared borrows are untouched and keep their
  // permission
  {
    VEnv im = merge_envs(part.immut, part.susp_un);
    ReachSet r = reach(post_store, im);
    for (auto& [a, n] : r.counts) {
      (void)n;
      Loc l = a.loc;
      if (l >= pre_store.size()) {
        flag("R7", "immutable part reaches a fresh cell: " + show_addr(a));
        continue;
      }
      if (!storable_equal(pre_store.at(l), post_store.at(l)) ||
          post_store.at(l).tag == Storable::Tag::Freed)
        flag("R7", "immutable cell changed or freed: l" + std::to_string(l));
      if (!post_perm.contains(a))
        flag("R7", "immutable address lost its permission: " + show_addr(a));
    }
  }

  // R8: affine borrows are not freed; suspended affine borrows keep their
  // permission
  {
    VEnv mu = merge_envs(part.mut, part.susp_aff);
    ReachSet r = reach(post_store, mu);
    ReachSet rs = reach(post_store, part.susp_aff);
    for (auto& [a, n] : r.counts) {
      (void)n;
      if (a.loc >= pre_store.size()) {
        flag("R8", "mutable part reaches a fresh cell: " + show_addr(a));
        continue;
      }
      if (!a.raw() && post_store.at(a.loc).tag == Storable::Tag::Freed)
        flag("R8", "borrowed cell freed: " + show_addr(a));
      if (rs.contains(a) && !post_perm.contains(a))
        flag("R8", "suspended borrow lost its permission: " + show_addr(a));
    }
  }

  // R9: incoming owned resources are consumed exactly once unless they flow
  // into the result; linear resources end up freed
  {
    auto pre = owned_spine(pre_store, part.active);
    auto post = owned_spine(post_store, part.active);
    ReachSet rres = reach_result(post_store, result);
    std::set<Loc> result_locs = rres.raw_locs();
    for (auto& [l, n] : pre) {
      if (n != 1) flag("R9", "owned cell entered with multiplicity " + std::to_string(n));
      if (result_locs.count(l)) continue;  // transferred to the result
      auto it = post.find(l);
      if (it != post.end() && it->second > 1)
        flag("R9", "owned cell duplicated: l" + std::to_string(l));
      if (post_perm.contains_raw(l))
        flag("R9", "consumed cell still permitted: l" + std::to_string(l));
      if (pre_store.at(l).tag == Storable::Tag::Resource &&
          post_store.at(l).tag != Storable::Tag::Freed)
        flag("R9", "linear resource not freed: l" + std::to_string(l));
    }
  }

  // R10: no thin-air permissions
  for (auto& [l, mods] : post_perm.slots) {
    Address a{l, mods};
    bool fresh = l >= pre_store.size();
    if (!fresh && !pre_perm.contains(a))
      flag("R10", "permission appeared from thin air: " + show_addr(a));
  }
}

std::string Monitor::report() const {
  std::ostringstream os;
  for (auto& v : violations_) os << v.condition << ": " << v.detail << "\n";
  return os.str();
}

}  // namespace affe
