#include "affe/eval.hpp"

#include <sstream>

#include "affe/constraint.hpp"

namespace affe {

// ---------------------------------------------------------------------------
// Addresses

bool address_wellformed(const Address& a) {
  // every Shared modifier precedes every Exclusive one, outside-in
  bool seen_exclusive = false;
  for (BorrowSpec m : a.mods) {
    if (m == BorrowSpec::Exclusive) seen_exclusive = true;
    else if (seen_exclusive) return false;
  }
  return true;
}

std::optional<Address> extend_borrow(const Address& a, BorrowSpec spec) {
  Address out = a;
  out.mods.insert(out.mods.begin(), spec);
  if (!address_wellformed(out)) return std::nullopt;
  return out;
}

// ---------------------------------------------------------------------------
// Values

Result Value::mk_unit() {
  auto v = std::make_shared<Value>();
  v->tag = Tag::Unit;
  return v;
}

Result Value::mk_int(int64_t x) {
  auto v = std::make_shared<Value>();
  v->tag = Tag::Int;
  v->int_val = x;
  return v;
}

Result Value::mk_string(std::string s) {
  auto v = std::make_shared<Value>();
  v->tag = Tag::String;
  v->str_val = std::move(s);
  return v;
}

Result Value::mk_addr(Address a) {
  auto v = std::make_shared<Value>();
  v->tag = Tag::Addr;
  v->addr = std::move(a);
  return v;
}

Result Value::mk_prim(std::string name, int arity) {
  auto v = std::make_shared<Value>();
  v->tag = Tag::Prim;
  v->str_val = std::move(name);
  v->prim_arity = arity;
  return v;
}

Result Value::mk_prim_result(std::string name) {
  auto v = std::make_shared<Value>();
  v->tag = Tag::PrimResult;
  v->str_val = std::move(name);
  return v;
}

std::string show_address(const Address& a) {
  std::string out;
  if (!a.mods.empty()) {
    out += "[";
    for (size_t i = 0; i < a.mods.size(); i++) {
      if (i) out += " ";
      out += a.mods[i] == BorrowSpec::Shared ? "U" : "A";
    }
    out += "]";
  }
  return out + "l" + std::to_string(a.loc);
}

std::string show_result(const Result& r) {
  if (!r) return "<none>";
  switch (r->tag) {
    case Value::Tag::Unit: return "()";
    case Value::Tag::Int: return std::to_string(r->int_val);
    case Value::Tag::String: return "\"" + r->str_val + "\"";
    case Value::Tag::Addr: return show_address(r->addr);
    case Value::Tag::Prim: {
      std::string out = "<" + r->str_val;
      for (auto& a : r->prim_args) out += " " + show_result(a);
      return out + ">";
    }
    case Value::Tag::PrimResult: return "<" + r->str_val + " result>";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Store

Loc salloc(Store& store, Storable w) {
  store.cells.push_back(std::move(w));
  return static_cast<Loc>(store.cells.size() - 1);
}

Outcome Outcome::ok(Store s, Permission p, Result r) {
  Outcome o;
  o.tag = Tag::Ok;
  o.store = std::move(s);
  o.perm = std::move(p);
  o.result = std::move(r);
  return o;
}

Outcome Outcome::timeout() { return Outcome{}; }

Outcome Outcome::mk_error(std::string msg) {
  Outcome o;
  o.tag = Tag::Error;
  o.error = std::move(msg);
  return o;
}

// ---------------------------------------------------------------------------
// vsplit

std::pair<VEnv, VEnv> vsplit(const VEnv& env, const Splitting& split, std::string* err) {
  VEnv l, r;
  for (auto& [x, tag] : split.tags) {
    const Result* v = env.find(x);
    if (!v) {
      if (err) *err = "vsplit: missing subject " + x;
      continue;
    }
    switch (tag) {
      case SplitTag::Both:
      case SplitTag::Borrow:
      case SplitTag::Susp:
      case SplitTag::SuspB:
      case SplitTag::SuspS:
        l.vars[x] = *v;
        r.vars[x] = *v;
        break;
      case SplitTag::Left:
        l.vars[x] = *v;
        break;
      case SplitTag::Right:
        r.vars[x] = *v;
        break;
    }
  }
  return {std::move(l), std::move(r)};
}

// ---------------------------------------------------------------------------
// Substitution of kind/type arguments into an elaborated body (STApp)

namespace {

std::shared_ptr<ElabExpr> subst_elab(const std::shared_ptr<ElabExpr>& e, const Subst& s) {
  if (!e) return nullptr;
  auto out = std::make_shared<ElabExpr>(*e);
  out->kind = s.resolve(e->kind);
  for (auto& k : out->kind_args) k = s.resolve(k);
  for (auto& t : out->type_args) t = s.apply(t);
  if (e->tag == ElabExpr::Tag::PolyLet) out->scheme = s.apply(e->scheme);
  if (e->type) out->type = s.apply(e->type);
  out->a = subst_elab(e->a, s);
  out->b = subst_elab(e->b, s);
  return out;
}

bool kind_unrestricted(const Constraint& c, Kind k) {
  return entails(c, {k, Kind::mk_const(Quality::Un, kLevelInf)});
}

const char* case_name(const ElabExpr& e) {
  using T = ElabExpr::Tag;
  switch (e.tag) {
    case T::Const: return "SConst";
    case T::Var: return "SVar";
    case T::VarInst: return "STApp";
    case T::Lam: return "SLam";
    case T::App: return "SApp";
    case T::Pair: return "SPair";
    case T::Match: return "SMatch";
    case T::Let: return "SLet";
    case T::PolyLet: return "SPLet";
    case T::Region: return "SRegion";
    case T::Borrow: return "SBorrow";
    case T::ReBorrow: return "SReBorrow";
    case T::Create: return "SCreatePrim";
    case T::Observe: return "SObservePrim";
    case T::Update: return "SUpdatePrim";
    case T::Destroy: return "SDestroyPrim";
  }
  return "?";
}

std::string show_storable(const Storable& w) {
  switch (w.tag) {
    case Storable::Tag::PolyClosure: return "polyclosure";
    case Storable::Tag::Closure: return "closure";
    case Storable::Tag::Pair:
      return "pair(" + show_result(w.fst) + ", " + show_result(w.snd) + ")";
    case Storable::Tag::Resource: return "resource(" + show_result(w.content) + ")";
    case Storable::Tag::Freed: return "freed";
  }
  return "?";
}

struct Evaluator {
  EvalHooks* hooks;
  TraceSink* trace;
  int depth = 0;

  void trace_line(const std::string& s) {
    if (!trace) return;
    for (int i = 0; i < depth; i++) trace->text += "  ";
    trace->text += s;
    trace->text += "\n";
  }

  void trace_exit(const char* name, const Store& pre_store, const Permission& pre_perm,
                  const Outcome& out) {
    if (!trace) return;
    if (out.tag == Outcome::Tag::TimeOut) {
      trace_line(std::string("<- ") + name + " timeout");
      return;
    }
    if (out.tag == Outcome::Tag::Error) {
      trace_line(std::string("<- ") + name + " error: " + out.error);
      return;
    }
    std::string line = std::string("<- ") + name + " = " + show_result(out.result);
    for (size_t l = pre_store.size(); l < out.store.size(); l++)
      line += " store+[l" + std::to_string(l) + "=" + show_storable(out.store.cells[l]) + "]";
    for (Loc l = 0; l < pre_store.size(); l++) {
      if (pre_store.cells[l].tag != Storable::Tag::Freed &&
          out.store.cells[l].tag == Storable::Tag::Freed)
        line += " store[l" + std::to_string(l) + "=freed]";
      else if (pre_store.cells[l].tag == Storable::Tag::Resource &&
               out.store.cells[l].tag == Storable::Tag::Resource &&
               pre_store.cells[l].content != out.store.cells[l].content)
        line += " store[l" + std::to_string(l) + "=" + show_storable(out.store.cells[l]) + "]";
    }
    for (auto& a : pre_perm.addresses())
      if (!out.perm.contains(a)) line += " perm-[" + show_address(a) + "]";
    for (auto& a : out.perm.addresses())
      if (!pre_perm.contains(a)) line += " perm+[" + show_address(a) + "]";
    trace_line(line);
  }

  Outcome run(Store store, Permission perm, const VEnv& env, uint64_t fuel,
              const std::shared_ptr<ElabExpr>& e) {
    if (fuel == 0) {
      trace_line("timeout (fuel exhausted)");
      return Outcome::timeout();
    }
    if (hooks) hooks->on_enter(store, perm, env, *e);
    Store pre_store;
    Permission pre_perm;
    bool snapshot = (hooks && hooks->wants_snapshots()) || trace;
    if (snapshot) {
      pre_store = store;
      pre_perm = perm;
    }
    const char* name = case_name(*e);
    trace_line(std::string("-> ") + name);
    depth++;
    Outcome out = step(std::move(store), std::move(perm), env, fuel, e, name);
    depth--;
    trace_exit(name, pre_store, pre_perm, out);
    if (hooks && out.is_ok())
      hooks->on_exit(pre_store, pre_perm, env, *e, out.store, out.perm, out.result);
    return out;
  }

  Outcome step(Store store, Permission perm, const VEnv& env, uint64_t fuel,
               const std::shared_ptr<ElabExpr>& e, const char*& name) {
    using T = ElabExpr::Tag;
    switch (e->tag) {
      case T::Const: {
        Result r;
        switch (e->cval.tag) {
          case ConstVal::Tag::Unit: r = Value::mk_unit(); break;
          case ConstVal::Tag::Int: r = Value::mk_int(e->cval.int_val); break;
          case ConstVal::Tag::String: r = Value::mk_string(e->cval.str_val); break;
          case ConstVal::Tag::Prim:
            r = Value::mk_prim(e->cval.str_val, static_cast<int>(e->cval.int_val));
            break;
          case ConstVal::Tag::PrimResult:
            r = Value::mk_prim_result(e->cval.str_val);
            break;
        }
        return Outcome::ok(std::move(store), std::move(perm), r);
      }

      case T::Var: {
        const Result* v = env.find(e->var);
        if (!v) return Outcome::mk_error("SVar: unbound variable " + e->var);
        return Outcome::ok(std::move(store), std::move(perm), *v);
      }

      case T::VarInst: {
        const Result* v = env.find(e->var);
        if (!v) return Outcome::mk_error("STApp: unbound variable " + e->var);
        if ((*v)->tag != Value::Tag::Addr || !(*v)->addr.raw())
          return Outcome::mk_error("STApp: value of " + e->var + " is not a raw location");
        Address addr = (*v)->addr;
        if (!perm.contains(addr))
          return Outcome::mk_error("STApp: no permission on " + show_address(addr));
        if (!store.valid(addr.loc)) return Outcome::mk_error("STApp: dangling location");
        const Storable& w = store.at(addr.loc);
        if (w.tag != Storable::Tag::PolyClosure)
          return Outcome::mk_error("STApp: storable is not a poly closure");
        if (!kind_unrestricted(w.ctr, w.kind)) perm.remove(addr);
        Subst inst;
        size_t nk = std::min(w.kvars.size(), e->kind_args.size());
        size_t nt = std::min(w.tvars.size(), e->type_args.size());
        if (w.kvars.size() != e->kind_args.size() || w.tvars.size() != e->type_args.size())
          return Outcome::mk_error("STApp: instantiation arity mismatch");
        for (size_t i = 0; i < nk; i++) inst.kvars[w.kvars[i]] = e->kind_args[i];
        for (size_t i = 0; i < nt; i++) inst.tvars[w.tvars[i]] = e->type_args[i];
        Storable clo;
        clo.tag = Storable::Tag::Closure;
        clo.env = w.env;
        clo.kind = inst.resolve(w.kind);
        clo.param = w.param;
        clo.body = subst_elab(w.body, inst);
        Loc l2 = salloc(store, std::move(clo));
        perm.add({l2, {}});
        return Outcome::ok(std::move(store), std::move(perm), Value::mk_addr({l2, {}}));
      }

      case T::Lam: {
        Storable clo;
        clo.tag = Storable::Tag::Closure;
        clo.env = env;
        clo.kind = e->kind;
        clo.param = e->var;
        clo.body = e->a;
        Loc l = salloc(store, std::move(clo));
        perm.add({l, {}});
        return Outcome::ok(std::move(store), std::move(perm), Value::mk_addr({l, {}}));
      }

      case T::PolyLet: {
        std::string err;
        auto [envl, envr] = vsplit(env, e->split, &err);
        if (!err.empty()) return Outcome::mk_error("SPLet: " + err);
        Storable pc;
        pc.tag = Storable::Tag::PolyClosure;
        pc.env = envl;
        pc.kvars = e->scheme.kvars;
        for (auto& [tv, k] : e->scheme.tvars) {
          (void)k;
          pc.tvars.push_back(tv);
        }
        pc.ctr = e->scheme.ctr;
        pc.kind = e->kind;
        pc.param = e->var2;
        pc.body = e->a;
        Loc l = salloc(store, std::move(pc));
        perm.add({l, {}});
        VEnv env2 = envr;
        env2.vars[e->var] = Value::mk_addr({l, {}});
        return run(std::move(store), std::move(perm), env2, fuel - 1, e->b);
      }

      case T::App:
        return eval_app(std::move(store), std::move(perm), env, fuel, e, name);

      case T::Let: {
        std::string err;
        auto [envl, envr] = vsplit(env, e->split, &err);
        if (!err.empty()) return Outcome::mk_error("SLet: " + err);
        Outcome o1 = run(std::move(store), std::move(perm), envl, fuel - 1, e->a);
        if (!o1.is_ok()) return o1;
        VEnv env2 = envr;
        env2.vars[e->var] = o1.result;
        return run(std::move(o1.store), std::move(o1.perm), env2, fuel - 1, e->b);
      }

      case T::Pair: {
        std::string err;
        auto [envl, envr] = vsplit(env, e->split, &err);
        if (!err.empty()) return Outcome::mk_error("SPair: " + err);
        Outcome o1 = run(std::move(store), std::move(perm), envl, fuel - 1, e->a);
        if (!o1.is_ok()) return o1;
        Outcome o2 = run(std::move(o1.store), std::move(o1.perm), envr, fuel - 1, e->b);
        if (!o2.is_ok()) return o2;
        Storable w;
        w.tag = Storable::Tag::Pair;
        w.kind = e->kind;
        w.fst = o1.result;
        w.snd = o2.result;
        Loc l = salloc(o2.store, std::move(w));
        o2.perm.add({l, {}});
        return Outcome::ok(std::move(o2.store), std::move(o2.perm), Value::mk_addr({l, {}}));
      }

      case T::Match:
        return eval_match(std::move(store), std::move(perm), env, fuel, e, name);

      case T::Region: {
        const Result* v = env.find(e->var);
        if (!v) return Outcome::mk_error("SRegion: unbound variable " + e->var);
        if ((*v)->tag != Value::Tag::Addr)
          return Outcome::mk_error("SRegion: value of " + e->var + " is not an address");
        Address addr = (*v)->addr;
        if (!perm.contains(addr))
          return Outcome::mk_error("SRegion: no permission on " + show_address(addr));
        std::optional<Address> baddr = extend_borrow(addr, e->bspec);
        if (!baddr)
          return Outcome::mk_error("SRegion: cannot take an exclusive borrow of a shared borrow");
        Permission inner = perm;
        inner.remove(addr);
        inner.add(*baddr);
        VEnv env2 = env;
        env2.vars[e->var] = Value::mk_addr(*baddr);
        Outcome o = run(std::move(store), std::move(inner), env2, fuel - 1, e->a);
        if (!o.is_ok()) return o;
        o.perm.remove(*baddr);  // withdraw the borrow's permission
        o.perm.add(addr);       // and restore the original
        return Outcome::ok(std::move(o.store), std::move(o.perm), o.result);
      }

      case T::Borrow:
      case T::ReBorrow: {
        const char* rule = e->tag == T::Borrow ? "SBorrow" : "SReBorrow";
        const Result* v = env.find(e->var);
        if (!v) return Outcome::mk_error(std::string(rule) + ": unbound variable " + e->var);
        if ((*v)->tag != Value::Tag::Addr || (*v)->addr.mods.empty())
          return Outcome::mk_error(std::string(rule) + ": value of " + e->var +
                                " is not a borrow");
        const Address& addr = (*v)->addr;
        if (addr.mods.front() != e->bspec)
          return Outcome::mk_error(std::string(rule) + ": borrow mode mismatch on " + e->var);
        if (!perm.contains(addr))
          return Outcome::mk_error(std::string(rule) + ": no permission on " +
                                show_address(addr));
        return Outcome::ok(std::move(store), std::move(perm), *v);
      }

      case T::Create:
        return Outcome::ok(std::move(store), std::move(perm), Value::mk_prim("create", 1));
      case T::Observe:
        return Outcome::ok(std::move(store), std::move(perm), Value::mk_prim("observe", 1));
      case T::Update:
        return Outcome::ok(std::move(store), std::move(perm), Value::mk_prim("update", 2));
      case T::Destroy:
        return Outcome::ok(std::move(store), std::move(perm), Value::mk_prim("destroy", 1));
    }
    return Outcome::mk_error("unhandled elaborated expression");
  }

  Outcome eval_app(Store store, Permission perm, const VEnv& env, uint64_t fuel,
                   const std::shared_ptr<ElabExpr>& e, const char*& name) {
    std::string err;
    auto [envl, envr] = vsplit(env, e->split, &err);
    if (!err.empty()) return Outcome::mk_error("SApp: " + err);
    Outcome o1 = run(std::move(store), std::move(perm), envl, fuel - 1, e->a);
    if (!o1.is_ok()) return o1;

    if (o1.result->tag == Value::Tag::Prim)
      return apply_prim(std::move(o1.store), std::move(o1.perm), envr, fuel, e,
                        o1.result, name);
    if (o1.result->tag == Value::Tag::PrimResult)
      return Outcome::mk_error("SApp: primitive applied beyond its arity");

    if (o1.result->tag != Value::Tag::Addr || !o1.result->addr.raw())
      return Outcome::mk_error("SApp: function value is not a raw location");
    Address floc = o1.result->addr;
    if (!o1.perm.contains(floc))
      return Outcome::mk_error("SApp: no permission on " + show_address(floc));
    const Storable& w = o1.store.at(floc.loc);
    if (w.tag != Storable::Tag::Closure)
      return Outcome::mk_error("SApp: storable is not a closure");
    VEnv clo_env = w.env;
    std::string param = w.param;
    std::shared_ptr<ElabExpr> body = w.body;
    // permission to reuse the closure remains in force only if unrestricted
    if (!kind_unrestricted({}, w.kind)) o1.perm.remove(floc);

    Outcome o2 = run(std::move(o1.store), std::move(o1.perm), envr, fuel - 1, e->b);
    if (!o2.is_ok()) return o2;
    clo_env.vars[param] = o2.result;
    return run(std::move(o2.store), std::move(o2.perm), clo_env, fuel - 1, body);
  }

  Outcome apply_prim(Store store, Permission perm, const VEnv& envr, uint64_t fuel,
                     const std::shared_ptr<ElabExpr>& e, const Result& prim,
                     const char*& name) {
    const std::string& p = prim->str_val;
    if (p == "create") {
      name = "SCreate";
      Outcome o = run(std::move(store), std::move(perm), envr, fuel - 1, e->b);
      if (!o.is_ok()) return o;
      Storable w;
      w.tag = Storable::Tag::Resource;
      w.content = o.result;
      Loc l = salloc(o.store, std::move(w));
      o.perm.add({l, {}});
      return Outcome::ok(std::move(o.store), std::move(o.perm), Value::mk_addr({l, {}}));
    }
    if (p == "observe") {
      name = "SObserve";
      Outcome o = run(std::move(store), std::move(perm), envr, fuel - 1, e->b);
      if (!o.is_ok()) return o;
      if (o.result->tag != Value::Tag::Addr || o.result->addr.mods.empty() ||
          o.result->addr.mods.front() != BorrowSpec::Shared)
        return Outcome::mk_error("SObserve: expected a shared borrow");
      const Address& addr = o.result->addr;
      if (!o.perm.contains(addr))
        return Outcome::mk_error("SObserve: no permission on " + show_address(addr));
      const Storable& w = o.store.at(addr.loc);
      if (w.tag != Storable::Tag::Resource)
        return Outcome::mk_error("SObserve: cell is not a resource");
      Result content = w.content;
      return Outcome::ok(std::move(o.store), std::move(o.perm), content);
    }
    if (p == "destroy") {
      name = "SDestroy";
      Outcome o = run(std::move(store), std::move(perm), envr, fuel - 1, e->b);
      if (!o.is_ok()) return o;
      if (o.result->tag != Value::Tag::Addr || !o.result->addr.raw())
        return Outcome::mk_error("SDestroy: expected a raw location");
      Loc l = o.result->addr.loc;
      if (o.store.at(l).tag != Storable::Tag::Resource)
        return Outcome::mk_error("SDestroy: cell is not a resource");
      o.store.at(l) = Storable{};  // Freed
      o.perm.remove({l, {}});
      return Outcome::ok(std::move(o.store), std::move(o.perm), Value::mk_unit());
    }
    if (p == "update") {
      if (prim->prim_args.empty()) {
        // first application: evaluate and capture the borrow
        Outcome o = run(std::move(store), std::move(perm), envr, fuel - 1, e->b);
        if (!o.is_ok()) return o;
        if (o.result->tag != Value::Tag::Addr || o.result->addr.mods.empty() ||
            o.result->addr.mods.front() != BorrowSpec::Exclusive)
          return Outcome::mk_error("SUpdate: expected an exclusive borrow");
        auto partial = std::make_shared<Value>(*prim);
        partial->prim_args.push_back(o.result);
        return Outcome::ok(std::move(o.store), std::move(o.perm), partial);
      }
      name = "SUpdate";
      Address addr = prim->prim_args[0]->addr;
      Outcome o = run(std::move(store), std::move(perm), envr, fuel - 1, e->b);
      if (!o.is_ok()) return o;
      if (!o.perm.contains(addr))
        return Outcome::mk_error("SUpdate: no permission on " + show_address(addr));
      Storable& w = o.store.at(addr.loc);
      if (w.tag != Storable::Tag::Resource)
        return Outcome::mk_error("SUpdate: cell is not a resource");
      w.content = o.result;
      o.perm.remove(addr);  // the exclusive borrow's permission is spent
      return Outcome::ok(std::move(o.store), std::move(o.perm), Value::mk_unit());
    }
    // declared primitive: accumulate arguments up to its arity
    Outcome o = run(std::move(store), std::move(perm), envr, fuel - 1, e->b);
    if (!o.is_ok()) return o;
    if (static_cast<int>(prim->prim_args.size()) + 1 < prim->prim_arity) {
      auto partial = std::make_shared<Value>(*prim);
      partial->prim_args.push_back(o.result);
      return Outcome::ok(std::move(o.store), std::move(o.perm), partial);
    }
    return Outcome::ok(std::move(o.store), std::move(o.perm),
                       Value::mk_prim_result(prim->str_val));
  }

  Outcome eval_match(Store store, Permission perm, const VEnv& env, uint64_t fuel,
                     const std::shared_ptr<ElabExpr>& e, const char*& name) {
    std::string err;
    auto [envl, envr] = vsplit(env, e->split, &err);
    if (!err.empty()) return Outcome::mk_error("SMatch: " + err);
    Outcome o1 = run(std::move(store), std::move(perm), envl, fuel - 1, e->a);
    if (!o1.is_ok()) return o1;

    if (!e->mspec) {
      name = "SMatchLocation";
      if (o1.result->tag != Value::Tag::Addr || !o1.result->addr.raw())
        return Outcome::mk_error("SMatchLocation: scrutinee is not a raw location");
      Loc l = o1.result->addr.loc;
      const Storable& w = o1.store.at(l);
      if (w.tag != Storable::Tag::Pair)
        return Outcome::mk_error("SMatchLocation: cell is not a pair");
      if (!kind_unrestricted({}, w.kind)) o1.perm.remove({l, {}});
      VEnv env2 = envr;
      env2.vars[e->var] = w.fst;
      env2.vars[e->var2] = w.snd;
      return run(std::move(o1.store), std::move(o1.perm), env2, fuel - 1, e->b);
    }

    name = "SMatchBorrow";
    BorrowSpec spec = *e->mspec;
    if (o1.result->tag != Value::Tag::Addr || o1.result->addr.mods.empty() ||
        o1.result->addr.mods.front() != spec)
      return Outcome::mk_error("SMatchBorrow: scrutinee is not a matching borrow");
    Loc l = o1.result->addr.loc;
    if (o1.store.at(l).tag != Storable::Tag::Pair)
      return Outcome::mk_error("SMatchBorrow: cell is not a pair");
    Result fst = o1.store.at(l).fst, snd = o1.store.at(l).snd;
    // components are re-dressed with the scrutinee's outer modifier
    auto dress = [&](const Result& r) -> std::optional<Result> {
      if (r->tag != Value::Tag::Addr) return r;  // constants pass through
      std::optional<Address> d = extend_borrow(r->addr, spec);
      if (!d) return std::nullopt;
      return Value::mk_addr(*d);
    };
    std::optional<Result> c1 = dress(fst), c2 = dress(snd);
    if (!c1 || !c2)
      return Outcome::mk_error("SMatchBorrow: component borrow extension is invalid");
    // swap the component permissions in
    Permission inner = o1.perm;
    for (auto& comp : {fst, snd})
      if (comp->tag == Value::Tag::Addr) inner.remove(comp->addr);
    for (auto& comp : {*c1, *c2})
      if ((*comp).tag == Value::Tag::Addr) inner.add((*comp).addr);
    VEnv env2 = envr;
    env2.vars[e->var] = *c1;
    env2.vars[e->var2] = *c2;
    Outcome o2 = run(std::move(o1.store), std::move(inner), env2, fuel - 1, e->b);
    if (!o2.is_ok()) return o2;
    // and swap them back
    for (auto& comp : {*c1, *c2})
      if ((*comp).tag == Value::Tag::Addr) o2.perm.remove((*comp).addr);
    for (auto& comp : {fst, snd})
      if (comp->tag == Value::Tag::Addr) o2.perm.add(comp->addr);
    return Outcome::ok(std::move(o2.store), std::move(o2.perm), o2.result);
  }
};

}  // namespace

Outcome eval(Store store, Permission perm, const VEnv& env, uint64_t fuel,
             const std::shared_ptr<ElabExpr>& e, EvalHooks* hooks, TraceSink* trace) {
  Evaluator ev{hooks, trace};
  return ev.run(std::move(store), std::move(perm), env, fuel, e);
}

}  // namespace affe
