#include "affe/infer.hpp"

#include <algorithm>
#include <set>

namespace affe {

namespace {

TypePtr app0(const std::string& con) { return Type::mk_app(con, {}); }

Kind aff_inf() { return Kind::mk_const(Quality::Aff, kLevelInf); }
Kind un0() { return Kind::mk_const(Quality::Un, 0); }

Quality spec_quality(BorrowSpec b) {
  return b == BorrowSpec::Shared ? Quality::Un : Quality::Aff;
}

}  // namespace

const UsageEntry* UsageEnv::find(const std::string& x) const {
  for (auto& e : entries)
    if (e.name == x) return &e;
  return nullptr;
}

void UsageEnv::remove(const std::string& x) {
  entries.erase(std::remove_if(entries.begin(), entries.end(),
                               [&](const UsageEntry& e) { return e.name == x; }),
                entries.end());
}

// ---------------------------------------------------------------------------
// Normalization threading

namespace {

void normalize_ctx(InferCtx& ctx, Constraint extra, ErrorClass cls, SourceLoc loc,
                   const char* what) {
  Constraint all = ctx.solved;
  all.conjoin(extra);
  NormalizeOutcome out = normalize(all, ctx.psi, ctx.fresh);
  if (auto* err = std::get_if<Unsatisfiable>(&out)) {
    throw InferFailure({cls, std::string(what) + ": " + err->reason, loc});
  }
  auto& ok = std::get<NormalizeResult>(out);
  ctx.solved = std::move(ok.solved);
  ctx.psi = std::move(ok.subst);
}

Kind kind_of_tvar(InferCtx& ctx, const TypeEnv& env, int tvar) {
  if (auto it = ctx.tvar_kinds.find(tvar); it != ctx.tvar_kinds.end())
    return ctx.psi.resolve(it->second);
  if (const Binding* b = env.lookup_tvar(tvar)) return ctx.psi.resolve(b->kind);
  throw InferFailure({ErrorClass::Unbound, "unbound type variable", {}});
}

}  // namespace

// ---------------------------------------------------------------------------
// Kind inference

std::pair<Constraint, Kind> infer_kind(InferCtx& ctx, const TypeEnv& env, const TypePtr& t0) {
  TypePtr t = ctx.psi.resolve_head(t0);
  Constraint c;
  switch (t->tag) {
    case Type::Tag::Var:
      return {c, kind_of_tvar(ctx, env, t->var)};
    case Type::Tag::Arrow:
    case Type::Tag::Borrow:
      return {c, ctx.psi.resolve(t->kind)};
    case Type::Tag::Pair: {
      auto [c1, k1] = infer_kind(ctx, env, t->left);
      auto [c2, k2] = infer_kind(ctx, env, t->right);
      c.conjoin(c1);
      c.conjoin(c2);
      Kind k = ctx.fresh_kvar();
      c.add_kind(k1, k);
      c.add_kind(k2, k);
      return {c, k};
    }
    case Type::Tag::App: {
      const Binding* con = env.lookup_tycon(t->con);
      if (!con) con = ctx.globals.lookup_tycon(t->con);
      if (!con)
        throw InferFailure({ErrorClass::Unbound, "unknown type constructor: " + t->con, {}});
      const KindScheme& ks = con->kscheme;
      if (ks.args.size() != t->args.size())
        throw InferFailure(
            {ErrorClass::KindMismatch, "arity mismatch for constructor " + t->con, {}});
      // instantiate the kind scheme
      Subst ren;
      for (int kv : ks.kvars) ren.kvars[kv] = ctx.fresh_kvar();
      c.conjoin(ren.apply(ks.ctr));
      for (size_t i = 0; i < t->args.size(); i++) {
        auto [ci, ki] = infer_kind(ctx, env, t->args[i]);
        c.conjoin(ci);
        Kind want = ren.resolve(ks.args[i]);
        c.add_kind(ki, want);
        c.add_kind(want, ki);
      }
      return {c, ren.resolve(ks.result)};
    }
  }
  return {c, un0()};
}

// ---------------------------------------------------------------------------
// Instantiation

Instance instantiate(InferCtx& ctx, const TypeScheme& s) {
  Instance inst;
  Subst ren;
  for (int kv : s.kvars) {
    Kind fresh = ctx.fresh_kvar();
    ren.kvars[kv] = fresh;
    inst.kind_args.push_back(fresh);
  }
  for (auto& [tv, bound] : s.tvars) {
    Kind b = ren.resolve(bound);
    int fresh = ctx.fresh_tvar(b);
    ren.tvars[tv] = Type::mk_var(fresh);
    inst.type_args.push_back(Type::mk_var(fresh));
  }
  inst.ctr = ren.apply(s.ctr);
  inst.body = ren.apply(s.body);
  return inst;
}

// deferred kinding constraint for `scheme <= k` (ConstrSD): instantiate the
// scheme, kind its body, and bound the result
static Constraint scheme_leq_kind(InferCtx& ctx, const TypeEnv& env, const TypeScheme& s,
                                  Kind k) {
  Instance inst = instantiate(ctx, s);
  Constraint c = inst.ctr;
  auto [ck, kind] = infer_kind(ctx, env, inst.body);
  c.conjoin(ck);
  c.add_kind(kind, k);
  // the instantiation variables are local to this side condition
  for (auto& ka : inst.kind_args) c.exists_kvars.push_back(ka.var);
  for (auto& ta : inst.type_args) c.exists_tvars.push_back(ta->var);
  return c;
}

// ---------------------------------------------------------------------------
// Weaken

Constraint weaken(InferCtx& ctx, const TypeEnv& env, const std::string& x,
                  const TypeScheme& scheme, const UsageEnv& usage) {
  const UsageEntry* u = usage.find(x);
  if (u && u->mode == UsageEntry::Mode::Regular) return {};
  // unused, or only borrowed in nested regions: must be droppable
  return scheme_leq_kind(ctx, env, scheme, aff_inf());
}

// ---------------------------------------------------------------------------
// Environment constraints

Constraint env_leq_constraint(InferCtx& ctx, const TypeEnv& env, const UsageEnv& usage,
                              Kind k) {
  Constraint c;
  for (auto& e : usage.entries) {
    switch (e.mode) {
      case UsageEntry::Mode::Regular:
        c.conjoin(scheme_leq_kind(ctx, env, e.scheme, k));
        break;
      case UsageEntry::Mode::Borrow:
        c.add_kind(e.kind, k);  // ConstrBorrow
        break;
      case UsageEntry::Mode::Suspended:
        c.falsum = true;  // ConstrSusp
        break;
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Splitting

namespace {

void unify_types(Constraint& c, const TypePtr& a, const TypePtr& b) {
  c.add_type(a, b);
  c.add_type(b, a);
}

}  // namespace

SplitResult split_infer(InferCtx& ctx, const UsageEnv& left, const UsageEnv& right) {
  SplitResult r;
  std::vector<std::string> order;
  for (auto& e : left.entries) order.push_back(e.name);
  for (auto& e : right.entries)
    if (!left.find(e.name)) order.push_back(e.name);

  for (auto& x : order) {
    const UsageEntry* l = left.find(x);
    const UsageEntry* rgt = right.find(x);
    if (l && !rgt) {
      r.tags.tags.push_back({x, SplitTag::Left});
      r.merged.entries.push_back(*l);
      continue;
    }
    if (!l && rgt) {
      r.tags.tags.push_back({x, SplitTag::Right});
      r.merged.entries.push_back(*rgt);
      continue;
    }
    using M = UsageEntry::Mode;
    if (l->mode == M::Regular && rgt->mode == M::Regular) {
      // (Both): the shared scheme must be duplicable
      r.ctr.conjoin(scheme_leq_kind(ctx, ctx.globals, l->scheme, un0()));
      r.tags.tags.push_back({x, SplitTag::Both});
      r.merged.entries.push_back(*l);
    } else if (l->mode == M::Borrow && rgt->mode == M::Borrow) {
      // (Borrow): both sides see the same shared borrow; two exclusive
      // borrows fall back to the Both-style bound, which the region
      // constraints then contradict
      r.ctr.add_kind(l->kind, rgt->kind);
      r.ctr.add_kind(rgt->kind, l->kind);
      unify_types(r.ctr, l->scheme.body, rgt->scheme.body);
      if (l->spec == BorrowSpec::Exclusive || rgt->spec == BorrowSpec::Exclusive)
        r.ctr.add_kind(l->kind, Kind::mk_const(Quality::Un, kLevelInf));
      r.tags.tags.push_back({x, SplitTag::Borrow});
      r.merged.entries.push_back(*l);
    } else if (l->mode == M::Suspended && rgt->mode == M::Regular) {
      // (Susp): borrowed first on the left, consumed later on the right
      r.tags.tags.push_back({x, SplitTag::Susp});
      r.merged.entries.push_back(*rgt);
    } else if (l->mode == M::Suspended && rgt->mode == M::Borrow) {
      // (SuspB): the left region's borrow must be compatible
      if (!spec_leq(l->spec, rgt->spec)) r.ctr.falsum = true;
      unify_types(r.ctr, l->scheme.body, rgt->scheme.body);
      r.tags.tags.push_back({x, SplitTag::SuspB});
      r.merged.entries.push_back(*rgt);
    } else if (l->mode == M::Suspended && rgt->mode == M::Suspended) {
      // (SuspS): sequential regions; keep the stronger suspension
      unify_types(r.ctr, l->scheme.body, rgt->scheme.body);
      r.tags.tags.push_back({x, SplitTag::SuspS});
      bool keep_left =
          l->spec == BorrowSpec::Exclusive && rgt->spec == BorrowSpec::Shared;
      r.merged.entries.push_back(keep_left ? *l : *rgt);
    } else {
      // no row matches: a borrow or a direct use out of evaluation order
      r.ctr.falsum = true;
      r.tags.tags.push_back({x, SplitTag::Left});
      r.merged.entries.push_back(*l);
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Regions

RegionResult region_infer(InferCtx& ctx, const std::string& x, BorrowSpec spec, Level n,
                          const UsageEnv& body_usage) {
  RegionResult r;
  r.usage = body_usage;
  const UsageEntry* u = body_usage.find(x);
  if (!u) return r;
  if (u->mode == UsageEntry::Mode::Regular)
    throw InferFailure({ErrorClass::Internal,
                        "variable used directly inside its own region: " + x, {}});
  if (u->mode == UsageEntry::Mode::Borrow) {
    if (u->spec != spec)
      throw InferFailure({ErrorClass::BorrowError,
                          "borrow specification does not match its region: " + x, {}});
    // (spec_n <= k) and (k <= spec_inf)
    Quality q = spec_quality(u->spec);
    r.ctr.add_kind(Kind::mk_const(q, n), u->kind);
    r.ctr.add_kind(u->kind, Kind::mk_const(q, kLevelInf));
    UsageEntry susp;
    susp.mode = UsageEntry::Mode::Suspended;
    susp.name = x;
    susp.scheme = u->scheme;
    susp.level = n;
    susp.spec = u->spec;
    for (auto& e : r.usage.entries)
      if (e.name == x) e = susp;
  }
  // an already-suspended entry (from an inner region) passes through
  return r;
}

// ---------------------------------------------------------------------------
// Generalization

namespace {

void free_vars_env(InferCtx& ctx, const TypeEnv& env, std::set<int>& kv, std::set<int>& tv) {
  for (auto& b : env.bindings) {
    switch (b.mode) {
      case Binding::Mode::Regular:
      case Binding::Mode::Suspended:
      case Binding::Mode::Borrow: {
        TypeScheme s = ctx.psi.apply(b.scheme);
        std::vector<int> k2, t2;
        free_vars_scheme(s, k2, t2);
        kv.insert(k2.begin(), k2.end());
        tv.insert(t2.begin(), t2.end());
        if (b.mode == Binding::Mode::Borrow) {
          Kind k = ctx.psi.resolve(b.kind);
          if (k.is_var()) kv.insert(k.var);
        }
        break;
      }
      case Binding::Mode::TypeVar: {
        tv.insert(b.tvar);
        Kind k = ctx.psi.resolve(b.kind);
        if (k.is_var()) kv.insert(k.var);
        break;
      }
      case Binding::Mode::TyCon:
        break;
    }
  }
  // kinds of free env type variables
  for (int v : std::vector<int>(tv.begin(), tv.end())) {
    auto it = ctx.tvar_kinds.find(v);
    if (it != ctx.tvar_kinds.end()) {
      Kind k = ctx.psi.resolve(it->second);
      if (k.is_var()) kv.insert(k.var);
    }
  }
}

}  // namespace

TypeScheme generalize(InferCtx& ctx, const TypeEnv& env, const TypePtr& type) {
  TypePtr body = ctx.psi.apply(type);
  Constraint solved = ctx.psi.apply(ctx.solved);

  std::set<int> env_k, env_t;
  free_vars_env(ctx, env, env_k, env_t);

  std::vector<int> body_t, body_k;
  free_tvars_type(body, body_t);
  free_kvars_type(body, body_k);
  std::vector<int> ctr_k, ctr_t;
  free_vars_constraint(solved, ctr_k, ctr_t);

  std::set<int> q_t;
  for (int v : body_t)
    if (!env_t.count(v)) q_t.insert(v);

  std::set<int> q_k;
  for (int v : body_k)
    if (!env_k.count(v)) q_k.insert(v);
  for (int v : ctr_k)
    if (!env_k.count(v)) q_k.insert(v);

  TypeScheme s;
  for (int v : q_t) {
    Kind bound = Kind::mk_const(Quality::Un, 0);
    if (auto it = ctx.tvar_kinds.find(v); it != ctx.tvar_kinds.end())
      bound = ctx.psi.resolve(it->second);
    if (bound.is_var() && !env_k.count(bound.var)) q_k.insert(bound.var);
    s.tvars.push_back({v, bound});
  }
  s.kvars.assign(q_k.begin(), q_k.end());
  std::sort(s.kvars.begin(), s.kvars.end());
  std::sort(s.tvars.begin(), s.tvars.end(), [](auto& a, auto& b) { return a.first < b.first; });
  s.body = body;
  for (auto& a : solved.kinds) {
    bool touches = (a.lhs.is_var() && q_k.count(a.lhs.var)) ||
                   (a.rhs.is_var() && q_k.count(a.rhs.var));
    if (touches) s.ctr.kinds.push_back(a);
  }

  // project the quantified variables out of the ambient constraint
  Constraint ambient = solved;
  ambient.exists_kvars.assign(q_k.begin(), q_k.end());
  ambient.exists_tvars.assign(q_t.begin(), q_t.end());
  NormalizeOutcome out = normalize(ambient, ctx.psi, ctx.fresh);
  if (auto* err = std::get_if<Unsatisfiable>(&out))
    throw InferFailure({ErrorClass::Internal, "generalization: " + err->reason, {}});
  auto& ok = std::get<NormalizeResult>(out);
  ctx.solved = ok.solved;
  ctx.psi = ok.subst;
  return s;
}

// ---------------------------------------------------------------------------
// Resource primitive schemes

TypeScheme builtin_prim_scheme(InferCtx& ctx, ElabExpr::Tag prim) {
  // create  : ('a : 'ka), ('ka <= un) => 'a -> 'a res
  // observe : &('k, 'a res) -> 'a
  // update  : &!('k, 'a res) -> 'a -{aff}> unit
  // destroy : 'a res -> unit
  int a = ctx.fresh.fresh_tvar();
  Kind ka = ctx.fresh_kvar();
  ctx.tvar_kinds[a] = ka;
  TypePtr tv = Type::mk_var(a);
  TypePtr res = Type::mk_app("res", {tv});
  TypeScheme s;
  s.tvars.push_back({a, ka});
  s.kvars.push_back(ka.var);
  s.ctr.add_kind(ka, un0());
  switch (prim) {
    case ElabExpr::Tag::Create:
      s.body = Type::mk_arrow(tv, un0(), res);
      break;
    case ElabExpr::Tag::Observe: {
      Kind k = ctx.fresh_kvar();
      s.kvars.push_back(k.var);
      s.body = Type::mk_arrow(Type::mk_borrow(BorrowSpec::Shared, k, res), un0(), tv);
      break;
    }
    case ElabExpr::Tag::Update: {
      Kind k = ctx.fresh_kvar();
      s.kvars.push_back(k.var);
      s.body = Type::mk_arrow(
          Type::mk_borrow(BorrowSpec::Exclusive, k, res), un0(),
          Type::mk_arrow(tv, Kind::mk_const(Quality::Aff, 0), app0("unit")));
      break;
    }
    case ElabExpr::Tag::Destroy:
      s.body = Type::mk_arrow(res, un0(), app0("unit"));
      break;
    default:
      throw InferFailure({ErrorClass::Internal, "not a primitive", {}});
  }
  return s;
}

// ---------------------------------------------------------------------------
// Inference proper

namespace {

struct Inferencer {
  InferCtx& ctx;

  InferOut run(const TypeEnv& env, const SExprPtr& e) {
    InferOut out = dispatch(env, e);
    out.elab->type = out.type;
    return out;
  }

  InferOut dispatch(const TypeEnv& env, const SExprPtr& e) {
    using T = SurfaceExpr::Tag;
    switch (e->tag) {
      case T::Const: return infer_const(e);
      case T::Var: return infer_var(env, e);
      case T::App: return infer_app(env, e);
      case T::Lam: return infer_lam(env, e);
      case T::Let: return infer_let(env, e);
      case T::Pair: return infer_pair(env, e);
      case T::Match: return infer_match(env, e);
      case T::Region: return infer_region(env, e);
      case T::Borrow: return infer_borrow(env, e, false);
      case T::ReBorrow: return infer_borrow(env, e, true);
      case T::Create: return infer_prim(env, e, ElabExpr::Tag::Create);
      case T::Observe: return infer_prim(env, e, ElabExpr::Tag::Observe);
      case T::Update: return infer_prim(env, e, ElabExpr::Tag::Update);
      case T::Destroy: return infer_prim(env, e, ElabExpr::Tag::Destroy);
    }
    throw InferFailure({ErrorClass::Internal, "unhandled expression", e->loc});
  }

  InferOut infer_const(const SExprPtr& e) {
    InferOut out;
    switch (e->cval.tag) {
      case ConstVal::Tag::Unit: out.type = app0("unit"); break;
      case ConstVal::Tag::Int: out.type = app0("int"); break;
      case ConstVal::Tag::String: out.type = app0("string"); break;
      default: throw InferFailure({ErrorClass::Internal, "constant kind", e->loc});
    }
    out.elab = ElabExpr::mk(ElabExpr::Tag::Const);
    out.elab->cval = e->cval;
    return out;
  }

  InferOut infer_var(const TypeEnv& env, const SExprPtr& e) {
    const Binding* b = env.lookup(e->var);
    if (!b)
      throw InferFailure({ErrorClass::Unbound, "unbound variable: " + e->var, e->loc});
    Instance inst = instantiate(ctx, b->scheme);
    normalize_ctx(ctx, inst.ctr, ErrorClass::KindMismatch, e->loc, "instantiation");
    InferOut out;
    out.type = inst.body;
    if (b->primitive) {
      // declared primitives are opaque constants at runtime
      out.elab = ElabExpr::mk(ElabExpr::Tag::Const);
      out.elab->cval.tag = ConstVal::Tag::Prim;
      out.elab->cval.str_val = e->var;
      return out;
    }
    UsageEntry u;
    u.mode = UsageEntry::Mode::Regular;
    u.name = e->var;
    u.scheme = b->scheme;
    out.usage.entries.push_back(u);
    if (b->scheme.mono()) {
      out.elab = ElabExpr::mk(ElabExpr::Tag::Var);
      out.elab->var = e->var;
    } else {
      out.elab = ElabExpr::mk(ElabExpr::Tag::VarInst);
      out.elab->var = e->var;
      out.elab->kind_args = inst.kind_args;
      out.elab->type_args = inst.type_args;
    }
    return out;
  }

  InferOut infer_prim(const TypeEnv& env, const SExprPtr& e, ElabExpr::Tag prim) {
    (void)env;
    TypeScheme s = builtin_prim_scheme(ctx, prim);
    Instance inst = instantiate(ctx, s);
    normalize_ctx(ctx, inst.ctr, ErrorClass::KindMismatch, e->loc, "resource primitive");
    InferOut out;
    out.type = inst.body;
    out.elab = ElabExpr::mk(prim);
    return out;
  }

  InferOut infer_lam(const TypeEnv& env, const SExprPtr& e) {
    Kind k_arrow = ctx.fresh_kvar();
    Kind k_param = ctx.fresh_kvar();
    int a = ctx.fresh_tvar(k_param);
    TypeEnv env2 = env;
    env2.bind(Binding::regular(e->var, TypeScheme::of_type(Type::mk_var(a))));
    InferOut body = run(env2, e->a);

    UsageEnv captured = body.usage;
    captured.remove(e->var);
    Constraint d = env_leq_constraint(ctx, env, captured, k_arrow);
    d.conjoin(weaken(ctx, env, e->var, TypeScheme::of_type(Type::mk_var(a)), body.usage));
    normalize_ctx(ctx, d, ErrorClass::Linearity, e->loc, "lambda");

    InferOut out;
    out.usage = captured;
    out.type = Type::mk_arrow(Type::mk_var(a), k_arrow, body.type);
    out.elab = ElabExpr::mk(ElabExpr::Tag::Lam);
    out.elab->kind = k_arrow;
    out.elab->var = e->var;
    out.elab->a = body.elab;
    return out;
  }

  InferOut infer_app(const TypeEnv& env, const SExprPtr& e) {
    InferOut f = run(env, e->a);
    InferOut arg = run(env, e->b);
    Kind k = ctx.fresh_kvar();
    Kind k_res = ctx.fresh_kvar();
    int alpha = ctx.fresh_tvar(k_res);
    SplitResult sp = split_infer(ctx, f.usage, arg.usage);
    Constraint d = sp.ctr;
    d.add_type(f.type, Type::mk_arrow(arg.type, k, Type::mk_var(alpha)));
    normalize_ctx(ctx, d, classify_split(sp, ErrorClass::TypeMismatch), e->loc, "application");
    InferOut out;
    out.usage = std::move(sp.merged);
    out.type = Type::mk_var(alpha);
    out.elab = ElabExpr::mk(ElabExpr::Tag::App);
    out.elab->split = std::move(sp.tags);
    out.elab->a = f.elab;
    out.elab->b = arg.elab;
    return out;
  }

  ErrorClass classify_split(const SplitResult& sp, ErrorClass dflt) {
    if (sp.ctr.falsum) return ErrorClass::BorrowError;
    if (!sp.ctr.kinds.empty()) return ErrorClass::Linearity;
    return dflt;
  }

  InferOut infer_pair(const TypeEnv& env, const SExprPtr& e) {
    InferOut l = run(env, e->a);
    InferOut r = run(env, e->b);
    SplitResult sp = split_infer(ctx, l.usage, r.usage);
    Kind kp = ctx.fresh_kvar();
    Constraint d = sp.ctr;
    auto [c1, k1] = infer_kind(ctx, env, l.type);
    auto [c2, k2] = infer_kind(ctx, env, r.type);
    d.conjoin(c1);
    d.conjoin(c2);
    d.add_kind(k1, kp);
    d.add_kind(k2, kp);
    normalize_ctx(ctx, d, classify_split(sp, ErrorClass::KindMismatch), e->loc, "pair");
    InferOut out;
    out.usage = std::move(sp.merged);
    out.type = Type::mk_pair(l.type, r.type);
    out.elab = ElabExpr::mk(ElabExpr::Tag::Pair);
    out.elab->kind = kp;
    out.elab->split = std::move(sp.tags);
    out.elab->a = l.elab;
    out.elab->b = r.elab;
    return out;
  }

  InferOut infer_let(const TypeEnv& env, const SExprPtr& e) {
    InferOut rhs = run(env, e->a);
    bool poly = rhs.elab->tag == ElabExpr::Tag::Lam;
    TypeScheme scheme;
    if (poly) {
      scheme = generalize(ctx, env, rhs.type);
    } else {
      scheme = TypeScheme::of_type(ctx.psi.apply(rhs.type));
    }
    TypeEnv env2 = env;
    env2.bind(Binding::regular(e->var, scheme));
    InferOut body = run(env2, e->b);

    Constraint d = weaken(ctx, env, e->var, scheme, body.usage);
    UsageEnv body_usage = body.usage;
    body_usage.remove(e->var);
    SplitResult sp = split_infer(ctx, rhs.usage, body_usage);
    d.conjoin(sp.ctr);
    normalize_ctx(ctx, d, classify_split(sp, ErrorClass::Linearity), e->loc, "let");

    InferOut out;
    out.usage = std::move(sp.merged);
    out.type = body.type;
    if (poly) {
      out.elab = ElabExpr::mk(ElabExpr::Tag::PolyLet);
      out.elab->var = e->var;
      out.elab->var2 = rhs.elab->var;  // the lambda parameter
      out.elab->scheme = scheme;
      out.elab->kind = rhs.elab->kind;
      out.elab->split = std::move(sp.tags);
      out.elab->a = rhs.elab->a;  // the lambda body
      out.elab->b = body.elab;
    } else {
      out.elab = ElabExpr::mk(ElabExpr::Tag::Let);
      out.elab->var = e->var;
      out.elab->split = std::move(sp.tags);
      out.elab->a = rhs.elab;
      out.elab->b = body.elab;
    }
    return out;
  }

  InferOut infer_match(const TypeEnv& env, const SExprPtr& e) {
    InferOut scrut = run(env, e->a);
    Kind kx = ctx.fresh_kvar(), ky = ctx.fresh_kvar();
    int ax = ctx.fresh_tvar(kx), ay = ctx.fresh_tvar(ky);
    TypePtr tx = Type::mk_var(ax), ty = Type::mk_var(ay);
    TypePtr expected = Type::mk_pair(tx, ty);
    if (e->mspec) {
      Kind km = ctx.fresh_kvar();
      expected = Type::mk_borrow(*e->mspec, km, expected);
      tx = Type::mk_borrow(*e->mspec, km, tx);
      ty = Type::mk_borrow(*e->mspec, km, ty);
    }
    TypeEnv env2 = env;
    env2.bind(Binding::regular(e->var, TypeScheme::of_type(tx)));
    env2.bind(Binding::regular(e->var2, TypeScheme::of_type(ty)));
    InferOut body = run(env2, e->b);

    Constraint d;
    d.add_type(scrut.type, expected);
    d.conjoin(weaken(ctx, env, e->var, TypeScheme::of_type(tx), body.usage));
    d.conjoin(weaken(ctx, env, e->var2, TypeScheme::of_type(ty), body.usage));
    UsageEnv body_usage = body.usage;
    body_usage.remove(e->var);
    body_usage.remove(e->var2);
    SplitResult sp = split_infer(ctx, scrut.usage, body_usage);
    d.conjoin(sp.ctr);
    normalize_ctx(ctx, d, classify_split(sp, ErrorClass::TypeMismatch), e->loc, "match");

    InferOut out;
    out.usage = std::move(sp.merged);
    out.type = body.type;
    out.elab = ElabExpr::mk(ElabExpr::Tag::Match);
    out.elab->mspec = e->mspec;
    out.elab->var = e->var;
    out.elab->var2 = e->var2;
    out.elab->split = std::move(sp.tags);
    out.elab->a = scrut.elab;
    out.elab->b = body.elab;
    return out;
  }

  InferOut infer_region(const TypeEnv& env, const SExprPtr& e) {
    if (!e->has_var)
      throw InferFailure(
          {ErrorClass::Internal, "region marker reached inference unannotated", e->loc});
    InferOut body = run(env, e->a);
    Kind borrow_kind;
    bool have_borrow = false;
    if (const UsageEntry* u = body.usage.find(e->var);
        u && u->mode == UsageEntry::Mode::Borrow) {
      borrow_kind = u->kind;
      have_borrow = true;
    }
    RegionResult rr = region_infer(ctx, e->var, e->bspec, e->level, body.usage);
    Constraint d = rr.ctr;
    auto [ck, kt] = infer_kind(ctx, env, ctx.psi.apply(body.type));
    d.conjoin(ck);
    if (e->level == 0 || e->level > kLevelMax)
      throw InferFailure({ErrorClass::Internal, "region level out of range", e->loc});
    d.add_kind(kt, Kind::mk_const(Quality::Lin, e->level - 1));
    normalize_ctx(ctx, d, ErrorClass::RegionEscape, e->loc, "region");

    InferOut out;
    out.usage = std::move(rr.usage);
    out.type = body.type;
    out.elab = ElabExpr::mk(ElabExpr::Tag::Region);
    out.elab->var = e->var;
    out.elab->bspec = e->bspec;
    out.elab->level = e->level;
    if (have_borrow) out.elab->kind = borrow_kind;  // the borrow binding's kind
    out.elab->a = body.elab;
    return out;
  }

  InferOut infer_borrow(const TypeEnv& env, const SExprPtr& e, bool reborrow) {
    const Binding* b = env.lookup(e->var);
    if (!b)
      throw InferFailure({ErrorClass::Unbound, "unbound variable: " + e->var, e->loc});
    if (b->primitive)
      throw InferFailure({ErrorClass::BorrowError, "cannot borrow a primitive", e->loc});
    Instance inst = instantiate(ctx, b->scheme);
    Kind k = ctx.fresh_kvar();
    Constraint d = inst.ctr;
    TypePtr inner;
    if (reborrow) {
      Kind ki = ctx.fresh_kvar();
      int ai = ctx.fresh_tvar(ki);
      inner = Type::mk_var(ai);
      d.add_type(inst.body, Type::mk_borrow(e->bspec, k, inner));
    } else {
      inner = inst.body;
    }
    normalize_ctx(ctx, d, reborrow ? ErrorClass::BorrowError : ErrorClass::KindMismatch,
                  e->loc, reborrow ? "reborrow" : "borrow");
    InferOut out;
    UsageEntry u;
    u.mode = UsageEntry::Mode::Borrow;
    u.name = e->var;
    u.scheme = TypeScheme::of_type(inner);
    u.spec = e->bspec;
    u.kind = k;
    out.usage.entries.push_back(u);
    out.type = Type::mk_borrow(e->bspec, k, inner);
    out.elab = ElabExpr::mk(reborrow ? ElabExpr::Tag::ReBorrow : ElabExpr::Tag::Borrow);
    out.elab->bspec = e->bspec;
    out.elab->var = e->var;
    return out;
  }
};

}  // namespace

InferOut infer(InferCtx& ctx, const TypeEnv& env, const SExprPtr& e) {
  Inferencer inf{ctx};
  InferOut out = inf.run(env, e);
  return out;
}

// ---------------------------------------------------------------------------
// Final substitution over the elaborated tree

namespace {

void finalize_rec(InferCtx& ctx, const std::shared_ptr<ElabExpr>& e, int& next) {
  if (!e) return;
  e->node_id = next++;
  e->kind = ctx.psi.resolve(e->kind);
  for (auto& k : e->kind_args) k = ctx.psi.resolve(k);
  for (auto& t : e->type_args) t = ctx.psi.apply(t);
  if (e->tag == ElabExpr::Tag::PolyLet) e->scheme = ctx.psi.apply(e->scheme);
  if (e->type) e->type = ctx.psi.apply(e->type);
  finalize_rec(ctx, e->a, next);
  finalize_rec(ctx, e->b, next);
}

}  // namespace

int finalize_elab(InferCtx& ctx, const std::shared_ptr<ElabExpr>& e) {
  int next = ctx.next_node;
  finalize_rec(ctx, e, next);
  ctx.next_node = next;
  return next;
}

}  // namespace affe
