#include "affe/check.hpp"

#include <algorithm>
#include <set>

#include "affe/printer.hpp"

namespace affe {

namespace {

Kind aff_inf() { return Kind::mk_const(Quality::Aff, kLevelInf); }
Kind un_inf() { return Kind::mk_const(Quality::Un, kLevelInf); }

Quality spec_quality(BorrowSpec b) {
  return b == BorrowSpec::Shared ? Quality::Un : Quality::Aff;
}

// One environment entry as threaded by the checker.
struct CEntry {
  enum class Mode { Regular, Suspended, Borrow };
  Mode mode;
  std::string name;
  TypeScheme scheme;
  BorrowSpec spec = BorrowSpec::Shared;
  Level level = 0;
  Kind kind;      // Borrow
  bool global = false;
};

struct CEnv {
  std::vector<CEntry> entries;
  const CEntry* find(const std::string& x) const {
    for (auto it = entries.rbegin(); it != entries.rend(); ++it)
      if (it->name == x) return &*it;
    return nullptr;
  }
};

// the first region node for `x` in preorder, not crossing a binder for x
const ElabExpr* find_region(const EExprPtr& e, const std::string& x) {
  if (!e) return nullptr;
  using T = ElabExpr::Tag;
  switch (e->tag) {
    case T::Region:
      if (e->var == x) return e.get();
      break;
    case T::Lam:
      if (e->var == x) return nullptr;
      break;
    case T::Let:
    case T::PolyLet:
      if (const ElabExpr* r = find_region(e->a, x)) return r;
      if (e->var == x) return nullptr;
      return find_region(e->b, x);
    case T::Match:
      if (const ElabExpr* r = find_region(e->a, x)) return r;
      if (e->var == x || e->var2 == x) return nullptr;
      return find_region(e->b, x);
    default:
      break;
  }
  if (const ElabExpr* r = find_region(e->a, x)) return r;
  return find_region(e->b, x);
}

struct Checker {
  InferCtx& ctx;
  Constraint assumptions;  // solved constraint + region-introduced bounds
  MonitorTable* table;
  std::map<int, Kind> local_tvar_kinds;  // PolyLet-bound type variables

  bool holds(const KindLeq& goal) { return entails(assumptions, goal); }

  // C |- exists(vars). D, decided by projecting the existentials out of D
  // and entailing the residue.
  bool holds_exist(Constraint d) {
    FreshSource scratch = ctx.fresh;  // local names; not threaded
    NormalizeOutcome out = normalize(d, Subst{}, scratch);
    if (std::holds_alternative<Unsatisfiable>(out)) return false;
    auto& ok = std::get<NormalizeResult>(out);
    return entails_all(assumptions, ok.solved);
  }

  Kind tvar_kind(int v) {
    if (auto it = local_tvar_kinds.find(v); it != local_tvar_kinds.end()) return it->second;
    if (auto it = ctx.tvar_kinds.find(v); it != ctx.tvar_kinds.end())
      return ctx.psi.resolve(it->second);
    throw CheckError("Kinding", "unknown type variable");
  }

  // kinding goal: some kind k with C |- tau : k and k <= bound
  void require_kind_leq(const TypePtr& t0, Kind bound, const char* rule) {
    TypePtr t = ctx.psi.resolve_head(t0);
    switch (t->tag) {
      case Type::Tag::Var:
        if (!holds({tvar_kind(t->var), bound}))
          throw CheckError(rule, "type variable kind exceeds the bound");
        return;
      case Type::Tag::Arrow:
      case Type::Tag::Borrow:
        if (!holds({ctx.psi.resolve(t->kind), bound}))
          throw CheckError(rule, "tag kind exceeds the bound");
        return;
      case Type::Tag::Pair:
        require_kind_leq(t->left, bound, rule);
        require_kind_leq(t->right, bound, rule);
        return;
      case Type::Tag::App: {
        const Binding* con = ctx.globals.lookup_tycon(t->con);
        if (!con) throw CheckError(rule, "unknown type constructor " + t->con);
        // instantiate the kind scheme existentially
        Constraint d;
        Subst ren;
        std::vector<int> ex;
        for (int kv : con->kscheme.kvars) {
          Kind f = ctx.fresh_kvar();
          ren.kvars[kv] = f;
          ex.push_back(f.var);
        }
        d = ren.apply(con->kscheme.ctr);
        if (con->kscheme.args.size() != t->args.size())
          throw CheckError(rule, "constructor arity mismatch");
        for (size_t i = 0; i < t->args.size(); i++) {
          Kind want = ren.resolve(con->kscheme.args[i]);
          kind_eq_arg(t->args[i], want, d, ex, rule);
        }
        d.add_kind(ren.resolve(con->kscheme.result), bound);
        d.exists_kvars = ex;
        if (!holds_exist(d)) throw CheckError(rule, "constructor kind exceeds the bound");
        return;
      }
    }
  }

  // argument kinds are invariant: collect `kind(t) = want` into d
  void kind_eq_arg(const TypePtr& t0, Kind want, Constraint& d, std::vector<int>& ex,
                   const char* rule) {
    TypePtr t = ctx.psi.resolve_head(t0);
    Kind k;
    switch (t->tag) {
      case Type::Tag::Var: k = tvar_kind(t->var); break;
      case Type::Tag::Arrow:
      case Type::Tag::Borrow: k = ctx.psi.resolve(t->kind); break;
      case Type::Tag::Pair: {
        // any upper bound of the components
        Kind f = ctx.fresh_kvar();
        ex.push_back(f.var);
        auto [c1, k1] = infer_kind(ctx, ctx.globals, t->left);
        auto [c2, k2] = infer_kind(ctx, ctx.globals, t->right);
        d.conjoin(c1);
        d.conjoin(c2);
        d.add_kind(k1, f);
        d.add_kind(k2, f);
        k = f;
        break;
      }
      case Type::Tag::App: {
        auto [c, ka] = infer_kind(ctx, ctx.globals, t);
        d.conjoin(c);
        k = ka;
        break;
      }
      default:
        throw CheckError(rule, "unexpected type");
    }
    d.add_kind(k, want);
    d.add_kind(want, k);
  }

  // scheme <= bound, existentially over the scheme's instantiation
  void require_scheme_leq(const TypeScheme& s, Kind bound, const char* rule) {
    Instance inst = instantiate(ctx, s);
    Constraint d = inst.ctr;
    auto [ck, k] = infer_kind(ctx, ctx.globals, inst.body);
    d.conjoin(ck);
    d.add_kind(k, bound);
    for (auto& ka : inst.kind_args) d.exists_kvars.push_back(ka.var);
    for (auto& ta : inst.type_args) d.exists_tvars.push_back(ta->var);
    if (!holds_exist(d)) throw CheckError(rule, "binding kind exceeds the bound");
  }

  // subtyping side condition between concrete (post-substitution) types
  bool subtype(const TypePtr& a0, const TypePtr& b0) {
    TypePtr a = ctx.psi.resolve_head(a0), b = ctx.psi.resolve_head(b0);
    if (a->tag != b->tag) return false;
    switch (a->tag) {
      case Type::Tag::Var:
        return a->var == b->var;
      case Type::Tag::App: {
        if (a->con != b->con || a->args.size() != b->args.size()) return false;
        for (size_t i = 0; i < a->args.size(); i++)
          if (!type_equal(ctx.psi.apply(a->args[i]), ctx.psi.apply(b->args[i])))
            return false;
        return true;
      }
      case Type::Tag::Pair:
        return subtype(a->left, b->left) && subtype(a->right, b->right);
      case Type::Tag::Arrow:
        return holds({ctx.psi.resolve(a->kind), ctx.psi.resolve(b->kind)}) &&
               subtype(b->left, a->left) && subtype(a->right, b->right);
      case Type::Tag::Borrow:
        return a->spec == b->spec &&
               holds({ctx.psi.resolve(a->kind), ctx.psi.resolve(b->kind)}) &&
               subtype(a->left, b->left);
    }
    return false;
  }

  void record(const CEnv& env, const ElabExpr& node) {
    if (!table) return;
    if (node.node_id < 0) return;
    if (static_cast<int>(table->size()) <= node.node_id) table->resize(node.node_id + 1);
    NodeEnvClass& cls = (*table)[node.node_id];
    for (auto& e : env.entries) {
      PartClass c;
      switch (e.mode) {
        case CEntry::Mode::Borrow:
          c = e.spec == BorrowSpec::Shared ? PartClass::Immut : PartClass::Mut;
          break;
        case CEntry::Mode::Suspended:
          c = e.spec == BorrowSpec::Shared ? PartClass::SuspUn : PartClass::SuspAff;
          break;
        case CEntry::Mode::Regular: {
          if (scheme_linear(e.scheme)) c = PartClass::Active;
          else if (scheme_affine(e.scheme)) c = PartClass::Mut;
          else c = PartClass::Immut;
          break;
        }
      }
      cls.vars[e.name] = c;
    }
  }

  bool scheme_bound_unsat(const TypeScheme& s, Kind bound) {
    Instance inst = instantiate(ctx, s);
    Constraint d = assumptions;
    d.conjoin(inst.ctr);
    auto [ck, k] = infer_kind(ctx, ctx.globals, inst.body);
    d.conjoin(ck);
    d.add_kind(k, bound);
    return !satisfiable(d);
  }

  bool scheme_linear(const TypeScheme& s) { return scheme_bound_unsat(s, aff_inf()); }
  bool scheme_affine(const TypeScheme& s) { return scheme_bound_unsat(s, un_inf()); }

  // droppability of entries silently dropped at a split or left at a leaf
  void require_droppable(const CEntry& e, const char* rule) {
    if (e.global) return;
    switch (e.mode) {
      case CEntry::Mode::Regular:
        require_scheme_leq(e.scheme, aff_inf(), rule);
        return;
      case CEntry::Mode::Borrow:
        if (!holds({e.kind, aff_inf()}))
          throw CheckError(rule, "borrow kind not droppable");
        return;
      case CEntry::Mode::Suspended:
        throw CheckError(rule, "suspended binding discarded");
    }
  }

  void leaf_weaken(const CEnv& env, const std::string& subject, const char* rule) {
    for (auto& e : env.entries)
      if (e.name != subject) require_droppable(e, rule);
  }

  // distribute the environment along the splitting evidence
  std::pair<CEnv, CEnv> split_env(const CEnv& env, const Splitting& sp, const EExprPtr& l_tree,
                                  const EExprPtr& r_tree, const char* rule) {
    CEnv l, r;
    for (auto& e : env.entries) {
      const SplitTag* tag = sp.find(e.name);
      if (!tag) {
        require_droppable(e, rule);
        continue;
      }
      switch (*tag) {
        case SplitTag::Both:
          if (e.mode != CEntry::Mode::Regular)
            throw CheckError(rule, "Both row over a non-regular binding");
          require_scheme_leq(e.scheme, Kind::mk_const(Quality::Un, 0), rule);
          l.entries.push_back(e);
          r.entries.push_back(e);
          break;
        case SplitTag::Borrow: {
          if (e.mode != CEntry::Mode::Borrow)
            throw CheckError(rule, "Borrow row over a non-borrow binding");
          if (e.spec == BorrowSpec::Exclusive && !holds({e.kind, un_inf()}))
            throw CheckError(rule, "exclusive borrow duplicated");
          l.entries.push_back(e);
          r.entries.push_back(e);
          break;
        }
        case SplitTag::Left:
          l.entries.push_back(e);
          break;
        case SplitTag::Right:
          r.entries.push_back(e);
          break;
        case SplitTag::Susp: {
          if (e.mode != CEntry::Mode::Regular)
            throw CheckError(rule, "Susp row over a non-regular binding");
          l.entries.push_back(make_suspended(e, l_tree, std::nullopt, rule));
          r.entries.push_back(e);
          break;
        }
        case SplitTag::SuspB: {
          if (e.mode != CEntry::Mode::Borrow)
            throw CheckError(rule, "SuspB row over a non-borrow binding");
          l.entries.push_back(make_suspended(e, l_tree, e.spec, rule));
          r.entries.push_back(e);
          break;
        }
        case SplitTag::SuspS: {
          if (e.mode != CEntry::Mode::Suspended)
            throw CheckError(rule, "SuspS row over a non-suspended binding");
          l.entries.push_back(make_suspended(e, l_tree, std::nullopt, rule));
          r.entries.push_back(e);
          break;
        }
      }
    }
    return {std::move(l), std::move(r)};
  }

  // derive the suspended binding for the left side of a Susp* row; its spec
  // and level come from the region that will convert it
  CEntry make_suspended(const CEntry& e, const EExprPtr& left_tree,
                        std::optional<BorrowSpec> bound, const char* rule) {
    CEntry s;
    s.mode = CEntry::Mode::Suspended;
    s.name = e.name;
    s.scheme = e.scheme;
    const ElabExpr* region = find_region(left_tree, e.name);
    if (region) {
      s.spec = region->bspec;
      s.level = region->level;
    } else if (e.mode == CEntry::Mode::Suspended) {
      s.spec = e.spec;
      s.level = e.level;
    } else {
      s.spec = BorrowSpec::Shared;
      s.level = 0;
    }
    if (bound && !spec_leq(s.spec, *bound))
      throw CheckError(rule, "suspended borrow incompatible with the later borrow");
    return s;
  }

  // ---- the checker -------------------------------------------------------

  TypePtr check(const CEnv& env, const EExprPtr& e) {
    record(env, *e);
    using T = ElabExpr::Tag;
    switch (e->tag) {
      case T::Const: {
        leaf_weaken(env, "", "Const");
        switch (e->cval.tag) {
          case ConstVal::Tag::Unit: return Type::mk_app("unit", {});
          case ConstVal::Tag::Int: return Type::mk_app("int", {});
          case ConstVal::Tag::String: return Type::mk_app("string", {});
          case ConstVal::Tag::Prim: {
            // declared primitive constant: its recorded instantiation is the
            // node type
            if (!e->type) throw CheckError("Const", "primitive without a type");
            return e->type;
          }
          default:
            throw CheckError("Const", "unexpected constant");
        }
      }

      case T::Var: {
        const CEntry* b = env.find(e->var);
        if (!b) throw CheckError("Var", "unbound variable " + e->var);
        if (b->mode != CEntry::Mode::Regular)
          throw CheckError("Var", "direct use of a non-regular binding " + e->var);
        if (!b->scheme.mono())
          throw CheckError("Var", "polymorphic variable used without instantiation");
        leaf_weaken(env, e->var, "Var");
        return b->scheme.body;
      }

      case T::VarInst: {
        const CEntry* b = env.find(e->var);
        if (!b) throw CheckError("VarInst", "unbound variable " + e->var);
        if (b->mode != CEntry::Mode::Regular)
          throw CheckError("VarInst", "instantiation of a non-regular binding");
        const TypeScheme& s = b->scheme;
        if (s.kvars.size() != e->kind_args.size() || s.tvars.size() != e->type_args.size())
          throw CheckError("VarInst", "instantiation arity mismatch");
        Subst inst;
        for (size_t i = 0; i < s.kvars.size(); i++) inst.kvars[s.kvars[i]] = e->kind_args[i];
        for (size_t i = 0; i < s.tvars.size(); i++)
          inst.tvars[s.tvars[i].first] = e->type_args[i];
        Constraint want = inst.apply(s.ctr);
        if (!entails_all(assumptions, want))
          throw CheckError("VarInst", "instantiated constraint not entailed");
        // instantiated type arguments have the kinds of their bounds
        for (size_t i = 0; i < s.tvars.size(); i++) {
          Kind bound = inst.resolve(s.tvars[i].second);
          require_kind_leq(e->type_args[i], bound, "VarInst");
        }
        leaf_weaken(env, e->var, "VarInst");
        return inst.apply(s.body);
      }

      case T::Lam: {
        if (!e->type) throw CheckError("Abs", "lambda without a type annotation");
        TypePtr ty = ctx.psi.resolve_head(e->type);
        if (ty->tag != Type::Tag::Arrow)
          throw CheckError("Abs", "lambda type is not an arrow");
        // capture constraint over the whole environment in scope
        for (auto& entry : env.entries) {
          if (entry.global) continue;
          switch (entry.mode) {
            case CEntry::Mode::Regular:
              require_scheme_leq(entry.scheme, e->kind, "Abs");
              break;
            case CEntry::Mode::Borrow:
              if (!holds({entry.kind, e->kind}))
                throw CheckError("Abs", "captured borrow exceeds the closure kind");
              break;
            case CEntry::Mode::Suspended:
              throw CheckError("Abs", "suspended binding captured");
          }
        }
        CEnv env2 = env;
        CEntry p;
        p.mode = CEntry::Mode::Regular;
        p.name = e->var;
        p.scheme = TypeScheme::of_type(ty->left);
        env2.entries.push_back(p);
        TypePtr body = check(env2, e->a);
        if (!subtype(body, ty->right))
          throw CheckError("Abs", "body type does not match the arrow");
        return Type::mk_arrow(ty->left, ctx.psi.resolve(e->kind), body);
      }

      case T::App: {
        auto [envl, envr] = split_env(env, e->split, e->a, e->b, "App");
        TypePtr f = ctx.psi.resolve_head(check(envl, e->a));
        if (f->tag != Type::Tag::Arrow)
          throw CheckError("App", "function type is not an arrow");
        TypePtr arg = check(envr, e->b);
        if (!subtype(arg, f->left))
          throw CheckError("App", "argument type not a subtype of the domain");
        return f->right;
      }

      case T::Pair: {
        auto [envl, envr] = split_env(env, e->split, e->a, e->b, "Pair");
        TypePtr t1 = check(envl, e->a);
        TypePtr t2 = check(envr, e->b);
        // the storable tag must bound both components
        Kind tag = ctx.psi.resolve(e->kind);
        require_kind_leq(t1, tag, "Pair");
        require_kind_leq(t2, tag, "Pair");
        return Type::mk_pair(t1, t2);
      }

      case T::Let: {
        auto [envl, envr] = split_env(env, e->split, e->a, e->b, "Let");
        TypePtr t1 = check(envl, e->a);
        CEnv env2 = envr;
        CEntry b;
        b.mode = CEntry::Mode::Regular;
        b.name = e->var;
        b.scheme = TypeScheme::of_type(t1);
        env2.entries.push_back(b);
        return check(env2, e->b);
      }

      case T::PolyLet: {
        auto [envl, envr] = split_env(env, e->split, e->a, e->b, "PLet");
        const TypeScheme& s = e->scheme;
        TypePtr arr = ctx.psi.resolve_head(s.body);
        if (arr->tag != Type::Tag::Arrow)
          throw CheckError("PLet", "poly-let scheme body is not an arrow");
        // exists(quantified). D must follow from the ambient constraint
        {
          Constraint d = s.ctr;
          d.exists_kvars = s.kvars;
          for (auto& [tv, k] : s.tvars) {
            (void)k;
            d.exists_tvars.push_back(tv);
          }
          if (!holds_exist(d))
            throw CheckError("PLet", "scheme constraint has no instance");
        }
        // check the function body under C and D with the quantified
        // variables held rigid
        Checker inner = *this;
        inner.assumptions.conjoin(s.ctr);
        for (auto& [tv, k] : s.tvars) inner.local_tvar_kinds[tv] = k;
        // capture constraint on the lambda environment
        for (auto& entry : envl.entries) {
          if (entry.global) continue;
          switch (entry.mode) {
            case CEntry::Mode::Regular:
              inner.require_scheme_leq(entry.scheme, e->kind, "PLet");
              break;
            case CEntry::Mode::Borrow:
              if (!inner.holds({entry.kind, e->kind}))
                throw CheckError("PLet", "captured borrow exceeds the closure kind");
              break;
            case CEntry::Mode::Suspended:
              throw CheckError("PLet", "suspended binding captured");
          }
        }
        CEnv env_f = envl;
        CEntry p;
        p.mode = CEntry::Mode::Regular;
        p.name = e->var2;
        p.scheme = TypeScheme::of_type(arr->left);
        env_f.entries.push_back(p);
        TypePtr body = inner.check(env_f, e->a);
        if (table && inner.table) *table = *inner.table;
        if (!inner.subtype(body, arr->right))
          throw CheckError("PLet", "function body does not match the scheme");
        CEnv env2 = envr;
        CEntry f;
        f.mode = CEntry::Mode::Regular;
        f.name = e->var;
        f.scheme = s;
        env2.entries.push_back(f);
        return check(env2, e->b);
      }

      case T::Match: {
        auto [envl, envr] = split_env(env, e->split, e->a, e->b, "MatchPair");
        TypePtr scrut = ctx.psi.resolve_head(check(envl, e->a));
        TypePtr tx, ty;
        if (!e->mspec) {
          if (scrut->tag != Type::Tag::Pair)
            throw CheckError("MatchPair", "scrutinee is not a pair");
          tx = scrut->left;
          ty = scrut->right;
        } else {
          if (scrut->tag != Type::Tag::Borrow || scrut->spec != *e->mspec)
            throw CheckError("MatchPair", "scrutinee is not a matching borrow");
          TypePtr inner = ctx.psi.resolve_head(scrut->left);
          if (inner->tag != Type::Tag::Pair)
            throw CheckError("MatchPair", "borrowed scrutinee is not a pair");
          tx = Type::mk_borrow(scrut->spec, scrut->kind, inner->left);
          ty = Type::mk_borrow(scrut->spec, scrut->kind, inner->right);
        }
        CEnv env2 = envr;
        CEntry bx, by;
        bx.mode = by.mode = CEntry::Mode::Regular;
        bx.name = e->var;
        bx.scheme = TypeScheme::of_type(tx);
        by.name = e->var2;
        by.scheme = TypeScheme::of_type(ty);
        env2.entries.push_back(bx);
        env2.entries.push_back(by);
        return check(env2, e->b);
      }

      case T::Region: {
        const CEntry* b = env.find(e->var);
        CEnv env2 = env;
        if (b) {
          if (b->mode == CEntry::Mode::Regular)
            throw CheckError("Region", "variable enters its own region as a regular binding");
          if (b->mode == CEntry::Mode::Suspended) {
            if (b->spec != e->bspec)
              throw CheckError("Region", "region spec does not match the suspension");
            // EBorrow-Binder: the node records the borrow binding's kind;
            // its bracket must be entailed
            Kind k = ctx.psi.resolve(e->kind);
            Quality q = spec_quality(e->bspec);
            if (!holds({Kind::mk_const(q, e->level), k}) ||
                !holds({k, Kind::mk_const(q, kLevelInf)}))
              throw CheckError("Region", "borrow kind bracket not entailed");
            for (auto& entry : env2.entries) {
              if (entry.name != e->var) continue;
              entry.mode = CEntry::Mode::Borrow;
              entry.spec = e->bspec;
              entry.kind = k;
            }
          }
          // a borrow binding from an enclosing region passes through
        }
        TypePtr t = check(env2, e->a);
        if (e->level == 0) throw CheckError("Region", "region level not assigned");
        require_kind_leq(t, Kind::mk_const(Quality::Lin, e->level - 1), "Region");
        return t;
      }

      case T::Borrow: {
        const CEntry* b = env.find(e->var);
        if (!b) throw CheckError("Borrow", "unbound variable " + e->var);
        if (b->mode != CEntry::Mode::Borrow || b->spec != e->bspec)
          throw CheckError("Borrow", "no matching borrow binding for " + e->var);
        leaf_weaken(env, e->var, "Borrow");
        if (!b->scheme.mono())
          throw CheckError("Borrow", "polymorphic borrow binding");
        return Type::mk_borrow(b->spec, b->kind, b->scheme.body);
      }

      case T::ReBorrow: {
        const CEntry* b = env.find(e->var);
        if (!b) throw CheckError("Reborrow", "unbound variable " + e->var);
        if (b->mode != CEntry::Mode::Borrow || b->spec != e->bspec)
          throw CheckError("Reborrow", "no matching borrow binding for " + e->var);
        leaf_weaken(env, e->var, "Reborrow");
        TypePtr inner = ctx.psi.resolve_head(b->scheme.body);
        if (inner->tag != Type::Tag::Borrow || inner->spec != e->bspec)
          throw CheckError("Reborrow", "target does not hold a matching borrow");
        return Type::mk_borrow(b->spec, b->kind, inner->left);
      }

      case T::Create:
      case T::Observe:
      case T::Update:
      case T::Destroy: {
        if (!e->type) throw CheckError("Resource", "primitive without a type");
        // the recorded instantiation; validate the content-kind condition
        TypePtr ty = ctx.psi.resolve_head(e->type);
        if (ty->tag != Type::Tag::Arrow)
          throw CheckError("Resource", "primitive type is not an arrow");
        leaf_weaken(env, "", "Resource");
        return e->type;
      }
    }
    throw CheckError("Internal", "unhandled elaborated node");
  }
};

}  // namespace

TypePtr check_internal(InferCtx& ctx, const Constraint& c, const TypeEnv& env,
                       const EExprPtr& e, MonitorTable* table, size_t n_globals) {
  Checker ck{ctx, c, table, {}};
  CEnv cenv;
  size_t i = 0;
  for (auto& b : env.bindings) {
    switch (b.mode) {
      case Binding::Mode::Regular: {
        CEntry en;
        en.mode = CEntry::Mode::Regular;
        en.name = b.name;
        en.scheme = ctx.psi.apply(b.scheme);
        en.global = i < n_globals;
        cenv.entries.push_back(en);
        break;
      }
      case Binding::Mode::Suspended: {
        CEntry en;
        en.mode = CEntry::Mode::Suspended;
        en.name = b.name;
        en.scheme = ctx.psi.apply(b.scheme);
        en.spec = b.spec;
        en.level = b.level;
        cenv.entries.push_back(en);
        break;
      }
      case Binding::Mode::Borrow: {
        CEntry en;
        en.mode = CEntry::Mode::Borrow;
        en.name = b.name;
        en.scheme = ctx.psi.apply(b.scheme);
        en.spec = b.spec;
        en.kind = ctx.psi.resolve(b.kind);
        cenv.entries.push_back(en);
        break;
      }
      case Binding::Mode::TypeVar:
        ck.local_tvar_kinds[b.tvar] = ctx.psi.resolve(b.kind);
        break;
      case Binding::Mode::TyCon:
        break;
    }
    i++;
  }
  return ck.check(cenv, e);
}

}  // namespace affe
