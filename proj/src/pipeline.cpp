#include "affe/pipeline.hpp"

#include <set>
#include <stdexcept>

#include "affe/constraint.hpp"
#include "affe/printer.hpp"
#include "affe/region.hpp"

namespace affe {

TypeEnv builtin_env() {
  TypeEnv env;
  auto base_con = [&](const std::string& name) {
    KindScheme ks;
    ks.result = Kind::mk_const(Quality::Un, 0);
    env.bind(Binding::ty_con(name, ks));
  };
  base_con("int");
  base_con("string");
  base_con("unit");
  {
    // type ('a : 'k) res : lin
    KindScheme ks;
    ks.kvars.push_back(1 << 30);  // a reserved id, never collides with run ids
    ks.args.push_back(Kind::mk_var(1 << 30));
    ks.result = Kind::mk_const(Quality::Lin, 0);
    env.bind(Binding::ty_con("res", ks));
  }
  return env;
}

void load_prelude(TypeEnv& env, const std::vector<Declaration>& decls) {
  for (auto& d : decls) {
    if (d.kind == Declaration::Kind::TyCon)
      env.bind(Binding::ty_con(d.name, d.kscheme));
    else
      env.bind(Binding::regular(d.name, d.scheme, /*prim=*/true));
  }
}

void Pipeline::load_declarations(const std::vector<Declaration>& decls) {
  load_prelude(env, decls);
  n_base = env.bindings.size();
}

namespace {

// Shadowing binders are renamed apart so that environments keep unique
// subjects and regions target unambiguous variables.
struct Renamer {
  std::set<std::string> taken;
  int counter = 0;

  std::string freshen(const std::string& x) {
    if (taken.insert(x).second) return x;
    std::string r;
    do {
      r = x + "$" + std::to_string(++counter);
    } while (!taken.insert(r).second);
    return r;
  }

  SExprPtr rename(const SExprPtr& e, std::map<std::string, std::string> scope) {
    if (!e) return e;
    using T = SurfaceExpr::Tag;
    auto n = std::make_shared<SurfaceExpr>(*e);
    auto mapped = [&](const std::string& x) {
      auto it = scope.find(x);
      return it != scope.end() ? it->second : x;
    };
    switch (e->tag) {
      case T::Var:
      case T::Borrow:
      case T::ReBorrow:
        n->var = mapped(e->var);
        return SExprPtr(n);
      case T::Lam: {
        std::string x = freshen(e->var);
        scope[e->var] = x;
        n->var = x;
        n->a = rename(e->a, scope);
        return SExprPtr(n);
      }
      case T::Let: {
        n->a = rename(e->a, scope);
        std::string x = freshen(e->var);
        scope[e->var] = x;
        n->var = x;
        n->b = rename(e->b, scope);
        return SExprPtr(n);
      }
      case T::Match: {
        n->a = rename(e->a, scope);
        std::string x = freshen(e->var);
        scope[e->var] = x;
        std::string y = freshen(e->var2);
        scope[e->var2] = y;
        n->var = x;
        n->var2 = y;
        n->b = rename(e->b, scope);
        return SExprPtr(n);
      }
      case T::Region:
        if (e->has_var) n->var = mapped(e->var);
        n->a = rename(e->a, scope);
        return SExprPtr(n);
      default:
        n->a = rename(e->a, scope);
        n->b = rename(e->b, scope);
        return SExprPtr(n);
    }
  }
};

int scheme_arity(const TypeScheme& s) {
  int n = 0;
  TypePtr t = s.body;
  while (t && t->tag == Type::Tag::Arrow) {
    n++;
    t = t->right;
  }
  return n;
}

void stamp_prim_arities(const std::shared_ptr<ElabExpr>& e, const TypeEnv& env) {
  if (!e) return;
  if (e->tag == ElabExpr::Tag::Const && e->cval.tag == ConstVal::Tag::Prim) {
    if (const Binding* b = env.lookup(e->cval.str_val))
      e->cval.int_val = scheme_arity(b->scheme);
  }
  stamp_prim_arities(e->a, env);
  stamp_prim_arities(e->b, env);
}

void apply_subst_elab(const std::shared_ptr<ElabExpr>& e, const Subst& s) {
  if (!e) return;
  e->kind = s.resolve(e->kind);
  for (auto& k : e->kind_args) k = s.resolve(k);
  for (auto& t : e->type_args) t = s.apply(t);
  if (e->tag == ElabExpr::Tag::PolyLet) e->scheme = s.apply(e->scheme);
  if (e->type) e->type = s.apply(e->type);
  apply_subst_elab(e->a, s);
  apply_subst_elab(e->b, s);
}

void elab_free_vars(const EExprPtr& e, std::set<std::string>& bound,
                    std::set<std::string>& out) {
  if (!e) return;
  using T = ElabExpr::Tag;
  switch (e->tag) {
    case T::Var:
    case T::VarInst:
    case T::Borrow:
    case T::ReBorrow:
      if (!bound.count(e->var)) out.insert(e->var);
      return;
    case T::Lam: {
      bool fresh = bound.insert(e->var).second;
      elab_free_vars(e->a, bound, out);
      if (fresh) bound.erase(e->var);
      return;
    }
    case T::Let: {
      elab_free_vars(e->a, bound, out);
      bool fresh = bound.insert(e->var).second;
      elab_free_vars(e->b, bound, out);
      if (fresh) bound.erase(e->var);
      return;
    }
    case T::PolyLet: {
      bool fp = bound.insert(e->var2).second;
      elab_free_vars(e->a, bound, out);
      if (fp) bound.erase(e->var2);
      bool ff = bound.insert(e->var).second;
      elab_free_vars(e->b, bound, out);
      if (ff) bound.erase(e->var);
      return;
    }
    case T::Match: {
      elab_free_vars(e->a, bound, out);
      bool fx = bound.insert(e->var).second;
      bool fy = bound.insert(e->var2).second;
      elab_free_vars(e->b, bound, out);
      if (fy) bound.erase(e->var2);
      if (fx) bound.erase(e->var);
      return;
    }
    case T::Region: {
      elab_free_vars(e->a, bound, out);
      if (!bound.count(e->var)) out.insert(e->var);
      return;
    }
    default:
      elab_free_vars(e->a, bound, out);
      elab_free_vars(e->b, bound, out);
      return;
  }
}

}  // namespace

ProcessedBinding& Pipeline::process(const std::string& name, const SExprPtr& body) {
  Renamer renamer;
  for (auto& b : env.bindings) renamer.taken.insert(b.name);
  SExprPtr renamed = renamer.rename(body, {});
  SExprPtr annotated = annotate_program(renamed);
  auto violations = validate_annotation(annotated);
  if (!violations.empty())
    throw InferFailure({ErrorClass::Internal,
                        "region annotation invalid: " + violations.front().message, {}});

  InferCtx ctx(fresh, env);
  ctx.next_node = next_node;
  InferOut out = infer(ctx, env, annotated);

  ProcessedBinding pb;
  pb.name = name;
  pb.annotated = annotated;
  pb.elab = out.elab;
  pb.poly = out.elab->tag == ElabExpr::Tag::Lam;

  if (pb.poly) {
    pb.raw_scheme = generalize(ctx, env, out.type);
  } else {
    pb.raw_scheme = TypeScheme::of_type(ctx.psi.apply(out.type));
  }
  finalize_elab(ctx, pb.elab);
  next_node = ctx.next_node;

  pb.solved = ctx.solved;
  stamp_prim_arities(pb.elab, env);

  // validate the raw elaboration against the internal rules before the
  // display simplification rewrites its annotations
  if (cross_check) {
    TypeEnv check_env = env;
    Constraint c = ctx.solved;
    if (pb.poly) {
      c.conjoin(pb.raw_scheme.ctr);
      for (auto& [tv, k] : pb.raw_scheme.tvars)
        check_env.bind(Binding::type_var(tv, k));
    }
    check_internal(ctx, c, check_env, pb.elab, &table, n_base);
  }

  pb.display_scheme = pb.raw_scheme;
  if (simplify && pb.poly) {
    Subst applied;
    pb.display_scheme = simplify_variance(pb.raw_scheme, fresh, &applied);
    if (!applied.kvars.empty() || !applied.tvars.empty())
      apply_subst_elab(pb.elab, applied);
  }

  env.bind(Binding::regular(name, pb.display_scheme));
  bindings.push_back(std::move(pb));
  return bindings.back();
}

void Pipeline::process_program(const Program& prog) {
  load_declarations(prog.decls);
  for (auto& b : prog.bindings) process(b.name, b.body);
}

EvalRun eval_pipeline(const Pipeline& p, uint64_t fuel, Monitor* monitor, bool want_trace) {
  EvalRun run;
  TraceSink sink;
  run.outcome = Outcome::ok(Store{}, Permission{}, Value::mk_unit());
  for (auto& b : p.bindings) {
    if (b.poly) {
      Storable pc;
      pc.tag = Storable::Tag::PolyClosure;
      {
        std::set<std::string> bound{b.elab->var}, free;
        elab_free_vars(b.elab->a, bound, free);
        for (auto& x : free)
          if (const Result* v = run.env.find(x)) pc.env.vars[x] = *v;
      }
      pc.kvars = b.display_scheme.kvars;
      for (auto& [tv, k] : b.display_scheme.tvars) {
        (void)k;
        pc.tvars.push_back(tv);
      }
      pc.ctr = b.display_scheme.ctr;
      pc.kind = b.elab->kind;
      pc.param = b.elab->var;
      pc.body = b.elab->a;
      Loc l = salloc(run.store, std::move(pc));
      run.perm.add({l, {}});
      run.env.vars[b.name] = Value::mk_addr({l, {}});
      run.outcome = Outcome::ok(run.store, run.perm, run.env.vars[b.name]);
      continue;
    }
    Outcome o = eval(run.store, run.perm, run.env, fuel, b.elab, monitor,
                     want_trace ? &sink : nullptr);
    if (!o.is_ok()) {
      run.outcome = std::move(o);
      run.trace = sink.text;
      return run;
    }
    run.store = o.store;
    run.perm = o.perm;
    run.env.vars[b.name] = o.result;
    run.outcome = std::move(o);
  }
  run.trace = sink.text;
  return run;
}

}  // namespace affe
