#include "affe/syntax.hpp"

#include <stdexcept>

namespace affe {

TypePtr Type::mk_var(int id) {
  auto t = std::make_shared<Type>();
  t->tag = Tag::Var;
  t->var = id;
  return t;
}

TypePtr Type::mk_app(std::string con, std::vector<TypePtr> args) {
  auto t = std::make_shared<Type>();
  t->tag = Tag::App;
  t->con = std::move(con);
  t->args = std::move(args);
  return t;
}

TypePtr Type::mk_pair(TypePtr l, TypePtr r) {
  auto t = std::make_shared<Type>();
  t->tag = Tag::Pair;
  t->left = std::move(l);
  t->right = std::move(r);
  return t;
}

TypePtr Type::mk_arrow(TypePtr dom, Kind k, TypePtr cod) {
  auto t = std::make_shared<Type>();
  t->tag = Tag::Arrow;
  t->left = std::move(dom);
  t->right = std::move(cod);
  t->kind = k;
  return t;
}

TypePtr Type::mk_borrow(BorrowSpec spec, Kind k, TypePtr inner) {
  auto t = std::make_shared<Type>();
  t->tag = Tag::Borrow;
  t->left = std::move(inner);
  t->kind = k;
  t->spec = spec;
  return t;
}

bool type_equal(const TypePtr& a, const TypePtr& b) {
  if (a == b) return true;
  if (!a || !b || a->tag != b->tag) return false;
  switch (a->tag) {
    case Type::Tag::Var:
      return a->var == b->var;
    case Type::Tag::App: {
      if (a->con != b->con || a->args.size() != b->args.size()) return false;
      for (size_t i = 0; i < a->args.size(); i++)
        if (!type_equal(a->args[i], b->args[i])) return false;
      return true;
    }
    case Type::Tag::Pair:
      return type_equal(a->left, b->left) && type_equal(a->right, b->right);
    case Type::Tag::Arrow:
      return a->kind == b->kind && type_equal(a->left, b->left) &&
             type_equal(a->right, b->right);
    case Type::Tag::Borrow:
      return a->spec == b->spec && a->kind == b->kind && type_equal(a->left, b->left);
  }
  return false;
}

void Constraint::conjoin(const Constraint& other) {
  kinds.insert(kinds.end(), other.kinds.begin(), other.kinds.end());
  types.insert(types.end(), other.types.begin(), other.types.end());
  exists_kvars.insert(exists_kvars.end(), other.exists_kvars.begin(), other.exists_kvars.end());
  exists_tvars.insert(exists_tvars.end(), other.exists_tvars.begin(), other.exists_tvars.end());
  falsum = falsum || other.falsum;
}

Constraint conjoin(Constraint a, const Constraint& b) {
  a.conjoin(b);
  return a;
}

void TypeEnv::bind(Binding b) {
  if (b.mode == Binding::Mode::TypeVar) {
    if (lookup_tvar(b.tvar))
      throw std::invalid_argument("duplicate type-variable binding");
  } else if (b.mode == Binding::Mode::TyCon) {
    if (lookup_tycon(b.name))
      throw std::invalid_argument("duplicate type constructor: " + b.name);
  } else {
    if (lookup(b.name))
      throw std::invalid_argument("duplicate binding: " + b.name);
  }
  bindings.push_back(std::move(b));
}

const Binding* TypeEnv::lookup(const std::string& x) const {
  for (auto it = bindings.rbegin(); it != bindings.rend(); ++it) {
    if (it->mode != Binding::Mode::TypeVar && it->mode != Binding::Mode::TyCon &&
        it->name == x)
      return &*it;
  }
  return nullptr;
}

const Binding* TypeEnv::lookup_tvar(int id) const {
  for (auto it = bindings.rbegin(); it != bindings.rend(); ++it)
    if (it->mode == Binding::Mode::TypeVar && it->tvar == id) return &*it;
  return nullptr;
}

const Binding* TypeEnv::lookup_tycon(const std::string& name) const {
  for (auto it = bindings.rbegin(); it != bindings.rend(); ++it)
    if (it->mode == Binding::Mode::TyCon && it->name == name) return &*it;
  return nullptr;
}

void TypeEnv::remove(const std::string& x) {
  for (auto it = bindings.begin(); it != bindings.end(); ++it) {
    if (it->mode != Binding::Mode::TypeVar && it->mode != Binding::Mode::TyCon &&
        it->name == x) {
      bindings.erase(it);
      return;
    }
  }
}

SExprPtr SurfaceExpr::mk(Tag t) {
  auto e = std::make_shared<SurfaceExpr>();
  e->tag = t;
  return e;
}

static std::shared_ptr<SurfaceExpr> mk_mut(SurfaceExpr::Tag t, SourceLoc loc) {
  auto e = std::make_shared<SurfaceExpr>();
  e->tag = t;
  e->loc = loc;
  return e;
}

SExprPtr s_const(ConstVal c, SourceLoc loc) {
  auto e = mk_mut(SurfaceExpr::Tag::Const, loc);
  e->cval = std::move(c);
  return e;
}

SExprPtr s_var(std::string x, SourceLoc loc) {
  auto e = mk_mut(SurfaceExpr::Tag::Var, loc);
  e->var = std::move(x);
  return e;
}

SExprPtr s_app(SExprPtr f, SExprPtr a, SourceLoc loc) {
  auto e = mk_mut(SurfaceExpr::Tag::App, loc);
  e->a = std::move(f);
  e->b = std::move(a);
  return e;
}

SExprPtr s_lam(std::string x, SExprPtr body, SourceLoc loc) {
  auto e = mk_mut(SurfaceExpr::Tag::Lam, loc);
  e->var = std::move(x);
  e->a = std::move(body);
  return e;
}

SExprPtr s_let(std::string x, SExprPtr e1, SExprPtr e2, SourceLoc loc) {
  auto e = mk_mut(SurfaceExpr::Tag::Let, loc);
  e->var = std::move(x);
  e->a = std::move(e1);
  e->b = std::move(e2);
  return e;
}

SExprPtr s_pair(SExprPtr l, SExprPtr r, SourceLoc loc) {
  auto e = mk_mut(SurfaceExpr::Tag::Pair, loc);
  e->a = std::move(l);
  e->b = std::move(r);
  return e;
}

SExprPtr s_match(MatchSpec m, std::string x, std::string y, SExprPtr scrut, SExprPtr body,
                 SourceLoc loc) {
  auto e = mk_mut(SurfaceExpr::Tag::Match, loc);
  e->mspec = m;
  e->var = std::move(x);
  e->var2 = std::move(y);
  e->a = std::move(scrut);
  e->b = std::move(body);
  return e;
}

SExprPtr s_region_marker(SExprPtr body, SourceLoc loc) {
  auto e = mk_mut(SurfaceExpr::Tag::Region, loc);
  e->marker = true;
  e->a = std::move(body);
  return e;
}

SExprPtr s_region(std::string x, BorrowSpec sp, Level n, SExprPtr body, SourceLoc loc) {
  auto e = mk_mut(SurfaceExpr::Tag::Region, loc);
  e->has_var = true;
  e->var = std::move(x);
  e->bspec = sp;
  e->level = n;
  e->a = std::move(body);
  return e;
}

SExprPtr s_borrow(BorrowSpec sp, std::string x, SourceLoc loc) {
  auto e = mk_mut(SurfaceExpr::Tag::Borrow, loc);
  e->bspec = sp;
  e->var = std::move(x);
  return e;
}

SExprPtr s_reborrow(BorrowSpec sp, std::string x, SourceLoc loc) {
  auto e = mk_mut(SurfaceExpr::Tag::ReBorrow, loc);
  e->bspec = sp;
  e->var = std::move(x);
  return e;
}

SExprPtr s_prim(SurfaceExpr::Tag which, SourceLoc loc) { return mk_mut(which, loc); }

bool surface_equal(const SExprPtr& a, const SExprPtr& b) {
  if (a == b) return true;
  if (!a || !b || a->tag != b->tag) return false;
  if (!(a->cval == b->cval)) return false;
  if (a->var != b->var || a->var2 != b->var2) return false;
  if (a->mspec != b->mspec) return false;
  switch (a->tag) {
    case SurfaceExpr::Tag::Borrow:
    case SurfaceExpr::Tag::ReBorrow:
      if (a->bspec != b->bspec) return false;
      break;
    case SurfaceExpr::Tag::Region:
      if (a->marker != b->marker || a->has_var != b->has_var) return false;
      if (a->has_var && (a->bspec != b->bspec || a->level != b->level)) return false;
      break;
    default:
      break;
  }
  return surface_equal(a->a, b->a) && surface_equal(a->b, b->b);
}

std::shared_ptr<ElabExpr> ElabExpr::mk(Tag t) {
  auto e = std::make_shared<ElabExpr>();
  e->tag = t;
  return e;
}

static bool splitting_ok(const Splitting& sp, std::string* err) {
  for (size_t i = 0; i < sp.tags.size(); i++) {
    for (size_t j = i + 1; j < sp.tags.size(); j++) {
      if (sp.tags[i].first == sp.tags[j].first) {
        if (err) *err = "duplicate splitting subject: " + sp.tags[i].first;
        return false;
      }
    }
  }
  return true;
}

bool validate_splitting_shape(const EExprPtr& e, std::string* err) {
  if (!e) return true;
  switch (e->tag) {
    case ElabExpr::Tag::App:
    case ElabExpr::Tag::Pair:
    case ElabExpr::Tag::Match:
    case ElabExpr::Tag::Let:
    case ElabExpr::Tag::PolyLet:
      if (!splitting_ok(e->split, err)) return false;
      break;
    case ElabExpr::Tag::Lam:
    case ElabExpr::Tag::Region:
      if (!e->split.tags.empty()) {
        if (err) *err = "splitting evidence on single-subterm node";
        return false;
      }
      break;
    default:
      if (!e->split.tags.empty()) {
        if (err) *err = "splitting evidence on leaf";
        return false;
      }
      break;
  }
  return validate_splitting_shape(e->a, err) && validate_splitting_shape(e->b, err);
}

}  // namespace affe
