#include "affe/printer.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "affe/constraint.hpp"

namespace affe {

namespace {

std::string quality_name(Quality q) {
  switch (q) {
    case Quality::Un: return "un";
    case Quality::Aff: return "aff";
    case Quality::Lin: return "lin";
  }
  return "?";
}

std::string const_name(KConst c) {
  std::string s = quality_name(c.quality);
  if (c.level == 0) return s;
  if (c.level == kLevelInf) return s + "_inf";
  return s + "_" + std::to_string(c.level);
}

std::string tvar_display(int ordinal) {
  if (ordinal < 26) return std::string("'") + static_cast<char>('a' + ordinal);
  return "'v" + std::to_string(ordinal);
}

std::string kvar_display(int ordinal) {
  if (ordinal == 0) return "'k";
  return "'k_" + std::to_string(ordinal);
}

struct Renamer {
  std::map<int, std::string> tnames;
  std::map<int, std::string> knames;

  std::string tvar(int id) const {
    auto it = tnames.find(id);
    return it != tnames.end() ? it->second : "'t" + std::to_string(id);
  }
  std::string kvar(int id) const {
    auto it = knames.find(id);
    return it != knames.end() ? it->second : "'q" + std::to_string(id);
  }
};

// occurrence counting per position: arrow tags always print; a quantified
// kind variable whose only occurrence is one borrow tag or one quantifier
// bound is noise and gets elided
struct KindUse {
  int arrow = 0, borrow = 0, bound = 0, ctr = 0;
  int total() const { return arrow + borrow + bound + ctr; }
};

void count_kind_positions(const TypePtr& t, std::map<int, KindUse>& acc) {
  if (!t) return;
  switch (t->tag) {
    case Type::Tag::Var:
      return;
    case Type::Tag::App:
      for (auto& a : t->args) count_kind_positions(a, acc);
      return;
    case Type::Tag::Pair:
      count_kind_positions(t->left, acc);
      count_kind_positions(t->right, acc);
      return;
    case Type::Tag::Arrow:
      if (t->kind.is_var()) acc[t->kind.var].arrow++;
      count_kind_positions(t->left, acc);
      count_kind_positions(t->right, acc);
      return;
    case Type::Tag::Borrow:
      if (t->kind.is_var()) acc[t->kind.var].borrow++;
      count_kind_positions(t->left, acc);
      return;
  }
}

struct SchemePrinter {
  const TypeScheme& s;
  Renamer names;
  std::set<int> elide_kvars;   // borrow kinds / bounds rendered without names
  std::set<size_t> elide_atoms;  // entailed-trivial constraint atoms

  explicit SchemePrinter(const TypeScheme& scheme) : s(scheme) { prepare(); }

  void prepare() {
    std::map<int, KindUse> kuse;
    count_kind_positions(s.body, kuse);
    std::map<int, int> as_lhs, as_rhs;
    for (auto& a : s.ctr.kinds) {
      if (a.lhs.is_var()) {
        kuse[a.lhs.var].ctr++;
        as_lhs[a.lhs.var]++;
      }
      if (a.rhs.is_var()) {
        kuse[a.rhs.var].ctr++;
        as_rhs[a.rhs.var]++;
      }
    }
    for (auto& [tv, k] : s.tvars)
      if (k.is_var()) kuse[k.var].bound++;

    std::set<int> quantified(s.kvars.begin(), s.kvars.end());
    // a quantifier occurring only as a one-sided bound receiver is
    // existentially trivial; its atoms are entailed and omitted
    std::set<int> aux;
    for (auto& [v, use] : kuse) {
      if (!quantified.count(v)) continue;
      if (use.arrow || use.borrow || use.bound) continue;
      if (as_lhs[v] == 0 || as_rhs[v] == 0) aux.insert(v);
    }
    for (size_t i = 0; i < s.ctr.kinds.size(); i++) {
      auto& a = s.ctr.kinds[i];
      if ((a.lhs.is_var() && aux.count(a.lhs.var)) ||
          (a.rhs.is_var() && aux.count(a.rhs.var)))
        elide_atoms.insert(i);
    }
    for (int v : aux) kuse.erase(v);

    for (auto& [v, use] : kuse) {
      if (!quantified.count(v)) continue;
      if (use.arrow == 0 && use.ctr == 0 && use.borrow + use.bound == 1)
        elide_kvars.insert(v);
    }

    // name assignment in id order over printed variables
    std::vector<int> tv_order;
    free_tvars_type(s.body, tv_order);
    {
      std::vector<int> kv_dummy, tv_ctr;
      free_vars_constraint(s.ctr, kv_dummy, tv_ctr);
      tv_order.insert(tv_order.end(), tv_ctr.begin(), tv_ctr.end());
    }
    std::sort(tv_order.begin(), tv_order.end());
    tv_order.erase(std::unique(tv_order.begin(), tv_order.end()), tv_order.end());
    int tn = 0;
    for (int v : tv_order) names.tnames[v] = tvar_display(tn++);

    std::vector<int> kv_order;
    for (auto& [v, use] : kuse) {
      if (use.total() >= 1 && !elide_kvars.count(v)) kv_order.push_back(v);
    }
    std::sort(kv_order.begin(), kv_order.end());
    int kn = 0;
    for (int v : kv_order) names.knames[v] = kvar_display(kn++);
  }

  std::string kind(const Kind& k) const {
    if (k.is_var()) return names.kvar(k.var);
    return const_name(k.k);
  }

  enum Prec { PArrow = 0, POp = 1, PProd = 2, PApp = 3, PAtom = 4 };

  std::string type(const TypePtr& t, int prec) const {
    switch (t->tag) {
      case Type::Tag::Var:
        return names.tvar(t->var);
      case Type::Tag::App: {
        std::string con = t->con;
        if (t->args.size() == 2 && (con == "?" || con == "!")) {
          std::string res = type(t->args[0], POp + 1) + " " + con + " " + type(t->args[1], POp);
          return prec > POp ? "(" + res + ")" : res;
        }
        if (t->args.empty()) return con;
        if (t->args.size() == 1) {
          std::string res = type(t->args[0], PApp + 1) + " " + con;
          return prec > PApp ? "(" + res + ")" : res;
        }
        std::string res = "(";
        for (size_t i = 0; i < t->args.size(); i++) {
          if (i) res += ", ";
          res += type(t->args[i], PArrow);
        }
        res += ") " + con;
        return res;
      }
      case Type::Tag::Pair: {
        std::string res = type(t->left, PProd + 1) + " * " + type(t->right, PProd);
        return prec > PProd ? "(" + res + ")" : res;
      }
      case Type::Tag::Arrow: {
        Kind k = t->kind;
        std::string arrow;
        if (!k.is_var() && k.k == kBottom) arrow = "->";
        else arrow = "-{" + kind(k) + "}>";
        std::string res = type(t->left, PArrow + 1) + " " + arrow + " " + type(t->right, PArrow);
        return prec > PArrow ? "(" + res + ")" : res;
      }
      case Type::Tag::Borrow: {
        std::string head = t->spec == BorrowSpec::Shared ? "&" : "&!";
        bool elide = t->kind.is_var() && elide_kvars.count(t->kind.var);
        if (elide) return head + "(" + type(t->left, PArrow) + ")";
        return head + "(" + kind(t->kind) + ", " + type(t->left, PArrow) + ")";
      }
    }
    return "?";
  }

  std::string render() const {
    std::vector<std::string> atoms;
    for (auto& [tv, k] : s.tvars) {
      if (k.is_var() && elide_kvars.count(k.var)) continue;
      if (!names.tnames.count(tv)) continue;  // unused quantifier
      atoms.push_back(names.tvar(tv) + " : " + kind(k));
    }
    for (size_t i = 0; i < s.ctr.kinds.size(); i++) {
      auto& a = s.ctr.kinds[i];
      if (elide_atoms.count(i)) continue;
      if (!a.lhs.is_var() && !a.rhs.is_var() && const_leq(a.lhs.k, a.rhs.k)) continue;
      atoms.push_back(kind(a.lhs) + " <= " + kind(a.rhs));
    }
    std::string out;
    if (!atoms.empty()) {
      out = "(";
      for (size_t i = 0; i < atoms.size(); i++) {
        if (i) out += ", ";
        out += atoms[i];
      }
      out += ") => ";
    }
    out += type(s.body, PArrow);
    return out;
  }
};

}  // namespace

std::string print_kind(const Kind& k) {
  if (k.is_var()) return "'k" + std::to_string(k.var);
  return const_name(k.k);
}

std::string print_type_raw(const TypePtr& t) {
  if (!t) return "<null>";
  TypeScheme s;
  s.body = t;
  // machine names: reuse the scheme printer with raw fallbacks
  SchemePrinter p(s);
  p.names.tnames.clear();
  p.names.knames.clear();
  return p.type(t, 0);
}

std::string print_scheme(const TypeScheme& s) { return SchemePrinter(s).render(); }

// ---------------------------------------------------------------------------
// Surface printing

namespace {

std::string const_text(const ConstVal& c) {
  switch (c.tag) {
    case ConstVal::Tag::Unit: return "()";
    case ConstVal::Tag::Int: return std::to_string(c.int_val);
    case ConstVal::Tag::String: {
      std::string out = "\"";
      for (char ch : c.str_val) {
        if (ch == '"' || ch == '\\') out += '\\';
        if (ch == '\n') { out += "\\n"; continue; }
        out += ch;
      }
      return out + "\"";
    }
    case ConstVal::Tag::Prim: return c.str_val;
    case ConstVal::Tag::PrimResult: return "<" + c.str_val + ">";
  }
  return "?";
}

bool surface_atom(const SurfaceExpr& e) {
  switch (e.tag) {
    case SurfaceExpr::Tag::Const:
    case SurfaceExpr::Tag::Var:
    case SurfaceExpr::Tag::Borrow:
    case SurfaceExpr::Tag::ReBorrow:
    case SurfaceExpr::Tag::Pair:
    case SurfaceExpr::Tag::Region:
    case SurfaceExpr::Tag::Create:
    case SurfaceExpr::Tag::Observe:
    case SurfaceExpr::Tag::Update:
    case SurfaceExpr::Tag::Destroy:
      return true;
    default:
      return false;
  }
}

std::string surface(const SExprPtr& e, bool atom_pos) {
  using T = SurfaceExpr::Tag;
  std::string out;
  switch (e->tag) {
    case T::Const: return const_text(e->cval);
    case T::Var: return e->var;
    case T::App: {
      out = surface(e->a, e->a->tag != T::App) + " " + surface(e->b, true);
      break;
    }
    case T::Lam:
      out = "fun " + e->var + " -> " + surface(e->a, false);
      break;
    case T::Let:
      out = "let " + e->var + " = " + surface(e->a, false) + " in " + surface(e->b, false);
      break;
    case T::Pair:
      return "(" + surface(e->a, false) + ", " + surface(e->b, false) + ")";
    case T::Match: {
      std::string spec = !e->mspec ? "" : (*e->mspec == BorrowSpec::Shared ? "&" : "&!");
      out = "match " + surface(e->a, false) + " with " + spec + "(" + e->var + ", " + e->var2 +
            ") -> " + surface(e->b, false);
      break;
    }
    case T::Region: {
      if (e->has_var) {
        return "{|" + std::to_string(e->level) + ":" + e->var +
               (e->bspec == BorrowSpec::Shared ? "" : "!") + "| " + surface(e->a, false) + " |}";
      }
      return "{| " + surface(e->a, false) + " |}";
    }
    case T::Borrow:
      return (e->bspec == BorrowSpec::Shared ? "&" : "&!") + e->var;
    case T::ReBorrow:
      return (e->bspec == BorrowSpec::Shared ? "&&" : "&&!") + e->var;
    case T::Create: return "create";
    case T::Observe: return "observe";
    case T::Update: return "update";
    case T::Destroy: return "destroy";
  }
  if (atom_pos && !surface_atom(*e)) return "(" + out + ")";
  return out;
}

}  // namespace

std::string print_surface(const SExprPtr& e) { return surface(e, false); }

std::string print_elab(const EExprPtr& e) {
  using T = ElabExpr::Tag;
  if (!e) return "<null>";
  auto sp = [&](const Splitting& s) {
    if (s.tags.empty()) return std::string();
    std::string out = "[";
    for (size_t i = 0; i < s.tags.size(); i++) {
      if (i) out += " ";
      out += s.tags[i].first + ":";
      switch (s.tags[i].second) {
        case SplitTag::Both: out += "Both"; break;
        case SplitTag::Borrow: out += "Borrow"; break;
        case SplitTag::Left: out += "Left"; break;
        case SplitTag::Right: out += "Right"; break;
        case SplitTag::Susp: out += "Susp"; break;
        case SplitTag::SuspB: out += "SuspB"; break;
        case SplitTag::SuspS: out += "SuspS"; break;
      }
    }
    return out + "]";
  };
  switch (e->tag) {
    case T::Const: return const_text(e->cval);
    case T::Var: return e->var;
    case T::VarInst: {
      std::string out = e->var + "[";
      for (size_t i = 0; i < e->kind_args.size(); i++) {
        if (i) out += ",";
        out += print_kind(e->kind_args[i]);
      }
      out += ";";
      for (size_t i = 0; i < e->type_args.size(); i++) {
        if (i) out += ",";
        out += print_type_raw(e->type_args[i]);
      }
      return out + "]";
    }
    case T::Lam:
      return "(lam{" + print_kind(e->kind) + "} " + e->var + ". " + print_elab(e->a) + ")";
    case T::App:
      return "(app" + sp(e->split) + " " + print_elab(e->a) + " " + print_elab(e->b) + ")";
    case T::Pair:
      return "(pair{" + print_kind(e->kind) + "}" + sp(e->split) + " " + print_elab(e->a) +
             ", " + print_elab(e->b) + ")";
    case T::Match: {
      std::string spec = !e->mspec ? "id" : (*e->mspec == BorrowSpec::Shared ? "&" : "&!");
      return "(match^" + spec + sp(e->split) + " (" + e->var + "," + e->var2 + ") = " +
             print_elab(e->a) + " in " + print_elab(e->b) + ")";
    }
    case T::Let:
      return "(let" + sp(e->split) + " " + e->var + " = " + print_elab(e->a) + " in " +
             print_elab(e->b) + ")";
    case T::PolyLet:
      return "(letp" + sp(e->split) + " " + e->var + "{" + print_kind(e->kind) + "} " +
             e->var2 + ". " + print_elab(e->a) + " in " + print_elab(e->b) + ")";
    case T::Region:
      return "(region^" + std::to_string(e->level) + " " + e->var +
             (e->bspec == BorrowSpec::Shared ? "" : "!") + " " + print_elab(e->a) + ")";
    case T::Borrow:
      return (e->bspec == BorrowSpec::Shared ? "&" : "&!") + e->var;
    case T::ReBorrow:
      return (e->bspec == BorrowSpec::Shared ? "&&" : "&&!") + e->var;
    case T::Create: return "create";
    case T::Observe: return "observe";
    case T::Update: return "update";
    case T::Destroy: return "destroy";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Alpha equivalence

namespace {

struct Bijection {
  std::map<int, int> fwd, bwd;
  bool link(int a, int b) {
    auto f = fwd.find(a);
    auto g = bwd.find(b);
    if (f == fwd.end() && g == bwd.end()) {
      fwd[a] = b;
      bwd[b] = a;
      return true;
    }
    return f != fwd.end() && f->second == b && g != bwd.end() && g->second == a;
  }
};

struct AlphaCtx {
  const TypeScheme& a;
  const TypeScheme& b;
  std::set<int> qa_t, qb_t, qa_k, qb_k;
  Bijection t, k;

  AlphaCtx(const TypeScheme& x, const TypeScheme& y) : a(x), b(y) {
    for (auto& [v, kk] : a.tvars) {
      qa_t.insert(v);
      (void)kk;
    }
    for (auto& [v, kk] : b.tvars) {
      qb_t.insert(v);
      (void)kk;
    }
    qa_k.insert(a.kvars.begin(), a.kvars.end());
    qb_k.insert(b.kvars.begin(), b.kvars.end());
  }

  bool kinds(const Kind& x, const Kind& y) {
    if (x.is_var() != y.is_var()) return false;
    if (!x.is_var()) return x.k == y.k;
    bool qx = qa_k.count(x.var), qy = qb_k.count(y.var);
    if (qx != qy) return false;
    if (!qx) return x.var == y.var;  // free variables must coincide
    return k.link(x.var, y.var);
  }

  bool types(const TypePtr& x, const TypePtr& y) {
    if (x->tag != y->tag) return false;
    switch (x->tag) {
      case Type::Tag::Var: {
        bool qx = qa_t.count(x->var), qy = qb_t.count(y->var);
        if (qx != qy) return false;
        if (!qx) return x->var == y->var;
        if (!t.link(x->var, y->var)) return false;
        // bounds of matched quantifiers must correspond
        Kind bx, by;
        for (auto& [v, kk] : a.tvars)
          if (v == x->var) bx = kk;
        for (auto& [v, kk] : b.tvars)
          if (v == y->var) by = kk;
        return kinds(bx, by);
      }
      case Type::Tag::App: {
        if (x->con != y->con || x->args.size() != y->args.size()) return false;
        for (size_t i = 0; i < x->args.size(); i++)
          if (!types(x->args[i], y->args[i])) return false;
        return true;
      }
      case Type::Tag::Pair:
        return types(x->left, y->left) && types(x->right, y->right);
      case Type::Tag::Arrow:
        return kinds(x->kind, y->kind) && types(x->left, y->left) &&
               types(x->right, y->right);
      case Type::Tag::Borrow:
        return x->spec == y->spec && kinds(x->kind, y->kind) && types(x->left, y->left);
    }
    return false;
  }
};

Kind map_kind(const Kind& k, const std::map<int, int>& m) {
  if (!k.is_var()) return k;
  auto it = m.find(k.var);
  return it != m.end() ? Kind::mk_var(it->second) : k;
}

}  // namespace

bool alpha_equiv(const TypeScheme& a, const TypeScheme& b) {
  AlphaCtx ctx(a, b);
  if (!ctx.types(a.body, b.body)) return false;
  // map each constraint through the bijection; quantified variables that
  // never occur in the body are auxiliary, so they are projected out before
  // the mutual-entailment comparison
  auto mapped_projected = [](const Constraint& src, const std::map<int, int>& rewrite,
                             const std::map<int, int>& matched,
                             const std::set<int>& quantified) {
    Constraint out;
    std::set<int> leftover;
    for (auto& atom : src.kinds) {
      out.kinds.push_back({map_kind(atom.lhs, rewrite), map_kind(atom.rhs, rewrite)});
      for (const Kind& k : {atom.lhs, atom.rhs})
        if (k.is_var() && !matched.count(k.var) && quantified.count(k.var))
          leftover.insert(k.var);
    }
    out.exists_kvars.assign(leftover.begin(), leftover.end());
    FreshSource scratch;
    scratch.next_kvar = 1 << 29;
    NormalizeOutcome res = normalize(out, Subst{}, scratch);
    if (auto* ok = std::get_if<NormalizeResult>(&res)) return ok->solved;
    out.falsum = true;
    return out;
  };
  Constraint a_mapped = mapped_projected(a.ctr, ctx.k.fwd, ctx.k.fwd, ctx.qa_k);
  Constraint b_mapped = mapped_projected(b.ctr, ctx.k.bwd, ctx.k.bwd, ctx.qb_k);
  Constraint a_own = mapped_projected(a.ctr, {}, ctx.k.fwd, ctx.qa_k);
  Constraint b_own = mapped_projected(b.ctr, {}, ctx.k.bwd, ctx.qb_k);
  return entails_all(b_own, a_mapped) && entails_all(a_own, b_mapped);
}

}  // namespace affe
