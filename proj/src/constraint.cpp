#include "affe/constraint.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace affe {

// ---------------------------------------------------------------------------
// Substitution

Kind Subst::resolve(Kind k) const {
  while (k.is_var()) {
    auto it = kvars.find(k.var);
    if (it == kvars.end()) break;
    k = it->second;
  }
  return k;
}

TypePtr Subst::resolve_head(TypePtr t) const {
  while (t && t->tag == Type::Tag::Var) {
    auto it = tvars.find(t->var);
    if (it == tvars.end()) break;
    t = it->second;
  }
  return t;
}

TypePtr Subst::apply(const TypePtr& t0) const {
  TypePtr t = resolve_head(t0);
  if (!t) return t;
  switch (t->tag) {
    case Type::Tag::Var:
      return t;
    case Type::Tag::App: {
      std::vector<TypePtr> args;
      args.reserve(t->args.size());
      for (auto& a : t->args) args.push_back(apply(a));
      return Type::mk_app(t->con, std::move(args));
    }
    case Type::Tag::Pair:
      return Type::mk_pair(apply(t->left), apply(t->right));
    case Type::Tag::Arrow:
      return Type::mk_arrow(apply(t->left), resolve(t->kind), apply(t->right));
    case Type::Tag::Borrow:
      return Type::mk_borrow(t->spec, resolve(t->kind), apply(t->left));
  }
  return t;
}

Constraint Subst::apply(const Constraint& c) const {
  Constraint r;
  r.falsum = c.falsum;
  r.exists_kvars = c.exists_kvars;
  r.exists_tvars = c.exists_tvars;
  for (auto& a : c.kinds) r.kinds.push_back({resolve(a.lhs), resolve(a.rhs)});
  for (auto& a : c.types) r.types.push_back({apply(a.lhs), apply(a.rhs)});
  return r;
}

TypeScheme Subst::apply(const TypeScheme& s) const {
  TypeScheme r;
  r.kvars = s.kvars;
  for (auto& [tv, k] : s.tvars) r.tvars.push_back({tv, resolve(k)});
  r.ctr = apply(s.ctr);
  r.body = apply(s.body);
  return r;
}

void Subst::compress() {
  for (auto& [v, k] : kvars) k = resolve(k);
  for (auto& [v, t] : tvars) t = apply(t);
  // kinds inside bound types may mention collapsed kind variables
  for (auto& [v, t] : tvars) t = apply(t);
}

Subst subst_merge(const Subst& a, const Subst& b) {
  Subst r = a;
  for (auto& [v, t] : b.tvars) r.tvars[v] = t;
  for (auto& [v, k] : b.kvars) r.kvars[v] = k;
  return r;
}

// ---------------------------------------------------------------------------
// Free variables

void free_kvars_type(const TypePtr& t, std::vector<int>& out) {
  if (!t) return;
  switch (t->tag) {
    case Type::Tag::Var:
      return;
    case Type::Tag::App:
      for (auto& a : t->args) free_kvars_type(a, out);
      return;
    case Type::Tag::Pair:
      free_kvars_type(t->left, out);
      free_kvars_type(t->right, out);
      return;
    case Type::Tag::Arrow:
      if (t->kind.is_var()) out.push_back(t->kind.var);
      free_kvars_type(t->left, out);
      free_kvars_type(t->right, out);
      return;
    case Type::Tag::Borrow:
      if (t->kind.is_var()) out.push_back(t->kind.var);
      free_kvars_type(t->left, out);
      return;
  }
}

void free_tvars_type(const TypePtr& t, std::vector<int>& out) {
  if (!t) return;
  switch (t->tag) {
    case Type::Tag::Var:
      out.push_back(t->var);
      return;
    case Type::Tag::App:
      for (auto& a : t->args) free_tvars_type(a, out);
      return;
    case Type::Tag::Pair:
    case Type::Tag::Arrow:
      free_tvars_type(t->left, out);
      free_tvars_type(t->right, out);
      return;
    case Type::Tag::Borrow:
      free_tvars_type(t->left, out);
      return;
  }
}

void free_vars_constraint(const Constraint& c, std::vector<int>& kv, std::vector<int>& tv) {
  for (auto& a : c.kinds) {
    if (a.lhs.is_var()) kv.push_back(a.lhs.var);
    if (a.rhs.is_var()) kv.push_back(a.rhs.var);
  }
  for (auto& a : c.types) {
    free_kvars_type(a.lhs, kv);
    free_kvars_type(a.rhs, kv);
    free_tvars_type(a.lhs, tv);
    free_tvars_type(a.rhs, tv);
  }
  for (int v : c.exists_kvars)
    kv.erase(std::remove(kv.begin(), kv.end(), v), kv.end());
  for (int v : c.exists_tvars)
    tv.erase(std::remove(tv.begin(), tv.end(), v), tv.end());
}

void free_vars_scheme(const TypeScheme& s, std::vector<int>& kv, std::vector<int>& tv) {
  free_vars_constraint(s.ctr, kv, tv);
  free_kvars_type(s.body, kv);
  free_tvars_type(s.body, tv);
  for (auto& [v, k] : s.tvars)
    if (k.is_var()) kv.push_back(k.var);
  auto drop = [](std::vector<int>& xs, int v) {
    xs.erase(std::remove(xs.begin(), xs.end(), v), xs.end());
  };
  for (int v : s.kvars) drop(kv, v);
  for (auto& [v, k] : s.tvars) drop(tv, v);
}

// ---------------------------------------------------------------------------
// Herbrand unification of the type atoms. Orientation matters only for the
// kind atoms it emits: arrows are contravariant in their domain, borrows and
// pairs covariant, constructor applications invariant.

namespace {

struct Unifier {
  Subst& psi;
  std::vector<KindLeq>& kinds;

  bool occurs(int var, const TypePtr& t0) const {
    TypePtr t = psi.resolve_head(t0);
    if (!t) return false;
    switch (t->tag) {
      case Type::Tag::Var:
        return t->var == var;
      case Type::Tag::App:
        for (auto& a : t->args)
          if (occurs(var, a)) return true;
        return false;
      case Type::Tag::Pair:
      case Type::Tag::Arrow:
        return occurs(var, t->left) || occurs(var, t->right);
      case Type::Tag::Borrow:
        return occurs(var, t->left);
    }
    return false;
  }

  // Returns an error string on failure.
  std::optional<std::string> leq(TypePtr a, TypePtr b) {
    a = psi.resolve_head(a);
    b = psi.resolve_head(b);
    if (a->tag == Type::Tag::Var && b->tag == Type::Tag::Var) {
      if (a->var == b->var) return std::nullopt;
      // keep the lower-numbered name
      if (a->var < b->var)
        psi.tvars[b->var] = a;
      else
        psi.tvars[a->var] = b;
      return std::nullopt;
    }
    if (a->tag == Type::Tag::Var) {
      if (occurs(a->var, b)) return "occurs check: cyclic type";
      psi.tvars[a->var] = b;
      return std::nullopt;
    }
    if (b->tag == Type::Tag::Var) {
      if (occurs(b->var, a)) return "occurs check: cyclic type";
      psi.tvars[b->var] = a;
      return std::nullopt;
    }
    if (a->tag != b->tag) return "constructor clash";
    switch (a->tag) {
      case Type::Tag::App: {
        if (a->con != b->con) return "constructor clash: " + a->con + " vs " + b->con;
        if (a->args.size() != b->args.size()) return "arity mismatch on " + a->con;
        for (size_t i = 0; i < a->args.size(); i++) {
          // invariant: equate both ways
          if (auto e = leq(a->args[i], b->args[i])) return e;
          if (auto e = leq(b->args[i], a->args[i])) return e;
        }
        return std::nullopt;
      }
      case Type::Tag::Pair:
        if (auto e = leq(a->left, b->left)) return e;
        return leq(a->right, b->right);
      case Type::Tag::Arrow:
        kinds.push_back({a->kind, b->kind});
        if (auto e = leq(b->left, a->left)) return e;  // contravariant domain
        return leq(a->right, b->right);
      case Type::Tag::Borrow:
        if (a->spec != b->spec) return "borrow specification mismatch";
        kinds.push_back({a->kind, b->kind});
        return leq(a->left, b->left);
      default:
        return "unexpected type";
    }
  }
};

// ---------------------------------------------------------------------------
// The constraint graph: kind variables and constants as vertices, atoms as
// edges, saturated with lattice edges including the empty lub/glb bounds.

struct Graph {
  // vertex: var id (>= 0 encoded as-is) or constant
  std::vector<Kind> verts;
  std::map<std::pair<Quality, Level>, int> const_ix;
  std::unordered_map<int, int> var_ix;
  std::vector<std::set<int>> succ;

  int vertex(Kind k) {
    if (k.is_var()) {
      auto it = var_ix.find(k.var);
      if (it != var_ix.end()) return it->second;
      int ix = static_cast<int>(verts.size());
      var_ix[k.var] = ix;
      verts.push_back(k);
      succ.emplace_back();
      return ix;
    }
    auto key = std::make_pair(k.k.quality, k.k.level);
    auto it = const_ix.find(key);
    if (it != const_ix.end()) return it->second;
    int ix = static_cast<int>(verts.size());
    const_ix[key] = ix;
    verts.push_back(k);
    succ.emplace_back();
    return ix;
  }

  void edge(int a, int b) {
    if (a != b) succ[a].insert(b);
  }

  size_t size() const { return verts.size(); }

  std::vector<std::vector<bool>> closure() const {
    size_t n = size();
    std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
    for (size_t i = 0; i < n; i++)
      for (int j : succ[i]) r[i][j] = true;
    for (size_t k = 0; k < n; k++)
      for (size_t i = 0; i < n; i++)
        if (r[i][k])
          for (size_t j = 0; j < n; j++)
            if (r[k][j]) r[i][j] = true;
    return r;
  }

  // Lattice saturation (normalize step 2): bounds from reachable constants,
  // including the well-defined empty lub/glb, plus order edges between
  // constants. Runs to a fixpoint.
  bool saturate_once() {
    bool changed = false;
    auto reach = closure();
    size_t n = size();
    // order edges between present constants
    for (size_t i = 0; i < n; i++) {
      if (verts[i].is_var()) continue;
      for (size_t j = 0; j < n; j++) {
        if (i == j || verts[j].is_var()) continue;
        if (const_leq(verts[i].k, verts[j].k) && !succ[i].count(static_cast<int>(j))) {
          succ[i].insert(static_cast<int>(j));
          changed = true;
        }
      }
    }
    for (size_t v = 0; v < n; v++) {
      if (!verts[v].is_var()) continue;
      KConst lo = kBottom, hi = kTop;
      for (size_t c = 0; c < n; c++) {
        if (verts[c].is_var() || c == v) continue;
        if (reach[c][v]) lo = lub2(lo, verts[c].k);
        if (reach[v][c]) hi = glb2(hi, verts[c].k);
      }
      int lov = vertex(Kind::mk_const(lo));
      int hiv = vertex(Kind::mk_const(hi));
      if (lov != static_cast<int>(v) && !succ[lov].count(static_cast<int>(v))) {
        succ[lov].insert(static_cast<int>(v));
        changed = true;
      }
      if (hiv != static_cast<int>(v) && !succ[v].count(hiv)) {
        succ[v].insert(hiv);
        changed = true;
      }
    }
    return changed;
  }

  void saturate() {
    while (saturate_once()) {
    }
  }

  // Tarjan SCC; returns component index per vertex, components in reverse
  // topological order.
  std::vector<int> scc(int& count) const {
    size_t n = size();
    std::vector<int> ix(n, -1), low(n, 0), comp(n, -1);
    std::vector<bool> on(n, false);
    std::vector<int> stk;
    int next = 0;
    count = 0;
    // iterative Tarjan
    struct Frame {
      int v;
      std::set<int>::const_iterator it;
    };
    for (size_t root = 0; root < n; root++) {
      if (ix[root] != -1) continue;
      std::vector<Frame> frames;
      frames.push_back({static_cast<int>(root), succ[root].begin()});
      ix[root] = low[root] = next++;
      stk.push_back(static_cast<int>(root));
      on[root] = true;
      while (!frames.empty()) {
        auto& f = frames.back();
        if (f.it != succ[f.v].end()) {
          int w = *f.it;
          ++f.it;
          if (ix[w] == -1) {
            ix[w] = low[w] = next++;
            stk.push_back(w);
            on[w] = true;
            frames.push_back({w, succ[w].begin()});
          } else if (on[w]) {
            low[f.v] = std::min(low[f.v], ix[w]);
          }
        } else {
          int v = f.v;
          frames.pop_back();
          if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
          if (low[v] == ix[v]) {
            while (true) {
              int w = stk.back();
              stk.pop_back();
              on[w] = false;
              comp[w] = count;
              if (w == v) break;
            }
            count++;
          }
        }
      }
    }
    return comp;
  }
};

Graph build_graph(const std::vector<KindLeq>& atoms, const Subst& psi) {
  Graph g;
  for (auto& a : atoms) {
    Kind l = psi.resolve(a.lhs), r = psi.resolve(a.rhs);
    g.edge(g.vertex(l), g.vertex(r));
  }
  return g;
}

}  // namespace

// ---------------------------------------------------------------------------
// normalize: steps (1)-(9)

NormalizeOutcome normalize(const Constraint& c0, const Subst& psi0, FreshSource& fresh) {
  (void)fresh;
  if (c0.falsum) return Unsatisfiable{"suspended binding cannot be discarded or captured"};

  Subst psi = psi0;
  std::vector<KindLeq> atoms = c0.kinds;

  // (1) Herbrand unification, existentials gathered up front.
  Unifier u{psi, atoms};
  for (auto& tl : c0.types) {
    if (auto err = u.leq(tl.lhs, tl.rhs)) return Unsatisfiable{*err};
  }
  std::set<int> ex(c0.exists_kvars.begin(), c0.exists_kvars.end());

  // (2) lattice saturation
  Graph g = build_graph(atoms, psi);
  g.saturate();

  // (3) satisfiability
  {
    auto reach = g.closure();
    for (size_t i = 0; i < g.size(); i++) {
      if (g.verts[i].is_var()) continue;
      for (size_t j = 0; j < g.size(); j++) {
        if (g.verts[j].is_var() || i == j) continue;
        if (reach[i][j] && !const_leq(g.verts[i].k, g.verts[j].k))
          return Unsatisfiable{"unsatisfiable kind bound"};
      }
    }
  }

  // (4) SCC unification: fresh representative is realized by reusing the
  // lowest-numbered non-existential member.
  int ncomp = 0;
  auto comp = g.scc(ncomp);
  std::vector<Kind> rep(ncomp, Kind::mk_var(-1));
  std::vector<bool> rep_set(ncomp, false), rep_exist(ncomp, true);
  for (size_t v = 0; v < g.size(); v++) {
    int cix = comp[v];
    Kind kv = g.verts[v];
    if (!kv.is_var()) {
      if (rep_set[cix] && !rep[cix].is_var() && !(rep[cix] == kv))
        return Unsatisfiable{"two distinct constants unified"};
      rep[cix] = kv;
      rep_set[cix] = true;
      rep_exist[cix] = false;
    } else if (!rep_set[cix] || rep[cix].is_var()) {
      bool v_exist = ex.count(kv.var) != 0;
      if (!rep_set[cix]) {
        rep[cix] = kv;
        rep_set[cix] = true;
        rep_exist[cix] = v_exist;
      } else if ((rep_exist[cix] && !v_exist) ||
                 (rep_exist[cix] == v_exist && kv.var < rep[cix].var)) {
        rep[cix] = kv;
        rep_exist[cix] = v_exist;
      }
    }
  }
  for (size_t v = 0; v < g.size(); v++) {
    Kind kv = g.verts[v];
    if (kv.is_var() && !(rep[comp[v]] == kv)) psi.kvars[kv.var] = rep[comp[v]];
  }

  // quotient graph over representatives
  Graph q;
  std::vector<int> qvert(ncomp, -1);
  for (int cix = 0; cix < ncomp; cix++) qvert[cix] = q.vertex(rep[cix]);
  for (size_t v = 0; v < g.size(); v++)
    for (int w : g.succ[v]) q.edge(qvert[comp[v]], qvert[comp[w]]);

  // (5) transitive closure
  auto clo = q.closure();
  size_t n = q.size();
  std::vector<std::vector<bool>> edges(n, std::vector<bool>(n, false));
  for (size_t i = 0; i < n; i++)
    for (size_t j = 0; j < n; j++) edges[i][j] = clo[i][j] && i != j;

  // (6) drop existential vertices
  std::vector<bool> dead(n, false);
  for (size_t i = 0; i < n; i++)
    if (q.verts[i].is_var() && ex.count(q.verts[i].var)) dead[i] = true;

  // (7) transitive reduction of the remaining DAG
  std::vector<std::vector<bool>> live(n, std::vector<bool>(n, false));
  for (size_t i = 0; i < n; i++) {
    if (dead[i]) continue;
    for (size_t j = 0; j < n; j++) {
      if (dead[j] || !edges[i][j]) continue;
      bool redundant = false;
      for (size_t w = 0; w < n && !redundant; w++) {
        if (w == i || w == j || dead[w]) continue;
        if (edges[i][w] && edges[w][j]) redundant = true;
      }
      live[i][j] = !redundant;
    }
  }

  // (8) remove extremums and constant-constant edges; (9) emit atoms
  Constraint out;
  for (size_t i = 0; i < n; i++) {
    if (dead[i]) continue;
    Kind ki = q.verts[i];
    if (!ki.is_var() && (ki.k == kBottom || ki.k == kTop)) continue;
    for (size_t j = 0; j < n; j++) {
      if (dead[j] || !live[i][j]) continue;
      Kind kj = q.verts[j];
      if (!kj.is_var() && (kj.k == kBottom || kj.k == kTop)) continue;
      if (!ki.is_var() && !kj.is_var()) continue;
      out.kinds.push_back({ki, kj});
    }
  }

  // drop substitution entries for existential (projected) variables
  for (int v : c0.exists_kvars) psi.kvars.erase(v);
  for (int v : c0.exists_tvars) psi.tvars.erase(v);
  psi.compress();
  // post-compression, entries may expose collapsed representatives again
  for (int v : c0.exists_kvars) psi.kvars.erase(v);
  for (int v : c0.exists_tvars) psi.tvars.erase(v);

  // a solved form must be stable under its own unifier
  out = psi.apply(out);
  return NormalizeResult{std::move(out), std::move(psi)};
}

// ---------------------------------------------------------------------------
// Entailment by graph saturation + path check.

bool entails(const Constraint& c, const KindLeq& goal) {
  Constraint g;
  g.kinds.push_back(goal);
  return entails_all(c, g);
}

bool entails_all(const Constraint& c, const Constraint& goal) {
  if (c.falsum) return true;
  if (goal.falsum) return false;
  Subst id;
  Graph g = build_graph(c.kinds, id);
  // every goal variable and constant participates in the saturation
  for (auto& a : goal.kinds) {
    g.vertex(a.lhs);
    g.vertex(a.rhs);
  }
  g.saturate();
  auto reach = g.closure();
  // vacuous truth under an unsatisfiable assumption
  for (size_t i = 0; i < g.size(); i++) {
    if (g.verts[i].is_var()) continue;
    for (size_t j = 0; j < g.size(); j++) {
      if (g.verts[j].is_var() || i == j) continue;
      if (reach[i][j] && !const_leq(g.verts[i].k, g.verts[j].k)) return true;
    }
  }
  for (auto& a : goal.kinds) {
    if (a.lhs == a.rhs) continue;
    if (!a.lhs.is_var() && !a.rhs.is_var()) {
      if (!const_leq(a.lhs.k, a.rhs.k)) return false;
      continue;
    }
    int i = g.vertex(a.lhs);
    int j = g.vertex(a.rhs);
    if (i != j && !reach[i][j]) return false;
  }
  return true;
}

bool satisfiable(const Constraint& c) {
  if (c.falsum) return false;
  FreshSource scratch;
  scratch.next_kvar = 1 << 28;
  scratch.next_tvar = 1 << 28;
  Subst id;
  return std::holds_alternative<NormalizeResult>(normalize(c, id, scratch));
}

// ---------------------------------------------------------------------------
// Variance-based simplification

namespace {

enum Var : uint8_t { kNone = 0, kCo = 1, kContra = 2, kInvar = 3 };

void scan_variance(const TypePtr& t, bool positive, std::map<int, uint8_t>& acc,
                   bool invariant_ctx) {
  if (!t) return;
  auto mark = [&](Kind k) {
    if (!k.is_var()) return;
    uint8_t bit = invariant_ctx ? kInvar : (positive ? kCo : kContra);
    acc[k.var] |= bit;
  };
  switch (t->tag) {
    case Type::Tag::Var:
      return;
    case Type::Tag::App:
      for (auto& a : t->args) scan_variance(a, positive, acc, true);
      return;
    case Type::Tag::Pair:
      scan_variance(t->left, positive, acc, invariant_ctx);
      scan_variance(t->right, positive, acc, invariant_ctx);
      return;
    case Type::Tag::Arrow:
      mark(t->kind);
      scan_variance(t->left, !positive, acc, invariant_ctx);
      scan_variance(t->right, positive, acc, invariant_ctx);
      return;
    case Type::Tag::Borrow:
      mark(t->kind);
      scan_variance(t->left, positive, acc, invariant_ctx);
      return;
  }
}

TypePtr subst_kind_in_type(const TypePtr& t, int var, Kind repl) {
  Subst s;
  s.kvars[var] = repl;
  return s.apply(t);
}

}  // namespace

TypeScheme simplify_variance(const TypeScheme& s0, FreshSource& fresh, Subst* applied) {
  TypeScheme s = s0;
  for (int round = 0; round < 64; round++) {
    std::map<int, uint8_t> var_use;
    scan_variance(s.body, true, var_use, false);
    std::set<int> in_bounds;
    for (auto& [tv, k] : s.tvars)
      if (k.is_var()) in_bounds.insert(k.var);

    int chosen = -1;
    Kind repl;
    bool drop_lowers = false;
    for (int kv : s.kvars) {
      auto it = var_use.find(kv);
      uint8_t use = it == var_use.end() ? kNone : it->second;
      if (use != kCo && use != kContra) continue;
      if (in_bounds.count(kv)) continue;
      // collect direct bounds from the solved constraint
      std::vector<Kind> lo, hi;
      for (auto& a : s.ctr.kinds) {
        if (a.rhs.is_var() && a.rhs.var == kv) lo.push_back(a.lhs);
        if (a.lhs.is_var() && a.lhs.var == kv) hi.push_back(a.rhs);
      }
      Kind target;
      bool found = false;
      bool drop_var_lowers = false;
      if (use == kCo) {
        std::vector<Kind> vars, consts;
        for (auto& k : lo) (k.is_var() ? vars : consts).push_back(k);
        if (vars.empty()) {
          KConst acc = kBottom;
          for (auto& k : consts) acc = lub2(acc, k.k);
          target = Kind::mk_const(acc);
          found = true;
        } else if (consts.empty()) {
          // merge into the oldest variable bound; the remaining lower
          // bounds are rewritten onto it (sound under kind subsumption)
          Kind best = vars[0];
          for (auto& k : vars)
            if (k.var < best.var) best = k;
          target = best;
          found = true;
        } else {
          // a linear constant lower bound dominates the quality whatever
          // the variables contribute; the variable bounds are dropped
          KConst acc = kBottom;
          for (auto& k : consts) acc = lub2(acc, k.k);
          if (acc.quality == Quality::Lin) {
            target = Kind::mk_const(acc);
            drop_var_lowers = true;
            found = true;
          }
        }
      } else {
        // contravariant: replace only by a unique upper bound, and only
        // when no lower bounds would be weakened
        if (lo.empty()) {
          std::vector<Kind> vars, consts;
          for (auto& k : hi) (k.is_var() ? vars : consts).push_back(k);
          if (vars.empty() && !consts.empty()) {
            KConst acc = kTop;
            for (auto& k : consts) acc = glb2(acc, k.k);
            target = Kind::mk_const(acc);
            found = true;
          } else if (vars.size() == 1 && consts.empty()) {
            target = vars[0];
            found = true;
          }
        }
      }
      if (!found) continue;
      chosen = kv;
      repl = target;
      drop_lowers = drop_var_lowers;
      break;
    }
    if (chosen < 0) break;

    // substitute and rewrite the constraint
    Subst sub;
    sub.kvars[chosen] = repl;
    if (applied) {
      applied->kvars[chosen] = repl;
      applied->compress();
    }
    s.body = sub.apply(s.body);
    Constraint c2;
    for (auto& a : s.ctr.kinds) {
      if (drop_lowers && a.rhs.is_var() && a.rhs.var == chosen && a.lhs.is_var()) continue;
      Kind l = sub.resolve(a.lhs), r = sub.resolve(a.rhs);
      if (l == r) continue;
      if (!l.is_var() && !r.is_var()) {
        if (const_leq(l.k, r.k)) continue;
        // a constant bound folded the wrong way would be unsound; keep the
        // original variable instead
        c2.kinds.push_back({l, r});
        continue;
      }
      c2.kinds.push_back({l, r});
    }
    for (auto& [tv, k] : s.tvars) {
      (void)tv;
      (void)k;
    }

    // renormalize the (kind-only) constraint
    NormalizeOutcome res = normalize(c2, Subst{}, fresh);
    if (auto* ok = std::get_if<NormalizeResult>(&res)) {
      s.ctr = ok->solved;
      s.body = ok->subst.apply(s.body);
      for (auto& [tv, k] : s.tvars) k = ok->subst.resolve(k);
      if (applied && !ok->subst.kvars.empty()) {
        *applied = subst_merge(*applied, ok->subst);
        applied->compress();
      }
    } else {
      s.ctr = c2;
    }
    s.kvars.erase(std::remove(s.kvars.begin(), s.kvars.end(), chosen), s.kvars.end());
  }

  // drop quantifiers that no longer occur
  std::vector<int> kv, tv;
  free_vars_scheme(TypeScheme{{}, s.tvars, s.ctr, s.body}, kv, tv);
  std::set<int> used_k(kv.begin(), kv.end());
  std::set<int> used_t;
  {
    std::vector<int> tmp;
    free_tvars_type(s.body, tmp);
    std::vector<int> tmpc, tmpk;
    free_vars_constraint(s.ctr, tmpk, tmpc);
    used_t.insert(tmp.begin(), tmp.end());
    used_t.insert(tmpc.begin(), tmpc.end());
  }
  std::vector<std::pair<int, Kind>> tvars2;
  for (auto& [v, k] : s.tvars)
    if (used_t.count(v)) tvars2.push_back({v, k});
  s.tvars = std::move(tvars2);
  std::set<int> used_k2(used_k.begin(), used_k.end());
  for (auto& [v, k] : s.tvars)
    if (k.is_var()) used_k2.insert(k.var);
  std::vector<int> kvars2;
  for (int v : s.kvars)
    if (used_k2.count(v)) kvars2.push_back(v);
  s.kvars = std::move(kvars2);
  return s;
}

// ---------------------------------------------------------------------------

std::string constraint_graph_dot(const Constraint& c) {
  Subst id;
  Graph g = build_graph(c.kinds, id);
  g.saturate();
  std::ostringstream os;
  os << "digraph constraints {\n";
  auto name = [&](const Kind& k) -> std::string {
    if (k.is_var()) return "k" + std::to_string(k.var);
    std::string q = k.k.quality == Quality::Un ? "un" : k.k.quality == Quality::Aff ? "aff" : "lin";
    if (k.k.level == kLevelInf) return q + "_inf";
    return q + "_" + std::to_string(k.k.level);
  };
  for (size_t i = 0; i < g.size(); i++)
    for (int j : g.succ[i])
      os << "  \"" << name(g.verts[i]) << "\" -> \"" << name(g.verts[j]) << "\";\n";
  os << "}\n";
  return os.str();
}

}  // namespace affe
