#include "affe/region.hpp"

#include <algorithm>
#include <functional>

namespace affe {

namespace {

BorrowSpec stronger(BorrowSpec a, BorrowSpec b) {
  return (a == BorrowSpec::Exclusive || b == BorrowSpec::Exclusive) ? BorrowSpec::Exclusive
                                                                    : BorrowSpec::Shared;
}

}  // namespace

MergeResult merge_scopes(const PendingBorrows& left, const PendingBorrows& right) {
  MergeResult r;
  std::set<std::string> vars;
  for (auto& [x, s] : left) vars.insert(x);
  for (auto& [x, s] : right) vars.insert(x);
  for (auto& x : vars) {
    auto li = left.find(x), ri = right.find(x);
    bool l = li != left.end(), rr = ri != right.end();
    if (l && !rr) {
      r.still_pending[x] = li->second;  // AnnotRegion-Left
    } else if (!l && rr) {
      r.still_pending[x] = ri->second;  // AnnotRegion-Right
    } else if (li->second == BorrowSpec::Shared && ri->second == BorrowSpec::Shared) {
      r.still_pending[x] = BorrowSpec::Shared;  // AnnotRegion-Immut
    } else if (li->second == BorrowSpec::Shared) {
      // AnnotRegion-MutLeft: enclose the shared side now, the exclusive
      // borrow keeps growing
      r.close_left[x] = BorrowSpec::Shared;
      r.still_pending[x] = BorrowSpec::Exclusive;
    } else {
      // AnnotRegion-MutRight: an exclusive borrow on the left closes both
      r.close_left[x] = li->second;
      r.close_right[x] = ri->second;
    }
  }
  return r;
}

namespace {

struct Walk {
  SExprPtr term;
  PendingBorrows pending;
  std::set<std::string> marked;  // explicit markers closed a region for these
  std::set<std::string> direct;  // variables used directly (plain Var)
};

SExprPtr wrap_regions(SExprPtr e, const PendingBorrows& close) {
  // deterministic nesting: later names outermost
  for (auto& [x, spec] : close) e = s_region(x, spec, 0, e, e->loc);
  return e;
}

Walk walk(const SExprPtr& e);

// Pre-closes pending borrows that may not grow past this merge point: a
// direct use or a marker-closed region of the same variable on the other
// side caps the region (rule 4 / annotation-as-upper-bound).
void force_close(PendingBorrows& pend, const std::set<std::string>& other_direct,
                 const std::set<std::string>& other_marked, PendingBorrows& close) {
  for (auto it = pend.begin(); it != pend.end();) {
    if (other_direct.count(it->first) || other_marked.count(it->first)) {
      close[it->first] = it->second;
      it = pend.erase(it);
    } else {
      ++it;
    }
  }
}

struct MergePlan {
  PendingBorrows close_left, close_right, pending;
};

MergePlan merge_sides(Walk& l, Walk& r) {
  MergePlan plan;
  force_close(l.pending, r.direct, r.marked, plan.close_left);
  force_close(r.pending, l.direct, l.marked, plan.close_right);
  MergeResult m = merge_scopes(l.pending, r.pending);
  for (auto& [x, s] : m.close_left) plan.close_left[x] = s;
  for (auto& [x, s] : m.close_right) plan.close_right[x] = s;
  plan.pending = m.still_pending;
  return plan;
}

void erase_var(Walk& w, const std::string& x) {
  w.pending.erase(x);
  w.marked.erase(x);
  w.direct.erase(x);
}

Walk walk_binary(const SExprPtr& e) {
  // App and Pair: no binding
  Walk l = walk(e->a);
  Walk r = walk(e->b);
  MergePlan plan = merge_sides(l, r);
  auto node = std::make_shared<SurfaceExpr>(*e);
  node->a = wrap_regions(l.term, plan.close_left);
  node->b = wrap_regions(r.term, plan.close_right);
  Walk w;
  w.term = node;
  w.pending = std::move(plan.pending);
  w.marked = l.marked;
  w.marked.insert(r.marked.begin(), r.marked.end());
  w.direct = l.direct;
  w.direct.insert(r.direct.begin(), r.direct.end());
  return w;
}

Walk walk(const SExprPtr& e) {
  using T = SurfaceExpr::Tag;
  Walk w;
  switch (e->tag) {
    case T::Const:
    case T::Create:
    case T::Observe:
    case T::Update:
    case T::Destroy:
      w.term = e;
      return w;
    case T::Var:
      w.term = e;
      w.direct.insert(e->var);
      return w;
    case T::Borrow:
    case T::ReBorrow:
      w.term = e;
      w.pending[e->var] = e->bspec;
      return w;
    case T::Lam: {
      Walk b = walk(e->a);
      PendingBorrows mine;
      if (auto it = b.pending.find(e->var); it != b.pending.end()) {
        mine[e->var] = it->second;
        b.pending.erase(it);
      }
      auto node = std::make_shared<SurfaceExpr>(*e);
      node->a = wrap_regions(b.term, mine);
      w.term = node;
      w.pending = std::move(b.pending);
      w.marked = std::move(b.marked);
      w.direct = std::move(b.direct);
      erase_var(w, e->var);
      return w;
    }
    case T::Let: {
      Walk l = walk(e->a);
      Walk r = walk(e->b);
      PendingBorrows bound;
      if (auto it = r.pending.find(e->var); it != r.pending.end()) {
        bound[e->var] = it->second;
        r.pending.erase(it);
      }
      erase_var(r, e->var);
      MergePlan plan = merge_sides(l, r);
      for (auto& [x, s] : bound) plan.close_right[x] = s;
      auto node = std::make_shared<SurfaceExpr>(*e);
      node->a = wrap_regions(l.term, plan.close_left);
      node->b = wrap_regions(r.term, plan.close_right);
      w.term = node;
      w.pending = std::move(plan.pending);
      w.marked = l.marked;
      w.marked.insert(r.marked.begin(), r.marked.end());
      w.direct = l.direct;
      w.direct.insert(r.direct.begin(), r.direct.end());
      return w;
    }
    case T::Match: {
      Walk l = walk(e->a);
      Walk r = walk(e->b);
      PendingBorrows bound;
      for (auto& x : {e->var, e->var2}) {
        if (auto it = r.pending.find(x); it != r.pending.end()) {
          bound[x] = it->second;
          r.pending.erase(it);
        }
        erase_var(r, x);
      }
      MergePlan plan = merge_sides(l, r);
      for (auto& [x, s] : bound) plan.close_right[x] = s;
      auto node = std::make_shared<SurfaceExpr>(*e);
      node->a = wrap_regions(l.term, plan.close_left);
      node->b = wrap_regions(r.term, plan.close_right);
      w.term = node;
      w.pending = std::move(plan.pending);
      w.marked = l.marked;
      w.marked.insert(r.marked.begin(), r.marked.end());
      w.direct = l.direct;
      w.direct.insert(r.direct.begin(), r.direct.end());
      return w;
    }
    case T::App:
    case T::Pair:
      return walk_binary(e);
    case T::Region: {
      // explicit markers (and re-annotated regions) enclose all inner
      // pending borrows immediately
      Walk b = walk(e->a);
      w.term = wrap_regions(b.term, b.pending);
      w.marked = std::move(b.marked);
      for (auto& [x, s] : b.pending) {
        (void)s;
        w.marked.insert(x);
      }
      w.direct = std::move(b.direct);
      return w;
    }
  }
  w.term = e;
  return w;
}

SExprPtr assign_levels(const SExprPtr& e, Level depth) {
  if (!e) return e;
  auto node = std::make_shared<SurfaceExpr>(*e);
  if (e->tag == SurfaceExpr::Tag::Region) {
    node->level = depth + 1;
    node->a = assign_levels(e->a, depth + 1);
    node->b = nullptr;
    return node;
  }
  node->a = assign_levels(e->a, depth);
  node->b = assign_levels(e->b, depth);
  return node;
}

}  // namespace

SExprPtr annotate_program(const SExprPtr& e) {
  Walk w = walk(e);
  SExprPtr top = wrap_regions(w.term, w.pending);  // Rewrite-Top
  return assign_levels(top, 0);
}

// ---------------------------------------------------------------------------
// Validation

namespace {

struct RegionFrame {
  std::string var;
  BorrowSpec spec;
  Level level;
  int borrows_assigned = 0;
};

struct Validator {
  std::vector<AnnotationViolation> out;
  std::vector<RegionFrame> stack;
  std::vector<std::string> scope;

  void fail(const std::string& msg, const std::string& var) { out.push_back({msg, var}); }

  RegionFrame* innermost_for(const std::string& x) {
    for (auto it = stack.rbegin(); it != stack.rend(); ++it)
      if (it->var == x) return &*it;
    return nullptr;
  }

  void visit(const SExprPtr& e) {
    using T = SurfaceExpr::Tag;
    if (!e) return;
    switch (e->tag) {
      case T::Var: {
        if (innermost_for(e->var))
          fail("variable occurs directly inside its own region", e->var);
        return;
      }
      case T::Borrow:
      case T::ReBorrow: {
        RegionFrame* f = innermost_for(e->var);
        if (!f) {
          fail("borrow outside any region for its variable", e->var);
          return;
        }
        if (f->spec != e->bspec)
          fail("innermost region spec does not match the borrow", e->var);
        f->borrows_assigned++;
        if (f->spec == BorrowSpec::Exclusive && f->borrows_assigned > 1)
          fail("exclusive borrow shares its region with another borrow", e->var);
        return;
      }
      case T::Region: {
        if (!e->has_var) {
          fail("unannotated region marker survived annotation", "");
          visit(e->a);
          return;
        }
        if (std::find(scope.begin(), scope.end(), e->var) == scope.end())
          fail("region variable is not in scope", e->var);
        if (!stack.empty() && e->level <= stack.back().level)
          fail("inner region level must exceed the enclosing level", e->var);
        if (e->level == 0) fail("region level not assigned", e->var);
        stack.push_back({e->var, e->bspec, e->level, 0});
        visit(e->a);
        stack.pop_back();
        return;
      }
      case T::Lam: {
        scope.push_back(e->var);
        visit(e->a);
        scope.pop_back();
        return;
      }
      case T::Let: {
        visit(e->a);
        scope.push_back(e->var);
        visit(e->b);
        scope.pop_back();
        return;
      }
      case T::Match: {
        visit(e->a);
        scope.push_back(e->var);
        scope.push_back(e->var2);
        visit(e->b);
        scope.pop_back();
        scope.pop_back();
        return;
      }
      case T::App:
      case T::Pair:
        visit(e->a);
        visit(e->b);
        return;
      default:
        return;
    }
  }
};

}  // namespace

std::vector<AnnotationViolation> validate_annotation(const SExprPtr& e) {
  Validator v;
  // free variables of the whole program are in scope (top-level names)
  std::set<std::string> free;
  std::vector<std::pair<SExprPtr, std::vector<std::string>>> work{{e, {}}};
  // collect all identifiers to seed scope; simpler: allow any region var that
  // is bound somewhere above — handled by Validator::scope — plus top-level
  // free names:
  std::function<void(const SExprPtr&, std::vector<std::string>&)> collect =
      [&](const SExprPtr& n, std::vector<std::string>& bound) {
        if (!n) return;
        using T = SurfaceExpr::Tag;
        switch (n->tag) {
          case T::Var:
          case T::Borrow:
          case T::ReBorrow:
            if (std::find(bound.begin(), bound.end(), n->var) == bound.end())
              free.insert(n->var);
            return;
          case T::Lam:
            bound.push_back(n->var);
            collect(n->a, bound);
            bound.pop_back();
            return;
          case T::Let:
            collect(n->a, bound);
            bound.push_back(n->var);
            collect(n->b, bound);
            bound.pop_back();
            return;
          case T::Match:
            collect(n->a, bound);
            bound.push_back(n->var);
            bound.push_back(n->var2);
            collect(n->b, bound);
            bound.pop_back();
            bound.pop_back();
            return;
          default:
            collect(n->a, bound);
            collect(n->b, bound);
            return;
        }
      };
  std::vector<std::string> bound;
  collect(e, bound);
  (void)work;
  v.scope.assign(free.begin(), free.end());
  v.visit(e);
  return v.out;
}

}  // namespace affe
