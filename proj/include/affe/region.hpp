#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "affe/syntax.hpp"

namespace affe {

// Borrows seen in a subterm that are not yet enclosed by a region; one entry
// per variable holding the strongest pending use.
using PendingBorrows = std::map<std::string, BorrowSpec>;

struct MergeResult {
  PendingBorrows close_left;
  PendingBorrows still_pending;
  PendingBorrows close_right;
};

// Per-variable row selection over two sibling subterms' pending sets:
// shared+shared stays pending; shared-left/exclusive-right closes the left
// region and keeps the exclusive pending; exclusive-left closes both sides;
// one-sided entries stay pending.
MergeResult merge_scopes(const PendingBorrows& left, const PendingBorrows& right);

// Rewrites an optionally-annotated program into one where every region node
// carries (level, variable, spec) and no borrow occurs outside a region.
SExprPtr annotate_program(const SExprPtr& e);

struct AnnotationViolation {
  std::string message;
  std::string variable;
};

// Checks the region-placement rules plus well-nesting of levels:
//   1. every borrow of x lies inside an x-region, and its innermost x-region
//      carries the borrow's own spec;
//   2. regions occur within the scope of their variable;
//   3. an exclusive borrow never shares its innermost region with any other
//      borrow of the same variable;
//   4. x does not occur directly inside an x-region;
//   5. nested regions have strictly increasing levels.
std::vector<AnnotationViolation> validate_annotation(const SExprPtr& e);

}  // namespace affe
