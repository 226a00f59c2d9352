#include "affe/lattice.hpp"

#include <algorithm>

namespace affe {

bool level_leq(Level a, Level b) {
  if (b == kLevelInf) return true;
  if (a == kLevelInf) return false;
  return a <= b;
}

Level level_lub(Level a, Level b) { return level_leq(a, b) ? b : a; }
Level level_glb(Level a, Level b) { return level_leq(a, b) ? a : b; }

bool const_leq(KConst a, KConst b) {
  return a.quality <= b.quality && level_leq(a.level, b.level);
}

KConst lub2(KConst a, KConst b) {
  return KConst{std::max(a.quality, b.quality), level_lub(a.level, b.level)};
}

KConst glb2(KConst a, KConst b) {
  return KConst{std::min(a.quality, b.quality), level_glb(a.level, b.level)};
}

KConst lub(std::span<const KConst> ks) {
  KConst acc = kBottom;
  for (auto k : ks) acc = lub2(acc, k);
  return acc;
}

KConst glb(std::span<const KConst> ks) {
  KConst acc = kTop;
  for (auto k : ks) acc = glb2(acc, k);
  return acc;
}

}  // namespace affe
