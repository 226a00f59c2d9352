#pragma once

#include <span>

#include "affe/syntax.hpp"

namespace affe {

// The kind lattice: qualities un < aff < lin, levels ordered with infinity
// on top, constants compared componentwise.

bool level_leq(Level a, Level b);
Level level_lub(Level a, Level b);
Level level_glb(Level a, Level b);

bool const_leq(KConst a, KConst b);

// lub({}) = un_0, glb({}) = lin_inf.
KConst lub(std::span<const KConst> ks);
KConst glb(std::span<const KConst> ks);

KConst lub2(KConst a, KConst b);
KConst glb2(KConst a, KConst b);

}  // namespace affe
