#pragma once

// Direct quantifier expansion of finite-trace LTL, used to cross-check the
// table-based checker, plus random formula/trace generators.

#include <rata/ltl.hpp>

#include <random>

namespace rata::oracle {

inline bool brute_force(const ltl::formula& f, const trace& t, std::size_t i) {
  using ltl::op;
  const std::size_t n = t.size();
  switch (f.kind()) {
  case op::atom: return ltl::atom_value(f.atom_id(), t[i]);
  case op::not_: return !brute_force(f.lhs(), t, i);
  case op::and_: return brute_force(f.lhs(), t, i) && brute_force(f.rhs(), t, i);
  case op::or_: return brute_force(f.lhs(), t, i) || brute_force(f.rhs(), t, i);
  case op::implies: return !brute_force(f.lhs(), t, i) || brute_force(f.rhs(), t, i);
  case op::iff: return brute_force(f.lhs(), t, i) == brute_force(f.rhs(), t, i);
  case op::next: return i + 1 < n && brute_force(f.lhs(), t, i + 1);
  case op::eventually:
    for (std::size_t j = i; j < n; ++j)
      if (brute_force(f.lhs(), t, j)) return true;
    return false;
  case op::globally:
    for (std::size_t j = i; j < n; ++j)
      if (!brute_force(f.lhs(), t, j)) return false;
    return true;
  case op::until:
  case op::weak_until: {
    for (std::size_t j = i; j < n; ++j) {
      if (brute_force(f.rhs(), t, j)) {
        bool prefix = true;
        for (std::size_t k = i; k < j && prefix; ++k) prefix = brute_force(f.lhs(), t, k);
        if (prefix) return true;
      }
    }
    if (f.kind() == op::until) return false;
    for (std::size_t j = i; j < n; ++j)
      if (!brute_force(f.lhs(), t, j)) return false;
    return true;
  }
  }
  return false;
}

inline constexpr ltl::atom random_atoms[] = {ltl::atom::mod_ar,     ltl::atom::mod_lmt,   ltl::atom::reset,
                                             ltl::atom::set_lmt,    ltl::atom::up_lmt,    ltl::atom::pc_cr_auth,
                                             ltl::atom::pc_cr_max,  ltl::atom::irq,       ltl::atom::true_};

template <class Engine>
ltl::formula random_formula(Engine& rng, int depth) {
  using ltl::op;
  if (depth == 0 || rng() % 4 == 0) return ltl::formula(random_atoms[rng() % std::size(random_atoms)]);
  static constexpr op ops[] = {op::not_,    op::and_,       op::or_,      op::implies, op::iff,
                               op::next,    op::eventually, op::globally, op::until,   op::weak_until};
  const op o = ops[rng() % std::size(ops)];
  auto a = random_formula(rng, depth - 1);
  if (ltl::arity(o) == 1) return ltl::formula::make(o, a);
  return ltl::formula::make(o, a, random_formula(rng, depth - 1));
}

/// Trace whose atoms are independent random bits (not derived from signals).
template <class Engine>
trace random_trace(Engine& rng, std::size_t n) {
  trace t(n);
  for (auto& s : t) {
    s.mod_ar = rng() & 1;
    s.mod_lmt = rng() & 1;
    s.outputs.reset = rng() & 1;
    s.outputs.set_lmt = rng() & 1;
    s.outputs.up_lmt = rng() & 1;
    s.pc_cr_auth = rng() & 1;
    s.pc_cr_max = rng() & 1;
    s.signals.irq = rng() & 1;
  }
  return t;
}

} // namespace rata::oracle
