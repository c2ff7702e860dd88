#pragma once

// Finite-trace LTL over trace_step records.
//
// Semantics on a trace of length n, position i < n:
//   X f      i+1 < n and f holds at i+1 (strong next: false at the last step)
//   F f      f holds at some j >= i
//   G f      f holds at every j >= i
//   f U g    g holds at some j >= i and f holds on [i, j)
//   f W g    (f U g) or G f
//
// Text syntax is prefix notation; parentheses only group:
//   G (-> mod_lmt reset)
//   G (-> (| mod_ar reset) (W (-> pc_cr_auth up_lmt) (| pc_cr_max reset)))

#include <rata/common.hpp>
#include <rata/trace.hpp>

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rata::ltl {

enum class atom : std::uint8_t {
  mod_ar,
  mod_lmt,
  reset,
  set_lmt,
  up_lmt,
  pc_cr_auth,
  pc_cr_max,
  r_en,
  w_en,
  dma_en,
  irq,
  true_,
  false_,
};

inline constexpr std::pair<std::string_view, atom> atom_names[] = {
    {"mod_ar", atom::mod_ar},   {"mod_lmt", atom::mod_lmt},       {"reset", atom::reset},
    {"set_lmt", atom::set_lmt}, {"up_lmt", atom::up_lmt},         {"pc_cr_auth", atom::pc_cr_auth},
    {"pc_cr_max", atom::pc_cr_max}, {"r_en", atom::r_en},         {"w_en", atom::w_en},
    {"dma_en", atom::dma_en},   {"irq", atom::irq},               {"true", atom::true_},
    {"false", atom::false_},
};

inline atom atom_from_name(std::string_view name) {
  for (auto [n, a] : atom_names)
    if (n == name) return a;
  throw formula_error("unknown atom `" + std::string(name) + "`");
}

inline std::string_view atom_name(atom a) {
  for (auto [n, v] : atom_names)
    if (v == a) return n;
  return "?";
}

inline bool atom_value(atom a, const trace_step& s) {
  switch (a) {
  case atom::mod_ar: return s.mod_ar;
  case atom::mod_lmt: return s.mod_lmt;
  case atom::reset: return s.outputs.reset;
  case atom::set_lmt: return s.outputs.set_lmt;
  case atom::up_lmt: return s.outputs.up_lmt;
  case atom::pc_cr_auth: return s.pc_cr_auth;
  case atom::pc_cr_max: return s.pc_cr_max;
  case atom::r_en: return s.signals.r_en;
  case atom::w_en: return s.signals.w_en;
  case atom::dma_en: return s.signals.dma_en;
  case atom::irq: return s.signals.irq;
  case atom::true_: return true;
  case atom::false_: return false;
  }
  return false;
}

enum class op : std::uint8_t { atom, not_, and_, or_, implies, iff, next, eventually, globally, until, weak_until };

constexpr int arity(op o) {
  switch (o) {
  case op::atom: return 0;
  case op::not_:
  case op::next:
  case op::eventually:
  case op::globally: return 1;
  default: return 2;
  }
}

/// Immutable formula tree with value semantics (children are shared).
class formula {
public:
  formula() : formula(atom::true_) {}
  formula(atom a) : node_(std::make_shared<node>(node{op::atom, a, {}, {}})) {}

  op kind() const noexcept { return node_->kind; }
  atom atom_id() const noexcept { return node_->a; }
  const formula& lhs() const { return *node_->lhs; }
  const formula& rhs() const { return *node_->rhs; }

  static formula make(op o, formula l, std::optional<formula> r = std::nullopt) {
    if (arity(o) == 2 && !r) throw formula_error("binary operator needs two operands");
    formula f;
    f.node_ = std::make_shared<node>(node{o, atom::true_, std::make_shared<formula>(std::move(l)),
                                          r ? std::make_shared<formula>(std::move(*r)) : nullptr});
    return f;
  }

  std::size_t size() const {
    switch (arity(kind())) {
    case 0: return 1;
    case 1: return 1 + lhs().size();
    default: return 1 + lhs().size() + rhs().size();
    }
  }

private:
  struct node {
    op kind;
    atom a;
    std::shared_ptr<const formula> lhs;
    std::shared_ptr<const formula> rhs;
  };
  std::shared_ptr<const node> node_;
};

inline formula operator!(formula f) { return formula::make(op::not_, std::move(f)); }
inline formula operator&&(formula a, formula b) { return formula::make(op::and_, std::move(a), std::move(b)); }
inline formula operator||(formula a, formula b) { return formula::make(op::or_, std::move(a), std::move(b)); }
inline formula implies(formula a, formula b) { return formula::make(op::implies, std::move(a), std::move(b)); }
inline formula iff(formula a, formula b) { return formula::make(op::iff, std::move(a), std::move(b)); }
inline formula next(formula f) { return formula::make(op::next, std::move(f)); }
inline formula eventually(formula f) { return formula::make(op::eventually, std::move(f)); }
inline formula globally(formula f) { return formula::make(op::globally, std::move(f)); }
inline formula until(formula a, formula b) { return formula::make(op::until, std::move(a), std::move(b)); }
inline formula weak_until(formula a, formula b) { return formula::make(op::weak_until, std::move(a), std::move(b)); }

inline std::string_view op_token(op o) {
  switch (o) {
  case op::not_: return "!";
  case op::and_: return "&";
  case op::or_: return "|";
  case op::implies: return "->";
  case op::iff: return "<->";
  case op::next: return "X";
  case op::eventually: return "F";
  case op::globally: return "G";
  case op::until: return "U";
  case op::weak_until: return "W";
  case op::atom: break;
  }
  return "";
}

inline std::string to_string(const formula& f) {
  switch (arity(f.kind())) {
  case 0: return std::string(atom_name(f.atom_id()));
  case 1: {
    auto inner = to_string(f.lhs());
    if (arity(f.lhs().kind()) != 0) inner = "(" + inner + ")";
    return std::string(op_token(f.kind())) + " " + inner;
  }
  default: {
    auto wrap = [](const formula& g) {
      auto s = to_string(g);
      return arity(g.kind()) == 0 ? s : "(" + s + ")";
    };
    return std::string(op_token(f.kind())) + " " + wrap(f.lhs()) + " " + wrap(f.rhs());
  }
  }
}

namespace detail {

class parser {
public:
  explicit parser(std::string_view text) { tokenize(text); }

  formula parse_all() {
    if (tokens_.empty()) throw formula_error("empty formula");
    formula f = parse_expr();
    if (pos_ != tokens_.size()) throw formula_error("trailing input at `" + tokens_[pos_] + "`");
    return f;
  }

private:
  void tokenize(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
      char c = s[i];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++i;
      } else if (c == '(' || c == ')') {
        tokens_.emplace_back(1, c);
        ++i;
      } else {
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\n' && s[j] != '\r' && s[j] != '(' &&
               s[j] != ')')
          ++j;
        tokens_.emplace_back(s.substr(i, j - i));
        i = j;
      }
    }
  }

  static std::optional<op> op_from_token(std::string_view t) {
    if (t == "!" || t == "not") return op::not_;
    if (t == "&" || t == "and") return op::and_;
    if (t == "|" || t == "or") return op::or_;
    if (t == "->" || t == "implies") return op::implies;
    if (t == "<->" || t == "iff") return op::iff;
    if (t == "X") return op::next;
    if (t == "F") return op::eventually;
    if (t == "G") return op::globally;
    if (t == "U") return op::until;
    if (t == "W") return op::weak_until;
    return std::nullopt;
  }

  formula parse_expr() {
    if (pos_ >= tokens_.size()) throw formula_error("unexpected end of formula");
    const std::string& t = tokens_[pos_++];
    if (t == "(") {
      formula f = parse_expr();
      if (pos_ >= tokens_.size() || tokens_[pos_] != ")") throw formula_error("missing `)`");
      ++pos_;
      return f;
    }
    if (t == ")") throw formula_error("unexpected `)`");
    if (auto o = op_from_token(t)) {
      formula a = parse_expr();
      if (arity(*o) == 1) return formula::make(*o, std::move(a));
      formula b = parse_expr();
      return formula::make(*o, std::move(a), std::move(b));
    }
    return formula(atom_from_name(t));
  }

  std::vector<std::string> tokens_;
  std::size_t pos_ = 0;
};

// Truth table of `f` at every position of `t`, computed bottom-up.
inline std::vector<char> table(const formula& f, const trace& t) {
  const std::size_t n = t.size();
  std::vector<char> out(n);
  switch (f.kind()) {
  case op::atom:
    for (std::size_t i = 0; i < n; ++i) out[i] = atom_value(f.atom_id(), t[i]);
    return out;
  case op::not_: {
    auto a = table(f.lhs(), t);
    for (std::size_t i = 0; i < n; ++i) out[i] = !a[i];
    return out;
  }
  case op::next: {
    auto a = table(f.lhs(), t);
    for (std::size_t i = 0; i + 1 < n; ++i) out[i] = a[i + 1];
    if (n) out[n - 1] = false;
    return out;
  }
  case op::eventually: {
    auto a = table(f.lhs(), t);
    char acc = false;
    for (std::size_t i = n; i-- > 0;) out[i] = acc = a[i] || acc;
    return out;
  }
  case op::globally: {
    auto a = table(f.lhs(), t);
    char acc = true;
    for (std::size_t i = n; i-- > 0;) out[i] = acc = a[i] && acc;
    return out;
  }
  default: break;
  }

  auto a = table(f.lhs(), t);
  auto b = table(f.rhs(), t);
  switch (f.kind()) {
  case op::and_:
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] && b[i];
    break;
  case op::or_:
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] || b[i];
    break;
  case op::implies:
    for (std::size_t i = 0; i < n; ++i) out[i] = !a[i] || b[i];
    break;
  case op::iff:
    for (std::size_t i = 0; i < n; ++i) out[i] = (a[i] != 0) == (b[i] != 0);
    break;
  case op::until: {
    char acc = false;
    for (std::size_t i = n; i-- > 0;) out[i] = acc = b[i] || (a[i] && acc);
    break;
  }
  case op::weak_until: {
    char acc = true;
    for (std::size_t i = n; i-- > 0;) out[i] = acc = b[i] || (a[i] && acc);
    break;
  }
  default: break;
  }
  return out;
}

} // namespace detail

inline formula parse(std::string_view text) { return detail::parser(text).parse_all(); }

/// Truth of `f` at position `pos` of a non-empty finite trace.
inline bool eval(const formula& f, const trace& t, std::size_t pos) {
  if (t.empty()) throw std::out_of_range("cannot evaluate on an empty trace");
  if (pos >= t.size()) throw std::out_of_range("trace position " + std::to_string(pos) + " out of range");
  return detail::table(f, t)[pos] != 0;
}

/// First position where `G`-rooted formula `f`'s body fails, if any. For other
/// formulas returns 0 when `f` fails at 0.
inline std::optional<std::size_t> first_violation(const formula& f, const trace& t) {
  if (t.empty()) throw std::out_of_range("cannot evaluate on an empty trace");
  if (f.kind() == op::globally) {
    auto body = detail::table(f.lhs(), t);
    for (std::size_t i = 0; i < body.size(); ++i)
      if (!body[i]) return i;
    return std::nullopt;
  }
  if (!eval(f, t, 0)) return 0;
  return std::nullopt;
}

struct named_formula {
  std::string name;
  formula f;
};

inline formula lmt_write_resets() { return globally(implies(atom::mod_lmt, atom::reset)); }

/// RATA_A: LMT is read-only to software; LMT is stamped iff AR is written.
inline std::vector<named_formula> rata_a_invariants() {
  return {
      {"lmt-read-only", lmt_write_resets()},
      {"lmt-stamped-iff-ar-write", globally(iff(atom::mod_ar, atom::set_lmt))},
  };
}

/// RATA_B: LMT is read-only; LMT only updates at CR_auth; an AR write or
/// reset forces an update at the next CR_auth before the routine exits.
inline std::vector<named_formula> rata_b_invariants() {
  return {
      {"lmt-read-only", lmt_write_resets()},
      {"update-only-after-auth", globally(implies(!formula(atom::up_lmt) && next(atom::up_lmt), next(atom::pc_cr_auth)))},
      {"modification-forces-update",
       globally(implies(formula(atom::mod_ar) || atom::reset,
                        weak_until(implies(atom::pc_cr_auth, atom::up_lmt), formula(atom::pc_cr_max) || atom::reset)))},
  };
}

struct verdict {
  std::string name;
  std::string text;
  bool holds = false;
  std::optional<std::size_t> violation;
};

inline std::vector<verdict> check(const std::vector<named_formula>& suite, const trace& t) {
  std::vector<verdict> out;
  for (const auto& nf : suite) {
    verdict v{nf.name, to_string(nf.f), false, std::nullopt};
    if (t.empty()) {
      v.holds = true; // vacuous on an empty run
    } else {
      v.violation = first_violation(nf.f, t);
      v.holds = !v.violation.has_value();
    }
    out.push_back(std::move(v));
  }
  return out;
}

inline bool all_hold(const std::vector<verdict>& vs) {
  for (const auto& v : vs)
    if (!v.holds) return false;
  return true;
}

} // namespace rata::ltl
