// SPDX-License-Identifier: Apache-2.0
#include "qtl/formula.hpp"

#include <cctype>

namespace qtl {

Atom atom_from_blocks(const std::string &name,
                      const std::map<std::string, Subspace> &blocks,
                      const FlatModel &model) {
  const std::size_t C = model.configs(), d = model.dim;
  std::vector<Mat> vecs;
  for (const auto &[label, sub] : blocks) {
    std::size_t c = model.config_index(label);
    if (sub.ambient_dim() != d)
      throw DimensionMismatch("block for '" + label + "' has ambient dimension " +
                              std::to_string(sub.ambient_dim()) + ", expected " +
                              std::to_string(d));
    for (const auto &v : sub.basis()) {
      Mat e(d * C, 1);
      for (std::size_t h = 0; h < d; ++h)
        e(h * C + c, 0) = v(h, 0);
      vecs.push_back(std::move(e));
    }
  }
  return Atom{name, Subspace::from_vectors(d * C, vecs)};
}

Subspace atom_block(const Atom &atom, const FlatModel &model, std::size_t c) {
  const std::size_t C = model.configs(), d = model.dim;
  const Mat &p = atom.subspace.projector();
  Mat b(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      b(i, j) = p(i * C + c, j * C + c);
  return support(b);
}

bool is_block_diagonal(const Subspace &s, std::size_t dim, std::size_t configs) {
  if (s.ambient_dim() != dim * configs)
    return false;
  const Mat &p = s.projector();
  for (std::size_t r = 0; r < p.rows(); ++r)
    for (std::size_t c = 0; c < p.cols(); ++c)
      if (r % configs != c % configs && !p(r, c).is_zero())
        return false;
  return true;
}

// ---------------------------------------------------------------------------

namespace {

FormulaPtr node(Formula::Kind k, std::vector<FormulaPtr> args = {},
                std::string atom = {}) {
  auto f = std::make_shared<Formula>();
  f->kind = k;
  f->args = std::move(args);
  f->atom = std::move(atom);
  return f;
}

} // namespace

FormulaPtr f_atom(std::string name) { return node(Formula::AtomRef, {}, std::move(name)); }
FormulaPtr f_true() { return node(Formula::True); }
FormulaPtr f_false() { return node(Formula::False); }
FormulaPtr f_and(FormulaPtr a, FormulaPtr b) { return node(Formula::And, {a, b}); }
FormulaPtr f_or(FormulaPtr a, FormulaPtr b) { return node(Formula::Or, {a, b}); }
FormulaPtr f_next(FormulaPtr a) { return node(Formula::Next, {a}); }
FormulaPtr f_until(FormulaPtr a, FormulaPtr b) { return node(Formula::Until, {a, b}); }
FormulaPtr f_almost_until(std::string hold, std::string target) {
  return node(Formula::AlmostUntil, {f_atom(std::move(hold)), f_atom(std::move(target))});
}
FormulaPtr f_eventually(FormulaPtr a) { return node(Formula::Eventually, {a}); }
FormulaPtr f_almost_eventually(std::string target) {
  return node(Formula::AlmostEventually, {f_atom(std::move(target))});
}
FormulaPtr f_always(FormulaPtr a) { return node(Formula::Always, {a}); }

// ---------------------------------------------------------------------------
// Parser

namespace {

class FormulaParser {
public:
  FormulaParser(const std::string &t, const AtomTable &a) : text_(t), atoms_(a) {}

  FormulaPtr parse() {
    FormulaPtr f = parse_or();
    skip();
    if (pos_ < text_.size())
      fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return f;
  }

private:
  const std::string &text_;
  const AtomTable &atoms_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string &msg) const {
    throw SyntaxError("formula column " + std::to_string(pos_ + 1) + ": " + msg);
  }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  static bool word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }

  // Length of the identifier at the cursor, 0 when none.
  std::size_t word_len() {
    skip();
    std::size_t p = pos_;
    if (p < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[p])) ||
                             text_[p] == '_'))
      while (p < text_.size() && word_char(text_[p]))
        ++p;
    return p - pos_;
  }

  bool at_word(const std::string &w) {
    std::size_t n = word_len();
    return n == w.size() && text_.compare(pos_, n, w) == 0;
  }

  bool at_sym(const std::string &s) {
    skip();
    return text_.compare(pos_, s.size(), s) == 0;
  }

  // `U~` or `U` as an infix operator.
  int at_until() {
    if (!at_word("U"))
      return 0;
    return (pos_ + 1 < text_.size() && text_[pos_ + 1] == '~') ? 2 : 1;
  }

  FormulaPtr parse_or() {
    FormulaPtr f = parse_and();
    while (at_sym("||")) {
      pos_ += 2;
      f = f_or(f, parse_and());
    }
    return f;
  }

  FormulaPtr parse_and() {
    FormulaPtr f = parse_until();
    while (at_sym("&&")) {
      pos_ += 2;
      f = f_and(f, parse_until());
    }
    return f;
  }

  FormulaPtr parse_until() {
    FormulaPtr f = parse_unary();
    while (int k = at_until()) {
      pos_ += static_cast<std::size_t>(k);
      FormulaPtr g = parse_unary();
      if (k == 2) {
        if (f->kind != Formula::AtomRef || g->kind != Formula::AtomRef)
          throw AlmostOperatorOnNonAtom("U~ takes atoms on both sides");
        f = f_almost_until(f->atom, g->atom);
      } else {
        f = f_until(f, g);
      }
    }
    return f;
  }

  FormulaPtr parse_unary() {
    if (at_word("X")) {
      pos_ += 1;
      return f_next(parse_unary());
    }
    if (at_sym("<>~")) {
      pos_ += 3;
      FormulaPtr g = parse_unary();
      if (g->kind != Formula::AtomRef)
        throw AlmostOperatorOnNonAtom("<>~ takes an atom");
      return f_almost_eventually(g->atom);
    }
    if (at_sym("<>")) {
      pos_ += 2;
      return f_eventually(parse_unary());
    }
    if (at_sym("[]")) {
      pos_ += 2;
      return f_always(parse_unary());
    }
    return parse_primary();
  }

  FormulaPtr parse_primary() {
    if (at_sym("(")) {
      ++pos_;
      FormulaPtr f = parse_or();
      if (!at_sym(")"))
        fail("expected ')'");
      ++pos_;
      return f;
    }
    std::size_t n = word_len();
    if (n == 0)
      fail(pos_ < text_.size() ? "unexpected '" + std::string(1, text_[pos_]) + "'"
                               : "unexpected end of formula");
    std::string w = text_.substr(pos_, n);
    if (w == "U")
      fail("operand expected before 'U'");
    pos_ += n;
    if (w == "true")
      return f_true();
    if (w == "false")
      return f_false();
    if (!atoms_.count(w))
      throw UnknownAtom("unknown atom '" + w + "'");
    return f_atom(w);
  }
};

} // namespace

FormulaPtr parse_formula(const std::string &text, const AtomTable &atoms) {
  return FormulaParser(text, atoms).parse();
}

std::string to_string(const Formula &f) {
  auto a = [&](std::size_t i) { return to_string(*f.args[i]); };
  switch (f.kind) {
  case Formula::AtomRef:
    return f.atom;
  case Formula::True:
    return "true";
  case Formula::False:
    return "false";
  case Formula::And:
    return "(" + a(0) + " && " + a(1) + ")";
  case Formula::Or:
    return "(" + a(0) + " || " + a(1) + ")";
  case Formula::Next:
    return "X " + a(0);
  case Formula::Until:
    return "(" + a(0) + " U " + a(1) + ")";
  case Formula::AlmostUntil:
    return "(" + a(0) + " U~ " + a(1) + ")";
  case Formula::Eventually:
    return "<> " + a(0);
  case Formula::AlmostEventually:
    return "<>~ " + a(0);
  case Formula::Always:
    return "[] " + a(0);
  }
  return "";
}

bool formula_equal(const Formula &a, const Formula &b) {
  if (a.kind != b.kind || a.atom != b.atom || a.args.size() != b.args.size())
    return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!formula_equal(*a.args[i], *b.args[i]))
      return false;
  return true;
}

std::optional<SubspaceUnion> state_union(const Formula &f, const AtomTable &atoms,
                                         std::size_t ambient) {
  switch (f.kind) {
  case Formula::AtomRef: {
    auto it = atoms.find(f.atom);
    if (it == atoms.end())
      throw UnknownAtom("unknown atom '" + f.atom + "'");
    if (it->second.subspace.ambient_dim() != ambient)
      throw DimensionMismatch("atom '" + f.atom + "' does not match the state space");
    return SubspaceUnion::single(it->second.subspace);
  }
  case Formula::True:
    return SubspaceUnion::full(ambient);
  case Formula::False:
    return SubspaceUnion::zero(ambient);
  case Formula::And:
  case Formula::Or: {
    auto l = state_union(*f.args[0], atoms, ambient);
    auto r = state_union(*f.args[1], atoms, ambient);
    if (!l || !r)
      return std::nullopt;
    return f.kind == Formula::And ? union_meet(*l, *r) : union_join(*l, *r);
  }
  default:
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Finite-prefix evaluation

namespace {

using PV = PrefixVerdict;

PV holds(std::size_t i) { return {PV::Holds, i}; }
PV fails(std::size_t i) { return {PV::Fails, i}; }
PV unknown() { return {PV::Inconclusive, 0}; }

class PrefixEval {
public:
  PrefixEval(const std::vector<Mat> &w, const AtomTable &atoms, PrefixSemantics s)
      : w_(w), atoms_(atoms), sem_(s) {}

  PV eval(const Formula &f, std::size_t i) {
    switch (f.kind) {
    case Formula::AtomRef:
      return satisfies(w_[i], atom(f.atom)) ? holds(i) : fails(i);
    case Formula::True:
      return holds(i);
    case Formula::False:
      return fails(i);
    case Formula::And: {
      PV a = eval(*f.args[0], i), b = eval(*f.args[1], i);
      if (a.kind == PV::Fails || b.kind == PV::Fails) {
        if (a.kind == PV::Fails && b.kind == PV::Fails)
          return fails(std::min(a.step, b.step));
        return a.kind == PV::Fails ? a : b;
      }
      if (a.kind == PV::Holds && b.kind == PV::Holds)
        return holds(std::max(a.step, b.step));
      return unknown();
    }
    case Formula::Or: {
      PV a = eval(*f.args[0], i), b = eval(*f.args[1], i);
      if (a.kind == PV::Holds || b.kind == PV::Holds) {
        if (a.kind == PV::Holds && b.kind == PV::Holds)
          return holds(std::min(a.step, b.step));
        return a.kind == PV::Holds ? a : b;
      }
      if (a.kind == PV::Fails && b.kind == PV::Fails)
        return fails(std::max(a.step, b.step));
      return unknown();
    }
    case Formula::Next:
      return i + 1 < w_.size() ? eval(*f.args[0], i + 1) : unknown();
    case Formula::Eventually:
      if (f.args[0]->kind == Formula::False)
        return fails(i);
      for (std::size_t j = i; j < w_.size(); ++j)
        if (PV r = eval(*f.args[0], j); r.kind == PV::Holds)
          return r;
      return unknown();
    case Formula::Always: {
      if (f.args[0]->kind == Formula::True)
        return holds(i);
      for (std::size_t j = i; j < w_.size(); ++j)
        if (PV r = eval(*f.args[0], j); r.kind == PV::Fails)
          return r;
      return unknown();
    }
    case Formula::Until:
      for (std::size_t j = i; j < w_.size(); ++j) {
        PV p = eval(*f.args[1], j);
        if (p.kind == PV::Holds)
          return p;
        if (p.kind == PV::Inconclusive)
          return unknown();
        PV q = eval(*f.args[0], j);
        if (q.kind != PV::Holds)
          return q;
      }
      return unknown();
    case Formula::AlmostEventually:
      for (std::size_t j = i; j < w_.size(); ++j)
        if (close_to_one(f.args[0]->atom, j))
          return holds(j);
      return unknown();
    case Formula::AlmostUntil: {
      const std::string &q = f.args[0]->atom, &p = f.args[1]->atom;
      for (std::size_t j = i; j < w_.size(); ++j) {
        if (close_to_one(p, j))
          return holds(j);
        if (!satisfies(w_[j], atom(q)))
          return fails(j);
      }
      return unknown();
    }
    }
    return unknown();
  }

private:
  const std::vector<Mat> &w_;
  const AtomTable &atoms_;
  PrefixSemantics sem_;

  const Subspace &atom(const std::string &name) const {
    auto it = atoms_.find(name);
    if (it == atoms_.end())
      throw UnknownAtom("unknown atom '" + name + "'");
    if (it->second.subspace.ambient_dim() != w_[0].rows())
      throw DimensionMismatch("atom '" + name + "' does not match the trace");
    return it->second.subspace;
  }

  // Exact mode: tr(w(j) p) reaches 1. Bounded mode: exceeds 1 - delta.
  bool close_to_one(const std::string &name, std::size_t j) const {
    CRat t = (atom(name).projector() * w_[j]).trace();
    if (!sem_.bounded)
      return t.re >= 1;
    return t.re.get_d() > 1.0 - sem_.delta;
  }
};

} // namespace

PrefixVerdict holds_prefix(const std::vector<Mat> &w, const Formula &f,
                           const AtomTable &atoms, PrefixSemantics sem) {
  if (w.empty())
    throw PreconditionViolated("holds_prefix needs a nonempty trace");
  for (const auto &m : w)
    if (!m.square() || m.rows() != w[0].rows())
      throw DimensionMismatch("trace states differ in dimension");
  for (const auto &[name, a] : atoms)
    if (a.subspace.ambient_dim() != w[0].rows())
      throw DimensionMismatch("atom '" + name + "' does not match the trace dimension");
  return PrefixEval(w, atoms, sem).eval(f, 0);
}

PrefixVerdict holds_prefix(const std::vector<CQState> &trace, std::size_t configs,
                           const Formula &f, const AtomTable &atoms,
                           PrefixSemantics sem) {
  std::vector<Mat> w;
  for (const auto &s : trace)
    w.push_back(embed(s.dim, configs, s));
  return holds_prefix(w, f, atoms, sem);
}

} // namespace qtl
