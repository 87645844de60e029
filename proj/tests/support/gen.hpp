// SPDX-License-Identifier: Apache-2.0
//
// Seeded generators of exact test instances. Everything stays rational:
// unitaries are monomial matrices or Householder reflections, and general
// channels come from a rational unitary dilation.
#pragma once

#include <random>

#include "qtl/checker.hpp"
#include "qtl/qwhile.hpp"

namespace qtl::testgen {

inline Rational frac(long num, long den) {
  Rational q(num, den);
  q.canonicalize();
  return q;
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}

  int range(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(g_); }
  std::size_t pick(std::size_t n) { return static_cast<std::size_t>(range(0, int(n) - 1)); }

  Rational small_rational(int num = 3, int den = 3) {
    return frac(range(-num, num), range(1, den));
  }
  CRat entry(bool complex) {
    CRat z(small_rational());
    if (complex && coin(0.4))
      z.im = small_rational();
    return z;
  }

private:
  std::mt19937_64 g_;
};

inline Mat random_matrix(Rng &r, std::size_t rows, std::size_t cols, bool complex = true) {
  Mat m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      m(i, j) = r.entry(complex);
  return m;
}

inline Mat random_nonzero_vector(Rng &r, std::size_t n, bool complex = true) {
  Mat v;
  do
    v = random_matrix(r, n, 1, complex);
  while (v.is_zero());
  return v;
}

inline Mat basis_vector(std::size_t n, std::size_t i) {
  Mat v(n, 1);
  v(i, 0) = CRat(1);
  return v;
}

// Random subspace of dimension <= k: generic span, or a coordinate span
// when `coordinate` is set.
inline Subspace random_subspace(Rng &r, std::size_t n, std::size_t k, bool coordinate = false) {
  std::vector<Mat> vs;
  for (std::size_t i = 0; i < k; ++i)
    vs.push_back(coordinate ? basis_vector(n, r.pick(n)) : random_nonzero_vector(r, n));
  return Subspace::from_vectors(n, vs);
}

inline SubspaceUnion random_union(Rng &r, std::size_t n, std::size_t members) {
  std::vector<Subspace> ms;
  for (std::size_t i = 0; i < members; ++i)
    ms.push_back(random_subspace(r, n, static_cast<std::size_t>(r.range(0, int(n))),
                                 r.coin(0.6)));
  return union_canonicalize(SubspaceUnion(n, ms));
}

// A A^dagger / tr, of rank at most `rank`.
inline Mat random_state(Rng &r, std::size_t n, std::size_t rank, bool complex = true) {
  Mat a;
  do
    a = random_matrix(r, n, rank, complex);
  while (a.is_zero());
  Mat rho = a * a.adjoint();
  return CRat(Rational(1) / rho.trace().re) * rho;
}

inline Mat coordinate_state(Rng &r, std::size_t n) {
  std::size_t i = r.pick(n);
  return Mat::unit(n, i, i);
}

// I - 2 v v^dagger / (v^dagger v): unitary, Hermitian, rational.
inline Mat reflection(const Mat &v) {
  Mat g = v.adjoint() * v;
  return Mat::identity(v.rows()) - (CRat(2) / g(0, 0)) * (v * v.adjoint());
}

inline Mat monomial_unitary(Rng &r, std::size_t n) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i)
    perm[i] = i;
  for (std::size_t i = n; i-- > 1;)
    std::swap(perm[i], perm[r.pick(i + 1)]);
  static const CRat phases[] = {CRat(1), CRat(-1), CRat::i(), -CRat::i()};
  Mat u(n, n);
  for (std::size_t j = 0; j < n; ++j)
    u(perm[j], j) = phases[r.pick(4)];
  return u;
}

// Rational unitary from a product of `count` reflections.
inline Mat random_unitary(Rng &r, std::size_t n, std::size_t count) {
  Mat u = Mat::identity(n);
  for (std::size_t i = 0; i < count; ++i)
    u = reflection(random_nonzero_vector(r, n)) * u;
  return u;
}

// Kraus operators <k|U|0> of a rational unitary on C^n ⊗ C^env.
inline SuperOp dilation_channel(Rng &r, std::size_t n, std::size_t env, std::size_t refl) {
  Mat u = random_unitary(r, n * env, refl);
  std::vector<KrausOp> ops;
  for (std::size_t k = 0; k < env; ++k) {
    Mat op(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        op(i, j) = u(i * env + k, j * env);
    if (!op.is_zero())
      ops.push_back({Rational(1), op});
  }
  return SuperOp(n, n, ops);
}

// Convex mixture of monomial unitaries with rational weights.
inline SuperOp monomial_mixture(Rng &r, std::size_t n, std::size_t terms) {
  std::vector<int> w(terms);
  int total = 0;
  for (auto &x : w)
    total += (x = r.range(1, 3));
  std::vector<KrausOp> ops;
  for (std::size_t i = 0; i < terms; ++i)
    ops.push_back({frac(w[i], total), monomial_unitary(r, n)});
  return SuperOp(n, n, ops);
}

// Measure in the computational basis and forget the outcome.
inline SuperOp dephasing(std::size_t n) {
  std::vector<KrausOp> ops;
  for (std::size_t i = 0; i < n; ++i)
    ops.push_back({Rational(1), Mat::unit(n, i, i)});
  return SuperOp(n, n, ops);
}

inline SuperOp reset_channel(std::size_t n, std::size_t target) {
  std::vector<KrausOp> ops;
  for (std::size_t i = 0; i < n; ++i)
    ops.push_back({Rational(1), Mat::unit(n, target, i)});
  return SuperOp(n, n, ops);
}

// Decay from level `from` to `to` with amplitude 4/5.
inline SuperOp damping(std::size_t n, std::size_t from, std::size_t to) {
  Mat k0 = Mat::identity(n);
  k0(from, from) = CRat(Rational(3, 5));
  Mat k1(n, n);
  k1(to, from) = CRat(Rational(4, 5));
  return SuperOp(n, n, {{Rational(1), k0}, {Rational(1), k1}});
}

// Channels whose peripheral eigenvalues are roots of unity of small order.
inline SuperOp finite_order_channel(Rng &r, std::size_t n) {
  switch (r.pick(6)) {
  case 0:
  case 1:
    return SuperOp::unitary(monomial_unitary(r, n));
  case 2:
    return monomial_mixture(r, n, 2);
  case 3:
    return dephasing(n);
  case 4:
    return reset_channel(n, r.pick(n));
  default: {
    std::size_t a = r.pick(n), b = r.pick(n);
    return a == b ? SuperOp::unitary(reflection(random_nonzero_vector(r, n, false)))
                  : damping(n, a, b);
  }
  }
}

inline SuperOp random_channel(Rng &r, std::size_t n) {
  switch (r.pick(4)) {
  case 0:
    return finite_order_channel(r, n);
  case 1:
    return SuperOp::unitary(random_unitary(r, n, 2));
  case 2:
    return dilation_channel(r, n, 2, 2);
  default:
    return dilation_channel(r, n, 3, 1);
  }
}

inline QuantumAutomaton random_automaton(Rng &r, std::size_t n, std::size_t actions,
                                         bool finite_order) {
  QuantumAutomaton a;
  a.dim = n;
  for (std::size_t i = 0; i < actions; ++i) {
    a.actions.push_back(finite_order ? finite_order_channel(r, n) : random_channel(r, n));
    a.action_names.push_back("a" + std::to_string(i));
  }
  a.initial_state = r.coin(0.5) ? coordinate_state(r, n)
                                : random_state(r, n, static_cast<std::size_t>(r.range(1, int(n))));
  return a;
}

// Two-outcome projective measurement {P, I - P} for a random subspace P.
inline Measurement random_measurement(Rng &r, std::size_t n) {
  Subspace s = random_subspace(r, n, static_cast<std::size_t>(r.range(0, int(n))), r.coin(0.7));
  Mat p = s.projector();
  return Measurement({{Rational(1), p}, {Rational(1), Mat::identity(n) - p}});
}

// Deterministic program with an exit location as the last label.
inline SequentialProgram random_exit_program(Rng &r, std::size_t n, std::size_t locs) {
  SequentialProgram p;
  p.dim = n;
  for (std::size_t l = 0; l < locs; ++l)
    p.locations.push_back("l" + std::to_string(l + 1));
  p.exit_location = locs - 1;
  p.act.resize(locs);
  for (std::size_t l = 0; l + 1 < locs; ++l) {
    LocationAct &a = p.act[l];
    a.channel = r.coin(0.5) ? finite_order_channel(r, n) : random_channel(r, n);
    a.measurement = r.coin(0.3) ? Measurement::trivial(n) : random_measurement(r, n);
    a.next.resize(a.measurement.outcomes());
    for (auto &t : a.next)
      t = {Target{r.coin(0.35) ? locs - 1 : r.pick(locs), 0}};
  }
  LocationAct &e = p.act[locs - 1];
  e.channel = SuperOp::identity(n);
  e.measurement = Measurement::trivial(n);
  e.next = {{Target{locs - 1, 0}}};
  p.initial_location = 0;
  p.initial_state = r.coin(0.5) ? coordinate_state(r, n) : random_state(r, n, 1);
  return p;
}

} // namespace qtl::testgen
