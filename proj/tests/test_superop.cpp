// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support/gen.hpp"

using namespace qtl;
using testgen::Rng;

namespace {

const Rational kHalf(1, 2);

Mat pauli_x() { return Mat(2, 2, {0, 1, 1, 0}); }
SuperOp hadamard() { return SuperOp::unitary(Mat(2, 2, {1, 1, 1, -1}), kHalf); }
SuperOp decay() { return SuperOp::from_matrices({Mat::unit(2, 0, 0), Mat::unit(2, 0, 1)}); }
Mat plus_state() { return Mat(2, 2, {CRat(kHalf), CRat(kHalf), CRat(kHalf), CRat(kHalf)}); }
Subspace ket(std::size_t i) { return Subspace::from_vectors(2, {testgen::basis_vector(2, i)}); }

// Independent evaluation of sum_k w_k A_k rho A_k^dagger.
Mat kraus_sum(const SuperOp &e, const Mat &rho) {
  Mat out = Mat::zero(e.dim_out(), e.dim_out());
  for (const auto &k : e.kraus())
    out += CRat(k.weight) * (k.op * rho * k.op.adjoint());
  return out;
}

Mat max_entangled(std::size_t d) {
  Mat phi(d * d, 1);
  for (std::size_t j = 0; j < d; ++j)
    phi(j * d + j, 0) = CRat(1);
  return phi;
}

} // namespace

TEST_CASE("apply") {
  Rng r(1);
  Mat rho = testgen::random_state(r, 2, 2);
  CHECK(apply(SuperOp::identity(2), rho) == rho);
  CHECK(apply(hadamard(), Mat::unit(2, 0, 0)) == plus_state());
  CHECK(apply(decay(), plus_state()) == Mat::unit(2, 0, 0));
  CHECK_THROWS_AS(apply(SuperOp::identity(3), rho), DimensionMismatch);
}

TEST_CASE("apply preserves positivity and trace") {
  Rng r(2);
  for (int t = 0; t < 40; ++t) {
    std::size_t n = r.range(2, 3);
    SuperOp e = testgen::random_channel(r, n);
    Mat rho = testgen::random_state(r, n, r.range(1, int(n)));
    Mat out = apply(e, rho);
    CHECK(is_psd(out));
    CHECK(is_trace_preserving(e));
    CHECK(out.trace() == rho.trace());
    CHECK(out == kraus_sum(e, rho));
  }
  // A trace-decreasing map.
  SuperOp half(2, 2, {{kHalf, Mat::identity(2)}});
  CHECK_FALSE(is_trace_preserving(half));
  CHECK(apply(half, Mat::unit(2, 0, 0)).trace() == CRat(kHalf));
}

TEST_CASE("trace preservation and unitarity flags") {
  CHECK(is_trace_preserving(hadamard()));
  CHECK(is_unitary_channel(hadamard()));
  CHECK(is_trace_preserving(decay()));
  CHECK_FALSE(is_unitary_channel(decay()));
  CHECK_FALSE(is_trace_preserving(SuperOp(2, 2, {{kHalf, Mat::identity(2)}})));
}

TEST_CASE("measurements must be complete") {
  CHECK_NOTHROW(Measurement::from_matrices({Mat::unit(2, 0, 0), Mat::unit(2, 1, 1)}));
  CHECK_THROWS(Measurement::from_matrices({Mat::unit(2, 0, 0)}));
  Measurement m = Measurement::from_matrices({Mat::unit(2, 0, 0), Mat::unit(2, 1, 1)});
  CHECK(m.apply(1, plus_state()) == CRat(kHalf) * Mat::unit(2, 1, 1));
}

TEST_CASE("dual") {
  Rng r(3);
  Mat u = testgen::random_unitary(r, 2, 1);
  CHECK(channel_equal(dual(SuperOp::unitary(u)), SuperOp::unitary(u.adjoint())));
  for (int t = 0; t < 30; ++t) {
    SuperOp e = testgen::random_channel(r, 2);
    CHECK(channel_equal(dual(dual(e)), e));
    Mat a = testgen::random_matrix(r, 2, 2), rho = testgen::random_matrix(r, 2, 2);
    CHECK((a * apply(e, rho)).trace() == (apply(dual(e), a) * rho).trace());
  }
}

TEST_CASE("matrix_rep") {
  CHECK(matrix_rep(SuperOp::identity(2)) == Mat::identity(4));
  Mat x = pauli_x();
  CHECK(matrix_rep(SuperOp::unitary(x)) == kron(x, x));
  Rng r(4);
  for (int t = 0; t < 30; ++t) {
    std::size_t d = r.range(2, 3);
    SuperOp e = testgen::random_channel(r, d), f = testgen::random_channel(r, d);
    CHECK(matrix_rep(compose(e, f)) == matrix_rep(e) * matrix_rep(f));
    Mat a = testgen::random_matrix(r, d, d);
    Mat id = Mat::identity(d), phi = max_entangled(d);
    CHECK(kron(apply(e, a), id) * phi == matrix_rep(e) * (kron(a, id) * phi));
  }
}

TEST_CASE("compose") {
  Rng r(5);
  SuperOp e = testgen::random_channel(r, 2);
  CHECK(channel_equal(compose(e, SuperOp::identity(2)), e));
  CHECK(channel_equal(compose(SuperOp::unitary(pauli_x()), SuperOp::unitary(pauli_x())),
                      SuperOp::identity(2)));
  CHECK_THROWS_AS(compose(e, SuperOp::identity(3)), DimensionMismatch);
}

TEST_CASE("preimage") {
  Rng r(6);
  Subspace p = testgen::random_subspace(r, 2, 1);
  CHECK(equal(preimage(SuperOp::unitary(pauli_x()), ket(0)), ket(1)));
  CHECK(equal(preimage(SuperOp::identity(2), p), p));
  CHECK(preimage(decay(), ket(1)).is_zero());
}

TEST_CASE("image") {
  Rng r(7);
  Subspace p = testgen::random_subspace(r, 2, 1);
  CHECK(equal(image(SuperOp::identity(2), p), p));
  CHECK(equal(image(SuperOp::unitary(pauli_x()), ket(0)), ket(1)));
  CHECK(equal(image(decay(), Subspace::full(2)), ket(0)));
  CHECK(image(decay(), Subspace::zero(2)).is_zero());
}

TEST_CASE("preimage is the inverse satisfaction set") {
  Rng r(8);
  for (int t = 0; t < 60; ++t) {
    std::size_t n = r.range(2, 3);
    SuperOp e = testgen::random_channel(r, n);
    Subspace p = testgen::random_subspace(r, n, r.range(0, int(n)), r.coin(0.5));
    Mat rho = testgen::random_state(r, n, r.range(1, int(n)));
    Subspace pre = preimage(e, p);
    if (r.coin(0.5) && !pre.is_zero())
      rho = CRat(Rational(1) / Rational(pre.dim())) * pre.projector();
    CHECK(satisfies(apply(e, rho), p) == satisfies(rho, preimage(e, p)));
  }
}

TEST_CASE("image and preimage are adjoint") {
  Rng r(9);
  for (int t = 0; t < 60; ++t) {
    std::size_t n = r.range(2, 3);
    SuperOp e = testgen::random_channel(r, n);
    Subspace s = testgen::random_subspace(r, n, r.range(0, int(n)), r.coin(0.5));
    Subspace p = testgen::random_subspace(r, n, r.range(0, int(n)), r.coin(0.5));
    if (r.coin(0.3))
      p = join(p, image(e, s));
    CHECK(contains(p, image(e, s)) == contains(preimage(e, p), s));
  }
}

TEST_CASE("union maps act member-wise") {
  SubspaceUnion u(2, {ket(0), ket(1)});
  SuperOp x = SuperOp::unitary(pauli_x());
  CHECK(union_equal(image_union(x, u), u));
  CHECK(union_equal(preimage_union(x, u), u));
  CHECK(union_equal(image_union(decay(), u), SubspaceUnion::single(ket(0))));
}

TEST_CASE("tensor_identity") {
  Rng r(10);
  SuperOp e = testgen::random_channel(r, 2);
  SuperOp big = tensor_identity(e, 3);
  CHECK(big.dim_in() == 6);
  Mat rho = testgen::random_state(r, 2, 2), sigma = testgen::random_state(r, 3, 2);
  CHECK(apply(big, kron(rho, sigma)) == kron(apply(e, rho), sigma));
}

TEST_CASE("from_matrix_rep recovers the channel") {
  Rng r(11);
  for (int t = 0; t < 20; ++t) {
    SuperOp e = testgen::random_channel(r, 2);
    SuperOp back = from_matrix_rep(matrix_rep(e), 2, 2);
    CHECK(channel_equal(back, e));
  }
}
