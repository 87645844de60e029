// SPDX-License-Identifier: Apache-2.0
#include "qtl/superop.hpp"

namespace qtl {

Mat kraus_gram(const std::vector<KrausOp> &ops) {
  if (ops.empty())
    return Mat();
  Mat g = Mat::zero(ops[0].op.cols(), ops[0].op.cols());
  for (const auto &k : ops)
    g += CRat(k.weight) * (k.op.adjoint() * k.op);
  return g;
}

SuperOp::SuperOp(std::size_t dim_in, std::size_t dim_out,
                 std::vector<KrausOp> kraus)
    : din_(dim_in), dout_(dim_out), kraus_(std::move(kraus)) {
  if (kraus_.empty())
    kraus_.push_back({Rational(0), Mat::zero(dout_, din_)});
  for (const auto &k : kraus_) {
    if (k.op.rows() != dout_ || k.op.cols() != din_)
      throw DimensionMismatch("Kraus operator shape does not match channel");
    if (sgn(k.weight) < 0)
      throw MalformedProgram("negative Kraus weight");
  }
  tp_ = kraus_gram(kraus_) == Mat::identity(din_);
}

SuperOp SuperOp::identity(std::size_t n) {
  return SuperOp(n, n, {{Rational(1), Mat::identity(n)}});
}

SuperOp SuperOp::unitary(const Mat &u, Rational weight) {
  return SuperOp(u.cols(), u.rows(), {{std::move(weight), u}});
}

SuperOp SuperOp::from_matrices(const std::vector<Mat> &ops) {
  if (ops.empty())
    throw MalformedProgram("channel needs at least one Kraus operator");
  std::vector<KrausOp> ks;
  for (const auto &m : ops)
    ks.push_back({Rational(1), m});
  return SuperOp(ops[0].cols(), ops[0].rows(), std::move(ks));
}

Measurement::Measurement(std::vector<KrausOp> operators)
    : ops_(std::move(operators)) {
  if (ops_.empty())
    throw MalformedProgram("measurement needs at least one outcome");
  const std::size_t n = ops_[0].op.cols();
  for (const auto &k : ops_)
    if (k.op.rows() != n || k.op.cols() != n)
      throw DimensionMismatch("measurement operators must be square and equal");
  if (kraus_gram(ops_) != Mat::identity(n))
    throw MalformedProgram("measurement operators are not complete");
}

Measurement Measurement::trivial(std::size_t n) {
  return Measurement({{Rational(1), Mat::identity(n)}});
}

Measurement Measurement::from_matrices(const std::vector<Mat> &ops) {
  std::vector<KrausOp> ks;
  for (const auto &m : ops)
    ks.push_back({Rational(1), m});
  return Measurement(std::move(ks));
}

Mat Measurement::apply(std::size_t m, const Mat &rho) const {
  const KrausOp &k = ops_.at(m);
  return CRat(k.weight) * (k.op * rho * k.op.adjoint());
}

Mat apply(const SuperOp &e, const Mat &rho) {
  if (!rho.square() || rho.rows() != e.dim_in())
    throw DimensionMismatch("state dimension does not match channel input");
  Mat out = Mat::zero(e.dim_out(), e.dim_out());
  for (const auto &k : e.kraus()) {
    if (sgn(k.weight) == 0)
      continue;
    out += CRat(k.weight) * (k.op * rho * k.op.adjoint());
  }
  return out;
}

SuperOp dual(const SuperOp &e) {
  std::vector<KrausOp> ks;
  for (const auto &k : e.kraus())
    ks.push_back({k.weight, k.op.adjoint()});
  return SuperOp(e.dim_out(), e.dim_in(), std::move(ks));
}

Mat matrix_rep(const SuperOp &e) {
  Mat m = Mat::zero(e.dim_out() * e.dim_out(), e.dim_in() * e.dim_in());
  for (const auto &k : e.kraus())
    if (sgn(k.weight) != 0)
      m += CRat(k.weight) * kron(k.op, k.op.conj());
  return m;
}

Subspace preimage(const SuperOp &e, const Subspace &p) {
  if (p.ambient_dim() != e.dim_out())
    throw DimensionMismatch("proposition does not live in channel output");
  if (p.is_full())
    return Subspace::full(e.dim_in());
  Mat perp = Mat::identity(e.dim_out()) - p.projector();
  return complement(support(apply(dual(e), perp)));
}

SubspaceUnion preimage_union(const SuperOp &e, const SubspaceUnion &u) {
  std::vector<Subspace> out;
  for (const auto &m : u.members())
    out.push_back(preimage(e, m));
  return union_canonicalize(SubspaceUnion(e.dim_in(), std::move(out)));
}

Subspace image(const SuperOp &e, const Subspace &p) {
  if (p.ambient_dim() != e.dim_in())
    throw DimensionMismatch("proposition does not live in channel input");
  if (p.is_zero())
    return Subspace::zero(e.dim_out());
  // Normalizing by dim p does not change the support.
  return support(apply(e, p.projector()));
}

SubspaceUnion image_union(const SuperOp &e, const SubspaceUnion &u) {
  std::vector<Subspace> out;
  for (const auto &m : u.members())
    out.push_back(image(e, m));
  return union_canonicalize(SubspaceUnion(e.dim_out(), std::move(out)));
}

SuperOp compose(const SuperOp &e1, const SuperOp &e2) {
  if (e2.dim_out() != e1.dim_in())
    throw DimensionMismatch("compose: inner output does not match outer input");
  std::vector<KrausOp> ks;
  for (const auto &a : e1.kraus())
    for (const auto &b : e2.kraus()) {
      Rational w = a.weight * b.weight;
      if (sgn(w) == 0)
        continue;
      Mat prod = a.op * b.op;
      if (prod.is_zero())
        continue;
      ks.push_back({w, std::move(prod)});
    }
  return SuperOp(e2.dim_in(), e1.dim_out(), std::move(ks));
}

bool is_trace_preserving(const SuperOp &e) { return e.trace_preserving(); }

bool is_unitary_channel(const SuperOp &e) {
  if (e.dim_in() != e.dim_out() || !e.trace_preserving())
    return false;
  std::size_t nonzero = 0;
  for (const auto &k : e.kraus())
    if (sgn(k.weight) != 0 && !k.op.is_zero())
      ++nonzero;
  return nonzero == 1;
}

SuperOp tensor_identity(const SuperOp &e, std::size_t env) {
  std::vector<KrausOp> ks;
  Mat I = Mat::identity(env);
  for (const auto &k : e.kraus())
    ks.push_back({k.weight, kron(k.op, I)});
  return SuperOp(e.dim_in() * env, e.dim_out() * env, std::move(ks));
}

bool channel_equal(const SuperOp &a, const SuperOp &b) {
  return a.dim_in() == b.dim_in() && a.dim_out() == b.dim_out() &&
         matrix_rep(a) == matrix_rep(b);
}

SuperOp from_matrix_rep(const Mat &m, std::size_t dim_out, std::size_t dim_in) {
  if (m.rows() != dim_out * dim_out || m.cols() != dim_in * dim_in)
    throw DimensionMismatch("matrix representation shape mismatch");
  // Reshuffle to the Choi-type matrix C[(i,k),(j,l)] = M[(i,j),(k,l)].
  Mat c(dim_out * dim_in, dim_out * dim_in);
  for (std::size_t i = 0; i < dim_out; ++i)
    for (std::size_t j = 0; j < dim_out; ++j)
      for (std::size_t k = 0; k < dim_in; ++k)
        for (std::size_t l = 0; l < dim_in; ++l)
          c(i * dim_in + k, j * dim_in + l) =
              m(i * dim_out + j, k * dim_in + l);
  std::vector<KrausOp> ks;
  for (auto &[w, v] : psd_factor(c))
    ks.push_back({w, unvec(v, dim_out, dim_in)});
  return SuperOp(dim_in, dim_out, std::move(ks));
}

} // namespace qtl
