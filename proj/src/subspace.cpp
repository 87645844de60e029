// SPDX-License-Identifier: Apache-2.0
#include "qtl/subspace.hpp"

#include <sstream>

namespace qtl {

namespace {

void require_same(std::size_t a, std::size_t b, const char *what) {
  if (a != b)
    throw DimensionMismatch(std::string(what) + ": ambient dimensions " +
                            std::to_string(a) + " and " + std::to_string(b));
}

} // namespace

Subspace Subspace::zero(std::size_t n) {
  Subspace s;
  s.n_ = n;
  s.projector_ = Mat::zero(n, n);
  return s;
}

Subspace Subspace::full(std::size_t n) {
  Subspace s;
  s.n_ = n;
  for (std::size_t i = 0; i < n; ++i)
    s.basis_.push_back(Mat::unit(n, i, 0).col(0));
  s.projector_ = Mat::identity(n);
  return s;
}

Subspace Subspace::from_vectors(std::size_t n, const std::vector<Mat> &vectors) {
  for (const auto &v : vectors)
    if (v.rows() != n || v.cols() != 1)
      throw DimensionMismatch("vector does not live in C^" + std::to_string(n));
  if (vectors.empty())
    return zero(n);
  return span_of(hstack(vectors, n));
}

Subspace Subspace::span_of(const Mat &columns) {
  const std::size_t n = columns.rows();
  Subspace s;
  s.n_ = n;
  s.basis_ = column_basis(columns);
  if (s.basis_.empty()) {
    s.projector_ = Mat::zero(n, n);
    return s;
  }
  if (s.basis_.size() == n) {
    s.projector_ = Mat::identity(n);
    return s;
  }
  Mat B = hstack(s.basis_, n);
  Mat Bd = B.adjoint();
  s.projector_ = B * invert(Bd * B) * Bd;
  return s;
}

Mat Subspace::basis_matrix() const { return hstack(basis_, n_); }

bool contains(const Subspace &a, const Subspace &b) {
  require_same(a.ambient_dim(), b.ambient_dim(), "contains");
  if (b.dim() > a.dim())
    return false;
  if (b.is_zero() || a.is_full())
    return true;
  for (const auto &v : b.basis())
    if (a.projector() * v != v)
      return false;
  return true;
}

bool equal(const Subspace &a, const Subspace &b) {
  return a.dim() == b.dim() && contains(a, b);
}

Subspace meet(const Subspace &a, const Subspace &b) {
  require_same(a.ambient_dim(), b.ambient_dim(), "meet");
  const std::size_t n = a.ambient_dim();
  if (a.is_zero() || b.is_full())
    return a;
  if (b.is_zero() || a.is_full())
    return b;
  Mat I = Mat::identity(n);
  Mat stacked = vstack(I - a.projector(), I - b.projector());
  return Subspace::from_vectors(n, kernel_basis(stacked));
}

Subspace join(const Subspace &a, const Subspace &b) {
  require_same(a.ambient_dim(), b.ambient_dim(), "join");
  if (a.is_zero() || b.is_full())
    return b;
  if (b.is_zero() || a.is_full())
    return a;
  std::vector<Mat> all = a.basis();
  all.insert(all.end(), b.basis().begin(), b.basis().end());
  return Subspace::from_vectors(a.ambient_dim(), all);
}

Subspace complement(const Subspace &a) {
  const std::size_t n = a.ambient_dim();
  if (a.is_zero())
    return Subspace::full(n);
  if (a.is_full())
    return Subspace::zero(n);
  return Subspace::from_vectors(n, kernel_basis(a.basis_matrix().adjoint()));
}

Subspace support(const Mat &rho) {
  if (!rho.square())
    throw DimensionMismatch("support of non-square matrix");
  if (!is_psd(rho))
    throw NotPositive("support requires a positive semidefinite matrix");
  return Subspace::span_of(rho);
}

bool satisfies(const Mat &rho, const Subspace &p) {
  if (!rho.square() || rho.rows() != p.ambient_dim())
    throw DimensionMismatch("state and proposition dimensions differ");
  if (p.is_full())
    return true;
  return p.projector() * rho == rho;
}

Subspace tensor(const Subspace &a, const Subspace &b) {
  std::vector<Mat> vs;
  for (const auto &x : a.basis())
    for (const auto &y : b.basis())
      vs.push_back(kron(x, y));
  return Subspace::from_vectors(a.ambient_dim() * b.ambient_dim(), vs);
}

// ---------------------------------------------------------------------------
// Unions

SubspaceUnion::SubspaceUnion(std::size_t n, std::vector<Subspace> members)
    : n_(n), members_(std::move(members)) {
  for (const auto &m : members_)
    require_same(n_, m.ambient_dim(), "union member");
  if (members_.empty())
    members_.push_back(Subspace::zero(n_));
}

SubspaceUnion SubspaceUnion::single(const Subspace &s) {
  return SubspaceUnion(s.ambient_dim(), {s});
}
SubspaceUnion SubspaceUnion::zero(std::size_t n) {
  return SubspaceUnion(n, {Subspace::zero(n)});
}
SubspaceUnion SubspaceUnion::full(std::size_t n) {
  return SubspaceUnion(n, {Subspace::full(n)});
}

SubspaceUnion union_canonicalize(const SubspaceUnion &u) {
  const auto &ms = u.members();
  std::vector<bool> drop(ms.size(), false);
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (drop[i])
      continue;
    for (std::size_t j = 0; j < ms.size(); ++j) {
      if (i == j || drop[j])
        continue;
      // Drop i if it sits inside j; on equality keep the earlier one.
      if (contains(ms[j], ms[i]) && (!contains(ms[i], ms[j]) || j < i)) {
        drop[i] = true;
        break;
      }
    }
  }
  std::vector<Subspace> kept;
  for (std::size_t i = 0; i < ms.size(); ++i)
    if (!drop[i])
      kept.push_back(ms[i]);
  return SubspaceUnion(u.ambient_dim(), std::move(kept));
}

SubspaceUnion union_meet(const SubspaceUnion &u, const SubspaceUnion &v) {
  require_same(u.ambient_dim(), v.ambient_dim(), "union_meet");
  std::vector<Subspace> out;
  for (const auto &a : u.members())
    for (const auto &b : v.members())
      out.push_back(meet(a, b));
  return union_canonicalize(SubspaceUnion(u.ambient_dim(), std::move(out)));
}

SubspaceUnion union_join(const SubspaceUnion &u, const SubspaceUnion &v) {
  require_same(u.ambient_dim(), v.ambient_dim(), "union_join");
  std::vector<Subspace> out = u.members();
  out.insert(out.end(), v.members().begin(), v.members().end());
  return union_canonicalize(SubspaceUnion(u.ambient_dim(), std::move(out)));
}

bool union_contains(const SubspaceUnion &u, const Subspace &s) {
  require_same(u.ambient_dim(), s.ambient_dim(), "union_contains");
  if (s.is_zero())
    return true;
  for (const auto &m : u.members())
    if (contains(m, s))
      return true;
  return false;
}

bool union_includes(const SubspaceUnion &u, const SubspaceUnion &v) {
  for (const auto &m : v.members())
    if (!union_contains(u, m))
      return false;
  return true;
}

bool union_equal(const SubspaceUnion &u, const SubspaceUnion &v) {
  require_same(u.ambient_dim(), v.ambient_dim(), "union_equal");
  return union_includes(u, v) && union_includes(v, u);
}

bool satisfies(const Mat &rho, const SubspaceUnion &u) {
  if (!rho.square() || rho.rows() != u.ambient_dim())
    throw DimensionMismatch("state and proposition dimensions differ");
  for (const auto &m : u.members())
    if (satisfies(rho, m))
      return true;
  return false;
}

std::string describe(const Subspace &s) {
  std::ostringstream os;
  os << "span{";
  for (std::size_t k = 0; k < s.basis().size(); ++k) {
    if (k)
      os << ", ";
    os << "(";
    const Mat &v = s.basis()[k];
    for (std::size_t i = 0; i < v.rows(); ++i)
      os << (i ? "," : "") << to_string(v(i, 0));
    os << ")";
  }
  os << "}";
  return os.str();
}

std::string describe(const SubspaceUnion &u) {
  std::string out;
  for (std::size_t k = 0; k < u.members().size(); ++k)
    out += (k ? " | " : "") + describe(u.members()[k]);
  return out;
}

} // namespace qtl
