// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "qtl/linalg.hpp"

namespace qtl {

// A subspace of C^n held by an exact (not orthonormal) basis and its cached
// orthogonal projector.
class Subspace {
public:
  Subspace() = default;

  static Subspace zero(std::size_t n);
  static Subspace full(std::size_t n);
  static Subspace from_vectors(std::size_t n, const std::vector<Mat> &vectors);
  // Subspace spanned by the columns of a matrix with n rows.
  static Subspace span_of(const Mat &columns);

  std::size_t ambient_dim() const { return n_; }
  std::size_t dim() const { return basis_.size(); }
  bool is_zero() const { return basis_.empty(); }
  bool is_full() const { return dim() == n_; }
  const std::vector<Mat> &basis() const { return basis_; }
  Mat basis_matrix() const;
  const Mat &projector() const { return projector_; }

private:
  std::size_t n_ = 0;
  std::vector<Mat> basis_;
  Mat projector_;
};

bool contains(const Subspace &a, const Subspace &b); // b is inside a
bool equal(const Subspace &a, const Subspace &b);
Subspace meet(const Subspace &a, const Subspace &b);
Subspace join(const Subspace &a, const Subspace &b);
Subspace complement(const Subspace &a);
Subspace support(const Mat &rho);
bool satisfies(const Mat &rho, const Subspace &p);
// Direct-sum embedding helper: the subspace of C^(n*m) given by a ⊗ b.
Subspace tensor(const Subspace &a, const Subspace &b);

// Finite union of subspaces. After canonicalization no member lies inside
// another; the empty union is stored as the single zero member.
class SubspaceUnion {
public:
  SubspaceUnion() = default;
  SubspaceUnion(std::size_t n, std::vector<Subspace> members);
  static SubspaceUnion single(const Subspace &s);
  static SubspaceUnion zero(std::size_t n);
  static SubspaceUnion full(std::size_t n);

  std::size_t ambient_dim() const { return n_; }
  const std::vector<Subspace> &members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool is_zero() const { return members_.size() == 1 && members_[0].is_zero(); }
  bool is_full() const { return members_.size() == 1 && members_[0].is_full(); }

private:
  std::size_t n_ = 0;
  std::vector<Subspace> members_;
};

SubspaceUnion union_canonicalize(const SubspaceUnion &u);
SubspaceUnion union_meet(const SubspaceUnion &u, const SubspaceUnion &v);
SubspaceUnion union_join(const SubspaceUnion &u, const SubspaceUnion &v);
bool union_contains(const SubspaceUnion &u, const Subspace &s);
// Every member of v lies inside some member of u.
bool union_includes(const SubspaceUnion &u, const SubspaceUnion &v);
bool union_equal(const SubspaceUnion &u, const SubspaceUnion &v);
bool satisfies(const Mat &rho, const SubspaceUnion &u);

std::string describe(const Subspace &s);
std::string describe(const SubspaceUnion &u);

} // namespace qtl
