// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "qtl/linalg.hpp"
#include "qtl/subspace.hpp"

namespace qtl {

// A Kraus operator sqrt(weight) * op. The weight keeps operators such as the
// Hadamard gate, sqrt(1/2) [[1,1],[1,-1]], inside exact rational arithmetic.
struct KrausOp {
  Rational weight = 1;
  Mat op;
};

class SuperOp {
public:
  SuperOp() = default;
  SuperOp(std::size_t dim_in, std::size_t dim_out, std::vector<KrausOp> kraus);

  static SuperOp identity(std::size_t n);
  static SuperOp unitary(const Mat &u, Rational weight = 1);
  static SuperOp from_matrices(const std::vector<Mat> &ops);

  std::size_t dim_in() const { return din_; }
  std::size_t dim_out() const { return dout_; }
  const std::vector<KrausOp> &kraus() const { return kraus_; }
  bool trace_preserving() const { return tp_; }

private:
  std::size_t din_ = 0, dout_ = 0;
  std::vector<KrausOp> kraus_;
  bool tp_ = false;
};

// Outcome-indexed measurement operators, same weighted form as Kraus terms.
class Measurement {
public:
  Measurement() = default;
  explicit Measurement(std::vector<KrausOp> operators);
  static Measurement trivial(std::size_t n); // {I}
  static Measurement from_matrices(const std::vector<Mat> &ops);

  std::size_t outcomes() const { return ops_.size(); }
  std::size_t dim() const { return ops_.empty() ? 0 : ops_[0].op.cols(); }
  const std::vector<KrausOp> &operators() const { return ops_; }
  const KrausOp &op(std::size_t m) const { return ops_.at(m); }
  // M_m rho M_m^dag
  Mat apply(std::size_t m, const Mat &rho) const;

private:
  std::vector<KrausOp> ops_;
};

// sum_k w_k A_k^dag A_k
Mat kraus_gram(const std::vector<KrausOp> &ops);

Mat apply(const SuperOp &e, const Mat &rho);
SuperOp dual(const SuperOp &e);
Mat matrix_rep(const SuperOp &e);
Subspace preimage(const SuperOp &e, const Subspace &p);
SubspaceUnion preimage_union(const SuperOp &e, const SubspaceUnion &u);
Subspace image(const SuperOp &e, const Subspace &p);
SubspaceUnion image_union(const SuperOp &e, const SubspaceUnion &u);
// e1 after e2
SuperOp compose(const SuperOp &e1, const SuperOp &e2);
bool is_trace_preserving(const SuperOp &e);
bool is_unitary_channel(const SuperOp &e);
// e ⊗ id on an environment of dimension env.
SuperOp tensor_identity(const SuperOp &e, std::size_t env);
// Equality of channels through their matrix representations.
bool channel_equal(const SuperOp &a, const SuperOp &b);
// Kraus form recovered from a matrix representation sum_i F_i ⊗ conj(F_i).
SuperOp from_matrix_rep(const Mat &m, std::size_t dim_out, std::size_t dim_in);

} // namespace qtl
