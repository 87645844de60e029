// SPDX-License-Identifier: Apache-2.0
//
// Exact rational-complex dense matrices, plus the numeric eigen path used to
// split off the modulus-one part of a spectrum.
#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "qtl/errors.hpp"

namespace qtl {

using Rational = mpq_class;

std::string to_string(const Rational &q);
// Accepts "p", "-p", "p/q"; surrounding whitespace is ignored.
Rational parse_rational(const std::string &text);

struct CRat {
  Rational re;
  Rational im;

  CRat() = default;
  CRat(long v) : re(v), im(0) {}
  CRat(Rational r) : re(std::move(r)), im(0) {}
  CRat(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}

  static CRat i() { return CRat(Rational(0), Rational(1)); }

  bool is_zero() const { return sgn(re) == 0 && sgn(im) == 0; }
  bool is_real() const { return sgn(im) == 0; }
  CRat conj() const { return CRat(re, -im); }
  Rational norm2() const { return re * re + im * im; }
  std::complex<double> to_complex() const {
    return {re.get_d(), im.get_d()};
  }

  CRat &operator+=(const CRat &o);
  CRat &operator-=(const CRat &o);
  CRat &operator*=(const CRat &o);
  CRat &operator/=(const CRat &o);
};

CRat operator+(CRat a, const CRat &b);
CRat operator-(CRat a, const CRat &b);
CRat operator*(CRat a, const CRat &b);
CRat operator/(CRat a, const CRat &b);
CRat operator-(const CRat &a);
bool operator==(const CRat &a, const CRat &b);
inline bool operator!=(const CRat &a, const CRat &b) { return !(a == b); }

// "a", "a+bi", "bi", "i", "-i"; each real part a rational literal.
CRat parse_crat(const std::string &text);
std::string to_string(const CRat &z);

class Mat {
public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols);
  Mat(std::size_t rows, std::size_t cols, std::vector<CRat> entries);

  static Mat zero(std::size_t rows, std::size_t cols) { return Mat(rows, cols); }
  static Mat identity(std::size_t n);
  // Column vector from entries.
  static Mat column(std::vector<CRat> entries);
  // |i><j| in an n-dimensional space.
  static Mat unit(std::size_t n, std::size_t i, std::size_t j);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  CRat &operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  const CRat &operator()(std::size_t i, std::size_t j) const {
    return a_[i * cols_ + j];
  }
  const std::vector<CRat> &entries() const { return a_; }

  Mat adjoint() const;
  Mat transpose() const;
  Mat conj() const;
  CRat trace() const;
  bool is_zero() const;
  bool is_hermitian() const;

  Mat col(std::size_t j) const;
  Mat block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const Mat &b);

  Mat &operator+=(const Mat &o);
  Mat &operator-=(const Mat &o);
  Mat &operator*=(const CRat &s);

private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<CRat> a_;
};

Mat operator+(Mat a, const Mat &b);
Mat operator-(Mat a, const Mat &b);
Mat operator*(const Mat &a, const Mat &b);
Mat operator*(const CRat &s, Mat a);
bool operator==(const Mat &a, const Mat &b);
inline bool operator!=(const Mat &a, const Mat &b) { return !(a == b); }

Mat hstack(const std::vector<Mat> &cols, std::size_t rows);
Mat vstack(const Mat &a, const Mat &b);

Mat kron(const Mat &a, const Mat &b);
std::size_t rank(const Mat &m);
// Exact basis of the null space, one column per vector.
std::vector<Mat> kernel_basis(const Mat &m);
// Maximal linearly independent subset of the columns, in order.
std::vector<Mat> column_basis(const Mat &m);
Mat invert(const Mat &m);
// Exact test for Hermitian positive semidefiniteness.
bool is_psd(const Mat &m);
// m = sum_i w_i v_i v_i^dag with w_i > 0, for Hermitian PSD m.
std::vector<std::pair<Rational, Mat>> psd_factor(const Mat &m);

// Row-major vectorization: vec(A)[i*n + j] = A(i, j).
Mat vec(const Mat &a);
Mat unvec(const Mat &v, std::size_t rows, std::size_t cols);

// Numeric helpers for the floating-point path.
double trace_norm_diff(const Mat &a, const Mat &b);
double max_abs(const Mat &a);
Mat from_double(const std::vector<std::complex<double>> &entries,
                std::size_t rows, std::size_t cols);

struct SpectralSplit {
  Mat peripheral_projector;
  Mat stable_part;
  double tolerance = 1e-9;
  std::vector<std::pair<std::complex<double>, int>> eigenvalues;
  bool exact = false;
  double stable_radius = 0.0;      // max |lambda| over the non-peripheral part
  double power_iteration_rate = 0; // ||S^128||^(1/128), numeric cross-check
  double consistency_residual = 0; // max |M^64 - (M^64 P + S^64)|
};

SpectralSplit peripheral_split(const Mat &m, double tolerance = 1e-9);

// Numeric eigenvalues grouped by proximity, multiplicities algebraic.
std::vector<std::pair<std::complex<double>, int>>
numeric_eigenvalues(const Mat &m, double cluster_tol = 1e-7);
// Dimension of the numeric null space of (m - lambda I) at the given rank
// tolerance (relative to the largest singular value of m, floored at 1).
int numeric_geometric_multiplicity(const Mat &m, std::complex<double> lambda,
                                   double rank_tol);

} // namespace qtl
