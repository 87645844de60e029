// SPDX-License-Identifier: Apache-2.0
#include "qtl/linalg.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace qtl {

// ---------------------------------------------------------------------------
// Scalars

std::string to_string(const Rational &q) { return q.get_str(); }

Rational parse_rational(const std::string &text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c)))
      s.push_back(c);
  if (s.empty())
    throw ParseError("empty rational literal");
  std::size_t start = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  bool seen_slash = false, digits_before = false, digits_after = false;
  for (std::size_t i = start; i < s.size(); ++i) {
    if (s[i] == '/') {
      if (seen_slash)
        throw ParseError("bad rational literal '" + text + "'");
      seen_slash = true;
    } else if (std::isdigit(static_cast<unsigned char>(s[i]))) {
      (seen_slash ? digits_after : digits_before) = true;
    } else {
      throw ParseError("bad rational literal '" + text + "'");
    }
  }
  if (!digits_before || (seen_slash && !digits_after))
    throw ParseError("bad rational literal '" + text + "'");
  if (s[0] == '+')
    s.erase(0, 1);
  Rational q;
  if (q.set_str(s, 10) != 0)
    throw ParseError("bad rational literal '" + text + "'");
  if (sgn(q.get_den()) == 0)
    throw ParseError("zero denominator in '" + text + "'");
  q.canonicalize();
  return q;
}

CRat &CRat::operator+=(const CRat &o) {
  re += o.re;
  im += o.im;
  return *this;
}
CRat &CRat::operator-=(const CRat &o) {
  re -= o.re;
  im -= o.im;
  return *this;
}
CRat &CRat::operator*=(const CRat &o) {
  if (o.is_real()) {
    re *= o.re;
    im *= o.re;
    return *this;
  }
  Rational r = re * o.re - im * o.im;
  Rational i = re * o.im + im * o.re;
  re = std::move(r);
  im = std::move(i);
  return *this;
}
CRat &CRat::operator/=(const CRat &o) {
  if (o.is_zero())
    throw SingularMatrix("division by zero");
  if (o.is_real()) {
    re /= o.re;
    im /= o.re;
    return *this;
  }
  Rational n = o.norm2();
  Rational r = (re * o.re + im * o.im) / n;
  Rational i = (im * o.re - re * o.im) / n;
  re = std::move(r);
  im = std::move(i);
  return *this;
}
CRat operator+(CRat a, const CRat &b) { return a += b; }
CRat operator-(CRat a, const CRat &b) { return a -= b; }
CRat operator*(CRat a, const CRat &b) { return a *= b; }
CRat operator/(CRat a, const CRat &b) { return a /= b; }
CRat operator-(const CRat &a) { return CRat(-a.re, -a.im); }
bool operator==(const CRat &a, const CRat &b) {
  return a.re == b.re && a.im == b.im;
}

CRat parse_crat(const std::string &text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c)))
      s.push_back(c);
  if (s.empty())
    throw ParseError("empty complex literal");
  if (s.back() != 'i')
    return CRat(parse_rational(s));
  // Imaginary part present: split at the last sign that is not leading.
  std::string body = s.substr(0, s.size() - 1);
  std::size_t split = std::string::npos;
  for (std::size_t k = body.size(); k-- > 1;)
    if (body[k] == '+' || body[k] == '-') {
      split = k;
      break;
    }
  auto imag = [&](const std::string &t) -> Rational {
    if (t.empty() || t == "+")
      return Rational(1);
    if (t == "-")
      return Rational(-1);
    return parse_rational(t);
  };
  if (split == std::string::npos)
    return CRat(Rational(0), imag(body));
  return CRat(parse_rational(body.substr(0, split)), imag(body.substr(split)));
}

std::string to_string(const CRat &z) {
  if (z.is_real())
    return to_string(z.re);
  std::string im = to_string(z.im) + "i";
  if (sgn(z.re) == 0)
    return im;
  return to_string(z.re) + (sgn(z.im) > 0 ? "+" : "") + im;
}

// ---------------------------------------------------------------------------
// Mat

Mat::Mat(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), a_(rows * cols) {}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<CRat> entries)
    : rows_(rows), cols_(cols), a_(std::move(entries)) {
  if (a_.size() != rows * cols)
    throw DimensionMismatch("entry count does not match shape");
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    m(i, i) = CRat(1);
  return m;
}

Mat Mat::column(std::vector<CRat> entries) {
  std::size_t n = entries.size();
  return Mat(n, 1, std::move(entries));
}

Mat Mat::unit(std::size_t n, std::size_t i, std::size_t j) {
  Mat m(n, n);
  m(i, j) = CRat(1);
  return m;
}

Mat Mat::adjoint() const {
  Mat t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      t(j, i) = (*this)(i, j).conj();
  return t;
}

Mat Mat::transpose() const {
  Mat t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j)
      t(j, i) = (*this)(i, j);
  return t;
}

Mat Mat::conj() const {
  Mat t(*this);
  for (auto &z : t.a_)
    z.im = -z.im;
  return t;
}

CRat Mat::trace() const {
  if (!square())
    throw DimensionMismatch("trace of non-square matrix");
  CRat t;
  for (std::size_t i = 0; i < rows_; ++i)
    t += (*this)(i, i);
  return t;
}

bool Mat::is_zero() const {
  return std::all_of(a_.begin(), a_.end(),
                     [](const CRat &z) { return z.is_zero(); });
}

bool Mat::is_hermitian() const {
  if (!square())
    return false;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = i; j < cols_; ++j)
      if ((*this)(i, j) != (*this)(j, i).conj())
        return false;
  return true;
}

Mat Mat::col(std::size_t j) const {
  Mat c(rows_, 1);
  for (std::size_t i = 0; i < rows_; ++i)
    c(i, 0) = (*this)(i, j);
  return c;
}

Mat Mat::block(std::size_t r0, std::size_t c0, std::size_t nr,
               std::size_t nc) const {
  if (r0 + nr > rows_ || c0 + nc > cols_)
    throw DimensionMismatch("block out of range");
  Mat b(nr, nc);
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j)
      b(i, j) = (*this)(r0 + i, c0 + j);
  return b;
}

void Mat::set_block(std::size_t r0, std::size_t c0, const Mat &b) {
  if (r0 + b.rows() > rows_ || c0 + b.cols() > cols_)
    throw DimensionMismatch("block out of range");
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      (*this)(r0 + i, c0 + j) = b(i, j);
}

Mat &Mat::operator+=(const Mat &o) {
  if (rows_ != o.rows_ || cols_ != o.cols_)
    throw DimensionMismatch("matrix sum shape mismatch");
  for (std::size_t k = 0; k < a_.size(); ++k)
    a_[k] += o.a_[k];
  return *this;
}

Mat &Mat::operator-=(const Mat &o) {
  if (rows_ != o.rows_ || cols_ != o.cols_)
    throw DimensionMismatch("matrix difference shape mismatch");
  for (std::size_t k = 0; k < a_.size(); ++k)
    a_[k] -= o.a_[k];
  return *this;
}

Mat &Mat::operator*=(const CRat &s) {
  for (auto &z : a_)
    z *= s;
  return *this;
}

Mat operator+(Mat a, const Mat &b) { return a += b; }
Mat operator-(Mat a, const Mat &b) { return a -= b; }
Mat operator*(const CRat &s, Mat a) { return a *= s; }

Mat operator*(const Mat &a, const Mat &b) {
  if (a.cols() != b.rows())
    throw DimensionMismatch("matrix product shape mismatch");
  Mat c(a.rows(), b.cols());
  CRat tmp;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const CRat &x = a(i, k);
      if (x.is_zero())
        continue;
      for (std::size_t j = 0; j < b.cols(); ++j) {
        const CRat &y = b(k, j);
        if (y.is_zero())
          continue;
        tmp = x;
        tmp *= y;
        c(i, j) += tmp;
      }
    }
  return c;
}

bool operator==(const Mat &a, const Mat &b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         a.entries() == b.entries();
}

Mat hstack(const std::vector<Mat> &cols, std::size_t rows) {
  std::size_t total = 0;
  for (const auto &c : cols) {
    if (c.rows() != rows)
      throw DimensionMismatch("hstack row mismatch");
    total += c.cols();
  }
  Mat m(rows, total);
  std::size_t at = 0;
  for (const auto &c : cols) {
    m.set_block(0, at, c);
    at += c.cols();
  }
  return m;
}

Mat vstack(const Mat &a, const Mat &b) {
  if (a.cols() != b.cols())
    throw DimensionMismatch("vstack column mismatch");
  Mat m(a.rows() + b.rows(), a.cols());
  m.set_block(0, 0, a);
  m.set_block(a.rows(), 0, b);
  return m;
}

Mat kron(const Mat &a, const Mat &b) {
  Mat k(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const CRat &x = a(i, j);
      if (x.is_zero())
        continue;
      for (std::size_t p = 0; p < b.rows(); ++p)
        for (std::size_t q = 0; q < b.cols(); ++q)
          if (!b(p, q).is_zero())
            k(i * b.rows() + p, j * b.cols() + q) = x * b(p, q);
    }
  return k;
}

// ---------------------------------------------------------------------------
// Elimination

namespace {

// Multiply each row by the lcm of its denominators so entries become Gaussian
// integers; the row space is unchanged.
void clear_row_denominators(Mat &m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    mpz_class l = 1;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), m(i, j).re.get_den_mpz_t());
      mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), m(i, j).im.get_den_mpz_t());
    }
    if (l == 1)
      continue;
    CRat s{Rational(l)};
    for (std::size_t j = 0; j < m.cols(); ++j)
      m(i, j) *= s;
  }
}

struct Echelon {
  Mat m;
  std::vector<std::size_t> pivot_cols; // pivot of row r is pivot_cols[r]
};

// Fraction-free (Bareiss) row echelon form over the Gaussian integers.
Echelon bareiss_echelon(Mat m) {
  clear_row_denominators(m);
  Echelon e;
  CRat prev(1);
  std::size_t r = 0;
  const std::size_t R = m.rows(), C = m.cols();
  for (std::size_t c = 0; c < C && r < R; ++c) {
    std::size_t p = r;
    while (p < R && m(p, c).is_zero())
      ++p;
    if (p == R)
      continue;
    if (p != r)
      for (std::size_t j = 0; j < C; ++j)
        std::swap(m(p, j), m(r, j));
    const CRat piv = m(r, c);
    for (std::size_t i = r + 1; i < R; ++i) {
      const CRat f = m(i, c);
      for (std::size_t j = c + 1; j < C; ++j) {
        CRat v = piv * m(i, j);
        if (!f.is_zero())
          v -= f * m(r, j);
        m(i, j) = v / prev;
      }
      m(i, c) = CRat();
    }
    prev = piv;
    e.pivot_cols.push_back(c);
    ++r;
  }
  e.m = std::move(m);
  return e;
}

// Scale a vector so its entries are Gaussian integers with no common
// rational factor in the denominators.
Mat normalize_column(Mat v) {
  mpz_class l = 1;
  for (std::size_t i = 0; i < v.rows(); ++i) {
    mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), v(i, 0).re.get_den_mpz_t());
    mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), v(i, 0).im.get_den_mpz_t());
  }
  if (l != 1)
    v *= CRat(Rational(l));
  mpz_class g = 0;
  for (std::size_t i = 0; i < v.rows(); ++i) {
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), v(i, 0).re.get_num_mpz_t());
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), v(i, 0).im.get_num_mpz_t());
  }
  if (g > 1)
    v *= CRat(Rational(1) / Rational(g));
  return v;
}

} // namespace

std::size_t rank(const Mat &m) {
  if (m.empty())
    return 0;
  return bareiss_echelon(m).pivot_cols.size();
}

std::vector<Mat> kernel_basis(const Mat &m) {
  const std::size_t C = m.cols();
  std::vector<Mat> out;
  if (C == 0)
    return out;
  if (m.rows() == 0) {
    for (std::size_t j = 0; j < C; ++j)
      out.push_back(Mat::unit(C, j, 0).col(0));
    return out;
  }
  Echelon e = bareiss_echelon(m);
  std::vector<bool> is_pivot(C, false);
  for (auto c : e.pivot_cols)
    is_pivot[c] = true;
  const std::size_t k = e.pivot_cols.size();
  for (std::size_t f = 0; f < C; ++f) {
    if (is_pivot[f])
      continue;
    Mat v(C, 1);
    v(f, 0) = CRat(1);
    for (std::size_t r = k; r-- > 0;) {
      std::size_t pc = e.pivot_cols[r];
      CRat s;
      for (std::size_t j = pc + 1; j < C; ++j)
        if (!v(j, 0).is_zero() && !e.m(r, j).is_zero())
          s += e.m(r, j) * v(j, 0);
      v(pc, 0) = -s / e.m(r, pc);
    }
    out.push_back(normalize_column(std::move(v)));
  }
  return out;
}

std::vector<Mat> column_basis(const Mat &m) {
  std::vector<Mat> out;
  if (m.empty())
    return out;
  Echelon e = bareiss_echelon(m);
  for (auto c : e.pivot_cols)
    out.push_back(m.col(c));
  return out;
}

Mat invert(const Mat &m) {
  if (!m.square())
    throw SingularMatrix("inverse of non-square matrix");
  const std::size_t n = m.rows();
  Mat a = m;
  Mat inv = Mat::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && a(p, c).is_zero())
      ++p;
    if (p == n)
      throw SingularMatrix("matrix has rank < " + std::to_string(n));
    if (p != c)
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(a(p, j), a(c, j));
        std::swap(inv(p, j), inv(c, j));
      }
    const CRat piv = a(c, c);
    for (std::size_t j = 0; j < n; ++j) {
      if (!a(c, j).is_zero())
        a(c, j) /= piv;
      if (!inv(c, j).is_zero())
        inv(c, j) /= piv;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i == c || a(i, c).is_zero())
        continue;
      const CRat f = a(i, c);
      for (std::size_t j = 0; j < n; ++j) {
        if (!a(c, j).is_zero())
          a(i, j) -= f * a(c, j);
        if (!inv(c, j).is_zero())
          inv(i, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

std::vector<std::pair<Rational, Mat>> psd_factor(const Mat &m) {
  if (!m.is_hermitian())
    throw NotPositive("matrix is not Hermitian");
  const std::size_t n = m.rows();
  Mat a = m;
  std::vector<std::pair<Rational, Mat>> out;
  for (std::size_t k = 0; k < n; ++k) {
    const Rational d = a(k, k).re;
    if (sgn(d) < 0)
      throw NotPositive("negative pivot at index " + std::to_string(k));
    if (sgn(d) == 0) {
      for (std::size_t j = k; j < n; ++j)
        if (!a(k, j).is_zero())
          throw NotPositive("zero pivot with nonzero row at index " +
                            std::to_string(k));
      continue;
    }
    Mat v(n, 1);
    for (std::size_t i = k; i < n; ++i)
      v(i, 0) = a(i, k) / CRat(d);
    for (std::size_t i = k; i < n; ++i) {
      if (a(i, k).is_zero())
        continue;
      for (std::size_t j = k; j < n; ++j)
        if (!a(k, j).is_zero())
          a(i, j) -= a(i, k) * a(k, j) / CRat(d);
    }
    out.emplace_back(d, std::move(v));
  }
  return out;
}

bool is_psd(const Mat &m) {
  if (!m.square() || !m.is_hermitian())
    return false;
  try {
    psd_factor(m);
    return true;
  } catch (const NotPositive &) {
    return false;
  }
}

Mat vec(const Mat &a) {
  Mat v(a.rows() * a.cols(), 1);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      v(i * a.cols() + j, 0) = a(i, j);
  return v;
}

Mat unvec(const Mat &v, std::size_t rows, std::size_t cols) {
  if (v.rows() != rows * cols || v.cols() != 1)
    throw DimensionMismatch("unvec shape mismatch");
  Mat a(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      a(i, j) = v(i * cols + j, 0);
  return a;
}

// ---------------------------------------------------------------------------
// Numeric path

namespace {

using EMat = Eigen::MatrixXcd;

EMat to_eigen(const Mat &m) {
  EMat e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      e(i, j) = m(i, j).to_complex();
  return e;
}

Mat from_eigen(const EMat &e) {
  std::vector<std::complex<double>> v;
  v.reserve(e.size());
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    for (Eigen::Index j = 0; j < e.cols(); ++j)
      v.push_back(e(i, j));
  return from_double(v, e.rows(), e.cols());
}

// Orthonormal basis of the numeric null space of a.
EMat numeric_null_space(const EMat &a, double rank_tol) {
  Eigen::JacobiSVD<EMat> svd(a, Eigen::ComputeFullV);
  const auto &s = svd.singularValues();
  double scale = std::max(1.0, s.size() ? s(0) : 0.0);
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > rank_tol * scale)
    ++r;
  return svd.matrixV().rightCols(a.cols() - r);
}

EMat mat_power(EMat base, unsigned k) {
  EMat acc = EMat::Identity(base.rows(), base.cols());
  while (k) {
    if (k & 1u)
      acc = acc * base;
    base = base * base;
    k >>= 1u;
  }
  return acc;
}

} // namespace

double max_abs(const Mat &a) {
  double m = 0;
  for (const auto &z : a.entries())
    m = std::max(m, std::abs(z.to_complex()));
  return m;
}

double trace_norm_diff(const Mat &a, const Mat &b) {
  EMat d = to_eigen(a - b);
  if (d.size() == 0)
    return 0.0;
  Eigen::JacobiSVD<EMat> svd(d);
  return svd.singularValues().sum();
}

Mat from_double(const std::vector<std::complex<double>> &entries,
                std::size_t rows, std::size_t cols) {
  std::vector<CRat> v;
  v.reserve(entries.size());
  for (const auto &z : entries)
    v.emplace_back(Rational(z.real()), Rational(z.imag()));
  return Mat(rows, cols, std::move(v));
}

std::vector<std::pair<std::complex<double>, int>>
numeric_eigenvalues(const Mat &m, double cluster_tol) {
  std::vector<std::pair<std::complex<double>, int>> out;
  if (!m.square() || m.rows() == 0)
    return out;
  Eigen::ComplexEigenSolver<EMat> es(to_eigen(m), false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    std::complex<double> l = es.eigenvalues()(i);
    bool merged = false;
    for (auto &g : out)
      if (std::abs(g.first - l) < cluster_tol) {
        ++g.second;
        merged = true;
        break;
      }
    if (!merged)
      out.emplace_back(l, 1);
  }
  return out;
}

int numeric_geometric_multiplicity(const Mat &m, std::complex<double> lambda,
                                   double rank_tol) {
  EMat a = to_eigen(m);
  a -= lambda * EMat::Identity(a.rows(), a.cols());
  return static_cast<int>(numeric_null_space(a, rank_tol).cols());
}

SpectralSplit peripheral_split(const Mat &m, double tolerance) {
  if (!m.square())
    throw DimensionMismatch("peripheral_split needs a square matrix");
  if (!(tolerance > 0))
    throw ToleranceAmbiguity("tolerance must be positive");
  const std::size_t n = m.rows();
  SpectralSplit out;
  out.tolerance = tolerance;
  out.eigenvalues = numeric_eigenvalues(m);

  std::vector<std::pair<std::complex<double>, int>> peripheral;
  for (const auto &[l, mult] : out.eigenvalues) {
    double a = std::abs(l);
    if (a >= 1 - 2 * tolerance && a <= 1 - tolerance / 2)
      throw ToleranceAmbiguity("eigenvalue modulus " + std::to_string(a) +
                               " is too close to the classification threshold");
    if (a >= 1 - tolerance)
      peripheral.emplace_back(l, mult);
    else
      out.stable_radius = std::max(out.stable_radius, a);
  }

  // Exact path: every peripheral eigenvalue is a Gaussian unit.
  const std::complex<double> units[4] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  const CRat exact_units[4] = {CRat(1), CRat(-1), CRat::i(), -CRat::i()};
  bool exact_ok = true;
  Mat P = Mat::zero(n, n);
  for (const auto &[l, mult] : peripheral) {
    int which = -1;
    for (int u = 0; u < 4; ++u)
      if (std::abs(l - units[u]) < 1e-6)
        which = u;
    if (which < 0) {
      exact_ok = false;
      break;
    }
    Mat shifted = m - exact_units[which] * Mat::identity(n);
    auto right = kernel_basis(shifted);
    auto left = kernel_basis(shifted.adjoint());
    if (static_cast<int>(right.size()) != mult ||
        left.size() != right.size()) {
      exact_ok = false;
      break;
    }
    Mat R = hstack(right, n), L = hstack(left, n);
    P += R * invert(L.adjoint() * R) * L.adjoint();
  }
  if (exact_ok) {
    out.exact = true;
    out.peripheral_projector = P;
  } else {
    EMat E = to_eigen(m);
    EMat Pn = EMat::Zero(n, n);
    for (const auto &[l, mult] : peripheral) {
      EMat A = E - l * EMat::Identity(n, n);
      EMat R = numeric_null_space(A, 1e-7);
      EMat L = numeric_null_space(A.adjoint(), 1e-7);
      if (R.cols() != mult || L.cols() != R.cols())
        throw ToleranceAmbiguity(
            "peripheral eigenvalue without a diagonalizable eigenspace");
      Pn += R * (L.adjoint() * R).inverse() * L.adjoint();
    }
    out.exact = false;
    out.peripheral_projector = from_eigen(Pn);
  }
  out.stable_part = m - m * out.peripheral_projector;

  // Power-iteration cross-check on the stable part.
  EMat S = to_eigen(out.stable_part);
  EMat S128 = mat_power(S, 128);
  out.power_iteration_rate = std::pow(S128.norm(), 1.0 / 128);
  EMat M = to_eigen(m);
  EMat M64 = mat_power(M, 64);
  EMat recon = M64 * to_eigen(out.peripheral_projector) + mat_power(S, 64);
  out.consistency_residual = n ? (M64 - recon).cwiseAbs().maxCoeff() : 0.0;
  if (out.power_iteration_rate >= 1.0 - tolerance / 2)
    throw ToleranceAmbiguity("stable part does not decay under powering");
  return out;
}

} // namespace qtl
