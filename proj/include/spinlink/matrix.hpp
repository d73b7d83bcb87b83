#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace spinlink {

using cplx = std::complex<double>;

// Dense complex matrix, row-major. Sized for the 2x2 / 4x4 / 16x16 work this
// library does; no attempt at large-scale performance.
class ComplexMatrix {
 public:
  ComplexMatrix() : rows_(0), cols_(0) {}

  ComplexMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), a_(rows * cols, cplx(0.0, 0.0)) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("matrix dimensions must be positive");
  }

  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries)
      : rows_(rows), cols_(cols), a_(std::move(entries)) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("matrix dimensions must be positive");
    if (a_.size() != rows * cols) throw std::invalid_argument("entry count does not match dimensions");
  }

  static ComplexMatrix identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  cplx& operator()(std::size_t r, std::size_t c) { return a_[r * cols_ + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const { return a_[r * cols_ + c]; }

  ComplexMatrix operator*(const ComplexMatrix& rhs) const {
    if (cols_ != rhs.rows_) throw std::invalid_argument("matrix product dimension mismatch");
    ComplexMatrix out(rows_, rhs.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = 0; k < cols_; ++k) {
        const cplx aik = (*this)(i, k);
        if (aik == cplx(0.0, 0.0)) continue;
        for (std::size_t j = 0; j < rhs.cols_; ++j) out(i, j) += aik * rhs(k, j);
      }
    return out;
  }

  ComplexMatrix operator+(const ComplexMatrix& rhs) const {
    check_same_shape(rhs);
    ComplexMatrix out = *this;
    for (std::size_t i = 0; i < a_.size(); ++i) out.a_[i] += rhs.a_[i];
    return out;
  }

  ComplexMatrix operator-(const ComplexMatrix& rhs) const {
    check_same_shape(rhs);
    ComplexMatrix out = *this;
    for (std::size_t i = 0; i < a_.size(); ++i) out.a_[i] -= rhs.a_[i];
    return out;
  }

  ComplexMatrix scaled(cplx s) const {
    ComplexMatrix out = *this;
    for (auto& z : out.a_) z *= s;
    return out;
  }

  ComplexMatrix dagger() const {
    ComplexMatrix out(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) out(j, i) = std::conj((*this)(i, j));
    return out;
  }

  cplx trace() const {
    if (rows_ != cols_) throw std::invalid_argument("trace of non-square matrix");
    cplx t = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
    return t;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (const auto& z : a_) s += std::norm(z);
    return std::sqrt(s);
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& z : a_) m = std::max(m, std::abs(z));
    return m;
  }

  bool is_hermitian(double tol) const {
    if (rows_ != cols_) return false;
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = i; j < cols_; ++j)
        if (std::abs((*this)(i, j) - std::conj((*this)(j, i))) > tol) return false;
    return true;
  }

  // tr(this * other) without forming the product.
  cplx trace_of_product(const ComplexMatrix& other) const {
    if (cols_ != other.rows_ || rows_ != other.cols_)
      throw std::invalid_argument("trace_of_product dimension mismatch");
    cplx t = 0.0;
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t += (*this)(i, j) * other(j, i);
    return t;
  }

 private:
  void check_same_shape(const ComplexMatrix& rhs) const {
    if (rows_ != rhs.rows_ || cols_ != rhs.cols_)
      throw std::invalid_argument("matrix shape mismatch");
  }

  std::size_t rows_, cols_;
  std::vector<cplx> a_;
};

// Kronecker product, dims (a.rows*b.rows, a.cols*b.cols).
inline ComplexMatrix tensor_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t ia = 0; ia < a.rows(); ++ia)
    for (std::size_t ja = 0; ja < a.cols(); ++ja) {
      const cplx s = a(ia, ja);
      if (s == cplx(0.0, 0.0)) continue;
      for (std::size_t ib = 0; ib < b.rows(); ++ib)
        for (std::size_t jb = 0; jb < b.cols(); ++jb)
          out(ia * b.rows() + ib, ja * b.cols() + jb) = s * b(ib, jb);
    }
  return out;
}

struct EigenSystem {
  std::vector<double> values;  // ascending
  ComplexMatrix vectors;       // column k is the eigenvector of values[k]
};

// Cyclic Jacobi diagonalization for complex Hermitian matrices. Each rotation
// first strips the phase of the pivot entry, then applies the classical real
// Jacobi rotation; converges quadratically for the small matrices used here.
inline EigenSystem hermitian_eigensystem(const ComplexMatrix& m, double tol = 1e-14,
                                         int max_sweeps = 80) {
  if (m.rows() != m.cols()) throw std::invalid_argument("eigensystem of non-square matrix");
  const std::size_t n = m.rows();
  ComplexMatrix a = m;
  ComplexMatrix v = ComplexMatrix::identity(n);
  const double scale = std::max(a.max_abs(), 1e-300);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    if (std::sqrt(off) < tol * scale * static_cast<double>(n)) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const cplx apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag < 1e-300) continue;
        const cplx phase = apq / mag;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double tau = (aqq - app) / (2.0 * mag);
        double t;
        if (tau >= 0.0)
          t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
        else
          t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // Unitary U differing from identity in the (p,q) block:
        //   U(p,p)=c, U(p,q)=s, U(q,p)=-conj(phase)*s, U(q,q)=conj(phase)*c
        const cplx uqp = -std::conj(phase) * s;
        const cplx uqq = std::conj(phase) * c;
        // A <- U^dagger A U
        for (std::size_t i = 0; i < n; ++i) {
          const cplx aip = a(i, p), aiq = a(i, q);
          a(i, p) = aip * c + aiq * uqp;
          a(i, q) = aip * s + aiq * uqq;
        }
        for (std::size_t j = 0; j < n; ++j) {
          const cplx apj = a(p, j), aqj = a(q, j);
          a(p, j) = c * apj + std::conj(uqp) * aqj;
          a(q, j) = s * apj + std::conj(uqq) * aqj;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        // V <- V U
        for (std::size_t i = 0; i < n; ++i) {
          const cplx vip = v(i, p), viq = v(i, q);
          v(i, p) = vip * c + viq * uqp;
          v(i, q) = vip * s + viq * uqq;
        }
      }
    }
  }

  // Sort ascending, carrying eigenvectors along.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i).real();
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return diag[x] < diag[y]; });

  EigenSystem out;
  out.values.resize(n);
  out.vectors = ComplexMatrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = diag[order[k]];
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

inline std::vector<double> hermitian_eigenvalues(const ComplexMatrix& m) {
  return hermitian_eigensystem(m).values;
}

// Solve A x = b by Gaussian elimination with partial pivoting.
inline std::vector<cplx> solve_linear(ComplexMatrix a, std::vector<cplx> b) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.size() != n) throw std::invalid_argument("solve_linear shape mismatch");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (std::abs(a(pivot, col)) < 1e-12 * std::max(1.0, a.max_abs()))
      throw std::invalid_argument("solve_linear: singular system");
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(pivot, j));
      std::swap(b[col], b[pivot]);
    }
    const cplx inv = 1.0 / a(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      const cplx f = a(r, col) * inv;
      if (f == cplx(0.0, 0.0)) continue;
      for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
      b[r] -= f * b[col];
    }
  }
  std::vector<cplx> x(n);
  for (std::size_t i = n; i-- > 0;) {
    cplx s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

struct DensityCheck {
  bool hermitian = false;
  double trace_deviation = 0.0;
  double min_eigenvalue = 0.0;
  bool ok = false;
};

// Density-matrix admissibility: Hermitian within hermitian_tol, unit trace
// within trace_tol, and positive semidefinite down to psd_floor (slightly
// negative eigenvalues are allowed for double-precision round-off).
inline DensityCheck check_density(const ComplexMatrix& rho, double hermitian_tol = 1e-12,
                                  double trace_tol = 1e-12, double psd_floor = -1e-9) {
  DensityCheck out;
  if (rho.rows() != rho.cols()) return out;
  out.hermitian = rho.is_hermitian(hermitian_tol);
  out.trace_deviation = std::abs(rho.trace() - cplx(1.0, 0.0));
  if (!out.hermitian) return out;
  const auto eig = hermitian_eigenvalues(rho);
  out.min_eigenvalue = eig.front();
  out.ok = out.hermitian && out.trace_deviation <= trace_tol && out.min_eigenvalue >= psd_floor;
  return out;
}

}  // namespace spinlink
