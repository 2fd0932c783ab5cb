#pragma once

#include <complex>
#include <vector>

namespace inkwell {

// Real polynomial with coefficients in ascending powers:
// p(s) = c[0] + c[1] s + ... + c[n] s^n.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> ascending);

  static Polynomial monomial_root(double root);  // s - root

  const std::vector<double>& coefficients() const { return c_; }
  // Degree after dropping exactly-zero leading coefficients; -1 for p == 0.
  int degree() const;
  double leading() const;

  std::complex<double> operator()(std::complex<double> s) const;
  double operator()(double s) const;

  Polynomial operator*(const Polynomial& rhs) const;
  Polynomial operator+(const Polynomial& rhs) const;
  Polynomial operator-(const Polynomial& rhs) const;
  Polynomial scaled(double k) const;

  // Substitute s -> k s.
  Polynomial with_scaled_variable(double k) const;

  // Polynomial long division; returns {quotient, remainder}.
  std::pair<Polynomial, Polynomial> divide(const Polynomial& divisor) const;

  // Roots from the eigenvalues of the companion matrix.
  std::vector<std::complex<double>> roots() const;

 private:
  std::vector<double> c_;
};

}  // namespace inkwell
