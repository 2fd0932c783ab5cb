#include "inkwell/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace inkwell {

Polynomial::Polynomial(std::vector<double> ascending) : c_(std::move(ascending)) {}

Polynomial Polynomial::monomial_root(double root) { return Polynomial({-root, 1.0}); }

int Polynomial::degree() const {
  for (int i = static_cast<int>(c_.size()) - 1; i >= 0; --i) {
    if (c_[static_cast<std::size_t>(i)] != 0.0) return i;
  }
  return -1;
}

double Polynomial::leading() const {
  const int d = degree();
  return d < 0 ? 0.0 : c_[static_cast<std::size_t>(d)];
}

std::complex<double> Polynomial::operator()(std::complex<double> s) const {
  std::complex<double> acc = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + *it;
  return acc;
}

double Polynomial::operator()(double s) const {
  double acc = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + *it;
  return acc;
}

Polynomial Polynomial::operator*(const Polynomial& rhs) const {
  if (c_.empty() || rhs.c_.empty()) return {};
  std::vector<double> out(c_.size() + rhs.c_.size() - 1, 0.0);
  for (std::size_t i = 0; i < c_.size(); ++i) {
    for (std::size_t j = 0; j < rhs.c_.size(); ++j) out[i + j] += c_[i] * rhs.c_[j];
  }
  return Polynomial(std::move(out));
}

Polynomial Polynomial::operator+(const Polynomial& rhs) const {
  std::vector<double> out(std::max(c_.size(), rhs.c_.size()), 0.0);
  for (std::size_t i = 0; i < c_.size(); ++i) out[i] += c_[i];
  for (std::size_t i = 0; i < rhs.c_.size(); ++i) out[i] += rhs.c_[i];
  return Polynomial(std::move(out));
}

Polynomial Polynomial::operator-(const Polynomial& rhs) const { return *this + rhs.scaled(-1.0); }

Polynomial Polynomial::scaled(double k) const {
  std::vector<double> out = c_;
  for (double& v : out) v *= k;
  return Polynomial(std::move(out));
}

Polynomial Polynomial::with_scaled_variable(double k) const {
  std::vector<double> out = c_;
  double p = 1.0;
  for (double& v : out) {
    v *= p;
    p *= k;
  }
  return Polynomial(std::move(out));
}

std::pair<Polynomial, Polynomial> Polynomial::divide(const Polynomial& divisor) const {
  const int dd = divisor.degree();
  if (dd < 0) throw std::invalid_argument("polynomial division by zero");
  std::vector<double> rem = c_;
  const int dn = degree();
  if (dn < dd) return {Polynomial({0.0}), *this};
  std::vector<double> quot(static_cast<std::size_t>(dn - dd + 1), 0.0);
  const double lead = divisor.c_[static_cast<std::size_t>(dd)];
  for (int k = dn - dd; k >= 0; --k) {
    const double q = rem[static_cast<std::size_t>(k + dd)] / lead;
    quot[static_cast<std::size_t>(k)] = q;
    for (int j = 0; j <= dd; ++j) {
      rem[static_cast<std::size_t>(k + j)] -= q * divisor.c_[static_cast<std::size_t>(j)];
    }
  }
  rem.resize(static_cast<std::size_t>(dd));
  return {Polynomial(std::move(quot)), Polynomial(std::move(rem))};
}

std::vector<std::complex<double>> Polynomial::roots() const {
  const int d = degree();
  if (d < 1) return {};
  const double lead = c_[static_cast<std::size_t>(d)];
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(d, d);
  for (int i = 1; i < d; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < d; ++i) companion(i, d - 1) = -c_[static_cast<std::size_t>(i)] / lead;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  const Eigen::VectorXcd ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

}  // namespace inkwell
