#include "extremal/poly_field.hpp"

#include <algorithm>
#include <cmath>

namespace extremal {

bool grlex_less(const Powers& a, const Powers& b) noexcept {
  const int da = a[0] + a[1] + a[2];
  const int db = b[0] + b[1] + b[2];
  if (da != db) return da < db;
  return a > b;
}

Polynomial::Polynomial(std::vector<Monomial> terms) : terms_(std::move(terms)) {
  std::sort(terms_.begin(), terms_.end(), [](const Monomial& a, const Monomial& b) {
    return grlex_less(a.powers, b.powers);
  });
  std::vector<Monomial> merged;
  merged.reserve(terms_.size());
  for (const auto& m : terms_) {
    if (!merged.empty() && merged.back().powers == m.powers) {
      merged.back().coeff += m.coeff;
    } else {
      merged.push_back(m);
    }
  }
  std::erase_if(merged, [](const Monomial& m) { return m.coeff == 0.0; });
  terms_ = std::move(merged);
}

Polynomial Polynomial::constant(double c) { return Polynomial(std::vector<Monomial>{Monomial{c, {0, 0, 0}}}); }

Polynomial Polynomial::variable(int index, double coeff) {
  Powers p{0, 0, 0};
  p[index] = 1;
  return Polynomial(std::vector<Monomial>{Monomial{coeff, p}});
}

int Polynomial::degree() const noexcept {
  // grlex order puts the highest degree last
  return terms_.empty() ? -1 : terms_.back().degree();
}

double Polynomial::operator()(const Vec3& x) const {
  if (terms_.empty()) return 0.0;
  const int deg = degree();
  // powers table: pw[k][e] = x_k^e
  std::array<std::array<double, 16>, 3> small;
  std::vector<double> big;
  auto pw = [&](int k, int e) -> double {
    if (deg < 16) return small[k][e];
    return big[static_cast<size_t>(k) * (deg + 1) + e];
  };
  if (deg < 16) {
    for (int k = 0; k < 3; ++k) {
      small[k][0] = 1.0;
      for (int e = 1; e <= deg; ++e) small[k][e] = small[k][e - 1] * x[k];
    }
  } else {
    big.resize(3 * static_cast<size_t>(deg + 1));
    for (int k = 0; k < 3; ++k) {
      big[static_cast<size_t>(k) * (deg + 1)] = 1.0;
      for (int e = 1; e <= deg; ++e)
        big[static_cast<size_t>(k) * (deg + 1) + e] =
            big[static_cast<size_t>(k) * (deg + 1) + e - 1] * x[k];
    }
  }
  double sum = 0.0;
  for (const auto& m : terms_)
    sum += m.coeff * pw(0, m.powers[0]) * pw(1, m.powers[1]) * pw(2, m.powers[2]);
  return sum;
}

Polynomial Polynomial::derivative(int var) const {
  std::vector<Monomial> out;
  out.reserve(terms_.size());
  for (const auto& m : terms_) {
    if (m.powers[var] == 0) continue;
    Monomial d = m;
    d.coeff *= m.powers[var];
    d.powers[var] -= 1;
    out.push_back(d);
  }
  return Polynomial(std::move(out));
}

Polynomial Polynomial::operator-() const {
  Polynomial p = *this;
  for (auto& m : p.terms_) m.coeff = -m.coeff;
  return p;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  std::vector<Monomial> all = terms_;
  all.insert(all.end(), other.terms_.begin(), other.terms_.end());
  *this = Polynomial(std::move(all));
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) { return *this += -other; }

Polynomial& Polynomial::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& m : terms_) m.coeff *= s;
  std::erase_if(terms_, [](const Monomial& m) { return m.coeff == 0.0; });
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  std::vector<Monomial> out;
  out.reserve(a.terms_.size() * b.terms_.size());
  for (const auto& ma : a.terms_) {
    for (const auto& mb : b.terms_) {
      out.push_back({ma.coeff * mb.coeff,
                     {ma.powers[0] + mb.powers[0], ma.powers[1] + mb.powers[1],
                      ma.powers[2] + mb.powers[2]}});
    }
  }
  return Polynomial(std::move(out));
}

PolyField PolyField::constant(const Vec3& v) {
  return PolyField({Polynomial::constant(v[0]), Polynomial::constant(v[1]),
                    Polynomial::constant(v[2])});
}

bool PolyField::is_zero() const noexcept {
  return comp_[0].is_zero() && comp_[1].is_zero() && comp_[2].is_zero();
}

int PolyField::degree() const noexcept {
  return std::max({comp_[0].degree(), comp_[1].degree(), comp_[2].degree()});
}

Vec3 PolyField::eval(const Vec3& x) const { return {comp_[0](x), comp_[1](x), comp_[2](x)}; }

Mat3 PolyField::jacobian(const Vec3& x) const {
  Mat3 J;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) J(i, j) = comp_[i].derivative(j)(x);
  return J;
}

PolyField PolyField::operator-() const {
  return PolyField({-comp_[0], -comp_[1], -comp_[2]});
}

PolyField& PolyField::operator+=(const PolyField& other) {
  for (int i = 0; i < 3; ++i) comp_[i] += other.comp_[i];
  return *this;
}

PolyField& PolyField::operator-=(const PolyField& other) {
  for (int i = 0; i < 3; ++i) comp_[i] -= other.comp_[i];
  return *this;
}

PolyField& PolyField::operator*=(double s) {
  for (auto& c : comp_) c *= s;
  return *this;
}

PolyField lie_bracket(const PolyField& f, const PolyField& g) {
  std::array<Polynomial, 3> out;
  for (int i = 0; i < 3; ++i) {
    std::vector<Monomial> acc;
    for (int j = 0; j < 3; ++j) {
      const Polynomial a = f[j] * g[i].derivative(j);
      const Polynomial b = g[j] * f[i].derivative(j);
      acc.insert(acc.end(), a.terms().begin(), a.terms().end());
      for (const auto& m : b.terms()) acc.push_back({-m.coeff, m.powers});
    }
    out[i] = Polynomial(std::move(acc));
  }
  return PolyField(std::move(out));
}

PolyField cross(const PolyField& f, const PolyField& g) {
  return PolyField({f[1] * g[2] - f[2] * g[1], f[2] * g[0] - f[0] * g[2],
                    f[0] * g[1] - f[1] * g[0]});
}

}  // namespace extremal
