#include "extremal/control_system.hpp"

#include "extremal/error.hpp"

namespace extremal {

namespace {

std::string word_of(int i) { return std::string(1, static_cast<char>('0' + i)); }

}  // namespace

ControlSystem::ControlSystem(PolyField f0, PolyField f1, PolyField f2, BracketSign sign)
    : sign_(sign) {
  fields_[0] = std::move(f0);
  fields_[1] = std::move(f1);
  fields_[2] = std::move(f2);
  fields_[3] = cross(fields_[1], fields_[2]);

  const double s = sign == BracketSign::Standard ? 1.0 : -1.0;
  for (int i = 0; i < 4; ++i) cache_.emplace(word_of(i), fields_[i]);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      cache_.emplace(word_of(i) + word_of(j), s * lie_bracket(fields_[i], fields_[j]));
  for (int k = 0; k < 4; ++k)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const PolyField& inner = cache_.at(word_of(i) + word_of(j));
        cache_.emplace(word_of(k) + word_of(i) + word_of(j),
                       s * lie_bracket(fields_[k], inner));
      }
}

const PolyField& ControlSystem::bracket(std::string_view word) const {
  auto it = cache_.find(word);
  if (it == cache_.end())
    throw Error(Errc::PreconditionViolated, "no cached bracket for word '" + std::string(word) + "'");
  return it->second;
}

double ControlSystem::frame_norm(const Vec3& x) const { return fields_[3].eval(x).norm(); }

double hamiltonian_lift(const PolyField& f, const CanonicalState& lam) {
  return lam.xi.dot(f.eval(lam.x));
}

BracketTable bracket_table(const ControlSystem& sys, const CanonicalState& lam, int order) {
  BracketTable t;
  for (int i = 0; i < 4; ++i) t.lift[i] = hamiltonian_lift(sys.field(i), lam);
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      const std::string w{static_cast<char>('0' + i), static_cast<char>('0' + j)};
      const double v = hamiltonian_lift(sys.bracket(w), lam);
      t.pair[i][j] = v;
      t.pair[j][i] = -v;
    }
  }
  if (order >= 2) {
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
          const std::string w{static_cast<char>('0' + k), static_cast<char>('0' + i),
                              static_cast<char>('0' + j)};
          const double v = hamiltonian_lift(sys.bracket(w), lam);
          t.triple[9 * k + 3 * i + j] = v;
          t.triple[9 * k + 3 * j + i] = -v;
        }
    t.has_second_order = true;
  }
  return t;
}

}  // namespace extremal
