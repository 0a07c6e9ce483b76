#include "wmark/pareto.hpp"

#include <cmath>

#include "wmark/errors.hpp"
#include "wmark/rng.hpp"

namespace wmark {

void validate_instance(const FiniteInstance& instance) {
  if (instance.atoms.empty()) throw InvariantError("instance has no atoms");
  double weight = 0.0;
  for (const Atom& atom : instance.atoms) {
    if (!(atom.x >= 0.0) || !(atom.x <= 1.0))
      throw InvariantError("atom x outside [0, 1]");
    if (!(atom.w >= 0.0)) throw InvariantError("negative atom weight");
    if (!std::isfinite(atom.y)) throw InvariantError("atom y not finite");
    weight += atom.w;
  }
  if (std::abs(weight - 1.0) > 1e-9)
    throw InvariantError("atom weights must sum to 1");
}

Objectives objectives(const FiniteInstance& instance,
                      const CandidateShift& candidate) {
  if (candidate.size() != instance.atoms.size())
    throw InvariantError("candidate size disagrees with instance");
  Objectives obj;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    const Atom& atom = instance.atoms[i];
    const double h = candidate[i];
    if (!(h >= -1e-12) || !(h <= 1.0 - atom.x + 1e-12))
      throw InvariantError("candidate violates 0 <= h <= 1 - x");
    obj.e_h += atom.w * h;
    obj.e_hy += atom.w * h * atom.y;
  }
  return obj;
}

CandidateShift threshold_solution(const FiniteInstance& instance,
                                  double beta) {
  CandidateShift h;
  h.reserve(instance.atoms.size());
  for (const Atom& atom : instance.atoms)
    h.push_back(atom.y <= beta ? 1.0 - atom.x : 0.0);
  return h;
}

std::optional<CandidateShift> dominance_search(const FiniteInstance& instance,
                                               double beta,
                                               std::size_t grid_steps) {
  validate_instance(instance);
  const std::size_t atoms = instance.atoms.size();
  if (atoms > 6) throw InvariantError("instance too large");
  if (grid_steps < 1) throw InvariantError("grid_steps must be >= 1");

  const Objectives best =
      objectives(instance, threshold_solution(instance, beta));
  constexpr double kTol = 1e-12;

  // Odometer over (grid_steps+1)^atoms candidates.
  std::vector<std::size_t> idx(atoms, 0);
  CandidateShift h(atoms, 0.0);
  const double g = static_cast<double>(grid_steps);
  for (;;) {
    double e_h = 0.0, e_hy = 0.0;
    for (std::size_t i = 0; i < atoms; ++i) {
      const Atom& atom = instance.atoms[i];
      h[i] = static_cast<double>(idx[i]) * (1.0 - atom.x) / g;
      e_h += atom.w * h[i];
      e_hy += atom.w * h[i] * atom.y;
    }
    if (e_h > best.e_h + kTol && e_hy < best.e_hy - kTol) return h;

    std::size_t pos = 0;
    while (pos < atoms && ++idx[pos] > grid_steps) {
      idx[pos] = 0;
      ++pos;
    }
    if (pos == atoms) return std::nullopt;
  }
}

FiniteInstance random_instance(std::uint64_t seed, std::size_t atom_count) {
  if (atom_count < 1) throw InvariantError("need at least one atom");
  SplitMix64 rng(seed);
  FiniteInstance instance;
  instance.atoms.resize(atom_count);

  // Flat Dirichlet via normalized exponentials.
  double total = 0.0;
  for (Atom& atom : instance.atoms) {
    atom.w = -std::log(rng.next_unit_open());
    total += atom.w;
  }
  for (Atom& atom : instance.atoms) atom.w /= total;

  for (Atom& atom : instance.atoms) {
    atom.x = rng.next_unit_open();
    atom.y = std::tan(3.141592653589793 * (rng.next_unit() - 0.5));
  }
  return instance;
}

}  // namespace wmark
