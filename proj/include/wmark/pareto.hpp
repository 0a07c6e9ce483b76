#pragma once

// Brute-force check of the threshold rule's optimality on small finite
// instances. The abstract problem: a weighted set of atoms (x, y) with
// x in [0,1], a candidate assigns each atom a value h in [0, 1-x], and the
// two objectives are E[h] (maximize) and E[hY] (minimize). The threshold
// solution takes the full 1-x wherever y <= beta. Both objectives are
// linear in h, so optima sit at grid-representable extreme points and an
// exhaustive grid search is a meaningful falsifier.

#include <cstdint>
#include <optional>
#include <vector>

namespace wmark {

struct Atom {
  double x = 0.0;  // in [0, 1]
  double y = 0.0;  // any finite real
  double w = 0.0;  // probability weight
};

struct FiniteInstance {
  std::vector<Atom> atoms;
};

// Throws InvariantError unless weights are non-negative and sum to 1
// within 1e-9, and every x lies in [0, 1].
void validate_instance(const FiniteInstance& instance);

// One h value per atom, 0 <= h[i] <= 1 - x[i].
using CandidateShift = std::vector<double>;

struct Objectives {
  double e_h = 0.0;   // expected shift
  double e_hy = 0.0;  // expected shift-weighted cost
};

// Throws InvariantError on an infeasible candidate (bounds violated beyond
// 1e-12 slack).
Objectives objectives(const FiniteInstance& instance,
                      const CandidateShift& candidate);

// h[i] = 1 - x[i] where y[i] <= beta, else 0.
CandidateShift threshold_solution(const FiniteInstance& instance, double beta);

// Exhaustive grid enumeration, h[i] in {k (1 - x[i]) / grid_steps}. Returns
// a candidate strictly better on both objectives than the threshold
// solution (tolerance 1e-12) if one exists. Negative beta is accepted: the
// threshold rule is then beatable, and the search should prove it.
// Throws InvariantError for instances above 6 atoms (the search is
// (grid_steps+1)^atoms evaluations).
std::optional<CandidateShift> dominance_search(const FiniteInstance& instance,
                                               double beta,
                                               std::size_t grid_steps);

// Seeded instance: weights from a flat simplex draw, x uniform in (0,1),
// y heavy-tailed (Cauchy) so thresholds straddle realistic spreads.
FiniteInstance random_instance(std::uint64_t seed, std::size_t atom_count);

}  // namespace wmark
