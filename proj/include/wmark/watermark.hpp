#pragma once

// The mathematical core of the toolkit: green-mass Gamma_t, the two damage
// rates B and B' (directional derivatives of the log-score moments per unit
// of green-mass shift), the four shift rules, and the minimal pmf transform
// that moves exactly `delta` probability mass onto the green list while
// preserving within-list ratios.

#include <string>

#include "wmark/greensplit.hpp"
#include "wmark/lm.hpp"

namespace wmark {

// Green mass of `pmf` under `mask`. Throws InvariantError on size mismatch.
double gamma_t(const Pmf& pmf, const GreenMask& mask);

// Single-pass accumulators over a (pmf, mask) pair. Everything downstream
// (damage rates, shift rules, the variance-reduced score term) derives from
// these five sums, so generation touches the pmf once per step.
// Convention: p log p and p (log p)^2 terms are 0 where p = 0.
struct StepStats {
  double gamma = 0.0;     // green mass
  double s_all = 0.0;     // sum over v of p log p
  double s_green = 0.0;   // same, green tokens only
  double s2_all = 0.0;    // sum over v of p (log p)^2
  double s2_green = 0.0;  // same, green tokens only
};

StepStats step_stats(const Pmf& pmf, const GreenMask& mask);

// B: expected rate of change of log-perplexity per unit of green-mass shift,
//   sum over v of (Gamma - 1{green}) / (Gamma (1-Gamma)) * p log p.
// B': the companion for the second moment, weight (1{green} - Gamma) and
//   term p (log p)^2.
// Both return +infinity when Gamma is 0 or 1: a one-sided split gives the
// formulas a zero denominator, and the sentinel makes threshold rules
// decline such positions.
double damage_B(const StepStats& stats);
double damage_B(const Pmf& pmf, const GreenMask& mask);
double damage_B_prime(const StepStats& stats);
double damage_B_prime(const Pmf& pmf, const GreenMask& mask);

// Shift rule selector.
//   HARD        delta = 1 - Gamma (green list certain)
//   KGW         constant logit boost `param` on green tokens
//   OPT         1 - Gamma where B <= param, else 0
//   OPT_PRIME   1 - Gamma where B' <= param, else 0
// OPT/OPT_PRIME accept any finite threshold; negative values are allowed
// for study even though they trade away more quality than they buy.
struct ShiftSpec {
  enum class Kind { HARD, KGW, OPT, OPT_PRIME };

  Kind kind = Kind::KGW;
  double param = 0.0;  // KGW delta >= 0, OPT beta, OPT_PRIME beta_prime

  static ShiftSpec hard() { return {Kind::HARD, 0.0}; }
  static ShiftSpec kgw(double delta) { return {Kind::KGW, delta}; }
  static ShiftSpec opt(double beta) { return {Kind::OPT, beta}; }
  static ShiftSpec opt_prime(double beta_prime) {
    return {Kind::OPT_PRIME, beta_prime};
  }
};

// Canonical short name ("HARD", "KGW", ...), used in traces and result rows.
std::string to_string(ShiftSpec::Kind kind);

// value always satisfies 0 <= value <= 1 - Gamma. no_freedom marks Gamma = 0
// positions, where no rule can promote an empty-support green list; the
// shift is reported as 0 there.
struct ShiftValue {
  double value = 0.0;
  bool no_freedom = false;
};

ShiftValue shift_value(const ShiftSpec& spec, const StepStats& stats);
ShiftValue shift_value(const ShiftSpec& spec, const Pmf& pmf,
                       const GreenMask& mask);

// Closed-form green-mass shift of a constant logit boost `delta` at green
// mass `gamma`. Algebraically Gamma(1-Gamma)(e^d - 1)/(1-Gamma+Gamma e^d),
// evaluated in the e^{-d} form so large boosts cannot overflow.
double kgw_shift(double gamma, double delta);

// The minimal transform: green entries scaled by (1 + delta/Gamma), red by
// (1 - delta/(1-Gamma)). Output green mass is Gamma + delta. Throws
// InvariantError when delta exceeds 1 - Gamma (a red entry would go
// negative) or when delta > 0 on a zero-mass green list.
Pmf apply_watermark(const Pmf& pmf, const GreenMask& mask, double delta);

// In-place variant for generation loops that already know Gamma.
void apply_watermark_inplace(Pmf& pmf, const GreenMask& mask, double gamma,
                             double delta);

}  // namespace wmark
