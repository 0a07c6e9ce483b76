#include "wmark/watermark.hpp"

#include <cmath>
#include <limits>

#include "wmark/errors.hpp"

namespace wmark {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_sizes(const Pmf& pmf, const GreenMask& mask) {
  if (pmf.size() != mask.bits.size())
    throw InvariantError("pmf and mask cover different vocabulary sizes");
}

bool degenerate(double gamma) { return gamma <= 0.0 || gamma >= 1.0; }

}  // namespace

double gamma_t(const Pmf& pmf, const GreenMask& mask) {
  check_sizes(pmf, mask);
  double sum = 0.0;
  for (TokenId v : mask.members) sum += pmf[v];
  return sum;
}

StepStats step_stats(const Pmf& pmf, const GreenMask& mask) {
  check_sizes(pmf, mask);
  StepStats st;
  for (std::size_t v = 0; v < pmf.size(); ++v) {
    const double p = pmf[v];
    if (p <= 0.0) continue;
    const double lp = std::log(p);
    const double plp = p * lp;
    const double plp2 = plp * lp;
    st.s_all += plp;
    st.s2_all += plp2;
    if (mask.bits[v]) {
      st.gamma += p;
      st.s_green += plp;
      st.s2_green += plp2;
    }
  }
  return st;
}

double damage_B(const StepStats& st) {
  if (degenerate(st.gamma)) return kInf;
  return (st.gamma * st.s_all - st.s_green) / (st.gamma * (1.0 - st.gamma));
}

double damage_B(const Pmf& pmf, const GreenMask& mask) {
  return damage_B(step_stats(pmf, mask));
}

double damage_B_prime(const StepStats& st) {
  if (degenerate(st.gamma)) return kInf;
  return (st.s2_green - st.gamma * st.s2_all) /
         (st.gamma * (1.0 - st.gamma));
}

double damage_B_prime(const Pmf& pmf, const GreenMask& mask) {
  return damage_B_prime(step_stats(pmf, mask));
}

std::string to_string(ShiftSpec::Kind kind) {
  switch (kind) {
    case ShiftSpec::Kind::HARD: return "HARD";
    case ShiftSpec::Kind::KGW: return "KGW";
    case ShiftSpec::Kind::OPT: return "OPT";
    case ShiftSpec::Kind::OPT_PRIME: return "OPT_PRIME";
  }
  throw InvariantError("unknown shift kind");
}

double kgw_shift(double gamma, double delta) {
  if (delta < 0.0) throw InvariantError("logit boost must be >= 0");
  if (degenerate(gamma)) return 0.0;
  const double e = std::exp(-delta);
  return gamma * (1.0 - gamma) * (1.0 - e) / ((1.0 - gamma) * e + gamma);
}

ShiftValue shift_value(const ShiftSpec& spec, const StepStats& st) {
  if (st.gamma <= 0.0) return {0.0, true};
  if (st.gamma >= 1.0) return {0.0, false};
  const double headroom = 1.0 - st.gamma;
  switch (spec.kind) {
    case ShiftSpec::Kind::HARD:
      return {headroom, false};
    case ShiftSpec::Kind::KGW:
      return {kgw_shift(st.gamma, spec.param), false};
    case ShiftSpec::Kind::OPT:
      return {damage_B(st) <= spec.param ? headroom : 0.0, false};
    case ShiftSpec::Kind::OPT_PRIME:
      return {damage_B_prime(st) <= spec.param ? headroom : 0.0, false};
  }
  throw InvariantError("unknown shift kind");
}

ShiftValue shift_value(const ShiftSpec& spec, const Pmf& pmf,
                       const GreenMask& mask) {
  return shift_value(spec, step_stats(pmf, mask));
}

void apply_watermark_inplace(Pmf& pmf, const GreenMask& mask, double gamma,
                             double delta) {
  if (delta == 0.0) return;
  if (delta < 0.0) throw InvariantError("shift must be non-negative");
  if (gamma <= 0.0)
    throw InvariantError("cannot promote a zero-mass green list");
  if (delta > 1.0 - gamma + 1e-12)
    throw InvariantError("shift exceeds available red mass");
  const double green_factor = 1.0 + delta / gamma;
  // Clamp guards the delta == 1 - gamma boundary against rounding below 0.
  const double red_factor =
      gamma >= 1.0 ? 0.0 : std::max(0.0, 1.0 - delta / (1.0 - gamma));
  for (std::size_t v = 0; v < pmf.size(); ++v)
    pmf[v] *= mask.bits[v] ? green_factor : red_factor;
}

Pmf apply_watermark(const Pmf& pmf, const GreenMask& mask, double delta) {
  check_sizes(pmf, mask);
  Pmf out = pmf;
  if (delta != 0.0)
    apply_watermark_inplace(out, mask, gamma_t(pmf, mask), delta);
  return out;
}

}  // namespace wmark
