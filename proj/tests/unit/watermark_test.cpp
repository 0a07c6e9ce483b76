#include "wmark/watermark.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "wmark/errors.hpp"
#include "wmark/lm.hpp"
#include "wmark/rng.hpp"

using namespace wmark;

namespace {

GreenMask mask_of(std::size_t n, std::vector<TokenId> members) {
  GreenMask mask;
  mask.members = std::move(members);
  mask.bits.assign(n, false);
  for (TokenId id : mask.members) mask.bits[id] = true;
  return mask;
}

// Independent oracle: the damage definitions summed term by term, sharing
// nothing with the production single-pass accumulation.
double damage_B_oracle(const Pmf& pmf, const GreenMask& mask) {
  double gamma = 0.0;
  for (std::size_t v = 0; v < pmf.size(); ++v)
    if (mask.bits[v]) gamma += pmf[v];
  double sum = 0.0;
  for (std::size_t v = 0; v < pmf.size(); ++v) {
    if (pmf[v] <= 0.0) continue;
    const double indicator = mask.bits[v] ? 1.0 : 0.0;
    sum += (gamma - indicator) / (gamma * (1.0 - gamma)) * pmf[v] *
           std::log(pmf[v]);
  }
  return sum;
}

double damage_B_prime_oracle(const Pmf& pmf, const GreenMask& mask) {
  double gamma = 0.0;
  for (std::size_t v = 0; v < pmf.size(); ++v)
    if (mask.bits[v]) gamma += pmf[v];
  double sum = 0.0;
  for (std::size_t v = 0; v < pmf.size(); ++v) {
    if (pmf[v] <= 0.0) continue;
    const double indicator = mask.bits[v] ? 1.0 : 0.0;
    const double lp = std::log(pmf[v]);
    sum += (indicator - gamma) / (gamma * (1.0 - gamma)) * pmf[v] * lp * lp;
  }
  return sum;
}

// The logit-space construction the closed form summarizes: add delta to
// green logits, softmax.
Pmf kgw_direct(const Pmf& pmf, const GreenMask& mask, double delta) {
  Pmf out(pmf.size());
  double total = 0.0;
  for (std::size_t v = 0; v < pmf.size(); ++v) {
    out[v] = pmf[v] * (mask.bits[v] ? std::exp(delta) : 1.0);
    total += out[v];
  }
  for (double& p : out) p /= total;
  return out;
}

GreenMask random_mask(std::size_t n, std::size_t m, SplitMix64& rng) {
  std::vector<TokenId> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<TokenId>(i);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t j = i + static_cast<std::size_t>(
                            rng.bounded(static_cast<std::uint64_t>(n - i)));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(m);
  std::sort(ids.begin(), ids.end());
  return mask_of(n, ids);
}

}  // namespace

TEST_CASE("green mass sums the masked entries") {
  const Pmf uniform(8, 0.125);
  CHECK(gamma_t(uniform, mask_of(8, {2, 5})) == doctest::Approx(0.25));

  const Pmf pmf{0.5, 0.3, 0.2};
  CHECK(gamma_t(pmf, mask_of(3, {0})) == doctest::Approx(0.5));

  const Pmf with_zero{0.6, 0.4, 0.0};
  CHECK(gamma_t(with_zero, mask_of(3, {0, 1})) == doctest::Approx(1.0));
}

TEST_CASE("size mismatch is rejected") {
  const Pmf pmf{0.5, 0.5};
  CHECK_THROWS_AS(gamma_t(pmf, mask_of(3, {0})), InvariantError);
}

TEST_CASE("uniform pmfs have zero damage") {
  const Pmf uniform(10, 0.1);
  const GreenMask mask = mask_of(10, {0, 3, 7});
  CHECK(std::abs(damage_B(uniform, mask)) < 1e-12);
  CHECK(std::abs(damage_B_prime(uniform, mask)) < 1e-12);
}

TEST_CASE("two-token damage matches the hand evaluation") {
  const Pmf pmf{0.9, 0.1};
  const double ln9 = std::log(9.0);
  CHECK(damage_B(pmf, mask_of(2, {0})) ==
        doctest::Approx(-ln9).epsilon(1e-12));
  CHECK(damage_B(pmf, mask_of(2, {1})) ==
        doctest::Approx(ln9).epsilon(1e-12));

  // term0 = (1-0.9)/0.09 * 0.9 ln(0.9)^2, term1 = -(0.9/0.09) * 0.1 ln(0.1)^2
  const double l9 = std::log(0.9), l1 = std::log(0.1);
  const double expected =
      (0.1 / 0.09) * 0.9 * l9 * l9 - (0.9 / 0.09) * 0.1 * l1 * l1;
  CHECK(damage_B_prime(pmf, mask_of(2, {0})) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(-5.29079).epsilon(1e-5));

  // Complementing the mask at N=2 flips the sign of both damages.
  CHECK(damage_B_prime(pmf, mask_of(2, {1})) ==
        doctest::Approx(-expected).epsilon(1e-12));
}

TEST_CASE("damage agrees with the independent summation oracle") {
  SplitMix64 rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.bounded(40));
    const std::size_t m =
        1 + static_cast<std::size_t>(rng.bounded(static_cast<std::uint64_t>(n - 1)));
    const Pmf pmf = trial % 2 == 0
                        ? synth_pmf_dirichlet(rng.next(), n, 0.5)
                        : synth_pmf_zipf(rng.next(), n, 1.3);
    const GreenMask mask = random_mask(n, m, rng);
    const StepStats st = step_stats(pmf, mask);
    if (st.gamma <= 0.0 || st.gamma >= 1.0) continue;
    CHECK(damage_B(st) ==
          doctest::Approx(damage_B_oracle(pmf, mask)).epsilon(1e-10));
    CHECK(damage_B_prime(st) ==
          doctest::Approx(damage_B_prime_oracle(pmf, mask)).epsilon(1e-10));
  }
}

TEST_CASE("degenerate green mass yields the infinite sentinel") {
  const Pmf pmf{0.0, 0.4, 0.6};
  CHECK(std::isinf(damage_B(pmf, mask_of(3, {0}))));
  CHECK(std::isinf(damage_B_prime(pmf, mask_of(3, {0}))));
  CHECK(std::isinf(damage_B(pmf, mask_of(3, {1, 2}))));
}

TEST_CASE("kgw closed form at the pinned points") {
  CHECK(kgw_shift(0.5, 0.0) == 0.0);
  CHECK(kgw_shift(0.5, std::log(3.0)) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("kgw shift is monotone and saturates at 1 - gamma") {
  for (double gamma : {0.1, 0.25, 0.5, 0.9}) {
    double prev = -1.0;
    for (double delta = 0.0; delta <= 10.0; delta += 0.25) {
      const double value = kgw_shift(gamma, delta);
      CHECK(value > prev);
      CHECK(value <= 1.0 - gamma + 1e-15);
      prev = value;
    }
    CHECK(kgw_shift(gamma, 800.0) == doctest::Approx(1.0 - gamma));
    CHECK(std::isfinite(kgw_shift(gamma, 1e6)));
  }
}

TEST_CASE("kgw closed form equals the logit-shift softmax") {
  SplitMix64 rng(31337);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.bounded(30));
    const std::size_t m =
        1 + static_cast<std::size_t>(rng.bounded(static_cast<std::uint64_t>(n - 1)));
    const Pmf pmf = synth_pmf_dirichlet(rng.next(), n, 0.8);
    const GreenMask mask = random_mask(n, m, rng);
    const double gamma = gamma_t(pmf, mask);
    if (gamma <= 0.0 || gamma >= 1.0) continue;
    for (double delta : {0.5, 1.0, 2.0, 5.0}) {
      const Pmf direct = kgw_direct(pmf, mask, delta);
      const Pmf via_shift =
          apply_watermark(pmf, mask, kgw_shift(gamma, delta));
      for (std::size_t v = 0; v < n; ++v)
        CHECK(via_shift[v] == doctest::Approx(direct[v]).epsilon(1e-10));
    }
  }
}

TEST_CASE("threshold rules fire exactly on the budget boundary") {
  const Pmf pmf{0.9, 0.1};
  const GreenMask mask = mask_of(2, {0});
  // B = -ln 9 <= 0, so a zero budget watermarks the position fully.
  const ShiftValue opt = shift_value(ShiftSpec::opt(0.0), pmf, mask);
  CHECK(opt.value == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(!opt.no_freedom);

  // Ties count as within budget: a two-token half-half pmf has B = 0
  // exactly (both accumulations cancel without rounding).
  const Pmf half{0.5, 0.5};
  const GreenMask hmask = mask_of(2, {0});
  CHECK(damage_B(half, hmask) == 0.0);
  CHECK(damage_B_prime(half, hmask) == 0.0);
  CHECK(shift_value(ShiftSpec::opt(0.0), half, hmask).value ==
        doctest::Approx(0.5));
  CHECK(shift_value(ShiftSpec::opt_prime(0.0), half, hmask).value ==
        doctest::Approx(0.5));

  // Below the realized damage the rule declines.
  CHECK(shift_value(ShiftSpec::opt(-std::log(9.0) - 0.01), pmf, mask).value ==
        0.0);
}

TEST_CASE("generous budgets make the threshold rule equal HARD") {
  SplitMix64 rng(777);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 4 + static_cast<std::size_t>(rng.bounded(20));
    const Pmf pmf = synth_pmf_dirichlet(rng.next(), n, 1.0);
    const GreenMask mask = random_mask(n, n / 4 + 1, rng);
    const StepStats st = step_stats(pmf, mask);
    if (st.gamma <= 0.0 || st.gamma >= 1.0) continue;
    const double b = damage_B(st);
    CHECK(shift_value(ShiftSpec::opt(b), st).value ==
          shift_value(ShiftSpec::hard(), st).value);
    CHECK(shift_value(ShiftSpec::opt(b + 1.0), st).value ==
          doctest::Approx(1.0 - st.gamma));
  }
}

TEST_CASE("degenerate splits yield zero shift, flagged when unpromotable") {
  const Pmf pmf{0.0, 0.4, 0.6};
  const GreenMask zero_mass = mask_of(3, {0});
  for (const ShiftSpec& spec :
       {ShiftSpec::hard(), ShiftSpec::kgw(2.0), ShiftSpec::opt(100.0),
        ShiftSpec::opt_prime(100.0)}) {
    const ShiftValue sv = shift_value(spec, pmf, zero_mass);
    CHECK(sv.value == 0.0);
    CHECK(sv.no_freedom);
  }
  const GreenMask full_mass = mask_of(3, {1, 2});
  const ShiftValue sv = shift_value(ShiftSpec::hard(), pmf, full_mass);
  CHECK(sv.value == 0.0);
  CHECK(!sv.no_freedom);
}

TEST_CASE("the transform matches the worked three-token example") {
  const Pmf pmf{0.5, 0.3, 0.2};
  const Pmf out = apply_watermark(pmf, mask_of(3, {2}), 0.2);
  CHECK(out[0] == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(0.225).epsilon(1e-12));
  CHECK(out[2] == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("zero shift is the identity and HARD empties the red list") {
  const Pmf pmf{0.5, 0.3, 0.2};
  const GreenMask mask = mask_of(3, {1});
  CHECK(apply_watermark(pmf, mask, 0.0) == pmf);

  const double hard = shift_value(ShiftSpec::hard(), pmf, mask).value;
  const Pmf out = apply_watermark(pmf, mask, hard);
  CHECK(out[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(out[0] == doctest::Approx(0.0));
  CHECK(out[2] == doctest::Approx(0.0));
}

TEST_CASE("transform normalization, green mass, and ratios hold") {
  SplitMix64 rng(4242);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 3 + static_cast<std::size_t>(rng.bounded(60));
    const std::size_t m =
        1 + static_cast<std::size_t>(rng.bounded(static_cast<std::uint64_t>(n - 1)));
    const Pmf pmf = trial % 2 == 0
                        ? synth_pmf_dirichlet(rng.next(), n, 0.6)
                        : synth_pmf_zipf(rng.next(), n, 1.1);
    const GreenMask mask = random_mask(n, m, rng);
    const double gamma = gamma_t(pmf, mask);
    if (gamma <= 0.0 || gamma >= 1.0) continue;
    const double delta = rng.next_unit() * (1.0 - gamma);
    const Pmf out = apply_watermark(pmf, mask, delta);

    double sum = 0.0, green = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      sum += out[v];
      if (mask.bits[v]) green += out[v];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
    CHECK(std::abs(green - (gamma + delta)) <= 1e-12);

    // Within-list ratios survive the rescale.
    TokenId gw = n, rw = n;  // a green and a red token with positive mass
    for (std::size_t v = 0; v < n; ++v) {
      if (pmf[v] <= 0.0) continue;
      if (mask.bits[v] && gw == n) gw = static_cast<TokenId>(v);
      if (!mask.bits[v] && rw == n) rw = static_cast<TokenId>(v);
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (pmf[v] <= 0.0) continue;
      const TokenId ref = mask.bits[v] ? gw : rw;
      if (ref == n || out[ref] <= 0.0) continue;
      const double expected = pmf[v] / pmf[ref];
      const double actual = out[v] / out[ref];
      CHECK(actual == doctest::Approx(expected).epsilon(1e-10));
    }
  }
}

TEST_CASE("overdrawn shifts are rejected") {
  const Pmf pmf{0.5, 0.3, 0.2};
  const GreenMask mask = mask_of(3, {0});
  CHECK_THROWS_AS(apply_watermark(pmf, mask, 0.6), InvariantError);
  const Pmf zero_green{0.0, 0.5, 0.5};
  CHECK_THROWS_AS(apply_watermark(zero_green, mask, 0.1), InvariantError);
}

TEST_CASE("single-pass stats equal their definitions") {
  const Pmf pmf = synth_pmf_zipf(5, 24, 0.9);
  const GreenMask mask = mask_of(24, {1, 2, 3, 10, 17, 23});
  const StepStats st = step_stats(pmf, mask);
  double s_all = 0.0, s_green = 0.0, s2_all = 0.0, s2_green = 0.0, g = 0.0;
  for (std::size_t v = 0; v < pmf.size(); ++v) {
    const double lp = std::log(pmf[v]);
    s_all += pmf[v] * lp;
    s2_all += pmf[v] * lp * lp;
    if (mask.bits[v]) {
      g += pmf[v];
      s_green += pmf[v] * lp;
      s2_green += pmf[v] * lp * lp;
    }
  }
  CHECK(st.gamma == doctest::Approx(g).epsilon(1e-14));
  CHECK(st.s_all == doctest::Approx(s_all).epsilon(1e-14));
  CHECK(st.s_green == doctest::Approx(s_green).epsilon(1e-14));
  CHECK(st.s2_all == doctest::Approx(s2_all).epsilon(1e-14));
  CHECK(st.s2_green == doctest::Approx(s2_green).epsilon(1e-14));
}
