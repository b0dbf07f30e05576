#include <doctest.h>

#include <random>

#include "mpm/errors.hpp"
#include "mpm/mask/mask_sampler.hpp"
#include "oracles.hpp"

using namespace mpm;
using mask::MaskPolicy;
using mask::MaskStrategy;

TEST_CASE("total_mask_ratio examples") {
  CHECK(mask::total_mask_ratio(5, 16, 0.6) == doctest::Approx(0.725).epsilon(1e-15));
  CHECK(mask::total_mask_ratio(0, 16, 0.0) == 0.0);
  CHECK(mask::total_mask_ratio(16, 16, 0.3) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(mask::total_mask_ratio(17, 16, 0.3), ValidationError);
  CHECK_THROWS_AS(mask::total_mask_ratio(5, 16, 1.2), ValidationError);
}

TEST_CASE("spatiotemporal example: 72.5 percent") {
  const MaskPolicy p{MaskStrategy::kSpatiotemporal, 5, 0.6, 11};
  const auto m = mask::sample_mask(p, 10, 16);
  CHECK(m.count() == 116);
  int full = 0;
  for (int t = 0; t < 10; ++t) {
    int n = 0;
    for (int j = 0; j < 16; ++j) n += m(t, j);
    if (n == 16) {
      ++full;
    } else {
      CHECK(n == 5);
    }
  }
  CHECK(full == 6);
}

TEST_CASE("degenerate policies") {
  for (auto s : {MaskStrategy::kSpatial, MaskStrategy::kTemporal, MaskStrategy::kSpatiotemporal}) {
    CHECK(mask::sample_mask(MaskPolicy{s, 0, 0.0, 1}, 12, 16).count() == 0);
  }
  CHECK(mask::sample_mask(MaskPolicy{MaskStrategy::kTemporal, 0, 1.0, 1}, 12, 16).count() == 12 * 16);
  CHECK_THROWS_AS(mask::sample_mask(MaskPolicy{}, 0, 16), ValidationError);
}

TEST_CASE("strategy structure") {
  const MaskPolicy tube{MaskStrategy::kSpatial, 5, 0.6, 3};
  const auto m = mask::sample_mask(tube, 20, 16);
  int tubes = 0;
  for (int j = 0; j < 16; ++j) {
    const bool first = m(0, j);
    for (int t = 1; t < 20; ++t) CHECK(m(t, j) == first);
    tubes += first;
  }
  CHECK(tubes == 12);  // ceil(0.725 * 16)

  const MaskPolicy temporal{MaskStrategy::kTemporal, 5, 0.6, 3};
  const auto n = mask::sample_mask(temporal, 40, 16);
  int frames = 0;
  for (int t = 0; t < 40; ++t) {
    const bool first = n(t, 0);
    for (int j = 1; j < 16; ++j) CHECK(n(t, j) == first);
    frames += first;
  }
  CHECK(frames == 29);  // round(0.725 * 40)
}

TEST_CASE("ratio exactness and grid coverage") {
  for (int rs : {2, 3, 5, 7, 9}) {
    for (double rt : {0.4, 0.5, 0.6, 0.7, 0.8}) {
      for (int L : {10, 20, 27, 81}) {
        const MaskPolicy p{MaskStrategy::kSpatiotemporal, rs, rt, 99};
        const auto m = mask::sample_mask(p, L, 16);
        const double expect = mask::total_mask_ratio(rs, 16, rt);
        const double rtl = rt * L;
        if (std::abs(rtl - std::round(rtl)) < 1e-9) {
          CHECK(m.ratio() == doctest::Approx(expect).epsilon(1e-12));
        } else {
          CHECK(std::abs(m.ratio() - expect) <= 1.0 / L);
        }
      }
    }
  }
}

TEST_CASE("determinism and seed sensitivity") {
  const MaskPolicy a{MaskStrategy::kSpatiotemporal, 5, 0.6, 42};
  CHECK(mask::sample_mask(a, 16, 16) == mask::sample_mask(a, 16, 16));
  MaskPolicy b = a;
  b.seed = 43;
  CHECK_FALSE(mask::sample_mask(a, 16, 16) == mask::sample_mask(b, 16, 16));
}

TEST_CASE("apply_mask_joint_level") {
  std::mt19937_64 rng(1);
  const auto seq = oracle::random_pose(rng, 6, 16, 3, 100.0);
  const std::vector<double> token{1.5, -2.0, 3.25};
  CHECK(mask::apply_mask_joint_level(seq, mask::JointMask(6, 16), token) == seq);
  const auto all = mask::apply_mask_joint_level(seq, mask::JointMask(6, 16, true), token);
  for (int t = 0; t < 6; ++t)
    for (int j = 0; j < 16; ++j)
      for (int c = 0; c < 3; ++c) CHECK(all.at(t, j, c) == token[c]);
  const auto m = mask::sample_mask(MaskPolicy{MaskStrategy::kSpatiotemporal, 5, 0.5, 4}, 6, 16);
  const auto out = mask::apply_mask_joint_level(seq, m, token);
  for (int t = 0; t < 6; ++t)
    for (int j = 0; j < 16; ++j)
      for (int c = 0; c < 3; ++c) CHECK(out.at(t, j, c) == (m(t, j) ? token[c] : seq.at(t, j, c)));
  CHECK_THROWS_AS(mask::apply_mask_joint_level(seq, mask::JointMask(5, 16), token), ValidationError);
  CHECK_THROWS_AS(mask::apply_mask_joint_level(seq, m, std::vector<double>{1.0, 2.0}), ValidationError);
}

TEST_CASE("strategy names") {
  CHECK(mask::parse_strategy("tube") == MaskStrategy::kSpatial);
  CHECK(mask::parse_strategy(mask::to_string(MaskStrategy::kTemporal)) == MaskStrategy::kTemporal);
  CHECK_THROWS_AS(mask::parse_strategy("random"), ValidationError);
}
