#include <doctest.h>

#include "gradcheck_util.hpp"

TEST_CASE("all five losses match central differences") {
  for (const auto& name : gradcheck::loss_names()) {
    gradcheck::Fixture fx;
    const auto r = gradcheck::check(fx, gradcheck::loss_by_name(fx, name));
    INFO("loss " << name << ", worst tensor " << r.worst_param);
    CHECK(r.groups > 10);
    CHECK(r.worst < 1e-4);
  }
}

TEST_CASE("masked points receive no input gradient") {
  // Perturbing a masked coordinate leaves the pretext loss unchanged.
  gradcheck::Fixture fx;
  mpm::net::MpmNet<double> model(fx.state);
  auto eval = [&] {
    mpm::nn::Tape<double> tape(false);
    return tape.scalar(mpm::train::pretext_loss<double>(model, tape, mpm::train::Task::kM2L, fx.batch, fx.mask, {}));
  };
  const double before = eval();
  int masked = -1;
  for (size_t i = 0; i < fx.mask.points.size(); ++i) {
    if (fx.mask.points[i]) {
      masked = static_cast<int>(i);
      break;
    }
  }
  REQUIRE(masked >= 0);
  fx.batch.pose2d(masked / 16, 2 * (masked % 16)) += 3.0;
  CHECK(eval() == before);
}
