#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "mpm/errors.hpp"
#include "mpm/nn/adam.hpp"
#include "mpm/nn/tape.hpp"

using namespace mpm;
using nn::Matrix;
using nn::Parameter;
using nn::Tape;
using nn::Var;
using Mat = Matrix<double>;

namespace {

Mat random_mat(std::mt19937_64& rng, int r, int c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

using Builder = std::function<Var(Tape<double>&, std::vector<Var>&)>;

// Compares analytic gradients of sum((f(params) - target)^2) / n against
// central differences for every scalar of every parameter.
double max_grad_error(std::vector<Parameter<double>>& params, const Builder& f, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  Mat target;
  auto loss = [&](bool record) {
    Tape<double> tape(record);
    std::vector<Var> vars;
    for (auto& p : params) vars.push_back(tape.param(p));
    const Var out = f(tape, vars);
    if (target.size() == 0) target = random_mat(rng, tape.value(out).rows(), tape.value(out).cols());
    const Var l = tape.mean_squared_distance(out, target, 1);
    if (record) {
      for (auto& p : params) p.grad.setZero();
      tape.backward(l);
    }
    return tape.scalar(l);
  };
  loss(true);
  double worst = 0.0;
  const double h = 1e-6;
  for (auto& p : params) {
    const Mat analytic = p.grad;
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      const double keep = p.value.data()[i];
      p.value.data()[i] = keep + h;
      const double up = loss(false);
      p.value.data()[i] = keep - h;
      const double down = loss(false);
      p.value.data()[i] = keep;
      const double numeric = (up - down) / (2 * h);
      const double err = std::abs(numeric - analytic.data()[i]) / std::max(1.0, std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

Parameter<double> param(std::mt19937_64& rng, const char* name, int r, int c, double scale = 1.0) {
  return Parameter<double>{name, random_mat(rng, r, c, scale), Mat::Zero(r, c)};
}

constexpr double kTol = 1e-6;

}  // namespace

TEST_CASE("finite differences: dense ops") {
  std::mt19937_64 rng(1);
  std::vector<Parameter<double>> ps{param(rng, "x", 4, 3), param(rng, "w", 3, 5), param(rng, "b", 1, 5)};
  CHECK(max_grad_error(ps, [](auto& t, auto& v) { return t.linear(v[0], v[1], v[2]); }) < kTol);
  CHECK(max_grad_error(ps, [](auto& t, auto& v) { return t.linear(v[0], v[1]); }) < kTol);
  CHECK(max_grad_error(ps, [](auto& t, auto& v) { return t.row_linear(v[0], v[1], v[2]); }) < kTol);
  CHECK(max_grad_error(ps, [](auto& t, auto& v) { return t.gelu(t.linear(v[0], v[1], v[2])); }) < kTol);
  CHECK(max_grad_error(ps, [](auto& t, auto& v) {
          const Var y = t.linear(v[0], v[1], v[2]);
          return t.add(y, t.scale(y, -0.3));
        }) < kTol);
}

TEST_CASE("finite differences: layer norm") {
  std::mt19937_64 rng(2);
  std::vector<Parameter<double>> ps{param(rng, "x", 5, 6, 2.0), param(rng, "g", 1, 6), param(rng, "b", 1, 6)};
  CHECK(max_grad_error(ps, [](auto& t, auto& v) { return t.layer_norm(v[0], v[1], v[2]); }) < kTol);
}

TEST_CASE("finite differences: attention") {
  std::mt19937_64 rng(3);
  std::vector<Parameter<double>> ps{param(rng, "q", 8, 4), param(rng, "k", 8, 4), param(rng, "v", 8, 4)};
  for (int heads : {1, 2}) {
    CHECK(max_grad_error(ps, [heads](auto& t, auto& v) { return t.attention(v[0], v[1], v[2], heads, 4); }) < kTol);
  }
}

TEST_CASE("finite differences: row ops") {
  std::mt19937_64 rng(4);
  std::vector<Parameter<double>> ps{param(rng, "x", 18, 4), param(rng, "pos", 9, 4), param(rng, "tok", 1, 4)};
  const std::vector<std::uint8_t> rows{0, 1, 0, 0, 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 1};
  CHECK(max_grad_error(ps, [](auto& t, auto& v) { return t.add_position(v[0], v[1], 9); }) < kTol);
  CHECK(max_grad_error(ps, [&](auto& t, auto& v) { return t.replace_rows(v[0], v[2], rows); }) < kTol);
  CHECK(max_grad_error(ps, [](auto& t, auto& v) { return t.unfold(v[0], 9, 3, 3); }) < kTol);
  CHECK(max_grad_error(ps, [](auto& t, auto& v) { return t.unfold(v[0], 9, 5, 3); }) < kTol);
  CHECK(max_grad_error(ps, [](auto& t, auto& v) { return t.select_rows(v[0], 9, 3, 1); }) < kTol);

  std::vector<Parameter<double>> pts{param(rng, "x", 3, 6), param(rng, "tok", 1, 2)};
  const std::vector<std::uint8_t> mask{1, 0, 0, 0, 1, 1, 0, 0, 0};
  CHECK(max_grad_error(pts, [&](auto& t, auto& v) { return t.substitute_points(v[0], v[1], mask, 2); }) < kTol);
}

TEST_CASE("mean squared distance") {
  Tape<double> tape;
  Mat a(2, 6), b = Mat::Zero(2, 6);
  a << 3, 4, 0, 0, 0, 0,  //
      0, 0, 0, 1, 2, 2;
  // points (3,4,0):25, (0,0,0):0, (0,0,0):0, (1,2,2):9 with point_dim 3
  CHECK(tape.scalar(tape.mean_squared_distance(tape.input(a), b, 3)) == doctest::Approx(34.0 / 4));
  CHECK_THROWS_AS(tape.mean_squared_distance(tape.input(a), b, 4), ValidationError);
}

TEST_CASE("attention hand cases") {
  std::mt19937_64 rng(5);
  Tape<double> tape(false);
  // One frame per sample: each output row is its own value row.
  const Mat v1 = random_mat(rng, 3, 4);
  const Var one = tape.attention(tape.input(random_mat(rng, 3, 4)), tape.input(random_mat(rng, 3, 4)),
                                 tape.input(v1), 2, 1);
  CHECK((tape.value(one) - v1).cwiseAbs().maxCoeff() < 1e-12);

  // Constant values: attention weights sum to one per row.
  const Var ones = tape.attention(tape.input(random_mat(rng, 6, 4, 3.0)), tape.input(random_mat(rng, 6, 4, 3.0)),
                                  tape.input(Mat::Ones(6, 4)), 2, 6);
  CHECK((tape.value(ones).array() - 1.0).abs().maxCoeff() < 1e-12);

  Mat q(2, 1), k(2, 1), v(2, 1);
  q << 1, 0;
  k << 1, 2;
  v << 10, 20;
  const Var two = tape.attention(tape.input(q), tape.input(k), tape.input(v), 1, 2);
  const double w0 = std::exp(1.0) / (std::exp(1.0) + std::exp(2.0));
  CHECK(tape.value(two)(0, 0) == doctest::Approx(10 * w0 + 20 * (1 - w0)).epsilon(1e-12));
  CHECK(tape.value(two)(1, 0) == doctest::Approx(15.0).epsilon(1e-12));

  // Scores are scaled by the per-head dimension.
  Mat q2(2, 4), k2(2, 4), v2(2, 4);
  q2 << 1, 1, 1, 1, 0, 0, 0, 0;
  k2 << 0, 0, 0, 0, 1, 1, 1, 1;
  v2 << 0, 0, 0, 0, 1, 1, 1, 1;
  const Var scaled = tape.attention(tape.input(q2), tape.input(k2), tape.input(v2), 1, 2);
  const double s = 4.0 / std::sqrt(4.0);
  CHECK(tape.value(scaled)(0, 0) == doctest::Approx(std::exp(s) / (1 + std::exp(s))).epsilon(1e-12));
}

TEST_CASE("unfold and select_rows layout") {
  Tape<double> tape(false);
  Mat x(6, 1);
  x << 1, 2, 3, 4, 5, 6;
  const Mat u = tape.value(tape.unfold(tape.input(x), 6, 5, 3));
  REQUIRE(u.rows() == 2);
  REQUIRE(u.cols() == 5);
  Mat expect(2, 5);
  expect << 0, 1, 2, 3, 4,  //
      3, 4, 5, 6, 0;
  CHECK(u == expect);
  const Mat s = tape.value(tape.select_rows(tape.input(x), 3, 3, 1));
  REQUIRE(s.rows() == 2);
  CHECK(s(0, 0) == 2);
  CHECK(s(1, 0) == 5);
}

TEST_CASE("dropout") {
  std::mt19937_64 rng(6);
  Tape<double> tape;
  const Var x = tape.input(Mat::Ones(50, 40));
  CHECK(tape.value(tape.dropout(x, 0.0, rng)) == Mat::Ones(50, 40));
  const Mat d = tape.value(tape.dropout(x, 0.25, rng));
  int zeros = 0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double e = d.data()[i];
    CHECK((e == 0.0 || std::abs(e - 4.0 / 3.0) < 1e-12));
    zeros += e == 0.0;
  }
  CHECK(std::abs(zeros / 2000.0 - 0.25) < 0.05);
}

TEST_CASE("adam first step moves each weight by about lr") {
  nn::ParameterStore<double> store;
  Mat w(1, 4);
  w << 1, 2, 3, 4;
  store.add("w", w);
  store.get("w").grad << 0.5, -3.0, 1e-3, 20.0;
  nn::Adam<double> adam;
  adam.step(store, 0.01);
  const Mat delta = store.get("w").value - w;
  CHECK(delta(0, 0) == doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(delta(0, 1) == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(delta(0, 2) == doctest::Approx(-0.01).epsilon(1e-4));
  CHECK(delta(0, 3) == doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(adam.steps() == 1);

  nn::ParameterStore<double> other;
  other.add("a", Mat::Zero(1, 1));
  other.add("b", Mat::Zero(1, 1));
  CHECK_THROWS_AS(adam.step(other, 0.01), ValidationError);
}

TEST_CASE("parameter store") {
  nn::ParameterStore<float> s;
  s.add("enc.w", Matrix<float>::Zero(2, 3));
  s.add("dec.w", Matrix<float>::Zero(4, 1));
  CHECK_THROWS_AS(s.add("enc.w", Matrix<float>::Zero(1, 1)), ValidationError);
  CHECK_THROWS_AS(s.get("missing"), ValidationError);
  CHECK(s.scalar_count() == 10);
  CHECK(s.scalar_count("enc") == 6);
  CHECK(s.all()[1].name == "dec.w");
}
