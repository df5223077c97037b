#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "aliaslab/optim.hpp"

using namespace aliaslab;

TEST_CASE("zero gradient leaves parameters unchanged") {
  for (OptKind kind : {OptKind::rmsprop, OptKind::adam}) {
    Tensor t(Shape{3, 1});
    t.v = {1.0, -2.0, 0.5};
    std::vector<Tensor*> params{&t};
    OptimizerState st = make_optimizer(kind, 0.01, params);
    optimizer_step(st, params);
    CHECK(t.v == std::vector<double>{1.0, -2.0, 0.5});
  }
}

TEST_CASE("rmsprop first step") {
  // v = 0.01 * 1 after one accumulation, so the step is lr/(sqrt(0.01)+eps).
  Tensor t(Shape{1, 1});
  t.v = {0.0};
  t.g = {1.0};
  std::vector<Tensor*> params{&t};
  OptimizerState st = make_optimizer(OptKind::rmsprop, 0.01, params);
  optimizer_step(st, params);
  CHECK(t.v[0] == Catch::Approx(-0.01 / (0.1 + 1e-8)).epsilon(1e-12));
  CHECK(t.v[0] == Catch::Approx(-0.1).epsilon(1e-6));
}

TEST_CASE("adam first step magnitude is the learning rate") {
  for (double g : {0.3, -2.0, 100.0}) {
    Tensor t(Shape{1, 1});
    t.v = {0.0};
    t.g = {g};
    std::vector<Tensor*> params{&t};
    OptimizerState st = make_optimizer(OptKind::adam, 0.002, params);
    optimizer_step(st, params);
    // bias-corrected first step: lr * g / (|g| + eps)
    CHECK(std::fabs(t.v[0]) == Catch::Approx(0.002).epsilon(1e-6));
    CHECK(t.v[0] * g < 0.0);
  }
}

TEST_CASE("optimizer rejects a changed parameter list") {
  Tensor a(Shape{2, 1}), b(Shape{2, 1});
  std::vector<Tensor*> params{&a};
  OptimizerState st = make_optimizer(OptKind::rmsprop, 0.01, params);
  std::vector<Tensor*> wrong{&a, &b};
  CHECK_THROWS_AS(optimizer_step(st, wrong), std::invalid_argument);
}
