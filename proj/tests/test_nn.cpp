#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "aliaslab/gradcheck.hpp"
#include "aliaslab/nn.hpp"
#include "aliaslab/rng.hpp"

using namespace aliaslab;

namespace {

ParamSet random_gru(int in, int hidden, uint64_t seed) {
  ParamSet ps(seed);
  Rng rng(seed);
  add_gru(ps, "cell", in, hidden, rng);
  return ps;
}

ParamSet random_lstm(int in, int hidden, uint64_t seed) {
  ParamSet ps(seed);
  Rng rng(seed);
  add_lstm(ps, "cell", in, hidden, rng);
  return ps;
}

}  // namespace

TEST_CASE("embedding init stays inside [-0.05, 0.05]") {
  LayerSpec spec;
  spec.kind = LayerSpec::Kind::embedding;
  spec.vocab = 40;
  spec.width = 16;
  ParamSet ps = init_params(spec, 123);
  for (double x : ps.at("embedding.table").v) {
    CHECK(x >= -0.05);
    CHECK(x <= 0.05);
  }
}

TEST_CASE("same seed gives identical parameters") {
  LayerSpec spec;
  spec.kind = LayerSpec::Kind::gru_cell;
  spec.input = 5;
  spec.output = 4;
  ParamSet a = init_params(spec, 77);
  ParamSet b = init_params(spec, 77);
  REQUIRE(a.items().size() == b.items().size());
  for (size_t i = 0; i < a.items().size(); ++i) {
    CHECK(a.items()[i].first == b.items()[i].first);
    CHECK(a.items()[i].second.v == b.items()[i].second.v);
  }
}

TEST_CASE("linear layer shapes") {
  LayerSpec spec;
  spec.kind = LayerSpec::Kind::linear;
  spec.input = 3;
  spec.output = 2;
  ParamSet ps = init_params(spec, 9);
  CHECK(ps.at("linear.w").shape == Shape{2, 3});
  CHECK(ps.at("linear.b").shape == Shape{2, 1});
  const double bound = 1.0 / std::sqrt(3.0);
  for (double x : ps.at("linear.w").v) CHECK(std::fabs(x) <= bound);
}

TEST_CASE("gru cell with zero parameters maps zero state to zero") {
  ParamSet ps(0);
  Rng rng(0);
  add_gru(ps, "cell", 3, 2, rng);
  for (auto& [name, t] : ps.items()) std::fill(t.v.begin(), t.v.end(), 0.0);
  Tape tape;
  GruVars cell = bind_gru(tape, ps, "cell");
  Var x = tape.input(Shape{3, 1}, std::vector<double>{1.0, -2.0, 0.5});
  Var h = gru_cell(tape, cell, x, tape.zeros(2));
  for (double v : tape.val(h)) CHECK(v == 0.0);
}

TEST_CASE("saturated update gate copies the hidden state") {
  ParamSet ps = random_gru(3, 2, 4);
  // Huge z-gate bias forces z ~ 1, so h' ~ h regardless of the input.
  for (int i = 2; i < 4; ++i) {
    ps.at("cell.b_ih").v[static_cast<size_t>(i)] = 40.0;
    ps.at("cell.b_hh").v[static_cast<size_t>(i)] = 40.0;
  }
  Tape tape;
  GruVars cell = bind_gru(tape, ps, "cell");
  Var x = tape.input(Shape{3, 1}, std::vector<double>{0.3, -0.8, 1.2});
  std::vector<double> h0{0.4, -0.6};
  Var h = gru_cell(tape, cell, x, tape.input(Shape{2, 1}, h0));
  for (size_t i = 0; i < 2; ++i) CHECK(tape.val(h)[i] == Catch::Approx(h0[i]).margin(1e-12));
}

TEST_CASE("gru cell passes gradient checks") {
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    ParamSet ps = random_gru(3, 2, seed);
    Rng rng(seed + 1000);
    std::vector<double> x(3), h0(2);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    for (auto& v : h0) v = rng.uniform(-1.0, 1.0);
    auto f = [&](ParamSet& p) {
      Tape tape;
      GruVars cell = bind_gru(tape, p, "cell");
      Var h = gru_cell(tape, cell, tape.input(Shape{3, 1}, x), tape.input(Shape{2, 1}, h0));
      Var loss = tape.sum(h);
      tape.backward(loss);
      return tape.scalar(loss);
    };
    const GradReport report = grad_check(ps, f, 1e-5, 1e-5);
    INFO("seed " << seed << " max rel err " << report.max_rel_err);
    CHECK(report.pass);
  }
}

TEST_CASE("lstm cell with zero parameters maps zero state to zero") {
  ParamSet ps(0);
  Rng rng(0);
  add_lstm(ps, "cell", 3, 2, rng);
  for (auto& [name, t] : ps.items()) std::fill(t.v.begin(), t.v.end(), 0.0);
  Tape tape;
  LstmVars cell = bind_lstm(tape, ps, "cell");
  Var x = tape.input(Shape{3, 1}, std::vector<double>{1.0, -2.0, 0.5});
  LstmState s = lstm_cell(tape, cell, x, {tape.zeros(2), tape.zeros(2)});
  for (double v : tape.val(s.h)) CHECK(v == 0.0);
  for (double v : tape.val(s.c)) CHECK(v == 0.0);
}

TEST_CASE("saturated forget gate carries the cell memory") {
  ParamSet ps = random_lstm(3, 2, 11);
  for (int i = 0; i < 2; ++i) {
    // input gate shut, forget gate open
    ps.at("cell.b_ih").v[static_cast<size_t>(i)] = -40.0;
    ps.at("cell.b_hh").v[static_cast<size_t>(i)] = -40.0;
    ps.at("cell.b_ih").v[static_cast<size_t>(2 + i)] = 40.0;
    ps.at("cell.b_hh").v[static_cast<size_t>(2 + i)] = 40.0;
  }
  Tape tape;
  LstmVars cell = bind_lstm(tape, ps, "cell");
  Var x = tape.input(Shape{3, 1}, std::vector<double>{0.3, -0.8, 1.2});
  std::vector<double> c0{0.25, -0.5};
  LstmState s = lstm_cell(tape, cell, x, {tape.zeros(2), tape.input(Shape{2, 1}, c0)});
  for (size_t i = 0; i < 2; ++i) CHECK(tape.val(s.c)[i] == Catch::Approx(c0[i]).margin(1e-12));
}

TEST_CASE("lstm cell passes gradient checks") {
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    ParamSet ps = random_lstm(3, 2, seed);
    Rng rng(seed + 2000);
    std::vector<double> x(3), h0(2), c0(2);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    for (auto& v : h0) v = rng.uniform(-1.0, 1.0);
    for (auto& v : c0) v = rng.uniform(-1.0, 1.0);
    auto f = [&](ParamSet& p) {
      Tape tape;
      LstmVars cell = bind_lstm(tape, p, "cell");
      LstmState s = lstm_cell(tape, cell, tape.input(Shape{3, 1}, x),
                              {tape.input(Shape{2, 1}, h0), tape.input(Shape{2, 1}, c0)});
      Var loss = tape.sum(s.h);
      tape.backward(loss);
      return tape.scalar(loss);
    };
    CHECK(grad_check(ps, f, 1e-5, 1e-5).pass);
  }
}

TEST_CASE("mlp and linear pass gradient checks") {
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    ParamSet ps(seed);
    Rng rng(seed);
    add_mlp(ps, "mlp", 3, 2, 2, rng);
    std::vector<double> x(3);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    for (Activation act : {Activation::tanh, Activation::relu, Activation::none}) {
      auto f = [&](ParamSet& p) {
        Tape tape;
        MlpVars m = bind_mlp(tape, p, "mlp", act);
        Var loss = tape.sum_squares(mlp(tape, m, tape.input(Shape{3, 1}, x)));
        tape.backward(loss);
        return tape.scalar(loss);
      };
      CHECK(grad_check(ps, f, 1e-5, 1e-5).pass);
    }
  }
}

TEST_CASE("mlp with zero parameters returns zero") {
  ParamSet ps(0);
  Rng rng(0);
  add_mlp(ps, "mlp", 3, 2, 2, rng);
  for (auto& [name, t] : ps.items()) std::fill(t.v.begin(), t.v.end(), 0.0);
  Tape tape;
  MlpVars m = bind_mlp(tape, ps, "mlp", Activation::tanh);
  Var y = mlp(tape, m, tape.input(Shape{3, 1}, std::vector<double>{1.0, 2.0, 3.0}));
  for (double v : tape.val(y)) CHECK(v == 0.0);
}

TEST_CASE("identity mlp passes the input through") {
  ParamSet ps(0);
  Rng rng(0);
  add_mlp(ps, "mlp", 2, 2, 2, rng);
  for (auto& [name, t] : ps.items()) std::fill(t.v.begin(), t.v.end(), 0.0);
  ps.at("mlp.l1.w").v = {1.0, 0.0, 0.0, 1.0};
  ps.at("mlp.l2.w").v = {1.0, 0.0, 0.0, 1.0};
  Tape tape;
  MlpVars m = bind_mlp(tape, ps, "mlp", Activation::none);
  std::vector<double> x{0.7, -0.4};
  Var y = mlp(tape, m, tape.input(Shape{2, 1}, x));
  CHECK(tape.val(y)[0] == x[0]);
  CHECK(tape.val(y)[1] == x[1]);
}

TEST_CASE("encode_sequence equals iterated cell application") {
  ParamSet ps = random_gru(3, 2, 21);
  Tape tape;
  GruVars cell = bind_gru(tape, ps, "cell");
  std::vector<Var> inputs;
  Rng rng(22);
  for (int t = 0; t < 5; ++t) {
    std::vector<double> x(3);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    inputs.push_back(tape.input(Shape{3, 1}, x));
  }
  const auto states = gru_encode(tape, cell, inputs, tape.zeros(2));
  REQUIRE(states.size() == 5);
  Var h = tape.zeros(2);
  for (size_t t = 0; t < 5; ++t) {
    h = gru_cell(tape, cell, inputs[t], h);
    auto a = tape.val(h);
    auto b = tape.val(states[t]);
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }
}

TEST_CASE("single-input encode is one cell application") {
  ParamSet ps = random_lstm(3, 2, 33);
  Tape tape;
  LstmVars cell = bind_lstm(tape, ps, "cell");
  Var x = tape.input(Shape{3, 1}, std::vector<double>{0.1, 0.2, 0.3});
  std::vector<Var> inputs{x};
  LstmState s0{tape.zeros(2), tape.zeros(2)};
  const auto states = lstm_encode(tape, cell, inputs, s0);
  REQUIRE(states.size() == 1);
  LstmState direct = lstm_cell(tape, cell, x, s0);
  for (size_t i = 0; i < 2; ++i) CHECK(tape.val(states[0].h)[i] == tape.val(direct.h)[i]);
}

TEST_CASE("encode_sequence rejects an empty input list") {
  ParamSet ps = random_gru(3, 2, 44);
  Tape tape;
  GruVars cell = bind_gru(tape, ps, "cell");
  std::vector<Var> empty;
  CHECK_THROWS_AS(gru_encode(tape, cell, empty, tape.zeros(2)), std::invalid_argument);
}

TEST_CASE("cells reject mismatched dimensions") {
  ParamSet ps = random_gru(3, 2, 55);
  Tape tape;
  GruVars cell = bind_gru(tape, ps, "cell");
  Var x = tape.input(Shape{3, 1}, std::vector<double>{1, 2, 3});
  CHECK_THROWS_AS(gru_cell(tape, cell, x, tape.zeros(3)), std::invalid_argument);
  Var bad = tape.input(Shape{4, 1}, std::vector<double>{1, 2, 3, 4});
  CHECK_THROWS_AS(gru_cell(tape, cell, bad, tape.zeros(2)), std::invalid_argument);
}
