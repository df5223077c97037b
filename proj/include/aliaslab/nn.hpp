#pragma once

#include <cmath>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "aliaslab/rng.hpp"
#include "aliaslab/tensor.hpp"

namespace aliaslab {

enum class Activation { none, tanh, relu };
enum class CellKind { gru, lstm };

// Named, shaped collection of learnable tensors for one network.
// Same seed + same construction order => identical values.
class ParamSet {
 public:
  ParamSet() = default;
  explicit ParamSet(uint64_t seed) : seed_(seed) {}

  Tensor& add(const std::string& name, Shape shape) {
    detail::require(!has(name), "ParamSet: duplicate parameter " + name);
    items_.emplace_back(name, Tensor(shape));
    return items_.back().second;
  }

  bool has(const std::string& name) const {
    for (const auto& [n, t] : items_)
      if (n == name) return true;
    return false;
  }

  Tensor& at(const std::string& name) {
    for (auto& [n, t] : items_)
      if (n == name) return t;
    throw std::invalid_argument("ParamSet: no parameter " + name);
  }
  const Tensor& at(const std::string& name) const {
    for (const auto& [n, t] : items_)
      if (n == name) return t;
    throw std::invalid_argument("ParamSet: no parameter " + name);
  }

  void zero_grad() {
    for (auto& [n, t] : items_) t.zero_grad();
  }

  std::vector<Tensor*> tensors() {
    std::vector<Tensor*> out;
    out.reserve(items_.size());
    for (auto& [n, t] : items_) out.push_back(&t);
    return out;
  }

  size_t coord_count() const {
    size_t c = 0;
    for (const auto& [n, t] : items_) c += t.v.size();
    return c;
  }

  auto& items() { return items_; }
  const auto& items() const { return items_; }
  bool empty() const { return items_.empty(); }
  uint64_t seed() const { return seed_; }
  void set_seed(uint64_t s) { seed_ = s; }

 private:
  uint64_t seed_ = 0;
  std::deque<std::pair<std::string, Tensor>> items_;  // creation order
};

inline void init_uniform(Tensor& t, Rng& rng, double lo, double hi) {
  for (auto& x : t.v) x = rng.uniform(lo, hi);
}

// Linear layers draw from U[-1/sqrt(fan_in), 1/sqrt(fan_in)] with fan_in the
// input size; recurrent cells use the hidden size for every tensor, matching
// the usual framework default. Embeddings use U[-0.05, 0.05].

inline void add_linear(ParamSet& ps, const std::string& prefix, int in, int out, Rng& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(in));
  init_uniform(ps.add(prefix + ".w", Shape{out, in}), rng, -s, s);
  init_uniform(ps.add(prefix + ".b", Shape{out, 1}), rng, -s, s);
}

inline void add_gru(ParamSet& ps, const std::string& prefix, int in, int hidden, Rng& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(hidden));
  init_uniform(ps.add(prefix + ".w_ih", Shape{3 * hidden, in}), rng, -s, s);
  init_uniform(ps.add(prefix + ".w_hh", Shape{3 * hidden, hidden}), rng, -s, s);
  init_uniform(ps.add(prefix + ".b_ih", Shape{3 * hidden, 1}), rng, -s, s);
  init_uniform(ps.add(prefix + ".b_hh", Shape{3 * hidden, 1}), rng, -s, s);
}

inline void add_lstm(ParamSet& ps, const std::string& prefix, int in, int hidden, Rng& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(hidden));
  init_uniform(ps.add(prefix + ".w_ih", Shape{4 * hidden, in}), rng, -s, s);
  init_uniform(ps.add(prefix + ".w_hh", Shape{4 * hidden, hidden}), rng, -s, s);
  init_uniform(ps.add(prefix + ".b_ih", Shape{4 * hidden, 1}), rng, -s, s);
  init_uniform(ps.add(prefix + ".b_hh", Shape{4 * hidden, 1}), rng, -s, s);
}

inline void add_embedding(ParamSet& ps, const std::string& prefix, int vocab, int width, Rng& rng) {
  init_uniform(ps.add(prefix + ".table", Shape{vocab, width}), rng, -0.05, 0.05);
}

inline void add_mlp(ParamSet& ps, const std::string& prefix, int in, int hidden, int out, Rng& rng) {
  add_linear(ps, prefix + ".l1", in, hidden, rng);
  add_linear(ps, prefix + ".l2", hidden, out, rng);
}

struct LayerSpec {
  enum class Kind { linear, gru_cell, lstm_cell, embedding, mlp };
  Kind kind = Kind::linear;
  int input = 0;
  int output = 0;  // output size, or hidden size for cells / mlp hidden
  Activation act = Activation::none;
  int vocab = 0;
  int width = 0;
  int mlp_out = 0;
};

inline ParamSet init_params(const LayerSpec& spec, uint64_t seed) {
  ParamSet ps(seed);
  Rng rng(seed);
  switch (spec.kind) {
    case LayerSpec::Kind::linear:
      detail::require(spec.input > 0 && spec.output > 0, "init_params: linear sizes must be positive");
      add_linear(ps, "linear", spec.input, spec.output, rng);
      break;
    case LayerSpec::Kind::gru_cell:
      detail::require(spec.input > 0 && spec.output > 0, "init_params: gru sizes must be positive");
      add_gru(ps, "gru", spec.input, spec.output, rng);
      break;
    case LayerSpec::Kind::lstm_cell:
      detail::require(spec.input > 0 && spec.output > 0, "init_params: lstm sizes must be positive");
      add_lstm(ps, "lstm", spec.input, spec.output, rng);
      break;
    case LayerSpec::Kind::embedding:
      detail::require(spec.vocab > 0 && spec.width > 0, "init_params: embedding sizes must be positive");
      add_embedding(ps, "embedding", spec.vocab, spec.width, rng);
      break;
    case LayerSpec::Kind::mlp:
      detail::require(spec.input > 0 && spec.output > 0 && spec.mlp_out > 0,
                      "init_params: mlp sizes must be positive");
      add_mlp(ps, "mlp", spec.input, spec.output, spec.mlp_out, rng);
      break;
  }
  return ps;
}

// -- tape-level forward helpers ---------------------------------------------

struct LinearVars {
  Var w, b;
};

inline LinearVars bind_linear(Tape& tape, ParamSet& ps, const std::string& prefix) {
  return {tape.param(ps.at(prefix + ".w")), tape.param(ps.at(prefix + ".b"))};
}

inline Var linear(Tape& tape, const LinearVars& l, Var x) { return tape.affine(l.w, x, l.b); }

struct GruVars {
  Var w_ih, w_hh, b_ih, b_hh;
  int hidden = 0;
};

inline GruVars bind_gru(Tape& tape, ParamSet& ps, const std::string& prefix) {
  GruVars g{tape.param(ps.at(prefix + ".w_ih")), tape.param(ps.at(prefix + ".w_hh")),
            tape.param(ps.at(prefix + ".b_ih")), tape.param(ps.at(prefix + ".b_hh")), 0};
  g.hidden = tape.shape(g.w_hh).cols;
  return g;
}

// r = sig(W_r x + b_ir + U_r h + b_hr)
// z = sig(W_z x + b_iz + U_z h + b_hz)
// n = tanh(W_n x + b_in + r * (U_n h + b_hn))
// h' = (1 - z) * n + z * h
inline Var gru_cell(Tape& tape, const GruVars& p, Var x, Var h) {
  const int hd = p.hidden;
  detail::require(tape.shape(h).rows == hd, "gru_cell: hidden is " + to_string(tape.shape(h)) +
                                                ", expected rows " + std::to_string(hd));
  Var gi = tape.affine(p.w_ih, x, p.b_ih);
  Var gh = tape.affine(p.w_hh, h, p.b_hh);
  Var r = tape.sigmoid(tape.add(tape.slice(gi, 0, hd), tape.slice(gh, 0, hd)));
  Var z = tape.sigmoid(tape.add(tape.slice(gi, hd, hd), tape.slice(gh, hd, hd)));
  Var n = tape.tanh(tape.add(tape.slice(gi, 2 * hd, hd), tape.mul(r, tape.slice(gh, 2 * hd, hd))));
  return tape.add(tape.mul(tape.axpb(z, -1.0, 1.0), n), tape.mul(z, h));
}

struct LstmVars {
  Var w_ih, w_hh, b_ih, b_hh;
  int hidden = 0;
};

inline LstmVars bind_lstm(Tape& tape, ParamSet& ps, const std::string& prefix) {
  LstmVars l{tape.param(ps.at(prefix + ".w_ih")), tape.param(ps.at(prefix + ".w_hh")),
             tape.param(ps.at(prefix + ".b_ih")), tape.param(ps.at(prefix + ".b_hh")), 0};
  l.hidden = tape.shape(l.w_hh).cols;
  return l;
}

struct LstmState {
  Var h, c;
};

// Gate order i, f, g, o; c' = f*c + i*g; h' = o*tanh(c').
inline LstmState lstm_cell(Tape& tape, const LstmVars& p, Var x, LstmState s) {
  const int hd = p.hidden;
  detail::require(tape.shape(s.h).rows == hd && tape.shape(s.c).rows == hd,
                  "lstm_cell: state is " + to_string(tape.shape(s.h)) + "/" + to_string(tape.shape(s.c)) +
                      ", expected rows " + std::to_string(hd));
  Var gates = tape.add(tape.affine(p.w_ih, x, p.b_ih), tape.affine(p.w_hh, s.h, p.b_hh));
  Var i = tape.sigmoid(tape.slice(gates, 0, hd));
  Var f = tape.sigmoid(tape.slice(gates, hd, hd));
  Var g = tape.tanh(tape.slice(gates, 2 * hd, hd));
  Var o = tape.sigmoid(tape.slice(gates, 3 * hd, hd));
  Var c = tape.add(tape.mul(f, s.c), tape.mul(i, g));
  Var h = tape.mul(o, tape.tanh(c));
  return {h, c};
}

// Folds a cell over the inputs left to right; returns every intermediate
// state so diagnostics can look inside.
inline std::vector<Var> gru_encode(Tape& tape, const GruVars& p, std::span<const Var> inputs, Var h0) {
  detail::require(!inputs.empty(), "gru_encode: empty input sequence");
  std::vector<Var> states;
  states.reserve(inputs.size());
  Var h = h0;
  for (Var x : inputs) {
    h = gru_cell(tape, p, x, h);
    states.push_back(h);
  }
  return states;
}

inline std::vector<LstmState> lstm_encode(Tape& tape, const LstmVars& p, std::span<const Var> inputs,
                                          LstmState s0) {
  detail::require(!inputs.empty(), "lstm_encode: empty input sequence");
  std::vector<LstmState> states;
  states.reserve(inputs.size());
  LstmState s = s0;
  for (Var x : inputs) {
    s = lstm_cell(tape, p, x, s);
    states.push_back(s);
  }
  return states;
}

struct MlpVars {
  LinearVars l1, l2;
  Activation act = Activation::tanh;
};

inline MlpVars bind_mlp(Tape& tape, ParamSet& ps, const std::string& prefix, Activation act) {
  return {bind_linear(tape, ps, prefix + ".l1"), bind_linear(tape, ps, prefix + ".l2"), act};
}

inline Var activate(Tape& tape, Var x, Activation act) {
  switch (act) {
    case Activation::tanh: return tape.tanh(x);
    case Activation::relu: return tape.relu(x);
    case Activation::none: return x;
  }
  return x;
}

inline Var mlp(Tape& tape, const MlpVars& m, Var x) {
  return linear(tape, m.l2, activate(tape, linear(tape, m.l1, x), m.act));
}

inline Var onehot(Tape& tape, int dim, int index) {
  std::vector<double> v(static_cast<size_t>(dim), 0.0);
  v[static_cast<size_t>(index)] = 1.0;
  return tape.input(Shape{dim, 1}, v);
}

}  // namespace aliaslab
