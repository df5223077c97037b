#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace aliaslab {

struct Shape {
  int rows = 0;
  int cols = 1;

  int size() const { return rows * cols; }
  bool is_vector() const { return cols == 1; }
  bool is_scalar() const { return rows == 1 && cols == 1; }
  bool operator==(const Shape&) const = default;
};

inline std::string to_string(Shape s) {
  return "(" + std::to_string(s.rows) + "x" + std::to_string(s.cols) + ")";
}

// Dense value plus an accumulated-gradient slot of the same shape.
// Parameters live in Tensors; tapes bind to them as leaves.
struct Tensor {
  Shape shape;
  std::vector<double> v;
  std::vector<double> g;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(s), v(static_cast<size_t>(s.size()), 0.0), g(static_cast<size_t>(s.size()), 0.0) {}

  void zero_grad() { std::fill(g.begin(), g.end(), 0.0); }
};

enum class Op : uint8_t {
  kLeaf,     // bound to an external Tensor
  kInput,    // free leaf (observations, constants)
  kAffine,   // W x + b
  kAdd,
  kSub,
  kMul,      // elementwise
  kAxpb,     // a*x + b, scalar constants a and b
  kConcat,
  kSlice,
  kRow,          // one row of a matrix (embedding lookup)
  kTanh,
  kSigmoid,
  kRelu,
  kSoftmax,      // vector -> probability vector
  kSum,          // -> scalar
  kSumSquares,   // -> scalar
  kSmoothL1,     // elementwise huber at delta 1, summed -> scalar
  kLogPick,      // log of one entry of a probability vector -> scalar
  kPick,         // one entry -> scalar
  kEntropy,      // -sum p log p -> scalar
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kInput: return "input";
    case Op::kAffine: return "affine";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kAxpb: return "axpb";
    case Op::kConcat: return "concat";
    case Op::kSlice: return "slice";
    case Op::kRow: return "row";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kRelu: return "relu";
    case Op::kSoftmax: return "softmax";
    case Op::kSum: return "sum";
    case Op::kSumSquares: return "sum_squares";
    case Op::kSmoothL1: return "smooth_l1";
    case Op::kLogPick: return "log_pick";
    case Op::kPick: return "pick";
    case Op::kEntropy: return "entropy";
  }
  return "?";
}

// Handle into a Tape. Default-constructed handles are invalid and denote
// "absent" (e.g. no value head).
struct Var {
  int32_t id = -1;
  bool valid() const { return id >= 0; }
};

namespace detail {
inline void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}
// Probabilities below this contribute 0 to entropy and are clamped in logs.
inline constexpr double kProbFloor = 1e-300;
}  // namespace detail

// One computation record. Primitive applications append nodes in topological
// order; backward() walks them in reverse. A tape lives for one update (or
// one probe) and is then discarded or cleared.
class Tape {
 public:
  struct Node {
    Op op;
    Shape shape;
    std::array<int32_t, 3> in{-1, -1, -1};
    int32_t aux = 0;   // pick/row index, slice offset
    int32_t aux2 = 0;  // slice length
    double a = 1.0;    // axpb coefficients
    double b = 0.0;
    Tensor* bound = nullptr;  // kLeaf only
    std::vector<double> v;
    std::vector<double> g;
  };

  // -- leaves ---------------------------------------------------------------

  // Binds a parameter tensor as a leaf. Values are snapshotted; backward()
  // accumulates into t.g. Binding the same tensor twice returns the same node.
  Var param(Tensor& t) {
    auto it = bound_.find(&t);
    if (it != bound_.end()) return Var{it->second};
    Var v = push(Op::kLeaf, t.shape);
    node(v).bound = &t;
    node(v).v = t.v;
    bound_.emplace(&t, v.id);
    return v;
  }

  Var input(Shape s, std::span<const double> values) {
    detail::require(static_cast<int>(values.size()) == s.size(),
                    "input: " + std::to_string(values.size()) + " values for shape " + to_string(s));
    Var v = push(Op::kInput, s);
    node(v).v.assign(values.begin(), values.end());
    return v;
  }

  Var zeros(int n) {
    Var v = push(Op::kInput, Shape{n, 1});
    node(v).v.assign(static_cast<size_t>(n), 0.0);
    return v;
  }

  Var scalar_input(double x) { return input(Shape{1, 1}, std::span<const double>(&x, 1)); }

  // -- primitives -----------------------------------------------------------

  Var affine(Var w, Var x, Var b) {
    const Shape ws = shape(w), xs = shape(x), bs = shape(b);
    detail::require(xs.is_vector() && bs.is_vector() && ws.cols == xs.rows && ws.rows == bs.rows,
                    std::string("affine: shapes ") + to_string(ws) + " " + to_string(xs) + " " + to_string(bs));
    Var y = push(Op::kAffine, Shape{ws.rows, 1}, w, x, b);
    compute(node(y));
    return y;
  }

  Var add(Var a, Var b) { return binary(Op::kAdd, a, b); }
  Var sub(Var a, Var b) { return binary(Op::kSub, a, b); }
  Var mul(Var a, Var b) { return binary(Op::kMul, a, b); }

  // a*x + b elementwise, with constant a, b.
  Var axpb(Var x, double a, double b) {
    Var y = push(Op::kAxpb, shape(x), x);
    node(y).a = a;
    node(y).b = b;
    compute(node(y));
    return y;
  }

  Var scale(Var x, double a) { return axpb(x, a, 0.0); }

  Var concat(Var a, Var b) {
    detail::require(shape(a).is_vector() && shape(b).is_vector(),
                    std::string("concat: vectors required, got ") + to_string(shape(a)) + " " + to_string(shape(b)));
    Var y = push(Op::kConcat, Shape{shape(a).rows + shape(b).rows, 1}, a, b);
    compute(node(y));
    return y;
  }

  Var slice(Var x, int offset, int len) {
    detail::require(shape(x).is_vector() && offset >= 0 && len > 0 && offset + len <= shape(x).rows,
                    "slice: [" + std::to_string(offset) + "," + std::to_string(offset + len) + ") of " +
                        to_string(shape(x)));
    Var y = push(Op::kSlice, Shape{len, 1}, x);
    node(y).aux = offset;
    node(y).aux2 = len;
    compute(node(y));
    return y;
  }

  // Row r of a matrix, as a column vector (embedding lookup).
  Var row(Var m, int r) {
    detail::require(r >= 0 && r < shape(m).rows,
                    "row: index " + std::to_string(r) + " of " + to_string(shape(m)));
    Var y = push(Op::kRow, Shape{shape(m).cols, 1}, m);
    node(y).aux = r;
    compute(node(y));
    return y;
  }

  Var tanh(Var x) { return unary(Op::kTanh, x); }
  Var sigmoid(Var x) { return unary(Op::kSigmoid, x); }
  Var relu(Var x) { return unary(Op::kRelu, x); }

  Var softmax(Var x) {
    detail::require(shape(x).is_vector(), "softmax: vector required, got " + to_string(shape(x)));
    return unary(Op::kSoftmax, x);
  }

  Var sum(Var x) { return reduce(Op::kSum, x); }
  Var sum_squares(Var x) { return reduce(Op::kSumSquares, x); }
  Var smooth_l1(Var x) { return reduce(Op::kSmoothL1, x); }
  Var entropy(Var p) { return reduce(Op::kEntropy, p); }

  Var log_pick(Var p, int index) { return indexed(Op::kLogPick, p, index); }
  Var pick(Var x, int index) { return indexed(Op::kPick, x, index); }

  // -- access ---------------------------------------------------------------

  std::span<const double> val(Var v) const { return node(v).v; }
  double scalar(Var v) const {
    detail::require(node(v).shape.is_scalar(), "scalar: node is " + to_string(node(v).shape));
    return node(v).v[0];
  }
  // Gradient held on the node itself; populated by backward().
  std::span<const double> grad(Var v) const { return node(v).g; }
  Shape shape(Var v) const { return node(v).shape; }
  size_t size() const { return nodes_.size(); }

  // -- execution ------------------------------------------------------------

  // Accumulates d(loss)/d(leaf) into every leaf node's grad and, for bound
  // leaves, into the bound Tensor's grad slot. Calling backward twice adds a
  // second copy (accumulation semantics); zero_grad on the tensors resets.
  void backward(Var loss) {
    detail::require(loss.valid() && loss.id < static_cast<int32_t>(nodes_.size()), "backward: invalid loss node");
    detail::require(node(loss).shape.is_scalar(),
                    "backward: loss must be scalar, got " + to_string(node(loss).shape));
    for (auto& n : nodes_) n.g.assign(n.v.size(), 0.0);
    nodes_[static_cast<size_t>(loss.id)].g[0] = 1.0;
    for (int32_t i = loss.id; i >= 0; --i) backstep(nodes_[static_cast<size_t>(i)]);
    for (auto& [tensor, id] : bound_) {
      const auto& g = nodes_[static_cast<size_t>(id)].g;
      for (size_t j = 0; j < g.size(); ++j) tensor->g[j] += g[j];
    }
  }

  // Recomputes every non-leaf value from the recorded leaves, in place.
  // Replay is exact: the same primitive code runs on the same inputs.
  void replay() {
    for (auto& n : nodes_)
      if (n.op != Op::kLeaf && n.op != Op::kInput) compute(n);
  }

  void clear() {
    nodes_.clear();
    bound_.clear();
  }

 private:
  std::vector<Node> nodes_;
  std::unordered_map<Tensor*, int32_t> bound_;

  Node& node(Var v) { return nodes_[static_cast<size_t>(v.id)]; }
  const Node& node(Var v) const { return nodes_[static_cast<size_t>(v.id)]; }

  Var push(Op op, Shape s, Var i0 = {}, Var i1 = {}, Var i2 = {}) {
    Node n;
    n.op = op;
    n.shape = s;
    n.in = {i0.id, i1.id, i2.id};
    n.v.resize(static_cast<size_t>(s.size()));
    nodes_.push_back(std::move(n));
    return Var{static_cast<int32_t>(nodes_.size() - 1)};
  }

  Var binary(Op op, Var a, Var b) {
    detail::require(shape(a) == shape(b), std::string(op_name(op)) + ": shape mismatch " + to_string(shape(a)) +
                                              " vs " + to_string(shape(b)));
    Var y = push(op, shape(a), a, b);
    compute(node(y));
    return y;
  }

  Var unary(Op op, Var x) {
    Var y = push(op, shape(x), x);
    compute(node(y));
    return y;
  }

  Var reduce(Op op, Var x) {
    Var y = push(op, Shape{1, 1}, x);
    compute(node(y));
    return y;
  }

  Var indexed(Op op, Var x, int index) {
    detail::require(shape(x).is_vector() && index >= 0 && index < shape(x).rows,
                    std::string(op_name(op)) + ": index " + std::to_string(index) + " of " + to_string(shape(x)));
    Var y = push(op, Shape{1, 1}, x);
    node(y).aux = index;
    compute(node(y));
    return y;
  }

  const std::vector<double>& in_v(const Node& n, int k) const {
    return nodes_[static_cast<size_t>(n.in[static_cast<size_t>(k)])].v;
  }
  std::vector<double>& in_g(Node& n, int k) { return nodes_[static_cast<size_t>(n.in[static_cast<size_t>(k)])].g; }

  void compute(Node& n) {
    switch (n.op) {
      case Op::kLeaf:
      case Op::kInput:
        break;
      case Op::kAffine: {
        const auto& w = in_v(n, 0);
        const auto& x = in_v(n, 1);
        const auto& b = in_v(n, 2);
        const int m = n.shape.rows;
        const int k = static_cast<int>(x.size());
        for (int i = 0; i < m; ++i) {
          const double* wr = w.data() + static_cast<size_t>(i) * static_cast<size_t>(k);
          double acc = b[static_cast<size_t>(i)];
          for (int j = 0; j < k; ++j) acc += wr[j] * x[static_cast<size_t>(j)];
          n.v[static_cast<size_t>(i)] = acc;
        }
        break;
      }
      case Op::kAdd: {
        const auto& a = in_v(n, 0);
        const auto& b = in_v(n, 1);
        for (size_t i = 0; i < n.v.size(); ++i) n.v[i] = a[i] + b[i];
        break;
      }
      case Op::kSub: {
        const auto& a = in_v(n, 0);
        const auto& b = in_v(n, 1);
        for (size_t i = 0; i < n.v.size(); ++i) n.v[i] = a[i] - b[i];
        break;
      }
      case Op::kMul: {
        const auto& a = in_v(n, 0);
        const auto& b = in_v(n, 1);
        for (size_t i = 0; i < n.v.size(); ++i) n.v[i] = a[i] * b[i];
        break;
      }
      case Op::kAxpb: {
        const auto& x = in_v(n, 0);
        for (size_t i = 0; i < n.v.size(); ++i) n.v[i] = n.a * x[i] + n.b;
        break;
      }
      case Op::kConcat: {
        const auto& a = in_v(n, 0);
        const auto& b = in_v(n, 1);
        std::copy(a.begin(), a.end(), n.v.begin());
        std::copy(b.begin(), b.end(), n.v.begin() + static_cast<std::ptrdiff_t>(a.size()));
        break;
      }
      case Op::kSlice: {
        const auto& x = in_v(n, 0);
        std::copy(x.begin() + n.aux, x.begin() + n.aux + n.aux2, n.v.begin());
        break;
      }
      case Op::kRow: {
        const auto& m = in_v(n, 0);
        const size_t w = n.v.size();
        std::copy(m.begin() + static_cast<std::ptrdiff_t>(static_cast<size_t>(n.aux) * w),
                  m.begin() + static_cast<std::ptrdiff_t>((static_cast<size_t>(n.aux) + 1) * w), n.v.begin());
        break;
      }
      case Op::kTanh: {
        const auto& x = in_v(n, 0);
        for (size_t i = 0; i < n.v.size(); ++i) n.v[i] = std::tanh(x[i]);
        break;
      }
      case Op::kSigmoid: {
        const auto& x = in_v(n, 0);
        for (size_t i = 0; i < n.v.size(); ++i) n.v[i] = 1.0 / (1.0 + std::exp(-x[i]));
        break;
      }
      case Op::kRelu: {
        const auto& x = in_v(n, 0);
        for (size_t i = 0; i < n.v.size(); ++i) n.v[i] = x[i] > 0.0 ? x[i] : 0.0;
        break;
      }
      case Op::kSoftmax: {
        const auto& x = in_v(n, 0);
        double mx = x[0];
        for (double xi : x) mx = std::max(mx, xi);
        double z = 0.0;
        for (size_t i = 0; i < n.v.size(); ++i) {
          n.v[i] = std::exp(x[i] - mx);
          z += n.v[i];
        }
        for (auto& p : n.v) p /= z;
        break;
      }
      case Op::kSum: {
        double acc = 0.0;
        for (double xi : in_v(n, 0)) acc += xi;
        n.v[0] = acc;
        break;
      }
      case Op::kSumSquares: {
        double acc = 0.0;
        for (double xi : in_v(n, 0)) acc += xi * xi;
        n.v[0] = acc;
        break;
      }
      case Op::kSmoothL1: {
        double acc = 0.0;
        for (double xi : in_v(n, 0)) {
          const double a = std::fabs(xi);
          acc += a < 1.0 ? 0.5 * xi * xi : a - 0.5;
        }
        n.v[0] = acc;
        break;
      }
      case Op::kLogPick: {
        const double p = in_v(n, 0)[static_cast<size_t>(n.aux)];
        n.v[0] = std::log(std::max(p, detail::kProbFloor));
        break;
      }
      case Op::kPick:
        n.v[0] = in_v(n, 0)[static_cast<size_t>(n.aux)];
        break;
      case Op::kEntropy: {
        double acc = 0.0;
        for (double p : in_v(n, 0))
          if (p > detail::kProbFloor) acc -= p * std::log(p);
        n.v[0] = acc;
        break;
      }
    }
  }

  void backstep(Node& n) {
    if (n.op == Op::kLeaf || n.op == Op::kInput) return;
    bool live = false;
    for (double gi : n.g)
      if (gi != 0.0) {
        live = true;
        break;
      }
    if (!live) return;
    switch (n.op) {
      case Op::kLeaf:
      case Op::kInput:
        break;
      case Op::kAffine: {
        const auto& w = in_v(n, 0);
        const auto& x = in_v(n, 1);
        auto& gw = in_g(n, 0);
        auto& gx = in_g(n, 1);
        auto& gb = in_g(n, 2);
        const int m = n.shape.rows;
        const int k = static_cast<int>(x.size());
        for (int i = 0; i < m; ++i) {
          const double gyi = n.g[static_cast<size_t>(i)];
          gb[static_cast<size_t>(i)] += gyi;
          if (gyi == 0.0) continue;
          const double* wr = w.data() + static_cast<size_t>(i) * static_cast<size_t>(k);
          double* gwr = gw.data() + static_cast<size_t>(i) * static_cast<size_t>(k);
          for (int j = 0; j < k; ++j) {
            gwr[j] += gyi * x[static_cast<size_t>(j)];
            gx[static_cast<size_t>(j)] += gyi * wr[j];
          }
        }
        break;
      }
      case Op::kAdd: {
        auto& ga = in_g(n, 0);
        auto& gb = in_g(n, 1);
        for (size_t i = 0; i < n.g.size(); ++i) {
          ga[i] += n.g[i];
          gb[i] += n.g[i];
        }
        break;
      }
      case Op::kSub: {
        auto& ga = in_g(n, 0);
        auto& gb = in_g(n, 1);
        for (size_t i = 0; i < n.g.size(); ++i) {
          ga[i] += n.g[i];
          gb[i] -= n.g[i];
        }
        break;
      }
      case Op::kMul: {
        const auto& a = in_v(n, 0);
        const auto& b = in_v(n, 1);
        auto& ga = in_g(n, 0);
        auto& gb = in_g(n, 1);
        for (size_t i = 0; i < n.g.size(); ++i) {
          ga[i] += n.g[i] * b[i];
          gb[i] += n.g[i] * a[i];
        }
        break;
      }
      case Op::kAxpb: {
        auto& gx = in_g(n, 0);
        for (size_t i = 0; i < n.g.size(); ++i) gx[i] += n.a * n.g[i];
        break;
      }
      case Op::kConcat: {
        auto& ga = in_g(n, 0);
        auto& gb = in_g(n, 1);
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += n.g[i];
        for (size_t i = 0; i < gb.size(); ++i) gb[i] += n.g[ga.size() + i];
        break;
      }
      case Op::kSlice: {
        auto& gx = in_g(n, 0);
        for (int i = 0; i < n.aux2; ++i) gx[static_cast<size_t>(n.aux + i)] += n.g[static_cast<size_t>(i)];
        break;
      }
      case Op::kRow: {
        auto& gm = in_g(n, 0);
        const size_t w = n.v.size();
        for (size_t i = 0; i < w; ++i) gm[static_cast<size_t>(n.aux) * w + i] += n.g[i];
        break;
      }
      case Op::kTanh: {
        auto& gx = in_g(n, 0);
        for (size_t i = 0; i < n.g.size(); ++i) gx[i] += n.g[i] * (1.0 - n.v[i] * n.v[i]);
        break;
      }
      case Op::kSigmoid: {
        auto& gx = in_g(n, 0);
        for (size_t i = 0; i < n.g.size(); ++i) gx[i] += n.g[i] * n.v[i] * (1.0 - n.v[i]);
        break;
      }
      case Op::kRelu: {
        const auto& x = in_v(n, 0);
        auto& gx = in_g(n, 0);
        for (size_t i = 0; i < n.g.size(); ++i)
          if (x[i] > 0.0) gx[i] += n.g[i];
        break;
      }
      case Op::kSoftmax: {
        auto& gx = in_g(n, 0);
        double dot = 0.0;
        for (size_t i = 0; i < n.g.size(); ++i) dot += n.g[i] * n.v[i];
        for (size_t i = 0; i < n.g.size(); ++i) gx[i] += n.v[i] * (n.g[i] - dot);
        break;
      }
      case Op::kSum: {
        auto& gx = in_g(n, 0);
        for (auto& gi : gx) gi += n.g[0];
        break;
      }
      case Op::kSumSquares: {
        const auto& x = in_v(n, 0);
        auto& gx = in_g(n, 0);
        for (size_t i = 0; i < x.size(); ++i) gx[i] += n.g[0] * 2.0 * x[i];
        break;
      }
      case Op::kSmoothL1: {
        const auto& x = in_v(n, 0);
        auto& gx = in_g(n, 0);
        for (size_t i = 0; i < x.size(); ++i) {
          const double d = std::fabs(x[i]) < 1.0 ? x[i] : (x[i] > 0.0 ? 1.0 : -1.0);
          gx[i] += n.g[0] * d;
        }
        break;
      }
      case Op::kLogPick: {
        const double p = std::max(in_v(n, 0)[static_cast<size_t>(n.aux)], detail::kProbFloor);
        in_g(n, 0)[static_cast<size_t>(n.aux)] += n.g[0] / p;
        break;
      }
      case Op::kPick:
        in_g(n, 0)[static_cast<size_t>(n.aux)] += n.g[0];
        break;
      case Op::kEntropy: {
        const auto& p = in_v(n, 0);
        auto& gp = in_g(n, 0);
        for (size_t i = 0; i < p.size(); ++i)
          if (p[i] > detail::kProbFloor) gp[i] -= n.g[0] * (std::log(p[i]) + 1.0);
        break;
      }
    }
  }
};

// Scales every gradient by max_norm/norm when the global L2 norm exceeds
// max_norm. Returns the pre-clip norm.
inline double clip_grad_norm(std::span<Tensor* const> tensors, double max_norm) {
  detail::require(max_norm > 0.0, "clip_grad_norm: max_norm must be positive");
  double sq = 0.0;
  for (const Tensor* t : tensors)
    for (double gi : t->g) sq += gi * gi;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (Tensor* t : tensors)
      for (double& gi : t->g) gi *= s;
  }
  return norm;
}

inline double clip_grad_norm(const std::vector<Tensor*>& tensors, double max_norm) {
  return clip_grad_norm(std::span<Tensor* const>(tensors), max_norm);
}

}  // namespace aliaslab
