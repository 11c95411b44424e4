#include "simplerf/tape.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace simplerf::ad {

ParamSlot& ParamStore::create(const std::string& name, Array init) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter: " + name);
  auto slot = std::make_unique<ParamSlot>();
  slot->name = name;
  slot->grad = Array::zeros(init.rows(), init.cols());
  slot->value = std::move(init);
  slots_.push_back(std::move(slot));
  order_.push_back(name);
  return *slots_.back();
}

ParamSlot* ParamStore::find(const std::string& name) {
  for (auto& s : slots_)
    if (s->name == name) return s.get();
  return nullptr;
}

bool ParamStore::contains(const std::string& name) const {
  for (auto& s : slots_)
    if (s->name == name) return true;
  return false;
}

ParamSlot& ParamStore::at(const std::string& name) {
  if (auto* s = find(name)) return *s;
  throw std::out_of_range("no such parameter: " + name);
}

const ParamSlot& ParamStore::at(const std::string& name) const {
  return const_cast<ParamStore*>(this)->at(name);
}

void ParamStore::zero_grads() {
  for (auto& s : slots_) std::fill(s->grad.data.begin(), s->grad.data.end(), 0.0);
}

int64_t ParamStore::total_elements() const {
  int64_t n = 0;
  for (auto& s : slots_) n += s->value.size();
  return n;
}

const char* op_name(Op op) {
  switch (op) {
    case Op::Constant: return "constant";
    case Op::Param: return "param";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::MatMul: return "matmul";
    case Op::Affine: return "affine";
    case Op::MaxConst: return "max_const";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Square: return "square";
    case Op::Sigmoid: return "sigmoid";
    case Op::Relu: return "relu";
    case Op::Softplus: return "softplus";
    case Op::Recip: return "recip";
    case Op::Abs: return "abs";
    case Op::XLogX: return "xlogx";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::SumAxis1: return "sum_axis1";
    case Op::CumsumExcl: return "cumsum_exclusive";
    case Op::ConcatCols: return "concat_cols";
    case Op::GatherRows: return "gather_rows";
    case Op::SliceCols: return "slice_cols";
    case Op::Reshape: return "reshape";
    case Op::Detach: return "detach";
  }
  return "?";
}

const Node& Tape::node(Var v) const {
  if (!v.ok() || static_cast<size_t>(v.id) >= nodes_.size())
    throw std::out_of_range("invalid tape var");
  return nodes_[static_cast<size_t>(v.id)];
}

Node& Tape::node(Var v) { return const_cast<Node&>(static_cast<const Tape*>(this)->node(v)); }

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

double Tape::scalar(Var v) const {
  const Node& n = node(v);
  if (n.shape.size() != 1) throw std::invalid_argument("scalar() on non-scalar node " + n.shape.str());
  return n.val[0];
}

Var Tape::constant(Array a) {
  Node n;
  n.op = Op::Constant;
  n.shape = a.shape;
  n.val = std::move(a.data);
  return push(std::move(n));
}

Var Tape::param(ParamSlot& slot) {
  Node n;
  n.op = Op::Param;
  n.shape = slot.value.shape;
  n.val = slot.value.data;
  n.param = &slot;
  return push(std::move(n));
}

namespace {

// Legal broadcast pairs: equal shapes, column vector [R,1] against [R,C],
// row vector [1,C] against [R,C], and scalar [1,1] against anything.
bool broadcast_shape(const Shape& a, const Shape& b, Shape& out) {
  auto side_ok = [](const Shape& s, const Shape& big) {
    return s == big || (s.rows == big.rows && s.cols == 1) ||
           (s.rows == 1 && s.cols == big.cols) || (s.rows == 1 && s.cols == 1);
  };
  Shape big{std::max(a.rows, b.rows), std::max(a.cols, b.cols)};
  if (!side_ok(a, big) || !side_ok(b, big)) return false;
  out = big;
  return true;
}

inline int64_t bidx(const Shape& s, int64_t r, int64_t c) {
  int64_t rr = s.rows == 1 ? 0 : r;
  int64_t cc = s.cols == 1 ? 0 : c;
  return rr * s.cols + cc;
}

}  // namespace

Var Tape::add(Var a, Var b) {
  const Node &na = node(a), &nb = node(b);
  Shape out;
  if (!broadcast_shape(na.shape, nb.shape, out))
    throw std::invalid_argument(std::string("add: incompatible shapes ") + na.shape.str() + " vs " + nb.shape.str());
  Node n;
  n.op = Op::Add;
  n.a = a.id;
  n.b = b.id;
  n.shape = out;
  n.val.resize(static_cast<size_t>(out.size()));
  if (na.shape == nb.shape) {
    for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = na.val[i] + nb.val[i];
  } else {
    for (int64_t r = 0; r < out.rows; ++r)
      for (int64_t c = 0; c < out.cols; ++c)
        n.val[static_cast<size_t>(r * out.cols + c)] =
            na.val[static_cast<size_t>(bidx(na.shape, r, c))] + nb.val[static_cast<size_t>(bidx(nb.shape, r, c))];
  }
  return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
  const Node &na = node(a), &nb = node(b);
  Shape out;
  if (!broadcast_shape(na.shape, nb.shape, out))
    throw std::invalid_argument(std::string("sub: incompatible shapes ") + na.shape.str() + " vs " + nb.shape.str());
  Node n;
  n.op = Op::Sub;
  n.a = a.id;
  n.b = b.id;
  n.shape = out;
  n.val.resize(static_cast<size_t>(out.size()));
  if (na.shape == nb.shape) {
    for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = na.val[i] - nb.val[i];
  } else {
    for (int64_t r = 0; r < out.rows; ++r)
      for (int64_t c = 0; c < out.cols; ++c)
        n.val[static_cast<size_t>(r * out.cols + c)] =
            na.val[static_cast<size_t>(bidx(na.shape, r, c))] - nb.val[static_cast<size_t>(bidx(nb.shape, r, c))];
  }
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  const Node &na = node(a), &nb = node(b);
  Shape out;
  if (!broadcast_shape(na.shape, nb.shape, out))
    throw std::invalid_argument(std::string("mul: incompatible shapes ") + na.shape.str() + " vs " + nb.shape.str());
  Node n;
  n.op = Op::Mul;
  n.a = a.id;
  n.b = b.id;
  n.shape = out;
  n.val.resize(static_cast<size_t>(out.size()));
  if (na.shape == nb.shape) {
    for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = na.val[i] * nb.val[i];
  } else {
    for (int64_t r = 0; r < out.rows; ++r)
      for (int64_t c = 0; c < out.cols; ++c)
        n.val[static_cast<size_t>(r * out.cols + c)] =
            na.val[static_cast<size_t>(bidx(na.shape, r, c))] * nb.val[static_cast<size_t>(bidx(nb.shape, r, c))];
  }
  return push(std::move(n));
}

Var Tape::div(Var a, Var b) {
  const Node &na = node(a), &nb = node(b);
  Shape out;
  if (!broadcast_shape(na.shape, nb.shape, out))
    throw std::invalid_argument(std::string("div: incompatible shapes ") + na.shape.str() + " vs " + nb.shape.str());
  Node n;
  n.op = Op::Div;
  n.a = a.id;
  n.b = b.id;
  n.shape = out;
  n.val.resize(static_cast<size_t>(out.size()));
  for (int64_t r = 0; r < out.rows; ++r)
    for (int64_t c = 0; c < out.cols; ++c)
      n.val[static_cast<size_t>(r * out.cols + c)] =
          na.val[static_cast<size_t>(bidx(na.shape, r, c))] / nb.val[static_cast<size_t>(bidx(nb.shape, r, c))];
  return push(std::move(n));
}

namespace {

// C[m,n] += A[m,k] * B[k,n]
void mm_nn(const double* A, const double* B, double* C, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    double* ci = C + i * n;
    const double* ai = A + i * k;
    for (int64_t p = 0; p < k; ++p) {
      const double a = ai[p];
      const double* bp = B + p * n;
      for (int64_t j = 0; j < n; ++j) ci[j] += a * bp[j];
    }
  }
}

// C[m,n] += A[m,k] * B[n,k]^T
void mm_nt(const double* A, const double* B, double* C, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* ai = A + i * k;
    double* ci = C + i * n;
    for (int64_t j = 0; j < n; ++j) {
      const double* bj = B + j * k;
      double acc = 0.0;
      for (int64_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

// C[k,n] += A[m,k]^T * B[m,n]
void mm_tn(const double* A, const double* B, double* C, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const double* ai = A + i * k;
    const double* bi = B + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double a = ai[p];
      if (a == 0.0) continue;
      double* cp = C + p * n;
      for (int64_t j = 0; j < n; ++j) cp[j] += a * bi[j];
    }
  }
}

}  // namespace

Var Tape::matmul(Var a, Var b) {
  const Node &na = node(a), &nb = node(b);
  if (na.shape.cols != nb.shape.rows)
    throw std::invalid_argument(std::string("matmul: incompatible shapes ") + na.shape.str() + " vs " + nb.shape.str());
  Node n;
  n.op = Op::MatMul;
  n.a = a.id;
  n.b = b.id;
  n.shape = {na.shape.rows, nb.shape.cols};
  n.val.assign(static_cast<size_t>(n.shape.size()), 0.0);
  mm_nn(na.val.data(), nb.val.data(), n.val.data(), na.shape.rows, na.shape.cols, nb.shape.cols);
  return push(std::move(n));
}

#define SIMPLERF_UNARY(name, opcode, expr)                                  \
  Var Tape::name(Var x) {                                                   \
    const Node& nx = node(x);                                               \
    Node n;                                                                 \
    n.op = opcode;                                                          \
    n.a = x.id;                                                             \
    n.shape = nx.shape;                                                     \
    n.val.resize(nx.val.size());                                            \
    for (size_t i = 0; i < nx.val.size(); ++i) {                            \
      const double v = nx.val[i];                                           \
      (void)v;                                                              \
      n.val[i] = (expr);                                                    \
    }                                                                       \
    return push(std::move(n));                                              \
  }

SIMPLERF_UNARY(sin, Op::Sin, std::sin(v))
SIMPLERF_UNARY(cos, Op::Cos, std::cos(v))
SIMPLERF_UNARY(exp, Op::Exp, std::exp(v))
SIMPLERF_UNARY(log, Op::Log, std::log(v))
SIMPLERF_UNARY(sqrt, Op::Sqrt, std::sqrt(v))
SIMPLERF_UNARY(square, Op::Square, v* v)
SIMPLERF_UNARY(sigmoid, Op::Sigmoid, 1.0 / (1.0 + std::exp(-v)))
SIMPLERF_UNARY(relu, Op::Relu, v > 0.0 ? v : 0.0)
SIMPLERF_UNARY(recip, Op::Recip, 1.0 / v)
SIMPLERF_UNARY(abs, Op::Abs, std::fabs(v))
SIMPLERF_UNARY(xlogx, Op::XLogX, v > 0.0 ? v * std::log(v) : 0.0)

#undef SIMPLERF_UNARY

Var Tape::softplus(Var x) {
  const Node& nx = node(x);
  Node n;
  n.op = Op::Softplus;
  n.a = x.id;
  n.shape = nx.shape;
  n.val.resize(nx.val.size());
  for (size_t i = 0; i < nx.val.size(); ++i) {
    const double v = nx.val[i];
    n.val[i] = v > 30.0 ? v : std::log1p(std::exp(v));
  }
  return push(std::move(n));
}

Var Tape::affine(Var x, double scale, double shift) {
  const Node& nx = node(x);
  Node n;
  n.op = Op::Affine;
  n.a = x.id;
  n.shape = nx.shape;
  n.s0 = scale;
  n.s1 = shift;
  n.val.resize(nx.val.size());
  for (size_t i = 0; i < nx.val.size(); ++i) n.val[i] = scale * nx.val[i] + shift;
  return push(std::move(n));
}

Var Tape::max_const(Var x, double c) {
  const Node& nx = node(x);
  Node n;
  n.op = Op::MaxConst;
  n.a = x.id;
  n.shape = nx.shape;
  n.s0 = c;
  n.val.resize(nx.val.size());
  for (size_t i = 0; i < nx.val.size(); ++i) n.val[i] = nx.val[i] > c ? nx.val[i] : c;
  return push(std::move(n));
}

Var Tape::sum(Var x) {
  const Node& nx = node(x);
  Node n;
  n.op = Op::Sum;
  n.a = x.id;
  n.shape = {1, 1};
  double acc = 0.0;
  for (double v : nx.val) acc += v;
  n.val = {acc};
  return push(std::move(n));
}

Var Tape::mean(Var x) {
  const Node& nx = node(x);
  if (nx.val.empty()) throw std::invalid_argument("mean of empty array");
  Node n;
  n.op = Op::Mean;
  n.a = x.id;
  n.shape = {1, 1};
  double acc = 0.0;
  for (double v : nx.val) acc += v;
  n.val = {acc / static_cast<double>(nx.val.size())};
  return push(std::move(n));
}

Var Tape::sum_axis1(Var x) {
  const Node& nx = node(x);
  Node n;
  n.op = Op::SumAxis1;
  n.a = x.id;
  n.shape = {nx.shape.rows, 1};
  n.val.resize(static_cast<size_t>(nx.shape.rows));
  for (int64_t r = 0; r < nx.shape.rows; ++r) {
    double acc = 0.0;
    const double* row = nx.val.data() + r * nx.shape.cols;
    for (int64_t c = 0; c < nx.shape.cols; ++c) acc += row[c];
    n.val[static_cast<size_t>(r)] = acc;
  }
  return push(std::move(n));
}

Var Tape::cumsum_exclusive(Var x) {
  const Node& nx = node(x);
  Node n;
  n.op = Op::CumsumExcl;
  n.a = x.id;
  n.shape = nx.shape;
  n.val.resize(nx.val.size());
  for (int64_t r = 0; r < nx.shape.rows; ++r) {
    const double* in = nx.val.data() + r * nx.shape.cols;
    double* out = n.val.data() + r * nx.shape.cols;
    double acc = 0.0;
    for (int64_t c = 0; c < nx.shape.cols; ++c) {
      out[c] = acc;
      acc += in[c];
    }
  }
  return push(std::move(n));
}

Var Tape::concat_cols(Var a, Var b) {
  const Node &na = node(a), &nb = node(b);
  if (na.shape.rows != nb.shape.rows)
    throw std::invalid_argument(std::string("concat_cols: row mismatch ") + na.shape.str() + " vs " + nb.shape.str());
  Node n;
  n.op = Op::ConcatCols;
  n.a = a.id;
  n.b = b.id;
  n.shape = {na.shape.rows, na.shape.cols + nb.shape.cols};
  n.val.resize(static_cast<size_t>(n.shape.size()));
  for (int64_t r = 0; r < n.shape.rows; ++r) {
    double* out = n.val.data() + r * n.shape.cols;
    std::memcpy(out, na.val.data() + r * na.shape.cols, sizeof(double) * static_cast<size_t>(na.shape.cols));
    std::memcpy(out + na.shape.cols, nb.val.data() + r * nb.shape.cols,
                sizeof(double) * static_cast<size_t>(nb.shape.cols));
  }
  return push(std::move(n));
}

Var Tape::gather_rows(Var x, std::vector<int64_t> rows) {
  const Node& nx = node(x);
  for (int64_t r : rows)
    if (r < 0 || r >= nx.shape.rows)
      throw std::out_of_range("gather_rows: index " + std::to_string(r) + " outside " + nx.shape.str());
  Node n;
  n.op = Op::GatherRows;
  n.a = x.id;
  n.shape = {static_cast<int64_t>(rows.size()), nx.shape.cols};
  n.val.resize(static_cast<size_t>(n.shape.size()));
  const int64_t c = nx.shape.cols;
  for (size_t i = 0; i < rows.size(); ++i)
    std::memcpy(n.val.data() + static_cast<int64_t>(i) * c, nx.val.data() + rows[i] * c,
                sizeof(double) * static_cast<size_t>(c));
  n.idx = std::move(rows);
  return push(std::move(n));
}

Var Tape::slice_cols(Var x, int64_t c0, int64_t c1) {
  const Node& nx = node(x);
  if (c0 < 0 || c1 > nx.shape.cols || c0 >= c1)
    throw std::invalid_argument("slice_cols: bad range [" + std::to_string(c0) + "," + std::to_string(c1) + ") of " +
                                nx.shape.str());
  Node n;
  n.op = Op::SliceCols;
  n.a = x.id;
  n.shape = {nx.shape.rows, c1 - c0};
  n.s0 = static_cast<double>(c0);
  n.s1 = static_cast<double>(c1);
  n.val.resize(static_cast<size_t>(n.shape.size()));
  for (int64_t r = 0; r < nx.shape.rows; ++r)
    std::memcpy(n.val.data() + r * n.shape.cols, nx.val.data() + r * nx.shape.cols + c0,
                sizeof(double) * static_cast<size_t>(n.shape.cols));
  return push(std::move(n));
}

Var Tape::reshape(Var x, int64_t r, int64_t c) {
  const Node& nx = node(x);
  if (r * c != nx.shape.size())
    throw std::invalid_argument("reshape: size mismatch " + nx.shape.str() + " -> [" + std::to_string(r) + "," +
                                std::to_string(c) + "]");
  Node n;
  n.op = Op::Reshape;
  n.a = x.id;
  n.shape = {r, c};
  n.val = nx.val;
  return push(std::move(n));
}

Var Tape::detach(Var x) {
  const Node& nx = node(x);
  Node n;
  n.op = Op::Detach;
  n.a = x.id;
  n.shape = nx.shape;
  n.val = nx.val;
  return push(std::move(n));
}

namespace {

void accumulate_broadcast(const Shape& from, const Shape& to, const std::vector<double>& g, std::vector<double>& out) {
  // Reduce gradient g (shape `from`) onto operand shape `to`.
  if (from == to) {
    for (size_t i = 0; i < g.size(); ++i) out[i] += g[i];
    return;
  }
  for (int64_t r = 0; r < from.rows; ++r)
    for (int64_t c = 0; c < from.cols; ++c)
      out[static_cast<size_t>(bidx(to, r, c))] += g[static_cast<size_t>(r * from.cols + c)];
}

}  // namespace

void Tape::backward(Var loss) {
  Node& ln = node(loss);
  if (ln.shape.size() != 1)
    throw std::invalid_argument("backward expects a scalar loss, got " + ln.shape.str());
  if (!std::isfinite(ln.val[0])) {
    for (size_t i = 0; i < nodes_.size(); ++i)
      for (double v : nodes_[i].val)
        if (!std::isfinite(v))
          throw std::runtime_error("non-finite value in node " + std::to_string(i) + " (" +
                                   op_name(nodes_[i].op) + ")");
    throw std::runtime_error("non-finite loss");
  }

  auto grad_of = [&](int32_t id) -> std::vector<double>& {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.empty()) n.grad.assign(n.val.size(), 0.0);
    return n.grad;
  };

  grad_of(loss.id)[0] += 1.0;

  for (int32_t id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.empty()) continue;
    const std::vector<double>& g = n.grad;
    switch (n.op) {
      case Op::Constant:
        break;
      case Op::Param:
        for (size_t i = 0; i < g.size(); ++i) n.param->grad.data[i] += g[i];
        break;
      case Op::Add: {
        Node &na = nodes_[static_cast<size_t>(n.a)], &nb = nodes_[static_cast<size_t>(n.b)];
        accumulate_broadcast(n.shape, na.shape, g, grad_of(n.a));
        accumulate_broadcast(n.shape, nb.shape, g, grad_of(n.b));
        (void)na;
        (void)nb;
        break;
      }
      case Op::Sub: {
        accumulate_broadcast(n.shape, nodes_[static_cast<size_t>(n.a)].shape, g, grad_of(n.a));
        std::vector<double> neg(g.size());
        for (size_t i = 0; i < g.size(); ++i) neg[i] = -g[i];
        accumulate_broadcast(n.shape, nodes_[static_cast<size_t>(n.b)].shape, neg, grad_of(n.b));
        break;
      }
      case Op::Mul: {
        Node &na = nodes_[static_cast<size_t>(n.a)], &nb = nodes_[static_cast<size_t>(n.b)];
        std::vector<double> ga(g.size()), gb(g.size());
        for (int64_t r = 0; r < n.shape.rows; ++r)
          for (int64_t c = 0; c < n.shape.cols; ++c) {
            const size_t i = static_cast<size_t>(r * n.shape.cols + c);
            ga[i] = g[i] * nb.val[static_cast<size_t>(bidx(nb.shape, r, c))];
            gb[i] = g[i] * na.val[static_cast<size_t>(bidx(na.shape, r, c))];
          }
        accumulate_broadcast(n.shape, na.shape, ga, grad_of(n.a));
        accumulate_broadcast(n.shape, nb.shape, gb, grad_of(n.b));
        break;
      }
      case Op::Div: {
        Node &na = nodes_[static_cast<size_t>(n.a)], &nb = nodes_[static_cast<size_t>(n.b)];
        std::vector<double> ga(g.size()), gb(g.size());
        for (int64_t r = 0; r < n.shape.rows; ++r)
          for (int64_t c = 0; c < n.shape.cols; ++c) {
            const size_t i = static_cast<size_t>(r * n.shape.cols + c);
            const double bv = nb.val[static_cast<size_t>(bidx(nb.shape, r, c))];
            const double av = na.val[static_cast<size_t>(bidx(na.shape, r, c))];
            ga[i] = g[i] / bv;
            gb[i] = -g[i] * av / (bv * bv);
          }
        accumulate_broadcast(n.shape, na.shape, ga, grad_of(n.a));
        accumulate_broadcast(n.shape, nb.shape, gb, grad_of(n.b));
        break;
      }
      case Op::MatMul: {
        Node &na = nodes_[static_cast<size_t>(n.a)], &nb = nodes_[static_cast<size_t>(n.b)];
        const int64_t m = na.shape.rows, k = na.shape.cols, nn = nb.shape.cols;
        mm_nt(g.data(), nb.val.data(), grad_of(n.a).data(), m, nn, k);
        mm_tn(na.val.data(), g.data(), grad_of(n.b).data(), m, k, nn);
        break;
      }
      case Op::Affine: {
        std::vector<double>& ga = grad_of(n.a);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += n.s0 * g[i];
        break;
      }
      case Op::MaxConst: {
        Node& na = nodes_[static_cast<size_t>(n.a)];
        std::vector<double>& ga = grad_of(n.a);
        for (size_t i = 0; i < g.size(); ++i)
          if (na.val[i] > n.s0) ga[i] += g[i];
        break;
      }
      case Op::Sin: {
        Node& na = nodes_[static_cast<size_t>(n.a)];
        std::vector<double>& ga = grad_of(n.a);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * std::cos(na.val[i]);
        break;
      }
      case Op::Cos: {
        Node& na = nodes_[static_cast<size_t>(n.a)];
        std::vector<double>& ga = grad_of(n.a);
        for (size_t i = 0; i < g.size(); ++i) ga[i] -= g[i] * std::sin(na.val[i]);
        break;
      }
      case Op::Exp: {
        std::vector<double>& ga = grad_of(n.a);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.val[i];
        break;
      }
      case Op::Log: {
        Node& na = nodes_[static_cast<size_t>(n.a)];
        std::vector<double>& ga = grad_of(n.a);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / na.val[i];
        break;
      }
      case Op::Sqrt: {
        std::vector<double>& ga = grad_of(n.a);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * 0.5 / n.val[i];
        break;
      }
      case Op::Square: {
        Node& na = nodes_[static_cast<size_t>(n.a)];
        std::vector<double>& ga = grad_of(n.a);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * 2.0 * na.val[i];
        break;
      }
      case Op::Sigmoid: {
        std::vector<double>& ga = grad_of(n.a);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.val[i] * (1.0 - n.val[i]);
        break;
      }
      case Op::Relu: {
        Node& na = nodes_[static_cast<size_t>(n.a)];
        std::vector<double>& ga = grad_of(n.a);
        for (size_t i = 0; i < g.size(); ++i)
          if (na.val[i] > 0.0) ga[i] += g[i];
        break;
      }
      case Op::Softplus: {
        Node& na = nodes_[static_cast<size_t>(n.a)];
        std::vector<double>& ga = grad_of(n.a);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / (1.0 + std::exp(-na.val[i]));
        break;
      }
      case Op::Recip: {
        std::vector<double>& ga = grad_of(n.a);
        for (size_t i = 0; i < g.size(); ++i) ga[i] -= g[i] * n.val[i] * n.val[i];
        break;
      }
      case Op::Abs: {
        Node& na = nodes_[static_cast<size_t>(n.a)];
        std::vector<double>& ga = grad_of(n.a);
        for (size_t i = 0; i < g.size(); ++i) {
          if (na.val[i] > 0.0)
            ga[i] += g[i];
          else if (na.val[i] < 0.0)
            ga[i] -= g[i];
        }
        break;
      }
      case Op::XLogX: {
        Node& na = nodes_[static_cast<size_t>(n.a)];
        std::vector<double>& ga = grad_of(n.a);
        for (size_t i = 0; i < g.size(); ++i)
          if (na.val[i] > 0.0) ga[i] += g[i] * (std::log(na.val[i]) + 1.0);
        break;
      }
      case Op::Sum: {
        std::vector<double>& ga = grad_of(n.a);
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
        break;
      }
      case Op::Mean: {
        std::vector<double>& ga = grad_of(n.a);
        const double s = g[0] / static_cast<double>(ga.size());
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += s;
        break;
      }
      case Op::SumAxis1: {
        Node& na = nodes_[static_cast<size_t>(n.a)];
        std::vector<double>& ga = grad_of(n.a);
        for (int64_t r = 0; r < na.shape.rows; ++r) {
          const double gr = g[static_cast<size_t>(r)];
          double* row = ga.data() + r * na.shape.cols;
          for (int64_t c = 0; c < na.shape.cols; ++c) row[c] += gr;
        }
        break;
      }
      case Op::CumsumExcl: {
        // out[c] = sum_{j<c} in[j]  =>  d in[j] = sum_{c>j} d out[c]
        Node& na = nodes_[static_cast<size_t>(n.a)];
        std::vector<double>& ga = grad_of(n.a);
        for (int64_t r = 0; r < na.shape.rows; ++r) {
          const double* gr = g.data() + r * na.shape.cols;
          double* row = ga.data() + r * na.shape.cols;
          double acc = 0.0;
          for (int64_t c = na.shape.cols - 1; c >= 0; --c) {
            row[c] += acc;
            acc += gr[c];
          }
        }
        break;
      }
      case Op::ConcatCols: {
        Node &na = nodes_[static_cast<size_t>(n.a)], &nb = nodes_[static_cast<size_t>(n.b)];
        std::vector<double>&ga = grad_of(n.a), &gb = grad_of(n.b);
        for (int64_t r = 0; r < n.shape.rows; ++r) {
          const double* gr = g.data() + r * n.shape.cols;
          double* ra = ga.data() + r * na.shape.cols;
          double* rb = gb.data() + r * nb.shape.cols;
          for (int64_t c = 0; c < na.shape.cols; ++c) ra[c] += gr[c];
          for (int64_t c = 0; c < nb.shape.cols; ++c) rb[c] += gr[na.shape.cols + c];
        }
        break;
      }
      case Op::GatherRows: {
        Node& na = nodes_[static_cast<size_t>(n.a)];
        std::vector<double>& ga = grad_of(n.a);
        const int64_t c = na.shape.cols;
        for (size_t i = 0; i < n.idx.size(); ++i) {
          const double* gr = g.data() + static_cast<int64_t>(i) * c;
          double* row = ga.data() + n.idx[i] * c;
          for (int64_t j = 0; j < c; ++j) row[j] += gr[j];
        }
        break;
      }
      case Op::SliceCols: {
        Node& na = nodes_[static_cast<size_t>(n.a)];
        std::vector<double>& ga = grad_of(n.a);
        const int64_t c0 = static_cast<int64_t>(n.s0);
        for (int64_t r = 0; r < n.shape.rows; ++r) {
          const double* gr = g.data() + r * n.shape.cols;
          double* row = ga.data() + r * na.shape.cols + c0;
          for (int64_t c = 0; c < n.shape.cols; ++c) row[c] += gr[c];
        }
        break;
      }
      case Op::Reshape: {
        std::vector<double>& ga = grad_of(n.a);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        break;
      }
      case Op::Detach:
        break;
    }
  }
}

}  // namespace simplerf::ad
