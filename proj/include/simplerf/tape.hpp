#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "simplerf/array.hpp"

namespace simplerf::ad {

class ParamStore;

struct ParamSlot {
  std::string name;
  Array value;
  Array grad;
};

// Named parameter arrays with gradient accumulators. Iteration order is
// insertion order, which keeps optimizer sweeps and checkpoints deterministic.
class ParamStore {
 public:
  ParamSlot& create(const std::string& name, Array init);
  ParamSlot& at(const std::string& name);
  const ParamSlot& at(const std::string& name) const;
  ParamSlot* find(const std::string& name);
  bool contains(const std::string& name) const;
  void zero_grads();
  size_t count() const { return slots_.size(); }
  int64_t total_elements() const;
  const std::vector<std::string>& names() const { return order_; }

  uint64_t step_count = 0;

 private:
  std::vector<std::unique_ptr<ParamSlot>> slots_;
  std::vector<std::string> order_;
};

enum class Op : uint8_t {
  Constant,
  Param,
  Add,
  Sub,
  Mul,
  Div,
  MatMul,
  Affine,     // s0 * x + s1
  MaxConst,   // max(x, s0)
  Sin,
  Cos,
  Exp,
  Log,
  Sqrt,
  Square,
  Sigmoid,
  Relu,
  Softplus,
  Recip,
  Abs,
  XLogX,      // x * ln(x), 0 at x <= 0
  Sum,
  Mean,
  SumAxis1,
  CumsumExcl, // exclusive prefix sums along each row
  ConcatCols,
  GatherRows,
  SliceCols,  // columns [s0, s1)
  Reshape,
  Detach,
};

const char* op_name(Op op);

struct Var {
  int32_t id = -1;
  bool ok() const { return id >= 0; }
};

struct Node {
  Op op;
  int32_t a = -1;
  int32_t b = -1;
  Shape shape;
  std::vector<double> val;
  std::vector<double> grad;  // sized on demand during backward
  double s0 = 0.0;
  double s1 = 0.0;
  std::vector<int64_t> idx;  // gather row indices
  ParamSlot* param = nullptr;
};

// Append-only reverse-mode tape over float64 arrays. Rebuilt every iteration;
// backward() accumulates into the bound ParamStore slots additively.
class Tape {
 public:
  Var constant(Array a);
  Var constant(double v) { return constant(Array::scalar(v)); }
  Var param(ParamSlot& slot);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var matmul(Var a, Var b);
  Var affine(Var x, double scale, double shift);
  Var neg(Var x) { return affine(x, -1.0, 0.0); }
  Var max_const(Var x, double c);
  Var sin(Var x);
  Var cos(Var x);
  Var exp(Var x);
  Var log(Var x);
  Var sqrt(Var x);
  Var square(Var x);
  Var sigmoid(Var x);
  Var relu(Var x);
  Var softplus(Var x);
  Var recip(Var x);
  Var abs(Var x);
  Var xlogx(Var x);
  Var sum(Var x);
  Var mean(Var x);
  Var sum_axis1(Var x);
  Var cumsum_exclusive(Var x);
  Var concat_cols(Var a, Var b);
  Var gather_rows(Var x, std::vector<int64_t> rows);
  Var slice_cols(Var x, int64_t c0, int64_t c1);
  Var reshape(Var x, int64_t r, int64_t c);
  Var detach(Var x);

  const std::vector<double>& val(Var v) const { return node(v).val; }
  Shape shape(Var v) const { return node(v).shape; }
  double scalar(Var v) const;
  Array array(Var v) const { return Array(node(v).shape, node(v).val); }

  // Reverse sweep from a scalar loss. Accumulates parameter gradients; throws
  // if the loss or any upstream node is non-finite, naming the first bad node.
  void backward(Var loss);

  size_t size() const { return nodes_.size(); }
  const Node& node(Var v) const;
  Node& node(Var v);

 private:
  Var push(Node n);
  std::vector<Node> nodes_;
};

}  // namespace simplerf::ad
