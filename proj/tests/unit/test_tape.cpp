#include <cmath>
#include <string>

#include "doctest.h"
#include "simplerf/params.hpp"
#include "simplerf/tape.hpp"

using namespace simplerf;

namespace {

ad::Array mat(int64_t r, int64_t c, std::initializer_list<double> vals) {
  ad::Array a(r, c);
  std::copy(vals.begin(), vals.end(), a.data.begin());
  return a;
}

}  // namespace

TEST_CASE("sum of squares has gradient 2p") {
  ad::ParamStore store;
  auto& p = store.create("p", ad::Array::from({1.0, 2.0}));
  ad::Tape t;
  const ad::Var loss = t.sum(t.square(t.param(p)));
  CHECK(t.scalar(loss) == doctest::Approx(5.0));
  t.backward(loss);
  CHECK(p.grad[0] == doctest::Approx(2.0));
  CHECK(p.grad[1] == doctest::Approx(4.0));
}

TEST_CASE("detach blocks gradient flow but keeps the value") {
  ad::ParamStore store;
  auto& a = store.create("a", ad::Array::scalar(2.0));
  auto& b = store.create("b", ad::Array::scalar(3.0));
  ad::Tape t;
  const ad::Var loss = t.square(t.sub(t.detach(t.param(b)), t.param(a)));
  CHECK(t.scalar(loss) == doctest::Approx(1.0));
  t.backward(loss);
  CHECK(a.grad[0] == doctest::Approx(-2.0));
  CHECK(b.grad[0] == doctest::Approx(0.0));
}

TEST_CASE("elementwise forward values") {
  ad::Tape t;
  const ad::Var x = t.constant(mat(1, 4, {-1.0, 0.0, 0.5, 2.0}));
  CHECK(t.val(t.relu(x))[0] == 0.0);
  CHECK(t.val(t.relu(x))[3] == 2.0);
  CHECK(t.val(t.abs(x))[0] == 1.0);
  CHECK(t.val(t.max_const(x, 0.25))[1] == 0.25);
  CHECK(t.val(t.max_const(x, 0.25))[3] == 2.0);
  CHECK(t.val(t.sigmoid(x))[1] == doctest::Approx(0.5));
  CHECK(t.val(t.softplus(x))[1] == doctest::Approx(std::log(2.0)));

  const ad::Var y = t.constant(mat(1, 3, {0.0, 1.0, std::exp(1.0)}));
  CHECK(t.val(t.xlogx(y))[0] == 0.0);
  CHECK(t.val(t.xlogx(y))[1] == doctest::Approx(0.0));
  CHECK(t.val(t.xlogx(y))[2] == doctest::Approx(std::exp(1.0)));
}

TEST_CASE("cumsum_exclusive prefixes each row with zero") {
  ad::Tape t;
  const ad::Var x = t.constant(mat(2, 3, {1, 2, 3, 10, 20, 30}));
  const auto& v = t.val(t.cumsum_exclusive(x));
  CHECK(v[0] == 0.0);
  CHECK(v[1] == 1.0);
  CHECK(v[2] == 3.0);
  CHECK(v[3] == 0.0);
  CHECK(v[4] == 10.0);
  CHECK(v[5] == 30.0);
}

TEST_CASE("structural ops forward values") {
  ad::Tape t;
  const ad::Var x = t.constant(mat(3, 2, {1, 2, 3, 4, 5, 6}));
  const ad::Var g = t.gather_rows(x, {2, 0});
  CHECK(t.shape(g).rows == 2);
  CHECK(t.val(g)[0] == 5.0);
  CHECK(t.val(g)[3] == 2.0);

  const ad::Var s = t.slice_cols(x, 1, 2);
  CHECK(t.shape(s).cols == 1);
  CHECK(t.val(s)[2] == 6.0);

  const ad::Var r = t.reshape(x, 2, 3);
  CHECK(t.shape(r).rows == 2);
  CHECK(t.val(r)[4] == 5.0);

  const ad::Var c = t.concat_cols(x, x);
  CHECK(t.shape(c).cols == 4);
  CHECK(t.val(c)[2] == 1.0);
  CHECK(t.val(c)[3] == 2.0);

  CHECK(t.scalar(t.mean(x)) == doctest::Approx(3.5));
  const auto& rowsum = t.val(t.sum_axis1(x));
  CHECK(rowsum[0] == 3.0);
  CHECK(rowsum[2] == 11.0);
}

TEST_CASE("matmul matches a hand computation") {
  ad::Tape t;
  const ad::Var a = t.constant(mat(2, 3, {1, 2, 3, 4, 5, 6}));
  const ad::Var b = t.constant(mat(3, 2, {7, 8, 9, 10, 11, 12}));
  const auto& v = t.val(t.matmul(a, b));
  CHECK(v[0] == 58.0);
  CHECK(v[1] == 64.0);
  CHECK(v[2] == 139.0);
  CHECK(v[3] == 154.0);
}

TEST_CASE("composite graph passes central-difference gradcheck") {
  ad::ParamStore store;
  store.create("p", mat(3, 2, {0.4, -0.7, 1.1, 0.35, -0.9, 0.6}));
  store.create("q", mat(2, 4, {0.8, -0.45, 0.3, 1.2, -0.6, 0.95, -1.3, 0.5}));

  const auto loss_fn = [&](bool with_grad) {
    ad::Tape t;
    const ad::Var p = t.param(store.at("p"));
    const ad::Var q = t.param(store.at("q"));
    const ad::Var x = t.matmul(p, q);
    const ad::Var y = t.concat_cols(t.sin(x), t.cos(x));
    const ad::Var y2 = t.mul(t.sigmoid(y), t.softplus(y));
    const ad::Var y3 = t.add(t.square(y2), t.exp(t.affine(y2, 0.3, 0.1)));
    const ad::Var y4 = t.div(y3, t.affine(t.abs(y), 1.0, 2.0));
    const ad::Var y5 = t.cumsum_exclusive(y4);
    const ad::Var picked = t.gather_rows(y5, {2, 0, 1, 2});
    ad::Var loss = t.add(t.sum(t.sum_axis1(y5)), t.mean(t.slice_cols(picked, 1, 5)));
    loss = t.add(loss, t.sum(t.log(t.affine(t.square(p), 1.0, 0.5))));
    loss = t.add(loss, t.sum(t.recip(t.affine(t.sigmoid(q), 1.0, 0.5))));
    loss = t.add(loss, t.mean(t.sqrt(t.affine(t.square(q), 1.0, 0.25))));
    loss = t.add(loss, t.sum(t.max_const(p, 0.2)));
    loss = t.add(loss, t.mean(t.xlogx(t.affine(t.sigmoid(p), 1.0, 0.5))));
    loss = t.add(loss, t.sum(t.relu(q)));
    const double v = t.scalar(loss);
    if (with_grad) t.backward(loss);
    return v;
  };

  const ad::GradcheckReport rep = ad::gradcheck(loss_fn, store, 1e-6);
  INFO("worst ", rep.worst_param, "[", rep.worst_index, "] rel err ", rep.max_rel_err);
  CHECK(rep.pass);
  CHECK(rep.coords_checked == 14);
}

TEST_CASE("backward names the first non-finite node") {
  ad::ParamStore store;
  auto& p = store.create("p", ad::Array::scalar(-1.0));
  ad::Tape t;
  const ad::Var loss = t.sum(t.log(t.param(p)));
  std::string message;
  try {
    t.backward(loss);
  } catch (const std::runtime_error& e) {
    message = e.what();
  }
  CHECK(message.find("log") != std::string::npos);
}

TEST_CASE("backward rejects non-scalar losses") {
  ad::Tape t;
  const ad::Var x = t.constant(mat(2, 1, {1, 2}));
  CHECK_THROWS_AS(t.backward(x), std::invalid_argument);
}

TEST_CASE("adam first step moves by the learning rate against the gradient sign") {
  ad::ParamStore store;
  auto& p = store.create("p", ad::Array::from({0.0, 0.0}));
  ad::Tape t;
  const ad::Var loss = t.sum(t.mul(t.param(p), t.constant(mat(2, 1, {3.0, -0.2}))));
  t.backward(loss);

  ad::AdamState adam;
  adam.lr = 0.1;
  ad::adam_step(store, adam);
  CHECK(p.value[0] == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(p.value[1] == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(p.grad[0] == 0.0);
  CHECK(store.step_count == 1);
}

TEST_CASE("adam moments can be dropped and groups override the base rate") {
  ad::AdamState adam;
  adam.lr = 1e-2;
  adam.set_group("grid.", 5e-1);
  CHECK(adam.rate_for("grid.xy") == 5e-1);
  CHECK(adam.rate_for("mlp.w0") == 1e-2);
  adam.moments["grid.xy"] = {{1.0}, {1.0}};
  adam.drop("grid.xy");
  CHECK(adam.moments.count("grid.xy") == 0);
}

TEST_CASE("learning rate decays geometrically") {
  CHECK(ad::exp_decay_lr(1e-2, 1e-4, 0, 100) == doctest::Approx(1e-2));
  CHECK(ad::exp_decay_lr(1e-2, 1e-4, 100, 100) == doctest::Approx(1e-4));
  CHECK(ad::exp_decay_lr(1e-2, 1e-4, 50, 100) == doctest::Approx(1e-3));
}

TEST_CASE("param store rejects duplicates and unknown names") {
  ad::ParamStore store;
  store.create("w", ad::Array::scalar(1.0));
  CHECK_THROWS_AS(store.create("w", ad::Array::scalar(2.0)), std::invalid_argument);
  CHECK_THROWS_AS(store.at("missing"), std::out_of_range);
  CHECK(store.find("missing") == nullptr);
  CHECK(store.total_elements() == 1);
}
