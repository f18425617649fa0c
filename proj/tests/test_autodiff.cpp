#include "zstag/autodiff.hpp"

#include <doctest.h>

#include "oracles.hpp"
#include "zstag/rng.hpp"

using zstag::Rng;
using zstag::ad::Mat;
using zstag::ad::Tape;
using zstag::ad::Var;

namespace {

Mat random_mat(int rows, int cols, Rng& rng) {
  Mat m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) m(i, j) = rng.uniform(-1.0, 1.0);
  }
  return m;
}

// FD-checks d(scalar expr)/d(every input coordinate) for an arbitrary graph.
template <typename Builder>
void check_gradients(std::vector<Mat> inputs, Builder&& build, double tol = 1e-7) {
  std::vector<Mat> grads;
  for (const Mat& m : inputs) grads.push_back(Mat::Zero(m.rows(), m.cols()));

  auto eval = [&]() {
    Tape tape;
    std::vector<Var> vars;
    for (const Mat& m : inputs) vars.push_back(tape.leaf(m));
    Var root = build(tape, vars);
    return tape.value(root)(0, 0);
  };

  {
    Tape tape;
    std::vector<Var> vars;
    for (std::size_t i = 0; i < inputs.size(); ++i) vars.push_back(tape.leaf(inputs[i], &grads[i]));
    tape.backward(build(tape, vars));
  }

  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (Eigen::Index k = 0; k < inputs[i].size(); ++k) {
      const double fd = oracles::central_diff(eval, inputs[i](k), 1e-6);
      CHECK(oracles::rel_err(grads[i](k), fd) < tol);
    }
  }
}

}  // namespace

TEST_CASE("matmul add tanh sigmoid chain matches finite differences") {
  Rng rng(11);
  check_gradients({random_mat(3, 4, rng), random_mat(4, 1, rng), random_mat(3, 1, rng)},
                  [](Tape& t, const std::vector<Var>& v) {
                    Var z = t.add(t.matmul(v[0], v[1]), v[2]);
                    return t.sum_all(t.sigmoid(t.tanh(z)));
                  });
}

TEST_CASE("square sub scale concat slice gradients") {
  Rng rng(12);
  check_gradients({random_mat(3, 1, rng), random_mat(2, 1, rng)},
                  [](Tape& t, const std::vector<Var>& v) {
                    Var cat = t.concat_rows(v[0], v[1]);  // 5x1
                    Var s = t.slice_rows(cat, 1, 3);
                    Var q = t.square(t.sub(s, t.scale(t.slice_rows(cat, 2, 3), 0.5)));
                    return t.sum_all(q);
                  });
}

TEST_CASE("cmul hstack col transpose gradients") {
  Rng rng(13);
  check_gradients({random_mat(3, 1, rng), random_mat(3, 1, rng), random_mat(3, 1, rng)},
                  [](Tape& t, const std::vector<Var>& v) {
                    Var m = t.hstack(std::vector<Var>{v[0], v[1], v[2]});  // 3x3
                    Var c = t.cmul(t.col(m, 0), t.col(m, 2));
                    return t.sum_all(t.matmul(t.transpose(c), v[1]));
                  });
}

TEST_CASE("softmax log_softmax pick div_by_scalar gradients") {
  Rng rng(14);
  check_gradients({random_mat(4, 1, rng), random_mat(4, 1, rng)},
                  [](Tape& t, const std::vector<Var>& v) {
                    Var sm = t.softmax(v[0]);
                    Var ls = t.log_softmax(v[1]);
                    Var ratio = t.div_by_scalar(sm, t.sum_all(t.sigmoid(ls)));
                    return t.add(t.pick(ratio, 2), t.pick(ls, 1));
                  });
}

TEST_CASE("min and max route gradient to the first attaining index") {
  Tape tape;
  Mat v(4, 1);
  v << 0.3, -0.7, 0.9, -0.7;  // tie at the minimum; first index wins
  Mat grad = Mat::Zero(4, 1);
  Var x = tape.leaf(v, &grad);
  Var loss = tape.add(tape.min_all(x), tape.scale(tape.max_all(x), 2.0));
  tape.backward(loss);
  CHECK(grad(0) == 0.0);
  CHECK(grad(1) == 1.0);  // first of the tied minima
  CHECK(grad(3) == 0.0);
  CHECK(grad(2) == 2.0);
  CHECK(tape.argext(loss) == -1);
}

TEST_CASE("add_broadcast accumulates bias gradient over columns") {
  Rng rng(15);
  check_gradients({random_mat(2, 3, rng), random_mat(2, 1, rng)},
                  [](Tape& t, const std::vector<Var>& v) {
                    return t.sum_all(t.tanh(t.add_broadcast(v[0], v[1])));
                  });
}

TEST_CASE("stack_scalars and cmul_const gradients") {
  Rng rng(16);
  Mat mask(3, 1);
  mask << 2.0, 0.0, 1.0;
  check_gradients({random_mat(1, 1, rng), random_mat(1, 1, rng), random_mat(1, 1, rng)},
                  [mask](Tape& t, const std::vector<Var>& v) {
                    Var stacked = t.stack_scalars(std::vector<Var>{v[0], v[1], v[2]});
                    return t.sum_all(t.square(t.cmul_const(stacked, mask)));
                  });
}

TEST_CASE("lookup_row scatters gradients into the sink row") {
  Mat table = Mat::Zero(3, 2);
  table << 1, 2, 3, 4, 5, 6;
  Mat sink = Mat::Zero(3, 2);
  Tape tape;
  Var a = tape.lookup_row(table, &sink, 1);
  Var b = tape.lookup_row(table, &sink, 1);  // same row twice accumulates
  tape.backward(tape.sum_all(tape.add(a, tape.scale(b, 3.0))));
  CHECK(sink.row(0).isZero());
  CHECK(sink(1, 0) == doctest::Approx(4.0));
  CHECK(sink(1, 1) == doctest::Approx(4.0));
  CHECK(sink.row(2).isZero());
}

TEST_CASE("repeated use of one leaf accumulates") {
  Mat x(1, 1);
  x << 1.5;
  Mat grad = Mat::Zero(1, 1);
  Tape tape;
  Var v = tape.leaf(x, &grad);
  tape.backward(tape.cmul(v, v));  // d(x^2)/dx = 2x
  CHECK(grad(0, 0) == doctest::Approx(3.0));
}

TEST_CASE("backward can run twice without stale gradients") {
  Mat x(1, 1);
  x << 2.0;
  Mat grad = Mat::Zero(1, 1);
  Tape tape;
  Var v = tape.leaf(x, &grad);
  Var root = tape.square(v);
  tape.backward(root);
  grad.setZero();
  tape.backward(root);
  CHECK(grad(0, 0) == doctest::Approx(4.0));
}
