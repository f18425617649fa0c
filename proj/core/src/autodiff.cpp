#include "zstag/autodiff.hpp"

#include <cmath>
#include <limits>

#include "zstag/errors.hpp"

namespace zstag::ad {

namespace {

void check(bool cond, const char* msg) {
  if (!cond) throw ContractError(std::string("autodiff: ") + msg);
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var Tape::push(Op op, Mat val, std::int32_t a, std::int32_t b) {
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  n.val = std::move(val);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::leaf(const Mat& value, Mat* grad_sink) { return leaf(Mat(value), grad_sink); }

Var Tape::leaf(Mat&& value, Mat* grad_sink) {
  Var v = push(Op::kLeaf, std::move(value));
  if (grad_sink != nullptr) {
    sinks_.push_back({grad_sink, -1});
    at(v).aux = static_cast<std::int32_t>(sinks_.size() - 1);
  }
  return v;
}

Var Tape::scalar(double v) {
  Mat m(1, 1);
  m(0, 0) = v;
  return leaf(std::move(m));
}

Var Tape::lookup_row(const Mat& table, Mat* grad_sink, Eigen::Index row) {
  check(row >= 0 && row < table.rows(), "lookup_row out of range");
  Var v = push(Op::kLookupRow, table.row(row).transpose());
  sinks_.push_back({grad_sink, static_cast<std::int32_t>(row)});
  at(v).aux = static_cast<std::int32_t>(sinks_.size() - 1);
  return v;
}

Var Tape::matmul(Var a, Var b) {
  check(value(a).cols() == value(b).rows(), "matmul shape mismatch");
  return push(Op::kMatMul, value(a) * value(b), a.id, b.id);
}

Var Tape::add(Var a, Var b) {
  check(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(),
        "add shape mismatch");
  return push(Op::kAdd, value(a) + value(b), a.id, b.id);
}

Var Tape::add_broadcast(Var a, Var bias) {
  check(value(bias).cols() == 1 && value(bias).rows() == value(a).rows(),
        "add_broadcast shape mismatch");
  return push(Op::kAddBroadcast, value(a).colwise() + value(bias).col(0), a.id, bias.id);
}

Var Tape::sub(Var a, Var b) {
  check(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(),
        "sub shape mismatch");
  return push(Op::kSub, value(a) - value(b), a.id, b.id);
}

Var Tape::cmul(Var a, Var b) {
  check(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(),
        "cmul shape mismatch");
  return push(Op::kCMul, value(a).cwiseProduct(value(b)), a.id, b.id);
}

Var Tape::cmul_const(Var a, Mat mask) {
  check(value(a).rows() == mask.rows() && value(a).cols() == mask.cols(),
        "cmul_const shape mismatch");
  Var v = push(Op::kCMulConst, value(a).cwiseProduct(mask), a.id);
  consts_.push_back(std::move(mask));
  at(v).aux = static_cast<std::int32_t>(consts_.size() - 1);
  return v;
}

Var Tape::scale(Var a, double k) {
  Var v = push(Op::kScale, value(a) * k, a.id);
  at(v).k = k;
  return v;
}

Var Tape::tanh(Var a) {
  return push(Op::kTanh, value(a).array().tanh().matrix(), a.id);
}

Var Tape::sigmoid(Var a) {
  return push(Op::kSigmoid, value(a).unaryExpr([](double x) { return sigmoid_scalar(x); }),
              a.id);
}

Var Tape::square(Var a) {
  return push(Op::kSquare, value(a).array().square().matrix(), a.id);
}

Var Tape::concat_rows(Var a, Var b) {
  check(value(a).cols() == value(b).cols(), "concat_rows column mismatch");
  Mat out(value(a).rows() + value(b).rows(), value(a).cols());
  out.topRows(value(a).rows()) = value(a);
  out.bottomRows(value(b).rows()) = value(b);
  return push(Op::kConcatRows, std::move(out), a.id, b.id);
}

Var Tape::slice_rows(Var a, Eigen::Index offset, Eigen::Index len) {
  check(offset >= 0 && len >= 0 && offset + len <= value(a).rows(), "slice_rows out of range");
  Var v = push(Op::kSliceRows, value(a).middleRows(offset, len), a.id);
  at(v).aux = static_cast<std::int32_t>(offset);
  at(v).aux2 = static_cast<std::int32_t>(len);
  return v;
}

Var Tape::col(Var a, Eigen::Index j) {
  check(j >= 0 && j < value(a).cols(), "col out of range");
  Var v = push(Op::kCol, value(a).col(j), a.id);
  at(v).aux = static_cast<std::int32_t>(j);
  return v;
}

Var Tape::transpose(Var a) {
  return push(Op::kTranspose, value(a).transpose(), a.id);
}

Var Tape::hstack(std::span<const Var> cols) {
  check(!cols.empty(), "hstack of nothing");
  const Eigen::Index rows = value(cols[0]).rows();
  Mat out(rows, static_cast<Eigen::Index>(cols.size()));
  std::vector<std::int32_t> args;
  args.reserve(cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) {
    check(value(cols[i]).cols() == 1 && value(cols[i]).rows() == rows, "hstack shape mismatch");
    out.col(static_cast<Eigen::Index>(i)) = value(cols[i]);
    args.push_back(cols[i].id);
  }
  Var v = push(Op::kHStack, std::move(out));
  multi_.push_back(std::move(args));
  at(v).aux = static_cast<std::int32_t>(multi_.size() - 1);
  return v;
}

Var Tape::stack_scalars(std::span<const Var> scalars) {
  check(!scalars.empty(), "stack_scalars of nothing");
  Mat out(static_cast<Eigen::Index>(scalars.size()), 1);
  std::vector<std::int32_t> args;
  args.reserve(scalars.size());
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    check(value(scalars[i]).size() == 1, "stack_scalars argument not scalar");
    out(static_cast<Eigen::Index>(i), 0) = value(scalars[i])(0, 0);
    args.push_back(scalars[i].id);
  }
  Var v = push(Op::kStackScalars, std::move(out));
  multi_.push_back(std::move(args));
  at(v).aux = static_cast<std::int32_t>(multi_.size() - 1);
  return v;
}

Var Tape::sum_all(Var a) {
  Mat out(1, 1);
  out(0, 0) = value(a).sum();
  return push(Op::kSumAll, std::move(out), a.id);
}

Var Tape::min_all(Var a) {
  const Mat& m = value(a);
  check(m.size() > 0, "min_all of empty");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < m.size(); ++i) {
    if (m(i) < m(best)) best = i;
  }
  Mat out(1, 1);
  out(0, 0) = m(best);
  Var v = push(Op::kMinAll, std::move(out), a.id);
  at(v).aux = static_cast<std::int32_t>(best);
  return v;
}

Var Tape::max_all(Var a) {
  const Mat& m = value(a);
  check(m.size() > 0, "max_all of empty");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < m.size(); ++i) {
    if (m(i) > m(best)) best = i;
  }
  Mat out(1, 1);
  out(0, 0) = m(best);
  Var v = push(Op::kMaxAll, std::move(out), a.id);
  at(v).aux = static_cast<std::int32_t>(best);
  return v;
}

Var Tape::div_by_scalar(Var a, Var s) {
  check(value(s).size() == 1, "div_by_scalar divisor not scalar");
  return push(Op::kDivByScalar, value(a) / value(s)(0, 0), a.id, s.id);
}

Var Tape::softmax(Var a) {
  check(value(a).cols() == 1, "softmax expects a column vector");
  const Mat& m = value(a);
  const double mx = m.maxCoeff();
  Mat e = (m.array() - mx).exp().matrix();
  e /= e.sum();
  return push(Op::kSoftmax, std::move(e), a.id);
}

Var Tape::log_softmax(Var a) {
  check(value(a).cols() == 1, "log_softmax expects a column vector");
  const Mat& m = value(a);
  const double mx = m.maxCoeff();
  const double lse = std::log((m.array() - mx).exp().sum());
  return push(Op::kLogSoftmax, (m.array() - mx - lse).matrix(), a.id);
}

Var Tape::pick(Var a, Eigen::Index i) {
  check(value(a).cols() == 1 && i >= 0 && i < value(a).rows(), "pick out of range");
  Mat out(1, 1);
  out(0, 0) = value(a)(i, 0);
  Var v = push(Op::kPick, std::move(out), a.id);
  at(v).aux = static_cast<std::int32_t>(i);
  return v;
}

void Tape::backward(Var root) {
  check(root.valid() && static_cast<std::size_t>(root.id) < nodes_.size(), "bad root");
  check(value(root).size() == 1, "backward root must be scalar");

  for (std::int32_t i = 0; i <= root.id; ++i) {
    Node& n = nodes_[i];
    n.grad.setZero(n.val.rows(), n.val.cols());
  }
  nodes_[root.id].grad(0, 0) = 1.0;

  for (std::int32_t i = root.id; i >= 0; --i) {
    Node& n = nodes_[i];
    const Mat& g = n.grad;
    switch (n.op) {
      case Op::kLeaf: {
        if (n.aux >= 0) {
          const Sink& s = sinks_[n.aux];
          if (s.target != nullptr) *s.target += g;
        }
        break;
      }
      case Op::kLookupRow: {
        const Sink& s = sinks_[n.aux];
        if (s.target != nullptr) s.target->row(s.row) += g.transpose();
        break;
      }
      case Op::kMatMul: {
        nodes_[n.a].grad.noalias() += g * nodes_[n.b].val.transpose();
        nodes_[n.b].grad.noalias() += nodes_[n.a].val.transpose() * g;
        break;
      }
      case Op::kAdd: {
        nodes_[n.a].grad += g;
        nodes_[n.b].grad += g;
        break;
      }
      case Op::kAddBroadcast: {
        nodes_[n.a].grad += g;
        nodes_[n.b].grad += g.rowwise().sum();
        break;
      }
      case Op::kSub: {
        nodes_[n.a].grad += g;
        nodes_[n.b].grad -= g;
        break;
      }
      case Op::kCMul: {
        nodes_[n.a].grad += g.cwiseProduct(nodes_[n.b].val);
        nodes_[n.b].grad += g.cwiseProduct(nodes_[n.a].val);
        break;
      }
      case Op::kCMulConst: {
        nodes_[n.a].grad += g.cwiseProduct(consts_[n.aux]);
        break;
      }
      case Op::kScale: {
        nodes_[n.a].grad += g * n.k;
        break;
      }
      case Op::kTanh: {
        nodes_[n.a].grad.array() += g.array() * (1.0 - n.val.array().square());
        break;
      }
      case Op::kSigmoid: {
        nodes_[n.a].grad.array() += g.array() * n.val.array() * (1.0 - n.val.array());
        break;
      }
      case Op::kSquare: {
        nodes_[n.a].grad.array() += 2.0 * g.array() * nodes_[n.a].val.array();
        break;
      }
      case Op::kConcatRows: {
        const Eigen::Index ra = nodes_[n.a].val.rows();
        nodes_[n.a].grad += g.topRows(ra);
        nodes_[n.b].grad += g.bottomRows(g.rows() - ra);
        break;
      }
      case Op::kSliceRows: {
        nodes_[n.a].grad.middleRows(n.aux, n.aux2) += g;
        break;
      }
      case Op::kCol: {
        nodes_[n.a].grad.col(n.aux) += g;
        break;
      }
      case Op::kTranspose: {
        nodes_[n.a].grad += g.transpose();
        break;
      }
      case Op::kHStack: {
        const auto& args = multi_[n.aux];
        for (std::size_t j = 0; j < args.size(); ++j) {
          nodes_[args[j]].grad += g.col(static_cast<Eigen::Index>(j));
        }
        break;
      }
      case Op::kStackScalars: {
        const auto& args = multi_[n.aux];
        for (std::size_t j = 0; j < args.size(); ++j) {
          nodes_[args[j]].grad(0, 0) += g(static_cast<Eigen::Index>(j), 0);
        }
        break;
      }
      case Op::kSumAll: {
        nodes_[n.a].grad.array() += g(0, 0);
        break;
      }
      case Op::kMinAll:
      case Op::kMaxAll: {
        nodes_[n.a].grad(n.aux) += g(0, 0);
        break;
      }
      case Op::kDivByScalar: {
        const double s = nodes_[n.b].val(0, 0);
        nodes_[n.a].grad += g / s;
        nodes_[n.b].grad(0, 0) -= g.cwiseProduct(n.val).sum() / s;
        break;
      }
      case Op::kSoftmax: {
        const double dot = g.cwiseProduct(n.val).sum();
        nodes_[n.a].grad.array() += n.val.array() * (g.array() - dot);
        break;
      }
      case Op::kLogSoftmax: {
        const double gsum = g.sum();
        nodes_[n.a].grad.array() += g.array() - n.val.array().exp() * gsum;
        break;
      }
      case Op::kPick: {
        nodes_[n.a].grad(n.aux, 0) += g(0, 0);
        break;
      }
    }
  }
}

void Tape::clear() {
  nodes_.clear();
  sinks_.clear();
  multi_.clear();
  consts_.clear();
}

}  // namespace zstag::ad
