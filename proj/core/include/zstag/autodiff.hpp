#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

namespace zstag::ad {

using Mat = Eigen::MatrixXd;

// Handle into a Tape. Only valid for the tape that created it.
struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape over dense double matrices. Nodes are recorded in
// topological order during the forward build; backward() runs one reverse
// sweep from a scalar root. Leaves may bind an external gradient sink which
// receives the accumulated gradient when the sweep passes the leaf, so the
// same sink can collect contributions from many leaves (embedding rows,
// repeated parameter use).
//
// A tape is single-threaded. Build one tape per batch (or per sentence) and
// throw it away; clear() reuses the storage.
class Tape {
 public:
  // --- graph inputs -------------------------------------------------------
  Var leaf(const Mat& value, Mat* grad_sink = nullptr);
  Var leaf(Mat&& value, Mat* grad_sink = nullptr);
  Var scalar(double v);
  // Row `row` of `table` as a column vector; gradient scattered into
  // grad_sink->row(row).
  Var lookup_row(const Mat& table, Mat* grad_sink, Eigen::Index row);

  // --- elementwise / linear ops -------------------------------------------
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  // bias (m x 1) added to every column of a (m x n)
  Var add_broadcast(Var a, Var bias);
  Var sub(Var a, Var b);
  Var cmul(Var a, Var b);
  // multiply by a constant matrix (dropout masks); no gradient for the mask
  Var cmul_const(Var a, Mat mask);
  Var scale(Var a, double k);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var square(Var a);

  // --- shape ops ------------------------------------------------------------
  Var concat_rows(Var a, Var b);
  Var slice_rows(Var a, Eigen::Index offset, Eigen::Index len);
  Var col(Var a, Eigen::Index j);
  Var transpose(Var a);
  Var hstack(std::span<const Var> cols);
  Var stack_scalars(std::span<const Var> scalars);

  // --- reductions / vector ops ----------------------------------------------
  Var sum_all(Var a);
  // first attaining index in storage order; query with argext()
  Var min_all(Var a);
  Var max_all(Var a);
  Var div_by_scalar(Var a, Var s);
  Var softmax(Var a);      // column vector, max-subtracted
  Var log_softmax(Var a);  // column vector
  Var pick(Var a, Eigen::Index i);

  // --- access ----------------------------------------------------------------
  const Mat& value(Var v) const { return nodes_[v.id].val; }
  // Valid after backward(); zero-sized if the node was never reached.
  const Mat& grad(Var v) const { return nodes_[v.id].grad; }
  Eigen::Index argext(Var v) const { return nodes_[v.id].aux; }

  // Seeds d(root)/d(root) = 1 and accumulates gradients down the tape.
  // root must be 1x1. Gradients of earlier backward() calls are discarded.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }
  void clear();

 private:
  enum class Op : std::uint8_t {
    kLeaf,
    kLookupRow,
    kMatMul,
    kAdd,
    kAddBroadcast,
    kSub,
    kCMul,
    kCMulConst,
    kScale,
    kTanh,
    kSigmoid,
    kSquare,
    kConcatRows,
    kSliceRows,
    kCol,
    kTranspose,
    kHStack,
    kStackScalars,
    kSumAll,
    kMinAll,
    kMaxAll,
    kDivByScalar,
    kSoftmax,
    kLogSoftmax,
    kPick,
  };

  struct Node {
    Op op;
    std::int32_t a = -1;
    std::int32_t b = -1;
    std::int32_t aux = -1;   // row / offset / index / side-table slot
    std::int32_t aux2 = -1;  // length
    double k = 0.0;
    Mat val;
    Mat grad;
  };

  struct Sink {
    Mat* target = nullptr;
    std::int32_t row = -1;  // -1: whole matrix, else scatter into this row
  };

  Var push(Op op, Mat val, std::int32_t a = -1, std::int32_t b = -1);
  Node& at(Var v) { return nodes_[v.id]; }

  std::vector<Node> nodes_;
  std::vector<Sink> sinks_;                        // indexed by node.aux for leaf ops
  std::vector<std::vector<std::int32_t>> multi_;   // hstack / stack_scalars args
  std::vector<Mat> consts_;                        // cmul_const masks
};

}  // namespace zstag::ad
