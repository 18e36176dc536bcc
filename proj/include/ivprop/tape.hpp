#pragma once

#include <cstdint>
#include <vector>

#include "ivprop/tensor.hpp"

// Reverse-mode autodiff over a flat tape of tensor-valued primitive ops.
// Values are computed eagerly as nodes are recorded; gradients(loss) replays
// the tape backwards. A tape is single-threaded; Tensors are immutable values.

namespace ivp::ad {

using VarId = std::int32_t;

enum class Op : std::uint8_t {
    Leaf, Const,
    Add, Sub, Mul,
    MatmulNN, MatmulNT,
    Relu, Tanh, Softplus, Square, Exp,
    MaxWith, MinWith,
    Sum, Mean,
    Concat, SliceRows, Reshape,
    StopGrad,
};

// Broadcast pattern for Add/Sub/Mul. Only bias-style patterns are supported:
// same shape, a (r,c) with b (c), or a scalar on either side.
enum class Bcast : std::uint8_t { Same, RowRight, ScalarRight, ScalarLeft };

class Tape {
  public:
    VarId leaf(Tensor t, bool trainable = false);
    VarId constant(Tensor t);
    VarId constant(double v) { return constant(Tensor::scalar(v)); }

    VarId add(VarId a, VarId b);
    VarId sub(VarId a, VarId b);
    VarId mul(VarId a, VarId b);
    VarId matmul(VarId a, VarId b);     // (m,k)x(k,n) or (m,k)x(k)
    VarId matmul_nt(VarId a, VarId b);  // (m,k) x (n,k)^T -> (m,n)
    VarId relu(VarId x);
    VarId tanh_(VarId x);
    VarId softplus(VarId x);
    VarId square(VarId x);
    VarId exp_(VarId x);
    VarId max_with(VarId x, double c);
    VarId min_with(VarId x, double c);
    VarId sum(VarId x);
    VarId mean(VarId x);
    VarId concat(VarId a, VarId b);
    VarId slice_rows(VarId x, std::size_t r0, std::size_t r1);
    // Size-preserving shape change; gradient passes through unchanged.
    VarId reshape(VarId x, std::vector<std::size_t> shape);
    VarId stop_gradient(VarId x);

    const Tensor& val(VarId id) const { return nodes_[id].val; }
    std::size_t size() const { return nodes_.size(); }
    bool trainable(VarId id) const { return nodes_[id].trainable; }

    // d(loss)/d(node) for every node that requires grad; entries without a
    // gradient are empty tensors. loss must be scalar. Deterministic: the
    // same tape yields bit-identical gradients on every call.
    std::vector<Tensor> gradients(VarId loss) const;

  private:
    struct Node {
        Op op;
        Bcast bcast = Bcast::Same;
        VarId a = -1, b = -1;
        double carg = 0.0;
        std::size_t r0 = 0, r1 = 0;
        bool trainable = false;
        bool requires_grad = false;
        Tensor val;
    };

    VarId push(Node n);
    VarId unary(Op op, VarId x);
    VarId ew(Op op, VarId a, VarId b);

    std::vector<Node> nodes_;
};

// Compositions over the primitives above.
namespace ops {

VarId neg(Tape& t, VarId x);
VarId absval(Tape& t, VarId x);
// Two-operand min/max via relu; at ties the subgradient goes to the first
// argument (documented convention).
VarId vmin(Tape& t, VarId a, VarId b);
VarId vmax(Tape& t, VarId a, VarId b);
VarId dot(Tape& t, VarId a, VarId b);
VarId rowsum(Tape& t, VarId x);  // (r,c) -> (r)
VarId scale(Tape& t, VarId x, double s);
VarId mse(Tape& t, VarId pred, VarId target);

}  // namespace ops

}  // namespace ivp::ad
