#include "ivprop/tape.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "ivprop/kernels.hpp"

namespace ivp::ad {

using kern::active;

VarId Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<VarId>(nodes_.size() - 1);
}

VarId Tape::leaf(Tensor t, bool trainable) {
    Node n;
    n.op = Op::Leaf;
    n.trainable = trainable;
    n.requires_grad = trainable;
    n.val = std::move(t);
    return push(std::move(n));
}

VarId Tape::constant(Tensor t) {
    Node n;
    n.op = Op::Const;
    n.val = std::move(t);
    return push(std::move(n));
}

VarId Tape::ew(Op op, VarId a, VarId b) {
    const Tensor& ta = nodes_[a].val;
    const Tensor& tb = nodes_[b].val;
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    const auto& K = active();
    if (ta.same_shape(tb)) {
        n.bcast = Bcast::Same;
        n.val = Tensor::zeros(ta.shape);
        switch (op) {
            case Op::Add: K.add(ta.data.data(), tb.data.data(), n.val.data.data(), ta.size()); break;
            case Op::Sub: K.sub(ta.data.data(), tb.data.data(), n.val.data.data(), ta.size()); break;
            default:      K.mul(ta.data.data(), tb.data.data(), n.val.data.data(), ta.size()); break;
        }
    } else if (ta.is_scalar()) {
        n.bcast = Bcast::ScalarLeft;
        n.val = Tensor::zeros(tb.shape);
        const double s = ta[0];
        for (std::size_t i = 0; i < tb.size(); ++i) {
            switch (op) {
                case Op::Add: n.val[i] = s + tb[i]; break;
                case Op::Sub: n.val[i] = s - tb[i]; break;
                default:      n.val[i] = s * tb[i]; break;
            }
        }
    } else if (tb.is_scalar()) {
        n.bcast = Bcast::ScalarRight;
        n.val = Tensor::zeros(ta.shape);
        const double s = tb[0];
        for (std::size_t i = 0; i < ta.size(); ++i) {
            switch (op) {
                case Op::Add: n.val[i] = ta[i] + s; break;
                case Op::Sub: n.val[i] = ta[i] - s; break;
                default:      n.val[i] = ta[i] * s; break;
            }
        }
    } else if (ta.rank() == 2 && tb.rank() == 1 && ta.shape[1] == tb.shape[0]) {
        n.bcast = Bcast::RowRight;
        n.val = Tensor::zeros(ta.shape);
        const std::size_t r = ta.shape[0], c = ta.shape[1];
        for (std::size_t i = 0; i < r; ++i) {
            const double* arow = ta.row_ptr(i);
            double* orow = n.val.row_ptr(i);
            switch (op) {
                case Op::Add: K.add(arow, tb.data.data(), orow, c); break;
                case Op::Sub: K.sub(arow, tb.data.data(), orow, c); break;
                default:      K.mul(arow, tb.data.data(), orow, c); break;
            }
        }
    } else {
        throw ShapeError("tape elementwise op: incompatible shapes " + shape_str(ta.shape) +
                         " vs " + shape_str(tb.shape));
    }
    return push(std::move(n));
}

VarId Tape::add(VarId a, VarId b) { return ew(Op::Add, a, b); }
VarId Tape::sub(VarId a, VarId b) { return ew(Op::Sub, a, b); }
VarId Tape::mul(VarId a, VarId b) { return ew(Op::Mul, a, b); }

VarId Tape::matmul(VarId a, VarId b) {
    const Tensor& ta = nodes_[a].val;
    const Tensor& tb = nodes_[b].val;
    if (ta.rank() != 2)
        throw ShapeError("matmul: lhs must be rank 2, got " + shape_str(ta.shape));
    Node n;
    n.op = Op::MatmulNN;
    n.a = a;
    n.b = b;
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    const std::size_t m = ta.shape[0], k = ta.shape[1];
    if (tb.rank() == 2) {
        if (tb.shape[0] != k)
            throw ShapeError("matmul: " + shape_str(ta.shape) + " x " + shape_str(tb.shape));
        n.val = Tensor::zeros({m, tb.shape[1]});
        active().gemm_nn(ta.data.data(), tb.data.data(), n.val.data.data(), m, k, tb.shape[1], false);
    } else {
        if (tb.shape[0] != k)
            throw ShapeError("matmul: " + shape_str(ta.shape) + " x " + shape_str(tb.shape));
        n.val = Tensor::zeros({m});
        active().gemm_nn(ta.data.data(), tb.data.data(), n.val.data.data(), m, k, 1, false);
    }
    return push(std::move(n));
}

VarId Tape::matmul_nt(VarId a, VarId b) {
    const Tensor& ta = nodes_[a].val;
    const Tensor& tb = nodes_[b].val;
    if (ta.rank() != 2 || tb.rank() != 2 || ta.shape[1] != tb.shape[1])
        throw ShapeError("matmul_nt: " + shape_str(ta.shape) + " x " + shape_str(tb.shape) + "^T");
    Node n;
    n.op = Op::MatmulNT;
    n.a = a;
    n.b = b;
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    n.val = Tensor::zeros({ta.shape[0], tb.shape[0]});
    active().gemm_nt(ta.data.data(), tb.data.data(), n.val.data.data(),
                     ta.shape[0], ta.shape[1], tb.shape[0], false);
    return push(std::move(n));
}

VarId Tape::unary(Op op, VarId x) {
    const Tensor& tx = nodes_[x].val;
    Node n;
    n.op = op;
    n.a = x;
    n.requires_grad = (op == Op::StopGrad) ? false : nodes_[x].requires_grad;
    n.val = Tensor::zeros(tx.shape);
    const std::size_t sz = tx.size();
    switch (op) {
        case Op::Relu: active().relu(tx.data.data(), n.val.data.data(), sz); break;
        case Op::Tanh: kern::tanh_v(tx.data.data(), n.val.data.data(), sz); break;
        case Op::Softplus: kern::softplus_v(tx.data.data(), n.val.data.data(), sz); break;
        case Op::Square: active().mul(tx.data.data(), tx.data.data(), n.val.data.data(), sz); break;
        case Op::Exp: kern::exp_v(tx.data.data(), n.val.data.data(), sz); break;
        case Op::StopGrad: n.val = tx; break;
        default: throw std::logic_error("unary: bad op");
    }
    return push(std::move(n));
}

VarId Tape::relu(VarId x) { return unary(Op::Relu, x); }
VarId Tape::tanh_(VarId x) { return unary(Op::Tanh, x); }
VarId Tape::softplus(VarId x) { return unary(Op::Softplus, x); }
VarId Tape::square(VarId x) { return unary(Op::Square, x); }
VarId Tape::exp_(VarId x) { return unary(Op::Exp, x); }
VarId Tape::stop_gradient(VarId x) { return unary(Op::StopGrad, x); }

VarId Tape::max_with(VarId x, double c) {
    const Tensor& tx = nodes_[x].val;
    Node n;
    n.op = Op::MaxWith;
    n.a = x;
    n.carg = c;
    n.requires_grad = nodes_[x].requires_grad;
    n.val = Tensor::zeros(tx.shape);
    active().max_scalar(tx.data.data(), c, n.val.data.data(), tx.size());
    return push(std::move(n));
}

VarId Tape::min_with(VarId x, double c) {
    const Tensor& tx = nodes_[x].val;
    Node n;
    n.op = Op::MinWith;
    n.a = x;
    n.carg = c;
    n.requires_grad = nodes_[x].requires_grad;
    n.val = Tensor::zeros(tx.shape);
    active().min_scalar(tx.data.data(), c, n.val.data.data(), tx.size());
    return push(std::move(n));
}

VarId Tape::sum(VarId x) {
    Node n;
    n.op = Op::Sum;
    n.a = x;
    n.requires_grad = nodes_[x].requires_grad;
    n.val = Tensor::scalar(active().sum(nodes_[x].val.data.data(), nodes_[x].val.size()));
    return push(std::move(n));
}

VarId Tape::mean(VarId x) {
    const std::size_t sz = nodes_[x].val.size();
    Node n;
    n.op = Op::Mean;
    n.a = x;
    n.requires_grad = nodes_[x].requires_grad;
    n.val = Tensor::scalar(active().sum(nodes_[x].val.data.data(), sz) / static_cast<double>(sz));
    return push(std::move(n));
}

VarId Tape::concat(VarId a, VarId b) {
    const Tensor& ta = nodes_[a].val;
    const Tensor& tb = nodes_[b].val;
    Node n;
    n.op = Op::Concat;
    n.a = a;
    n.b = b;
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
    if (ta.rank() == 1 && tb.rank() == 1) {
        n.val = Tensor::zeros({ta.size() + tb.size()});
    } else if (ta.rank() == 2 && tb.rank() == 2 && ta.shape[1] == tb.shape[1]) {
        n.val = Tensor::zeros({ta.shape[0] + tb.shape[0], ta.shape[1]});
    } else {
        throw ShapeError("concat: incompatible shapes " + shape_str(ta.shape) + " vs " +
                         shape_str(tb.shape));
    }
    std::memcpy(n.val.data.data(), ta.data.data(), ta.size() * sizeof(double));
    std::memcpy(n.val.data.data() + ta.size(), tb.data.data(), tb.size() * sizeof(double));
    return push(std::move(n));
}

VarId Tape::slice_rows(VarId x, std::size_t r0, std::size_t r1) {
    const Tensor& tx = nodes_[x].val;
    const std::size_t nrows = tx.rank() == 2 ? tx.shape[0] : tx.size();
    if (r0 >= r1 || r1 > nrows)
        throw ShapeError("slice_rows: [" + std::to_string(r0) + ", " + std::to_string(r1) +
                         ") out of " + shape_str(tx.shape));
    Node n;
    n.op = Op::SliceRows;
    n.a = x;
    n.r0 = r0;
    n.r1 = r1;
    n.requires_grad = nodes_[x].requires_grad;
    const std::size_t c = tx.rank() == 2 ? tx.shape[1] : 1;
    if (tx.rank() == 2)
        n.val = Tensor::zeros({r1 - r0, c});
    else
        n.val = Tensor::zeros({r1 - r0});
    std::memcpy(n.val.data.data(), tx.data.data() + r0 * c, (r1 - r0) * c * sizeof(double));
    return push(std::move(n));
}

VarId Tape::reshape(VarId x, std::vector<std::size_t> shape) {
    const Tensor& tx = nodes_[x].val;
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    if (n != tx.size())
        throw ShapeError("reshape: " + shape_str(tx.shape) + " -> " + shape_str(shape) +
                         " changes size");
    Node nd;
    nd.op = Op::Reshape;
    nd.a = x;
    nd.requires_grad = nodes_[x].requires_grad;
    nd.val = tx;
    nd.val.shape = std::move(shape);
    return push(std::move(nd));
}

std::vector<Tensor> Tape::gradients(VarId loss) const {
    if (!nodes_[loss].val.is_scalar())
        throw std::invalid_argument("gradients: output is not scalar, shape " +
                                    shape_str(nodes_[loss].val.shape));
    const auto& K = active();
    std::vector<Tensor> grads(nodes_.size());
    auto touch = [&](VarId id) -> Tensor& {
        if (grads[id].data.empty()) grads[id] = Tensor::zeros(nodes_[id].val.shape);
        return grads[id];
    };
    touch(loss)[0] = 1.0;

    for (VarId id = loss; id >= 0; --id) {
        const Node& n = nodes_[id];
        if (!n.requires_grad || grads[id].data.empty()) continue;
        const Tensor& g = grads[id];
        const bool need_a = n.a >= 0 && nodes_[n.a].requires_grad;
        const bool need_b = n.b >= 0 && nodes_[n.b].requires_grad;
        switch (n.op) {
            case Op::Leaf:
            case Op::Const:
            case Op::StopGrad:
                break;
            case Op::Add:
            case Op::Sub: {
                const double sgn = n.op == Op::Sub ? -1.0 : 1.0;
                switch (n.bcast) {
                    case Bcast::Same:
                        if (need_a) K.axpy(1.0, g.data.data(), touch(n.a).data.data(), g.size());
                        if (need_b) K.axpy(sgn, g.data.data(), touch(n.b).data.data(), g.size());
                        break;
                    case Bcast::ScalarRight:
                        if (need_a) K.axpy(1.0, g.data.data(), touch(n.a).data.data(), g.size());
                        if (need_b) touch(n.b)[0] += sgn * K.sum(g.data.data(), g.size());
                        break;
                    case Bcast::ScalarLeft:
                        if (need_a) touch(n.a)[0] += K.sum(g.data.data(), g.size());
                        if (need_b) K.axpy(sgn, g.data.data(), touch(n.b).data.data(), g.size());
                        break;
                    case Bcast::RowRight:
                        if (need_a) K.axpy(1.0, g.data.data(), touch(n.a).data.data(), g.size());
                        if (need_b) {
                            Tensor& gb = touch(n.b);
                            if (sgn > 0) {
                                K.colsum_acc(g.data.data(), gb.data.data(), g.shape[0], g.shape[1]);
                            } else {
                                Tensor tmp = Tensor::zeros(gb.shape);
                                K.colsum_acc(g.data.data(), tmp.data.data(), g.shape[0], g.shape[1]);
                                K.axpy(-1.0, tmp.data.data(), gb.data.data(), gb.size());
                            }
                        }
                        break;
                }
                break;
            }
            case Op::Mul: {
                const Tensor& va = nodes_[n.a].val;
                const Tensor& vb = nodes_[n.b].val;
                switch (n.bcast) {
                    case Bcast::Same:
                        if (need_a) K.fmadd(g.data.data(), vb.data.data(), touch(n.a).data.data(), g.size());
                        if (need_b) K.fmadd(g.data.data(), va.data.data(), touch(n.b).data.data(), g.size());
                        break;
                    case Bcast::ScalarRight:
                        if (need_a) K.axpy(vb[0], g.data.data(), touch(n.a).data.data(), g.size());
                        if (need_b) touch(n.b)[0] += K.dot(g.data.data(), va.data.data(), g.size());
                        break;
                    case Bcast::ScalarLeft:
                        if (need_a) touch(n.a)[0] += K.dot(g.data.data(), vb.data.data(), g.size());
                        if (need_b) K.axpy(va[0], g.data.data(), touch(n.b).data.data(), g.size());
                        break;
                    case Bcast::RowRight: {
                        const std::size_t r = va.shape[0], c = va.shape[1];
                        if (need_a) {
                            Tensor& ga = touch(n.a);
                            for (std::size_t i = 0; i < r; ++i)
                                K.fmadd(g.row_ptr(i), vb.data.data(), ga.row_ptr(i), c);
                        }
                        if (need_b) {
                            Tensor& gb = touch(n.b);
                            Tensor tmp = Tensor::zeros(va.shape);
                            K.mul(g.data.data(), va.data.data(), tmp.data.data(), g.size());
                            K.colsum_acc(tmp.data.data(), gb.data.data(), r, c);
                        }
                        break;
                    }
                }
                break;
            }
            case Op::MatmulNN: {
                const Tensor& va = nodes_[n.a].val;
                const Tensor& vb = nodes_[n.b].val;
                const std::size_t m = va.shape[0], k = va.shape[1];
                const std::size_t cols = vb.rank() == 2 ? vb.shape[1] : 1;
                if (need_a)  // dA += dC * B^T
                    K.gemm_nt(g.data.data(), vb.data.data(), touch(n.a).data.data(), m, cols, k, true);
                if (need_b)  // dB += A^T * dC
                    K.gemm_tn(va.data.data(), g.data.data(), touch(n.b).data.data(), k, m, cols, true);
                break;
            }
            case Op::MatmulNT: {
                const Tensor& va = nodes_[n.a].val;
                const Tensor& vb = nodes_[n.b].val;
                const std::size_t m = va.shape[0], k = va.shape[1], nb = vb.shape[0];
                if (need_a)  // dA += dC * B
                    K.gemm_nn(g.data.data(), vb.data.data(), touch(n.a).data.data(), m, nb, k, true);
                if (need_b)  // dB += dC^T * A
                    K.gemm_tn(g.data.data(), va.data.data(), touch(n.b).data.data(), nb, m, k, true);
                break;
            }
            case Op::Relu:
                if (need_a)
                    K.relu_grad(nodes_[n.a].val.data.data(), g.data.data(), touch(n.a).data.data(), g.size());
                break;
            case Op::Tanh:
                if (need_a) {
                    Tensor& ga = touch(n.a);
                    for (std::size_t i = 0; i < g.size(); ++i)
                        ga[i] += g[i] * (1.0 - n.val[i] * n.val[i]);
                }
                break;
            case Op::Softplus:
                if (need_a) {
                    Tensor& ga = touch(n.a);
                    Tensor sig = Tensor::zeros(g.shape);
                    kern::sigmoid_v(nodes_[n.a].val.data.data(), sig.data.data(), g.size());
                    K.fmadd(g.data.data(), sig.data.data(), ga.data.data(), g.size());
                }
                break;
            case Op::Square:
                if (need_a) {
                    Tensor& ga = touch(n.a);
                    const Tensor& va = nodes_[n.a].val;
                    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 2.0 * va[i] * g[i];
                }
                break;
            case Op::Exp:
                if (need_a) K.fmadd(g.data.data(), n.val.data.data(), touch(n.a).data.data(), g.size());
                break;
            case Op::MaxWith:
                if (need_a) {
                    Tensor& ga = touch(n.a);
                    const Tensor& va = nodes_[n.a].val;
                    for (std::size_t i = 0; i < g.size(); ++i)
                        if (va[i] > n.carg) ga[i] += g[i];
                }
                break;
            case Op::MinWith:
                if (need_a) {
                    Tensor& ga = touch(n.a);
                    const Tensor& va = nodes_[n.a].val;
                    for (std::size_t i = 0; i < g.size(); ++i)
                        if (va[i] < n.carg) ga[i] += g[i];
                }
                break;
            case Op::Sum:
                if (need_a) {
                    Tensor& ga = touch(n.a);
                    const double gv = g[0];
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gv;
                }
                break;
            case Op::Mean:
                if (need_a) {
                    Tensor& ga = touch(n.a);
                    const double gv = g[0] / static_cast<double>(ga.size());
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gv;
                }
                break;
            case Op::Concat:
                if (need_a)
                    K.axpy(1.0, g.data.data(), touch(n.a).data.data(), nodes_[n.a].val.size());
                if (need_b)
                    K.axpy(1.0, g.data.data() + nodes_[n.a].val.size(), touch(n.b).data.data(),
                           nodes_[n.b].val.size());
                break;
            case Op::SliceRows:
                if (need_a) {
                    Tensor& ga = touch(n.a);
                    const std::size_t c = ga.rank() == 2 ? ga.shape[1] : 1;
                    K.axpy(1.0, g.data.data(), ga.data.data() + n.r0 * c, g.size());
                }
                break;
            case Op::Reshape:
                if (need_a) K.axpy(1.0, g.data.data(), touch(n.a).data.data(), g.size());
                break;
        }
    }
    return grads;
}

namespace ops {

VarId neg(Tape& t, VarId x) { return t.sub(t.constant(0.0), x); }

VarId absval(Tape& t, VarId x) { return t.add(t.relu(x), t.relu(neg(t, x))); }

VarId vmin(Tape& t, VarId a, VarId b) { return t.sub(a, t.relu(t.sub(a, b))); }

VarId vmax(Tape& t, VarId a, VarId b) { return t.add(a, t.relu(t.sub(b, a))); }

VarId dot(Tape& t, VarId a, VarId b) { return t.sum(t.mul(a, b)); }

VarId rowsum(Tape& t, VarId x) {
    const Tensor& v = t.val(x);
    if (v.rank() != 2) throw ShapeError("rowsum: rank-2 tensor required, got " + shape_str(v.shape));
    return t.matmul(x, t.constant(Tensor::full({v.shape[1]}, 1.0)));
}

VarId scale(Tape& t, VarId x, double s) { return t.mul(x, t.constant(s)); }

VarId mse(Tape& t, VarId pred, VarId target) { return t.mean(t.square(t.sub(pred, target))); }

}  // namespace ops

}  // namespace ivp::ad
