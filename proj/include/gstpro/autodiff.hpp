#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gstpro/matrix.hpp"

namespace gstpro {

using ValueId = int32_t;

/// Reverse-mode differentiation tape over dense matrices.
///
/// Every operation records one node; backward() walks the record in reverse
/// and accumulates d(loss)/d(node) into the grad buffer of every node that
/// requires gradients. A tape is single-threaded; distinct tapes may live on
/// distinct threads.
class Tape {
public:
    enum class Op : uint8_t {
        kLeaf,
        kAdd,
        kSub,
        kMul,       // elementwise
        kMatMul,
        kTranspose,
        kRelu,
        kScale,     // by compile-time constant scalar
        kConcatRows,
        kSliceRows,
        kSum,       // all entries -> 1x1
        kMean,      // all entries -> 1x1
        kAbs,
        kAddBias,   // matrix + row vector, broadcast over rows
        kRsqrt,     // elementwise x^(-1/2); entries must be positive
        kRowwiseContract,
    };

    ValueId leaf(Matrix v, bool requires_grad = false);
    /// Leaf whose data lives outside the tape (e.g. model parameters). The
    /// pointee must outlive the tape and stay unchanged until backward().
    ValueId leaf_ref(const Matrix* v, bool requires_grad);

    ValueId add(ValueId a, ValueId b);
    ValueId sub(ValueId a, ValueId b);
    ValueId mul(ValueId a, ValueId b);
    ValueId matmul(ValueId a, ValueId b);
    ValueId transpose(ValueId a);
    ValueId relu(ValueId a);
    ValueId scale(ValueId a, double s);
    ValueId concat_rows(const std::vector<ValueId>& parts);
    ValueId slice_rows(ValueId a, int first_row, int row_count);
    ValueId sum(ValueId a);
    ValueId mean(ValueId a);
    ValueId abs(ValueId a);
    ValueId add_bias(ValueId a, ValueId bias);
    ValueId rsqrt(ValueId a);

    /// Per-row contraction: a is R x (p*q), read as R row-major p x q blocks;
    /// b is R x q. Output is R x p with out[r,i] = sum_j a[r, i*q+j] * b[r,j].
    /// This is the tensor-field contraction of the CDE right-hand side.
    ValueId rowwise_contract(ValueId a, ValueId b);

    const Matrix& val(ValueId id) const { return data_of(id); }
    const Matrix& grad(ValueId id) const;
    bool requires_grad(ValueId id) const { return nodes_[id].rg; }

    /// Populate grads of every requires-grad node reachable from `loss`,
    /// which must be 1x1. Grads accumulate across calls; see zero_grad().
    void backward(ValueId loss);
    void zero_grad();

    size_t size() const { return nodes_.size(); }
    void clear();

private:
    struct Node {
        Op op = Op::kLeaf;
        ValueId in0 = -1, in1 = -1;
        double scalar = 0.0;
        int arg0 = 0, arg1 = 0;          // slice bounds / contraction dims
        int extra_begin = 0, extra_count = 0;
        Matrix val;
        const Matrix* ref = nullptr;
        Matrix grad;
        bool rg = false;
    };

    const Matrix& data_of(ValueId id) const {
        const Node& n = nodes_[id];
        return n.ref ? *n.ref : n.val;
    }

    ValueId push(Node n);
    bool any_rg(ValueId a, ValueId b = -1) const;
    void backward_node(ValueId id);
    void accumulate(ValueId target, const std::function<void(Matrix&)>& fn);

    std::vector<Node> nodes_;
    std::vector<ValueId> extra_inputs_;  // pooled inputs for concat nodes
};

/// Max relative finite-difference error over sampled parameter coordinates.
/// `build_loss` must construct the scalar loss on the given tape from leaf
/// ids that alias `params` (in order). Coordinates where both the analytic
/// and numeric gradients are below `min_magnitude` are skipped.
struct GradCheckResult {
    double max_rel_error = 0.0;
    int coords_checked = 0;
};

GradCheckResult grad_check(const std::function<ValueId(Tape&, const std::vector<ValueId>&)>& build_loss,
                           std::vector<Matrix>& params, double eps, int max_coords_per_param = -1,
                           double min_magnitude = 0.0, uint64_t sample_seed = 0);

}  // namespace gstpro
