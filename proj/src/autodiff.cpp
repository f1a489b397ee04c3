#include "gstpro/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "gstpro/rng.hpp"

namespace gstpro {

namespace {

[[noreturn]] void shape_error(const char* prim, const Matrix& a, const Matrix& b) {
    throw std::invalid_argument(std::string(prim) + ": shape mismatch (" + std::to_string(a.rows) + "x" +
                                std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                                std::to_string(b.cols) + ")");
}

}  // namespace

ValueId Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<ValueId>(nodes_.size() - 1);
}

bool Tape::any_rg(ValueId a, ValueId b) const {
    if (a >= 0 && nodes_[a].rg) return true;
    return b >= 0 && nodes_[b].rg;
}

ValueId Tape::leaf(Matrix v, bool requires_grad) {
    Node n;
    n.val = std::move(v);
    n.rg = requires_grad;
    return push(std::move(n));
}

ValueId Tape::leaf_ref(const Matrix* v, bool requires_grad) {
    Node n;
    n.ref = v;
    n.rg = requires_grad;
    return push(std::move(n));
}

ValueId Tape::add(ValueId a, ValueId b) {
    const Matrix &x = data_of(a), &y = data_of(b);
    if (!x.same_shape(y)) shape_error("add", x, y);
    Node n;
    n.op = Op::kAdd;
    n.in0 = a;
    n.in1 = b;
    n.rg = any_rg(a, b);
    n.val = x;
    for (size_t i = 0; i < y.a.size(); ++i) n.val.a[i] += y.a[i];
    return push(std::move(n));
}

ValueId Tape::sub(ValueId a, ValueId b) {
    const Matrix &x = data_of(a), &y = data_of(b);
    if (!x.same_shape(y)) shape_error("sub", x, y);
    Node n;
    n.op = Op::kSub;
    n.in0 = a;
    n.in1 = b;
    n.rg = any_rg(a, b);
    n.val = x;
    for (size_t i = 0; i < y.a.size(); ++i) n.val.a[i] -= y.a[i];
    return push(std::move(n));
}

ValueId Tape::mul(ValueId a, ValueId b) {
    const Matrix &x = data_of(a), &y = data_of(b);
    if (!x.same_shape(y)) shape_error("mul", x, y);
    Node n;
    n.op = Op::kMul;
    n.in0 = a;
    n.in1 = b;
    n.rg = any_rg(a, b);
    n.val = x;
    for (size_t i = 0; i < y.a.size(); ++i) n.val.a[i] *= y.a[i];
    return push(std::move(n));
}

ValueId Tape::matmul(ValueId a, ValueId b) {
    const Matrix &x = data_of(a), &y = data_of(b);
    if (x.cols != y.rows) shape_error("matmul", x, y);
    Node n;
    n.op = Op::kMatMul;
    n.in0 = a;
    n.in1 = b;
    n.rg = any_rg(a, b);
    n.val = Matrix(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i) {
        double* out = n.val.row(i);
        const double* xr = x.row(i);
        for (int k = 0; k < x.cols; ++k) {
            const double xv = xr[k];
            const double* yr = y.row(k);
            for (int j = 0; j < y.cols; ++j) out[j] += xv * yr[j];
        }
    }
    return push(std::move(n));
}

ValueId Tape::transpose(ValueId a) {
    const Matrix& x = data_of(a);
    Node n;
    n.op = Op::kTranspose;
    n.in0 = a;
    n.rg = any_rg(a);
    n.val = Matrix(x.cols, x.rows);
    for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < x.cols; ++j) n.val(j, i) = x(i, j);
    return push(std::move(n));
}

ValueId Tape::relu(ValueId a) {
    const Matrix& x = data_of(a);
    Node n;
    n.op = Op::kRelu;
    n.in0 = a;
    n.rg = any_rg(a);
    n.val = x;
    for (double& v : n.val.a) v = v > 0.0 ? v : 0.0;
    return push(std::move(n));
}

ValueId Tape::scale(ValueId a, double s) {
    const Matrix& x = data_of(a);
    Node n;
    n.op = Op::kScale;
    n.in0 = a;
    n.scalar = s;
    n.rg = any_rg(a);
    n.val = x;
    for (double& v : n.val.a) v *= s;
    return push(std::move(n));
}

ValueId Tape::concat_rows(const std::vector<ValueId>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
    int rows = 0;
    const int cols = data_of(parts[0]).cols;
    bool rg = false;
    for (ValueId p : parts) {
        const Matrix& m = data_of(p);
        if (m.cols != cols) shape_error("concat_rows", data_of(parts[0]), m);
        rows += m.rows;
        rg = rg || nodes_[p].rg;
    }
    Node n;
    n.op = Op::kConcatRows;
    n.rg = rg;
    n.extra_begin = static_cast<int>(extra_inputs_.size());
    n.extra_count = static_cast<int>(parts.size());
    extra_inputs_.insert(extra_inputs_.end(), parts.begin(), parts.end());
    n.val = Matrix(rows, cols);
    int r = 0;
    for (ValueId p : parts) {
        const Matrix& m = data_of(p);
        std::copy(m.a.begin(), m.a.end(), n.val.a.begin() + static_cast<size_t>(r) * cols);
        r += m.rows;
    }
    return push(std::move(n));
}

ValueId Tape::slice_rows(ValueId a, int first_row, int row_count) {
    const Matrix& x = data_of(a);
    if (first_row < 0 || row_count < 1 || first_row + row_count > x.rows)
        throw std::invalid_argument("slice_rows: range out of bounds");
    Node n;
    n.op = Op::kSliceRows;
    n.in0 = a;
    n.arg0 = first_row;
    n.arg1 = row_count;
    n.rg = any_rg(a);
    n.val = Matrix(row_count, x.cols);
    std::copy(x.row(first_row), x.row(first_row) + static_cast<size_t>(row_count) * x.cols, n.val.a.begin());
    return push(std::move(n));
}

ValueId Tape::sum(ValueId a) {
    const Matrix& x = data_of(a);
    Node n;
    n.op = Op::kSum;
    n.in0 = a;
    n.rg = any_rg(a);
    n.val = Matrix(1, 1);
    double s = 0.0;
    for (double v : x.a) s += v;
    n.val(0, 0) = s;
    return push(std::move(n));
}

ValueId Tape::mean(ValueId a) {
    const Matrix& x = data_of(a);
    if (x.size() == 0) throw std::invalid_argument("mean: empty input");
    Node n;
    n.op = Op::kMean;
    n.in0 = a;
    n.rg = any_rg(a);
    n.val = Matrix(1, 1);
    double s = 0.0;
    for (double v : x.a) s += v;
    n.val(0, 0) = s / static_cast<double>(x.size());
    return push(std::move(n));
}

ValueId Tape::abs(ValueId a) {
    const Matrix& x = data_of(a);
    Node n;
    n.op = Op::kAbs;
    n.in0 = a;
    n.rg = any_rg(a);
    n.val = x;
    for (double& v : n.val.a) v = std::fabs(v);
    return push(std::move(n));
}

ValueId Tape::add_bias(ValueId a, ValueId bias) {
    const Matrix &x = data_of(a), &b = data_of(bias);
    if (b.rows != 1 || b.cols != x.cols) shape_error("add_bias", x, b);
    Node n;
    n.op = Op::kAddBias;
    n.in0 = a;
    n.in1 = bias;
    n.rg = any_rg(a, bias);
    n.val = x;
    for (int i = 0; i < x.rows; ++i) {
        double* r = n.val.row(i);
        for (int j = 0; j < x.cols; ++j) r[j] += b.a[j];
    }
    return push(std::move(n));
}

ValueId Tape::rsqrt(ValueId a) {
    const Matrix& x = data_of(a);
    Node n;
    n.op = Op::kRsqrt;
    n.in0 = a;
    n.rg = any_rg(a);
    n.val = x;
    for (double& v : n.val.a) v = 1.0 / std::sqrt(v);
    return push(std::move(n));
}

ValueId Tape::rowwise_contract(ValueId a, ValueId b) {
    const Matrix &x = data_of(a), &y = data_of(b);
    if (x.rows != y.rows || y.cols < 1 || x.cols % y.cols != 0) shape_error("rowwise_contract", x, y);
    const int q = y.cols;
    const int p = x.cols / q;
    Node n;
    n.op = Op::kRowwiseContract;
    n.in0 = a;
    n.in1 = b;
    n.arg0 = p;
    n.arg1 = q;
    n.rg = any_rg(a, b);
    n.val = Matrix(x.rows, p);
    for (int r = 0; r < x.rows; ++r) {
        const double* xr = x.row(r);
        const double* yr = y.row(r);
        double* out = n.val.row(r);
        for (int i = 0; i < p; ++i) {
            double s = 0.0;
            const double* block = xr + static_cast<size_t>(i) * q;
            for (int j = 0; j < q; ++j) s += block[j] * yr[j];
            out[i] = s;
        }
    }
    return push(std::move(n));
}

const Matrix& Tape::grad(ValueId id) const {
    const Node& n = nodes_[id];
    if (!n.rg) throw std::logic_error("grad: node does not require gradients");
    return n.grad;
}

void Tape::zero_grad() {
    for (Node& n : nodes_)
        if (n.rg && n.grad.size() > 0) n.grad.fill(0.0);
}

void Tape::clear() {
    nodes_.clear();
    extra_inputs_.clear();
}

void Tape::accumulate(ValueId target, const std::function<void(Matrix&)>& fn) {
    Node& t = nodes_[target];
    if (!t.rg) return;
    fn(t.grad);
}

void Tape::backward(ValueId loss) {
    const Matrix& lv = data_of(loss);
    if (lv.rows != 1 || lv.cols != 1) throw std::invalid_argument("backward: loss must be 1x1");
    if (!nodes_[loss].rg) throw std::invalid_argument("backward: loss does not require gradients");

    for (Node& n : nodes_)
        if (n.rg && n.grad.size() == 0) {
            const Matrix& d = n.ref ? *n.ref : n.val;
            n.grad = Matrix(d.rows, d.cols);
        }
    nodes_[loss].grad(0, 0) += 1.0;

    for (ValueId id = loss; id >= 0; --id)
        if (nodes_[id].rg) backward_node(id);
}

void Tape::backward_node(ValueId id) {
    Node& n = nodes_[id];
    const Matrix& g = n.grad;
    switch (n.op) {
        case Op::kLeaf:
            break;
        case Op::kAdd:
            accumulate(n.in0, [&](Matrix& d) { axpy(d, 1.0, g); });
            accumulate(n.in1, [&](Matrix& d) { axpy(d, 1.0, g); });
            break;
        case Op::kSub:
            accumulate(n.in0, [&](Matrix& d) { axpy(d, 1.0, g); });
            accumulate(n.in1, [&](Matrix& d) { axpy(d, -1.0, g); });
            break;
        case Op::kMul: {
            const Matrix &x = data_of(n.in0), &y = data_of(n.in1);
            accumulate(n.in0, [&](Matrix& d) {
                for (size_t i = 0; i < d.a.size(); ++i) d.a[i] += g.a[i] * y.a[i];
            });
            accumulate(n.in1, [&](Matrix& d) {
                for (size_t i = 0; i < d.a.size(); ++i) d.a[i] += g.a[i] * x.a[i];
            });
            break;
        }
        case Op::kMatMul: {
            const Matrix &x = data_of(n.in0), &y = data_of(n.in1);
            accumulate(n.in0, [&](Matrix& d) {
                // dX = g * Y^T
                for (int i = 0; i < d.rows; ++i) {
                    const double* gr = g.row(i);
                    double* dr = d.row(i);
                    for (int k = 0; k < d.cols; ++k) {
                        const double* yr = y.row(k);
                        double s = 0.0;
                        for (int j = 0; j < y.cols; ++j) s += gr[j] * yr[j];
                        dr[k] += s;
                    }
                }
            });
            accumulate(n.in1, [&](Matrix& d) {
                // dY = X^T * g
                for (int i = 0; i < x.rows; ++i) {
                    const double* xr = x.row(i);
                    const double* gr = g.row(i);
                    for (int k = 0; k < x.cols; ++k) {
                        const double xv = xr[k];
                        double* dr = d.row(k);
                        for (int j = 0; j < g.cols; ++j) dr[j] += xv * gr[j];
                    }
                }
            });
            break;
        }
        case Op::kTranspose:
            accumulate(n.in0, [&](Matrix& d) {
                for (int i = 0; i < g.rows; ++i)
                    for (int j = 0; j < g.cols; ++j) d(j, i) += g(i, j);
            });
            break;
        case Op::kRelu: {
            const Matrix& x = data_of(n.in0);
            accumulate(n.in0, [&](Matrix& d) {
                for (size_t i = 0; i < d.a.size(); ++i)
                    if (x.a[i] > 0.0) d.a[i] += g.a[i];
            });
            break;
        }
        case Op::kScale:
            accumulate(n.in0, [&](Matrix& d) { axpy(d, n.scalar, g); });
            break;
        case Op::kConcatRows: {
            int r = 0;
            for (int k = 0; k < n.extra_count; ++k) {
                ValueId part = extra_inputs_[n.extra_begin + k];
                const Matrix& pm = data_of(part);
                int r0 = r;
                accumulate(part, [&](Matrix& d) {
                    for (int i = 0; i < pm.rows; ++i) {
                        const double* gr = g.row(r0 + i);
                        double* dr = d.row(i);
                        for (int j = 0; j < pm.cols; ++j) dr[j] += gr[j];
                    }
                });
                r += pm.rows;
            }
            break;
        }
        case Op::kSliceRows:
            accumulate(n.in0, [&](Matrix& d) {
                for (int i = 0; i < n.arg1; ++i) {
                    const double* gr = g.row(i);
                    double* dr = d.row(n.arg0 + i);
                    for (int j = 0; j < g.cols; ++j) dr[j] += gr[j];
                }
            });
            break;
        case Op::kSum:
            accumulate(n.in0, [&](Matrix& d) {
                const double gv = g(0, 0);
                for (double& v : d.a) v += gv;
            });
            break;
        case Op::kMean:
            accumulate(n.in0, [&](Matrix& d) {
                const double gv = g(0, 0) / static_cast<double>(d.size());
                for (double& v : d.a) v += gv;
            });
            break;
        case Op::kAbs: {
            const Matrix& x = data_of(n.in0);
            accumulate(n.in0, [&](Matrix& d) {
                for (size_t i = 0; i < d.a.size(); ++i) {
                    if (x.a[i] > 0.0)
                        d.a[i] += g.a[i];
                    else if (x.a[i] < 0.0)
                        d.a[i] -= g.a[i];
                }
            });
            break;
        }
        case Op::kAddBias:
            accumulate(n.in0, [&](Matrix& d) { axpy(d, 1.0, g); });
            accumulate(n.in1, [&](Matrix& d) {
                for (int i = 0; i < g.rows; ++i) {
                    const double* gr = g.row(i);
                    for (int j = 0; j < g.cols; ++j) d.a[j] += gr[j];
                }
            });
            break;
        case Op::kRsqrt:
            // y = x^(-1/2)  =>  dy/dx = -y^3 / 2
            accumulate(n.in0, [&](Matrix& d) {
                for (size_t i = 0; i < d.a.size(); ++i) {
                    const double y = n.val.a[i];
                    d.a[i] += g.a[i] * (-0.5 * y * y * y);
                }
            });
            break;
        case Op::kRowwiseContract: {
            const Matrix &x = data_of(n.in0), &y = data_of(n.in1);
            const int p = n.arg0, q = n.arg1;
            accumulate(n.in0, [&](Matrix& d) {
                for (int r = 0; r < x.rows; ++r) {
                    const double* gr = g.row(r);
                    const double* yr = y.row(r);
                    double* dr = d.row(r);
                    for (int i = 0; i < p; ++i)
                        for (int j = 0; j < q; ++j) dr[static_cast<size_t>(i) * q + j] += gr[i] * yr[j];
                }
            });
            accumulate(n.in1, [&](Matrix& d) {
                for (int r = 0; r < x.rows; ++r) {
                    const double* gr = g.row(r);
                    const double* xr = x.row(r);
                    double* dr = d.row(r);
                    for (int i = 0; i < p; ++i) {
                        const double gv = gr[i];
                        const double* block = xr + static_cast<size_t>(i) * q;
                        for (int j = 0; j < q; ++j) dr[j] += gv * block[j];
                    }
                }
            });
            break;
        }
    }
}

GradCheckResult grad_check(const std::function<ValueId(Tape&, const std::vector<ValueId>&)>& build_loss,
                           std::vector<Matrix>& params, double eps, int max_coords_per_param,
                           double min_magnitude, uint64_t sample_seed) {
    // Analytic pass.
    std::vector<Matrix> analytic;
    {
        Tape tape;
        std::vector<ValueId> ids;
        ids.reserve(params.size());
        for (auto& p : params) ids.push_back(tape.leaf_ref(&p, true));
        ValueId loss = build_loss(tape, ids);
        tape.backward(loss);
        for (ValueId id : ids) analytic.push_back(tape.grad(id));
    }

    auto eval_loss = [&]() {
        Tape tape;
        std::vector<ValueId> ids;
        ids.reserve(params.size());
        for (auto& p : params) ids.push_back(tape.leaf_ref(&p, false));
        return tape.val(build_loss(tape, ids))(0, 0);
    };

    SplitMix64 rng(sample_seed);
    GradCheckResult result;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Matrix& p = params[pi];
        const size_t count = p.size();
        std::vector<size_t> coords;
        if (max_coords_per_param < 0 || count <= static_cast<size_t>(max_coords_per_param)) {
            coords.resize(count);
            for (size_t i = 0; i < count; ++i) coords[i] = i;
        } else {
            for (int i = 0; i < max_coords_per_param; ++i) coords.push_back(rng.below(count));
        }
        for (size_t ci : coords) {
            const double saved = p.a[ci];
            p.a[ci] = saved + eps;
            const double up = eval_loss();
            p.a[ci] = saved - eps;
            const double down = eval_loss();
            p.a[ci] = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double exact = analytic[pi].a[ci];
            if (std::fabs(exact) < min_magnitude && std::fabs(numeric) < min_magnitude) continue;
            const double rel = std::fabs(exact - numeric) / std::max({std::fabs(exact), std::fabs(numeric), 1e-8});
            result.max_rel_error = std::max(result.max_rel_error, rel);
            ++result.coords_checked;
        }
    }
    return result;
}

}  // namespace gstpro
