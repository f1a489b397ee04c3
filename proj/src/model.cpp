#include "gstpro/model.hpp"

#include <cmath>
#include <stdexcept>

#include "gstpro/rng.hpp"

namespace gstpro {

void ModelConfig::validate() const {
    if (n_channels < 1) throw std::invalid_argument("ModelConfig: n_channels must be >= 1");
    if (window < 2) throw std::invalid_argument("ModelConfig: window must be >= 2");
    if (hidden_dim_h < 1 || hidden_dim_z < 1 || fc_hidden < 1 || fc_layers < 1 || node_embed_dim < 1)
        throw std::invalid_argument("ModelConfig: dimensions must be >= 1");
    if (steps_per_unit < 1) throw std::invalid_argument("ModelConfig: steps_per_unit must be >= 1");
}

namespace {

Matrix uniform_init(int rows, int cols, double bound, SplitMix64& rng) {
    Matrix m(rows, cols);
    for (double& v : m.a) v = rng.uniform(-bound, bound);
    return m;
}

}  // namespace

DgNcdeModel::FcStackRef DgNcdeModel::init_stack(const std::string& prefix, int in_dim, int out_dim, SplitMix64& rng) {
    FcStackRef s;
    const int hidden = cfg_.fc_hidden;
    int prev = in_dim;
    for (int layer = 0; layer <= cfg_.fc_layers; ++layer) {
        const int next = (layer == cfg_.fc_layers) ? out_dim : hidden;
        const double bound = 1.0 / std::sqrt(static_cast<double>(prev));
        s.weights.push_back(params_.add(prefix + ".w" + std::to_string(layer), uniform_init(prev, next, bound, rng)));
        s.biases.push_back(params_.add(prefix + ".b" + std::to_string(layer), uniform_init(1, next, bound, rng)));
        prev = next;
    }
    return s;
}

DgNcdeModel DgNcdeModel::init(const ModelConfig& cfg, uint64_t seed) {
    cfg.validate();
    DgNcdeModel m;
    m.cfg_ = cfg;
    SplitMix64 rng(seed);

    const int n = cfg.n_channels;
    const int dh = cfg.hidden_dim_h;
    const int dz = cfg.hidden_dim_z;
    const int dx = cfg.control_dims();

    Matrix embed(n, cfg.node_embed_dim);
    for (double& v : embed.a) v = 0.1 * rng.normal();
    m.embed_ = m.params_.add("node_embeddings", std::move(embed));

    m.spatial_fc0_ = m.init_stack("spatial.fc0", dh, dh, rng);
    {
        const double bound = 1.0 / std::sqrt(static_cast<double>(dh));
        m.spatial_mix_ = m.params_.add("spatial.mix", uniform_init(dh, dh, bound, rng));
    }
    m.spatial_fc1_ = m.init_stack("spatial.fc1", dh, dh * dx, rng);

    const int stacks = cfg.temporal_shared ? 1 : n;
    for (int i = 0; i < stacks; ++i) {
        const std::string prefix = "temporal.node" + std::to_string(i);
        m.temporal_stacks_.push_back(m.init_stack(prefix + ".fc", dz, cfg.fc_hidden, rng));
        const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.fc_hidden));
        m.temporal_proj_w_.push_back(
            m.params_.add(prefix + ".proj_w", uniform_init(cfg.fc_hidden, dz * dh, bound, rng)));
        m.temporal_proj_b_.push_back(m.params_.add(prefix + ".proj_b", uniform_init(1, dz * dh, bound, rng)));
    }

    {
        const double bx = 1.0 / std::sqrt(static_cast<double>(dx));
        m.init_h_w_ = m.params_.add("init_h.w", uniform_init(dx, dh, bx, rng));
        m.init_h_b_ = m.params_.add("init_h.b", uniform_init(1, dh, bx, rng));
        const double bh = 1.0 / std::sqrt(static_cast<double>(dh));
        m.init_z_w_ = m.params_.add("init_z.w", uniform_init(dh, dz, bh, rng));
        m.init_z_b_ = m.params_.add("init_z.b", uniform_init(1, dz, bh, rng));
        const double bz = 1.0 / std::sqrt(static_cast<double>(dz));
        m.head_w_ = m.params_.add("head.w", uniform_init(dz, 1, bz, rng));
        m.head_b_ = m.params_.add("head.b", uniform_init(1, 1, bz, rng));
    }
    return m;
}

Matrix DgNcdeModel::normalized_adjacency(const Matrix& embeddings) {
    const int n = embeddings.rows;
    Matrix adj(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < embeddings.cols; ++k) s += embeddings(i, k) * embeddings(j, k);
            adj(i, j) = s > 0.0 ? s : 0.0;
        }
    for (int i = 0; i < n; ++i) adj(i, i) += 1.0;  // self-loops
    std::vector<double> inv_sqrt_deg(n);
    for (int i = 0; i < n; ++i) {
        double deg = 0.0;
        for (int j = 0; j < n; ++j) deg += adj(i, j);
        inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) adj(i, j) *= inv_sqrt_deg[i] * inv_sqrt_deg[j];
    return adj;
}

DgNcdeModel::TapeBindings DgNcdeModel::bind(Tape& tape, bool requires_grad) const {
    TapeBindings b;
    b.params.reserve(params_.count());
    for (const auto& m : params_.mats) b.params.push_back(tape.leaf_ref(&m, requires_grad));
    b.adjacency = adjacency_on_tape(tape, b.params[embed_]);
    return b;
}

ValueId DgNcdeModel::adjacency_on_tape(Tape& tape, ValueId embed) const {
    const int n = cfg_.n_channels;
    ValueId adj = tape.relu(tape.matmul(embed, tape.transpose(embed)));
    ValueId adj_loops = tape.add(adj, tape.leaf(identity(n)));
    ValueId deg = tape.matmul(adj_loops, tape.leaf(Matrix(n, 1, 1.0)));
    ValueId inv_sqrt = tape.rsqrt(deg);
    ValueId outer = tape.matmul(inv_sqrt, tape.transpose(inv_sqrt));
    return tape.mul(adj_loops, outer);
}

ValueId DgNcdeModel::apply_stack(Tape& tape, const TapeBindings& b, const FcStackRef& s, ValueId x) const {
    const int layers = static_cast<int>(s.weights.size());
    for (int i = 0; i < layers; ++i) {
        x = tape.add_bias(tape.matmul(x, b.params[s.weights[i]]), b.params[s.biases[i]]);
        if (i + 1 < layers) x = tape.relu(x);
    }
    return x;
}

ValueId DgNcdeModel::spatial_field_on_tape(Tape& tape, const TapeBindings& b, ValueId h_state) const {
    ValueId activated = tape.relu(apply_stack(tape, b, spatial_fc0_, h_state));
    ValueId mixed = tape.matmul(tape.matmul(b.adjacency, activated), b.params[spatial_mix_]);
    return apply_stack(tape, b, spatial_fc1_, mixed);
}

ValueId DgNcdeModel::temporal_field_on_tape(Tape& tape, const TapeBindings& b, ValueId z_state) const {
    std::vector<ValueId> rows;
    rows.reserve(cfg_.n_channels);
    for (int node = 0; node < cfg_.n_channels; ++node) {
        const int si = cfg_.temporal_shared ? 0 : node;
        ValueId zr = tape.slice_rows(z_state, node, 1);
        ValueId u = tape.relu(apply_stack(tape, b, temporal_stacks_[si], zr));
        rows.push_back(tape.add_bias(tape.matmul(u, b.params[temporal_proj_w_[si]]), b.params[temporal_proj_b_[si]]));
    }
    return tape.concat_rows(rows);
}

Matrix DgNcdeModel::control_matrix(const WindowPath& path, double t, bool derivative) const {
    const int n = cfg_.n_channels;
    Matrix out(n, cfg_.control_dims());
    std::vector<double> v = derivative ? path.eval_derivative(t) : path.eval(t);
    if (static_cast<int>(v.size()) != path.dims() || static_cast<int>(path.splines.size()) != n)
        throw std::invalid_argument("control_matrix: path/channel mismatch");
    for (int i = 0; i < n; ++i) {
        out(i, 0) = v[i];
        if (cfg_.include_time_channel) out(i, 1) = v[n];  // shared time coordinate
    }
    return out;
}

Matrix DgNcdeModel::spatial_field(const Matrix& h_state) const {
    if (h_state.rows != cfg_.n_channels || h_state.cols != cfg_.hidden_dim_h)
        throw std::invalid_argument("spatial_field: H must be N x d_h");
    Tape tape;
    TapeBindings b = bind(tape, false);
    return tape.val(spatial_field_on_tape(tape, b, tape.leaf(h_state)));
}

Matrix DgNcdeModel::temporal_field(const Matrix& z_state) const {
    if (z_state.rows != cfg_.n_channels || z_state.cols != cfg_.hidden_dim_z)
        throw std::invalid_argument("temporal_field: Z must be N x d_z");
    Tape tape;
    TapeBindings b = bind(tape, false);
    return tape.val(temporal_field_on_tape(tape, b, tape.leaf(z_state)));
}

namespace {

struct TapeState {
    ValueId h;
    ValueId z;
};

}  // namespace

std::pair<ValueId, ValueId> DgNcdeModel::integrate_on_tape(Tape& tape, const TapeBindings& b,
                                                           const WindowPath& path) const {
    // Initial values H(0) = FC(X(t0)), Z(0) = FC(H(0)).
    ValueId x0 = tape.leaf(control_matrix(path, 0.0, false));
    TapeState state;
    state.h = tape.add_bias(tape.matmul(x0, b.params[init_h_w_]), b.params[init_h_b_]);
    state.z = tape.add_bias(tape.matmul(state.h, b.params[init_z_w_]), b.params[init_z_b_]);

    // Augmented system: dH = g(H) dX, dZ = f(Z) dH.
    auto deriv = [&](double t, const TapeState& s) {
        ValueId dx = tape.leaf(control_matrix(path, t, true));
        ValueId dh = tape.rowwise_contract(spatial_field_on_tape(tape, b, s.h), dx);
        ValueId dz = tape.rowwise_contract(temporal_field_on_tape(tape, b, s.z), dh);
        return TapeState{dh, dz};
    };
    auto axpy_state = [&](const TapeState& y, double s, const TapeState& k) {
        return TapeState{tape.add(y.h, tape.scale(k.h, s)), tape.add(y.z, tape.scale(k.z, s))};
    };

    const double h_step = 1.0 / cfg_.steps_per_unit;
    const long long steps = static_cast<long long>(cfg_.window - 1) * cfg_.steps_per_unit;
    for (long long k = 0; k < steps; ++k) {
        state = solver_step(cfg_.solver, state, k * h_step, h_step, deriv, axpy_state);
        if (!tape.val(state.h).all_finite() || !tape.val(state.z).all_finite())
            throw std::runtime_error("integrate: non-finite state at solver step " + std::to_string(k + 1));
    }
    return {state.h, state.z};
}

ValueId DgNcdeModel::forecast_on_tape(Tape& tape, const TapeBindings& b, const WindowPath& path) const {
    auto [h, z] = integrate_on_tape(tape, b, path);
    (void)h;
    return tape.add_bias(tape.matmul(z, b.params[head_w_]), b.params[head_b_]);  // N x 1
}

ValueId DgNcdeModel::loss_on_tape(Tape& tape, const TapeBindings& b, const Window& window) const {
    WindowPath path = build_window_path(window, cfg_.include_time_channel);
    ValueId yhat = forecast_on_tape(tape, b, path);
    const int n = cfg_.n_channels;
    Matrix target(n, 1), target_mask(n, 1);
    for (int i = 0; i < n; ++i) {
        target(i, 0) = window.target[i];
        target_mask(i, 0) = window.target_mask[i];
    }
    ValueId diff = tape.abs(tape.sub(yhat, tape.leaf(target)));
    ValueId masked = tape.mul(diff, tape.leaf(target_mask));
    return tape.scale(tape.sum(masked), 1.0 / n);
}

HiddenState DgNcdeModel::integrate(const WindowPath& path) const {
    Tape tape;
    TapeBindings b = bind(tape, false);
    auto [h, z] = integrate_on_tape(tape, b, path);
    return HiddenState{tape.val(h), tape.val(z)};
}

std::vector<double> DgNcdeModel::forecast(const Window& window) const {
    WindowPath path = build_window_path(window, cfg_.include_time_channel);
    Tape tape;
    TapeBindings b = bind(tape, false);
    ValueId yhat = forecast_on_tape(tape, b, path);
    const Matrix& v = tape.val(yhat);
    return std::vector<double>(v.a.begin(), v.a.end());
}

std::vector<DgNcdeModel::ParamGroup> DgNcdeModel::param_groups() const {
    std::vector<ParamGroup> groups(5);
    groups[0].name = "embeddings";
    groups[1].name = "spatial";
    groups[2].name = "temporal";
    groups[3].name = "init_projections";
    groups[4].name = "head";
    for (size_t i = 0; i < params_.count(); ++i) {
        const std::string& n = params_.names[i];
        int g = 1;
        if (n.rfind("node_embeddings", 0) == 0)
            g = 0;
        else if (n.rfind("spatial", 0) == 0)
            g = 1;
        else if (n.rfind("temporal", 0) == 0)
            g = 2;
        else if (n.rfind("init_", 0) == 0)
            g = 3;
        else if (n.rfind("head", 0) == 0)
            g = 4;
        groups[g].indices.push_back(static_cast<int>(i));
    }
    return groups;
}

}  // namespace gstpro
