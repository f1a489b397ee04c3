#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gstpro/autodiff.hpp"
#include "gstpro/matrix.hpp"
#include "gstpro/ode.hpp"
#include "gstpro/series.hpp"
#include "gstpro/spline.hpp"

namespace gstpro {

struct ModelConfig {
    int n_channels = 0;
    int window = 5;
    int hidden_dim_h = 32;
    int hidden_dim_z = 32;
    int fc_hidden = 128;
    int fc_layers = 3;
    int node_embed_dim = 16;
    SolverKind solver = SolverKind::kRk4;
    int steps_per_unit = 2;
    bool include_time_channel = true;
    bool temporal_shared = false;  // share the per-node temporal stacks (large N escape hatch)

    /// Per-node control dimension: the channel value plus optional time.
    int control_dims() const { return include_time_channel ? 2 : 1; }

    void validate() const;
};

/// Flat, ordered registry of trainable matrices. The order is the layout
/// contract for gradients, optimizer state and checkpoints.
struct ParamSet {
    std::vector<std::string> names;
    std::vector<Matrix> mats;

    int add(std::string name, Matrix m) {
        names.push_back(std::move(name));
        mats.push_back(std::move(m));
        return static_cast<int>(mats.size()) - 1;
    }
    size_t count() const { return mats.size(); }
};

struct HiddenState {
    Matrix h;  // N x d_h
    Matrix z;  // N x d_z
};

/// Coupled spatial/temporal neural CDE forecaster.
///
/// The hidden pair (H, Z) evolves over a window's control path: graph message
/// passing over a learned adjacency drives H, and H in turn drives Z through
/// per-node stacks; the one-step-ahead forecast is a linear readout of Z at
/// the window end.
class DgNcdeModel {
public:
    DgNcdeModel() = default;

    static DgNcdeModel init(const ModelConfig& cfg, uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }

    /// relu(E E^T) with unit self-loops, symmetrically normalized by degree.
    /// Plain-matrix route, kept independent of the tape path for testing.
    static Matrix normalized_adjacency(const Matrix& embeddings);

    /// Spatial CDE field g(H): one d_h x d_x block per node, flattened
    /// row-major to N x (d_h * d_x).
    Matrix spatial_field(const Matrix& h_state) const;

    /// Temporal CDE field f(Z): one d_z x d_h block per node, flattened
    /// row-major to N x (d_z * d_h).
    Matrix temporal_field(const Matrix& z_state) const;

    /// Integrate the augmented (H, Z) system over the path's span with the
    /// configured fixed-step solver. Throws on non-finite state.
    HiddenState integrate(const WindowPath& path) const;

    /// One-step-ahead forecast in normalized units.
    std::vector<double> forecast(const Window& window) const;

    // Tape plumbing, used by the trainer and by forecast() itself.
    struct TapeBindings {
        std::vector<ValueId> params;
        ValueId adjacency = -1;
    };
    TapeBindings bind(Tape& tape, bool requires_grad) const;
    ValueId forecast_on_tape(Tape& tape, const TapeBindings& b, const WindowPath& path) const;  // N x 1
    ValueId loss_on_tape(Tape& tape, const TapeBindings& b, const Window& window) const;        // 1 x 1

    struct ParamGroup {
        std::string name;
        std::vector<int> indices;
    };
    std::vector<ParamGroup> param_groups() const;

private:
    struct FcStackRef {
        std::vector<int> weights;
        std::vector<int> biases;
    };

    FcStackRef init_stack(const std::string& prefix, int in_dim, int out_dim, struct SplitMix64& rng);
    ValueId apply_stack(Tape& tape, const TapeBindings& b, const FcStackRef& s, ValueId x) const;
    ValueId adjacency_on_tape(Tape& tape, ValueId embed) const;
    ValueId spatial_field_on_tape(Tape& tape, const TapeBindings& b, ValueId h_state) const;
    ValueId temporal_field_on_tape(Tape& tape, const TapeBindings& b, ValueId z_state) const;
    std::pair<ValueId, ValueId> integrate_on_tape(Tape& tape, const TapeBindings& b, const WindowPath& path) const;
    Matrix control_matrix(const WindowPath& path, double t, bool derivative) const;

    ModelConfig cfg_;
    ParamSet params_;
    int embed_ = -1;
    FcStackRef spatial_fc0_, spatial_fc1_;
    int spatial_mix_ = -1;
    std::vector<FcStackRef> temporal_stacks_;
    std::vector<int> temporal_proj_w_, temporal_proj_b_;
    int init_h_w_ = -1, init_h_b_ = -1;
    int init_z_w_ = -1, init_z_b_ = -1;
    int head_w_ = -1, head_b_ = -1;
};

}  // namespace gstpro
