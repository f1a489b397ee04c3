#include "gstpro/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace gstpro {

namespace {

constexpr char kMagic[8] = {'G', 'S', 'T', 'P', 'C', 'K', 'P', '1'};
constexpr uint32_t kVersion = 1;

void put_u64(std::ostream& out, uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}

void put_u32(std::ostream& out, uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

void put_f64(std::ostream& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

void put_string(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in) {
    uint64_t bits = get_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

std::string get_string(std::istream& in) {
    uint32_t len = get_u32(in);
    if (len > (1u << 20)) throw std::runtime_error("checkpoint: implausible string length");
    std::string s(len, '\0');
    in.read(s.data(), len);
    return s;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(kMagic, 8);
    put_u32(out, kVersion);

    const ModelConfig& c = ckpt.model.config();
    put_u32(out, static_cast<uint32_t>(c.n_channels));
    put_u32(out, static_cast<uint32_t>(c.window));
    put_u32(out, static_cast<uint32_t>(c.hidden_dim_h));
    put_u32(out, static_cast<uint32_t>(c.hidden_dim_z));
    put_u32(out, static_cast<uint32_t>(c.fc_hidden));
    put_u32(out, static_cast<uint32_t>(c.fc_layers));
    put_u32(out, static_cast<uint32_t>(c.node_embed_dim));
    put_u32(out, c.solver == SolverKind::kEuler ? 0u : 1u);
    put_u32(out, static_cast<uint32_t>(c.steps_per_unit));
    put_u32(out, c.include_time_channel ? 1u : 0u);
    put_u32(out, c.temporal_shared ? 1u : 0u);

    put_u32(out, static_cast<uint32_t>(ckpt.scorer_window));
    put_f64(out, ckpt.sigma_floor);
    put_f64(out, ckpt.val_ratio);

    put_u32(out, static_cast<uint32_t>(ckpt.channel_names.size()));
    for (const auto& name : ckpt.channel_names) put_string(out, name);
    for (double v : ckpt.normalizer.min_v) put_f64(out, v);
    for (double v : ckpt.normalizer.max_v) put_f64(out, v);

    const ParamSet& p = ckpt.model.params();
    put_u32(out, static_cast<uint32_t>(p.count()));
    for (size_t i = 0; i < p.count(); ++i) {
        put_string(out, p.names[i]);
        put_u32(out, static_cast<uint32_t>(p.mats[i].rows));
        put_u32(out, static_cast<uint32_t>(p.mats[i].cols));
        for (double v : p.mats[i].a) put_f64(out, v);
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error(path + ": not a model checkpoint");
    if (get_u32(in) != kVersion) throw std::runtime_error(path + ": unsupported checkpoint version");

    ModelConfig c;
    c.n_channels = static_cast<int>(get_u32(in));
    c.window = static_cast<int>(get_u32(in));
    c.hidden_dim_h = static_cast<int>(get_u32(in));
    c.hidden_dim_z = static_cast<int>(get_u32(in));
    c.fc_hidden = static_cast<int>(get_u32(in));
    c.fc_layers = static_cast<int>(get_u32(in));
    c.node_embed_dim = static_cast<int>(get_u32(in));
    c.solver = get_u32(in) == 0 ? SolverKind::kEuler : SolverKind::kRk4;
    c.steps_per_unit = static_cast<int>(get_u32(in));
    c.include_time_channel = get_u32(in) != 0;
    c.temporal_shared = get_u32(in) != 0;

    Checkpoint ckpt;
    ckpt.scorer_window = static_cast<int>(get_u32(in));
    ckpt.sigma_floor = get_f64(in);
    ckpt.val_ratio = get_f64(in);

    const uint32_t names = get_u32(in);
    for (uint32_t i = 0; i < names; ++i) ckpt.channel_names.push_back(get_string(in));
    ckpt.normalizer.min_v.resize(names);
    ckpt.normalizer.max_v.resize(names);
    for (auto& v : ckpt.normalizer.min_v) v = get_f64(in);
    for (auto& v : ckpt.normalizer.max_v) v = get_f64(in);

    ckpt.model = DgNcdeModel::init(c, 0);
    ParamSet& p = ckpt.model.params();
    const uint32_t count = get_u32(in);
    if (count != p.count()) throw std::runtime_error(path + ": parameter count does not match config");
    for (uint32_t i = 0; i < count; ++i) {
        const std::string name = get_string(in);
        if (name != p.names[i]) throw std::runtime_error(path + ": unexpected parameter '" + name + "'");
        const int rows = static_cast<int>(get_u32(in));
        const int cols = static_cast<int>(get_u32(in));
        if (rows != p.mats[i].rows || cols != p.mats[i].cols)
            throw std::runtime_error(path + ": shape mismatch for '" + name + "'");
        for (double& v : p.mats[i].a) v = get_f64(in);
    }
    if (!in) throw std::runtime_error(path + ": truncated checkpoint");
    return ckpt;
}

}  // namespace gstpro
