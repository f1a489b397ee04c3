#pragma once

#include <string>
#include <vector>

#include "gstpro/model.hpp"
#include "gstpro/series.hpp"

namespace gstpro {

/// Everything `score` needs to run self-contained: the trained model, the
/// normalizer fitted on the training split, and the scorer settings chosen
/// at training time.
struct Checkpoint {
    DgNcdeModel model;
    Normalizer normalizer;
    std::vector<std::string> channel_names;
    int scorer_window = 50000;
    double sigma_floor = 1e-4;
    double val_ratio = 0.1;
};

/// Binary container, little-endian, 64-bit IEEE doubles, matrices row-major.
/// Layout: magic "GSTPCKP1", u32 version, config scalars, scorer settings,
/// channel names, normalizer vectors, then the named parameter matrices in
/// registry order. Round-trips bit-exactly.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace gstpro
