#pragma once

#include <map>
#include <string>
#include <vector>

#include "flowmix/points.hpp"

namespace flowmix::synth {

enum class Family {
    TwoIntervals1d,
    TwoSquares2d,
    Ring2d,
    Checkerboard2d,
    Sphere3d,
    Torus3d,
    WingedBody3d,
    TwoBoxes3d,
};

Family family_from_name(const std::string& name);
std::string family_name(Family f);
int family_dim(Family f);
bool family_has_analytic_density(Family f);

// Per-family parameters with defaults; a sampled parameter set defines one
// "shape" of the family. Unknown keys or out-of-range values are input errors.
using Params = std::map<std::string, double>;
Params default_params(Family f);

// i.i.d. points from the family's region/surface measure; deterministic in
// (family, params, n, seed). Labels carry the semantic part id where the
// family has nameable parts (cluster / wing / fuselage ...).
PointCloud sample_shape(Family f, const Params& p, int n, std::uint64_t seed);

// Random parameter set for one shape of the family (jitter around defaults).
Params sample_params(Family f, Rng& rng);

// Differential entropy of the sigma-convolved density (numeric quadrature);
// the floor any model's NLL can reach. Only for families with closed-form
// densities.
double analytic_nll(Family f, const Params& p, double sigma_noise);

// Uniform random rotation (SO(3) for d=3, planar for d=2). Returns the applied
// rotation matrix in row-major order via `rot_out` when non-null.
PointCloud random_rotation(const PointCloud& pc, Rng& rng, std::vector<double>* rot_out = nullptr);

// A generated dataset: shapes plus its 70/10/20 split.
struct Dataset {
    Family family = Family::TwoSquares2d;
    int points_per_shape = 0;
    std::vector<PointCloud> shapes;
    std::vector<Params> params;
    std::vector<int> train_idx, val_idx, test_idx;
};

Dataset make_dataset(Family f, int n_shapes, int points_per_shape, std::uint64_t seed);

} // namespace flowmix::synth
