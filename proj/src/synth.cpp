#include "flowmix/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace flowmix {

NormalizeParams normalize_cloud(PointCloud& pc) {
    NormalizeParams p;
    p.center.assign(pc.d, 0.0);
    const int n = pc.size();
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < pc.d; ++c) p.center[c] += pc.at(i, c);
    for (int c = 0; c < pc.d; ++c) p.center[c] /= n;
    double maxn = 0.0;
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int c = 0; c < pc.d; ++c) {
            pc.at(i, c) -= p.center[c];
            s += pc.at(i, c) * pc.at(i, c);
        }
        maxn = std::max(maxn, std::sqrt(s));
    }
    p.scale = maxn > 0.0 ? maxn : 1.0;
    for (double& v : pc.pts) v /= p.scale;
    return p;
}

void denormalize_cloud(PointCloud& pc, const NormalizeParams& p) {
    for (int i = 0; i < pc.size(); ++i)
        for (int c = 0; c < pc.d; ++c) pc.at(i, c) = pc.at(i, c) * p.scale + p.center[c];
}

} // namespace flowmix

namespace flowmix::synth {

namespace {

double get(const Params& p, const std::string& key) {
    auto it = p.find(key);
    if (it == p.end()) throw InputError("missing family parameter: " + key);
    return it->second;
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw InputError("family parameter out of range: " + msg);
}

// Uniform point on an axis-aligned box surface (half extents hx, hy, hz).
void box_surface_point(Rng& rng, double hx, double hy, double hz, double* out) {
    const double ax = hy * hz, ay = hx * hz, az = hx * hy; // face areas / 4
    const double total = 2.0 * (ax + ay + az);
    double u = rng.u01() * total;
    int axis;
    double sign;
    if (u < 2.0 * ax) { axis = 0; sign = (u < ax) ? 1.0 : -1.0; }
    else if (u < 2.0 * ax + 2.0 * ay) { axis = 1; sign = (u < 2.0 * ax + ay) ? 1.0 : -1.0; }
    else { axis = 2; sign = (u < 2.0 * ax + 2.0 * ay + az) ? 1.0 : -1.0; }
    out[0] = rng.uniform(-hx, hx);
    out[1] = rng.uniform(-hy, hy);
    out[2] = rng.uniform(-hz, hz);
    out[axis] = sign * (axis == 0 ? hx : axis == 1 ? hy : hz);
}

} // namespace

Family family_from_name(const std::string& name) {
    if (name == "two_intervals_1d") return Family::TwoIntervals1d;
    if (name == "two_squares_2d") return Family::TwoSquares2d;
    if (name == "ring_2d") return Family::Ring2d;
    if (name == "checkerboard_2d") return Family::Checkerboard2d;
    if (name == "sphere_3d") return Family::Sphere3d;
    if (name == "torus_3d") return Family::Torus3d;
    if (name == "winged_body_3d") return Family::WingedBody3d;
    if (name == "two_boxes_3d") return Family::TwoBoxes3d;
    throw InputError("unknown shape family: " + name);
}

std::string family_name(Family f) {
    switch (f) {
        case Family::TwoIntervals1d: return "two_intervals_1d";
        case Family::TwoSquares2d: return "two_squares_2d";
        case Family::Ring2d: return "ring_2d";
        case Family::Checkerboard2d: return "checkerboard_2d";
        case Family::Sphere3d: return "sphere_3d";
        case Family::Torus3d: return "torus_3d";
        case Family::WingedBody3d: return "winged_body_3d";
        case Family::TwoBoxes3d: return "two_boxes_3d";
    }
    throw InputError("unknown family");
}

int family_dim(Family f) {
    switch (f) {
        case Family::TwoIntervals1d: return 1;
        case Family::TwoSquares2d:
        case Family::Ring2d:
        case Family::Checkerboard2d: return 2;
        default: return 3;
    }
}

bool family_has_analytic_density(Family f) {
    return f == Family::TwoIntervals1d || f == Family::TwoSquares2d;
}

Params default_params(Family f) {
    switch (f) {
        case Family::TwoIntervals1d: return {{"offset", 1.0}, {"width", 1.0}};
        // Squares on the diagonal: centers (-1.5, 0) and (1.5, 3), unit sides.
        case Family::TwoSquares2d: return {{"side0", 1.0}, {"side1", 1.0}, {"half_sep", 1.5}, {"dy", 3.0}};
        case Family::Ring2d: return {{"radius", 1.0}, {"width", 0.1}};
        case Family::Checkerboard2d: return {{"cell", 0.5}};
        case Family::Sphere3d: return {{"radius", 1.0}};
        case Family::Torus3d: return {{"major", 1.0}, {"minor", 0.3}};
        case Family::WingedBody3d:
            return {{"body_len", 1.0}, {"body_w", 0.25}, {"wing_span", 0.9}, {"wing_chord", 0.35}};
        case Family::TwoBoxes3d: return {{"side0", 0.6}, {"side1", 0.6}, {"half_sep", 1.0}};
    }
    throw InputError("unknown family");
}

Params sample_params(Family f, Rng& rng) {
    Params p = default_params(f);
    for (auto& [k, v] : p) {
        if (k == "half_sep" || k == "offset") continue; // keep separations stable
        if (k == "dy") { v += rng.uniform(-0.1, 0.1); continue; }
        v *= rng.uniform(0.9, 1.1);
    }
    return p;
}

PointCloud sample_shape(Family f, const Params& p, int n, std::uint64_t seed) {
    if (n < 1) throw InputError("sample_shape: n must be >= 1");
    Rng rng(seed);
    PointCloud pc = PointCloud::empty(family_dim(f), n);

    switch (f) {
        case Family::TwoIntervals1d: {
            const double c = get(p, "offset"), w = get(p, "width");
            require(c > 0 && w > 0, "offset, width > 0");
            pc.labels.resize(n);
            for (int i = 0; i < n; ++i) {
                const int side = rng.u01() < 0.5 ? 0 : 1;
                const double x = rng.uniform(c, c + w);
                pc.at(i, 0) = side == 0 ? -x : x;
                pc.labels[i] = side;
            }
            break;
        }
        case Family::TwoSquares2d: {
            const double s0 = get(p, "side0"), s1 = get(p, "side1");
            const double cx = get(p, "half_sep");
            const double dy = p.count("dy") ? p.at("dy") : 0.0;
            require(s0 > 0 && s1 >= 0 && cx > 0, "sides >= 0, half_sep > 0");
            const double a0 = s0 * s0, a1 = s1 * s1;
            pc.labels.resize(n);
            for (int i = 0; i < n; ++i) {
                const int side = rng.u01() * (a0 + a1) < a0 ? 0 : 1;
                const double s = side == 0 ? s0 : s1;
                const double c = side == 0 ? -cx : cx;
                pc.at(i, 0) = c + rng.uniform(-s / 2, s / 2);
                pc.at(i, 1) = (side == 0 ? 0.0 : dy) + rng.uniform(-s / 2, s / 2);
                pc.labels[i] = side;
            }
            break;
        }
        case Family::Ring2d: {
            const double r = get(p, "radius"), w = get(p, "width");
            require(r > w && w > 0, "radius > width > 0");
            for (int i = 0; i < n; ++i) {
                const double lo = (r - w) * (r - w), hi = (r + w) * (r + w);
                const double rad = std::sqrt(rng.uniform(lo, hi));
                const double a = rng.uniform(0.0, 2.0 * M_PI);
                pc.at(i, 0) = rad * std::cos(a);
                pc.at(i, 1) = rad * std::sin(a);
            }
            break;
        }
        case Family::Checkerboard2d: {
            const double cell = get(p, "cell");
            require(cell > 0, "cell > 0");
            pc.labels.resize(n);
            for (int i = 0; i < n; ++i) {
                // black cells of a 4x4 board centered at the origin
                int cx_i, cy_i;
                do {
                    cx_i = static_cast<int>(rng.randint(4));
                    cy_i = static_cast<int>(rng.randint(4));
                } while ((cx_i + cy_i) % 2 != 0);
                pc.at(i, 0) = (cx_i - 2) * cell + rng.uniform(0.0, cell);
                pc.at(i, 1) = (cy_i - 2) * cell + rng.uniform(0.0, cell);
                pc.labels[i] = cx_i * 4 + cy_i;
            }
            break;
        }
        case Family::Sphere3d: {
            const double r = get(p, "radius");
            require(r > 0, "radius > 0");
            for (int i = 0; i < n; ++i) {
                double v[3], s = 0.0;
                do {
                    s = 0.0;
                    for (double& x : v) { x = rng.normal(); s += x * x; }
                } while (s == 0.0);
                s = std::sqrt(s);
                for (int c = 0; c < 3; ++c) pc.at(i, c) = r * v[c] / s;
            }
            break;
        }
        case Family::Torus3d: {
            const double R = get(p, "major"), r = get(p, "minor");
            require(R > r && r > 0, "major > minor > 0");
            for (int i = 0; i < n; ++i) {
                const double u = rng.uniform(0.0, 2.0 * M_PI);
                double v;
                // rejection on the tube angle with surface-measure weight R + r cos v
                do {
                    v = rng.uniform(0.0, 2.0 * M_PI);
                } while (rng.u01() * (R + r) > R + r * std::cos(v));
                pc.at(i, 0) = (R + r * std::cos(v)) * std::cos(u);
                pc.at(i, 1) = (R + r * std::cos(v)) * std::sin(u);
                pc.at(i, 2) = r * std::sin(v);
            }
            break;
        }
        case Family::WingedBody3d: {
            const double bl = get(p, "body_len"), bw = get(p, "body_w");
            const double span = get(p, "wing_span"), chord = get(p, "wing_chord");
            require(bl > 0 && bw > 0 && span > 0 && chord > 0, "all extents > 0");
            // part areas: fuselage box surface vs two planar wings
            const double a_body = 2.0 * (bw * bw + 2.0 * bl * bw);
            const double a_wing = span * chord;
            const double total = a_body + 2.0 * a_wing;
            pc.labels.resize(n);
            for (int i = 0; i < n; ++i) {
                const double u = rng.u01() * total;
                if (u < a_body) {
                    double v[3];
                    box_surface_point(rng, bl / 2, bw / 2, bw / 2, v);
                    for (int c = 0; c < 3; ++c) pc.at(i, c) = v[c];
                    pc.labels[i] = 0;
                } else {
                    const int side = u < a_body + a_wing ? 1 : 2; // 1 = +y wing, 2 = -y wing
                    const double sign = side == 1 ? 1.0 : -1.0;
                    pc.at(i, 0) = rng.uniform(-chord / 2, chord / 2);
                    pc.at(i, 1) = sign * (bw / 2 + rng.uniform(0.0, span));
                    pc.at(i, 2) = 0.0;
                    pc.labels[i] = side;
                }
            }
            break;
        }
        case Family::TwoBoxes3d: {
            const double s0 = get(p, "side0"), s1 = get(p, "side1"), cx = get(p, "half_sep");
            require(s0 > 0 && s1 > 0 && cx > 0, "sides, half_sep > 0");
            const double a0 = 6.0 * s0 * s0, a1 = 6.0 * s1 * s1;
            pc.labels.resize(n);
            for (int i = 0; i < n; ++i) {
                const int side = rng.u01() * (a0 + a1) < a0 ? 0 : 1;
                const double s = side == 0 ? s0 : s1;
                double v[3];
                box_surface_point(rng, s / 2, s / 2, s / 2, v);
                pc.at(i, 0) = v[0] + (side == 0 ? -cx : cx);
                pc.at(i, 1) = v[1];
                pc.at(i, 2) = v[2];
                pc.labels[i] = side;
            }
            break;
        }
    }
    return pc;
}

namespace {

// Entropy -int p log p by midpoint quadrature of a callable density.
template <typename Density>
double entropy_1d(Density p, double lo, double hi, double step) {
    double h = 0.0;
    for (double x = lo + step / 2; x < hi; x += step) {
        const double v = p(x);
        if (v > 0.0) h -= v * std::log(v) * step;
    }
    return h;
}

double phi(double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); }

// Uniform [a, b] convolved with N(0, sigma^2).
double smoothed_uniform(double x, double a, double b, double sigma) {
    if (sigma <= 0.0) return (x >= a && x < b) ? 1.0 / (b - a) : 0.0;
    return (phi((b - x) / sigma) - phi((a - x) / sigma)) / (b - a);
}

} // namespace

double analytic_nll(Family f, const Params& p, double sigma_noise) {
    switch (f) {
        case Family::TwoIntervals1d: {
            const double c = get(p, "offset"), w = get(p, "width");
            if (sigma_noise <= 0.0) return std::log(2.0 * w);
            auto dens = [&](double x) {
                return 0.5 * (smoothed_uniform(x, -c - w, -c, sigma_noise) +
                              smoothed_uniform(x, c, c + w, sigma_noise));
            };
            const double lo = -c - w - 8 * sigma_noise, hi = c + w + 8 * sigma_noise;
            return entropy_1d(dens, lo, hi, 1e-4);
        }
        case Family::TwoSquares2d: {
            const double s0 = get(p, "side0"), s1 = get(p, "side1"), cx = get(p, "half_sep");
            const double dy = p.count("dy") ? p.at("dy") : 0.0;
            const double a0 = s0 * s0, a1 = s1 * s1;
            if (sigma_noise <= 0.0) return std::log(a0 + a1);
            const double w0 = a0 / (a0 + a1), w1 = a1 / (a0 + a1);
            auto dens = [&](double x, double y) {
                double v = 0.0;
                if (w0 > 0)
                    v += w0 * smoothed_uniform(x, -cx - s0 / 2, -cx + s0 / 2, sigma_noise) *
                         smoothed_uniform(y, -s0 / 2, s0 / 2, sigma_noise);
                if (w1 > 0)
                    v += w1 * smoothed_uniform(x, cx - s1 / 2, cx + s1 / 2, sigma_noise) *
                         smoothed_uniform(y, dy - s1 / 2, dy + s1 / 2, sigma_noise);
                return v;
            };
            const double m = std::max(s0, s1);
            const double lo_x = -cx - m - 8 * sigma_noise, hi_x = cx + m + 8 * sigma_noise;
            const double lo_y = -m - std::abs(dy) - 8 * sigma_noise, hi_y = -lo_y;
            const double step = 2e-3;
            double h = 0.0;
            for (double x = lo_x + step / 2; x < hi_x; x += step)
                for (double y = lo_y + step / 2; y < hi_y; y += step) {
                    const double v = dens(x, y);
                    if (v > 0.0) h -= v * std::log(v) * step * step;
                }
            return h;
        }
        default:
            throw InputError("analytic_nll unsupported for family " + family_name(f));
    }
}

PointCloud random_rotation(const PointCloud& pc, Rng& rng, std::vector<double>* rot_out) {
    if (pc.d != 2 && pc.d != 3) throw InputError("random_rotation: d must be 2 or 3");
    std::vector<double> R;
    if (pc.d == 2) {
        const double a = rng.uniform(0.0, 2.0 * M_PI);
        R = {std::cos(a), -std::sin(a), std::sin(a), std::cos(a)};
    } else {
        // uniform quaternion
        double q[4], s = 0.0;
        do {
            s = 0.0;
            for (double& v : q) { v = rng.normal(); s += v * v; }
        } while (s == 0.0);
        s = std::sqrt(s);
        for (double& v : q) v /= s;
        const double w = q[0], x = q[1], y = q[2], z = q[3];
        R = {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
             2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
             2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
    }
    PointCloud out = pc;
    const int d = pc.d;
    for (int i = 0; i < pc.size(); ++i)
        for (int r = 0; r < d; ++r) {
            double v = 0.0;
            for (int c = 0; c < d; ++c) v += R[static_cast<std::size_t>(r) * d + c] * pc.at(i, c);
            out.at(i, r) = v;
        }
    if (rot_out) *rot_out = R;
    return out;
}

Dataset make_dataset(Family f, int n_shapes, int points_per_shape, std::uint64_t seed) {
    if (n_shapes < 1 || points_per_shape < 1) throw InputError("dataset sizes must be >= 1");
    Rng master(seed);
    Rng param_rng = master.split(1);
    Dataset ds;
    ds.family = f;
    ds.points_per_shape = points_per_shape;
    for (int i = 0; i < n_shapes; ++i) {
        Params p = sample_params(f, param_rng);
        PointCloud pc = sample_shape(f, p, points_per_shape, master.split(1000 + i).next_u64());
        normalize_cloud(pc);
        ds.shapes.push_back(std::move(pc));
        ds.params.push_back(std::move(p));
    }
    // 70/10/20 split over a seeded shuffle
    std::vector<int> idx(n_shapes);
    std::iota(idx.begin(), idx.end(), 0);
    Rng shuffle_rng = master.split(2);
    for (int i = n_shapes - 1; i > 0; --i)
        std::swap(idx[i], idx[shuffle_rng.randint(static_cast<std::uint64_t>(i) + 1)]);
    const int n_train = std::max(1, static_cast<int>(0.7 * n_shapes));
    const int n_val = std::max(1, static_cast<int>(0.1 * n_shapes));
    for (int i = 0; i < n_shapes; ++i) {
        if (i < n_train) ds.train_idx.push_back(idx[i]);
        else if (i < n_train + n_val) ds.val_idx.push_back(idx[i]);
        else ds.test_idx.push_back(idx[i]);
    }
    if (ds.test_idx.empty()) ds.test_idx.push_back(idx[n_shapes - 1]);
    return ds;
}

} // namespace flowmix::synth
