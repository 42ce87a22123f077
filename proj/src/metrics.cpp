#include "flowmix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace flowmix::metrics {

namespace {

void check_nonempty(const PointCloud& pc, const char* who) {
    if (pc.size() == 0) throw InputError(std::string(who) + ": empty point cloud");
}

double sq_dist(const double* a, const double* b, int d) {
    double s = 0.0;
    for (int c = 0; c < d; ++c) {
        const double v = a[c] - b[c];
        s += v * v;
    }
    return s;
}

} // namespace

KdTree::KdTree(const PointCloud& pc) : d_(pc.d), pts_(pc.pts) {
    check_nonempty(pc, "kdtree");
    std::vector<int> idx(pc.size());
    std::iota(idx.begin(), idx.end(), 0);
    nodes_.reserve(pc.size());
    root_ = build(idx, 0, static_cast<int>(idx.size()), 0);
}

int KdTree::build(std::vector<int>& idx, int lo, int hi, int depth) {
    if (lo >= hi) return -1;
    const int axis = depth % d_;
    const int mid = (lo + hi) / 2;
    std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi,
                     [&](int a, int b) {
                         return pts_[static_cast<std::size_t>(a) * d_ + axis] <
                                pts_[static_cast<std::size_t>(b) * d_ + axis];
                     });
    NodeRec rec;
    rec.point = idx[mid];
    rec.axis = axis;
    rec.split = pts_[static_cast<std::size_t>(idx[mid]) * d_ + axis];
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(rec);
    nodes_[self].left = build(idx, lo, mid, depth + 1);
    nodes_[self].right = build(idx, mid + 1, hi, depth + 1);
    return self;
}

void KdTree::search(int node, const double* q, double& best) const {
    if (node < 0) return;
    const NodeRec& n = nodes_[node];
    best = std::min(best, sq_dist(q, pts_.data() + static_cast<std::size_t>(n.point) * d_, d_));
    const double delta = q[n.axis] - n.split;
    const int near = delta < 0 ? n.left : n.right;
    const int far = delta < 0 ? n.right : n.left;
    search(near, q, best);
    if (delta * delta < best) search(far, q, best);
}

double KdTree::nearest_sq(const double* q) const {
    double best = std::numeric_limits<double>::infinity();
    search(root_, q, best);
    return best;
}

double chamfer(const PointCloud& a, const PointCloud& b) {
    check_nonempty(a, "chamfer");
    check_nonempty(b, "chamfer");
    if (a.d != b.d) throw InputError("chamfer: dimension mismatch");
    KdTree ta(a), tb(b);
    double sa = 0.0, sb = 0.0;
    for (int i = 0; i < a.size(); ++i) sa += tb.nearest_sq(a.pts.data() + static_cast<std::size_t>(i) * a.d);
    for (int i = 0; i < b.size(); ++i) sb += ta.nearest_sq(b.pts.data() + static_cast<std::size_t>(i) * b.d);
    return sa / a.size() + sb / b.size();
}

namespace {

// Jonker-Volgenant style shortest augmenting path assignment, O(n^3).
double hungarian_cost(const std::vector<double>& cost, int n) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) { minv[j] = cur; way[j] = j0; }
                if (minv[j] < delta) { delta = minv[j]; j1 = j; }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) { u[p[j]] += delta; v[j] -= delta; }
                else minv[j] -= delta;
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    double total = 0.0;
    for (int j = 1; j <= n; ++j)
        total += cost[static_cast<std::size_t>(p[j] - 1) * n + (j - 1)];
    return total;
}

double logsumexp_vec(const double* x, int n) {
    double m = x[0];
    for (int i = 1; i < n; ++i) m = std::max(m, x[i]);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::exp(x[i] - m);
    return m + std::log(s);
}

// Log-domain Sinkhorn on a uniform-marginal transport problem; returns the
// entropic transport cost sum_ij P_ij C_ij.
double sinkhorn_cost(const std::vector<double>& cost, int n, double eps, int iters) {
    const double log_a = -std::log(static_cast<double>(n));
    std::vector<double> f(n, 0.0), g(n, 0.0), tmp(n);
    for (int it = 0; it < iters; ++it) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j)
                tmp[j] = (g[j] - cost[static_cast<std::size_t>(i) * n + j]) / eps;
            f[i] = eps * (log_a - logsumexp_vec(tmp.data(), n));
        }
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i)
                tmp[i] = (f[i] - cost[static_cast<std::size_t>(i) * n + j]) / eps;
            g[j] = eps * (log_a - logsumexp_vec(tmp.data(), n));
        }
    }
    double total = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double lp = (f[i] + g[j] - cost[static_cast<std::size_t>(i) * n + j]) / eps;
            if (lp > -700.0) total += std::exp(lp) * cost[static_cast<std::size_t>(i) * n + j];
        }
    return total;
}

} // namespace

double emd(const PointCloud& a, const PointCloud& b, const EmdOptions& opt) {
    check_nonempty(a, "emd");
    check_nonempty(b, "emd");
    if (a.d != b.d) throw InputError("emd: dimension mismatch");
    if (a.size() != b.size()) throw InputError("emd: clouds must have equal size");
    const int n = a.size(), d = a.d;
    std::vector<double> cost(static_cast<std::size_t>(n) * n);
    double mean_dist = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double dist = std::sqrt(sq_dist(a.pts.data() + static_cast<std::size_t>(i) * d,
                                                  b.pts.data() + static_cast<std::size_t>(j) * d, d));
            cost[static_cast<std::size_t>(i) * n + j] = dist;
            mean_dist += dist;
        }
    mean_dist /= static_cast<double>(n) * n;
    if (n <= opt.n_exact && !opt.force_approximate)
        return hungarian_cost(cost, n) / n;
    const double eps = std::max(opt.eps_factor * mean_dist, 1e-12);
    // the entropic plan has unit total mass, so its cost is already the mean
    return sinkhorn_cost(cost, n, eps, opt.sinkhorn_iters);
}

double f1_score(const PointCloud& pred, const PointCloud& gt, double tau) {
    check_nonempty(pred, "f1");
    check_nonempty(gt, "f1");
    if (tau <= 0.0) throw InputError("f1: tau must be > 0");
    KdTree tg(gt), tp(pred);
    int hit_p = 0;
    for (int i = 0; i < pred.size(); ++i)
        if (tg.nearest_sq(pred.pts.data() + static_cast<std::size_t>(i) * pred.d) <= tau) ++hit_p;
    int hit_g = 0;
    for (int i = 0; i < gt.size(); ++i)
        if (tp.nearest_sq(gt.pts.data() + static_cast<std::size_t>(i) * gt.d) <= tau) ++hit_g;
    const double precision = static_cast<double>(hit_p) / pred.size();
    const double recall = static_cast<double>(hit_g) / gt.size();
    if (precision + recall == 0.0) return 0.0;
    return 100.0 * 2.0 * precision * recall / (precision + recall);
}

double jsd(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& ref, int r_voxels) {
    if (gen.empty() || ref.empty()) throw InputError("jsd: empty set");
    const int d = gen[0].d;
    // shared bounding cube over both sets
    std::vector<double> lo(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    auto grow = [&](const std::vector<PointCloud>& s) {
        for (const auto& pc : s)
            for (int i = 0; i < pc.size(); ++i)
                for (int c = 0; c < d; ++c) {
                    lo[c] = std::min(lo[c], pc.at(i, c));
                    hi[c] = std::max(hi[c], pc.at(i, c));
                }
    };
    grow(gen);
    grow(ref);
    double extent = 0.0;
    for (int c = 0; c < d; ++c) extent = std::max(extent, hi[c] - lo[c]);
    if (extent <= 0.0) throw InputError("jsd: degenerate bounding box");

    const std::size_t n_cells = static_cast<std::size_t>(std::pow(r_voxels, d));
    auto histogram = [&](const std::vector<PointCloud>& s) {
        std::vector<double> h(n_cells, 0.0);
        double total = 0.0;
        for (const auto& pc : s)
            for (int i = 0; i < pc.size(); ++i) {
                std::size_t cell = 0;
                for (int c = 0; c < d; ++c) {
                    int k = static_cast<int>((pc.at(i, c) - lo[c]) / extent * r_voxels);
                    k = std::min(r_voxels - 1, std::max(0, k));
                    cell = cell * r_voxels + k;
                }
                h[cell] += 1.0;
                total += 1.0;
            }
        for (double& v : h) v /= total;
        return h;
    };
    const auto p = histogram(gen);
    const auto q = histogram(ref);
    double js = 0.0;
    for (std::size_t i = 0; i < n_cells; ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) js += 0.5 * p[i] * std::log(p[i] / m);
        if (q[i] > 0.0) js += 0.5 * q[i] * std::log(q[i] / m);
    }
    return js;
}

std::string pair_metric_name(PairMetric m) {
    switch (m) {
        case PairMetric::CD: return "cd";
        case PairMetric::EMD: return "emd";
        case PairMetric::F1: return "f1";
    }
    return "?";
}

namespace {

// Pairwise values between two sets; for F1 larger is better.
std::vector<double> pair_matrix(const std::vector<PointCloud>& rows,
                                const std::vector<PointCloud>& cols, PairMetric metric, double tau,
                                const EmdOptions& opt) {
    std::vector<double> m(rows.size() * cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) {
            double v = 0.0;
            switch (metric) {
                case PairMetric::CD: v = chamfer(rows[i], cols[j]); break;
                case PairMetric::EMD: v = emd(rows[i], cols[j], opt); break;
                case PairMetric::F1: v = f1_score(rows[i], cols[j], tau); break;
            }
            m[i * cols.size() + j] = v;
        }
    return m;
}

bool better(PairMetric metric, double a, double b) {
    return metric == PairMetric::F1 ? a > b : a < b;
}

} // namespace

CovMmd cov_mmd(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& ref,
               PairMetric metric, double tau, const EmdOptions& opt) {
    if (gen.empty() || ref.empty()) throw InputError("cov_mmd: empty set");
    const auto m = pair_matrix(gen, ref, metric, tau, opt);
    const std::size_t G = gen.size(), R = ref.size();
    std::vector<char> matched(R, 0);
    for (std::size_t i = 0; i < G; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < R; ++j)
            if (better(metric, m[i * R + j], m[i * R + best])) best = j;
        matched[best] = 1;
    }
    CovMmd out;
    out.cov = static_cast<double>(std::count(matched.begin(), matched.end(), 1)) / R;
    double s = 0.0;
    for (std::size_t j = 0; j < R; ++j) {
        double best = m[j]; // i = 0
        for (std::size_t i = 1; i < G; ++i)
            if (better(metric, m[i * R + j], best)) best = m[i * R + j];
        s += best;
    }
    out.mmd = s / R;
    return out;
}

double nna1(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& ref,
            PairMetric metric, double tau, const EmdOptions& opt) {
    if (gen.size() != ref.size() || gen.empty())
        throw InputError("nna1: needs non-empty sets of equal size");
    std::vector<PointCloud> all;
    all.insert(all.end(), gen.begin(), gen.end());
    all.insert(all.end(), ref.begin(), ref.end());
    const std::size_t N = all.size();
    const auto m = pair_matrix(all, all, metric, tau, opt);
    int correct = 0;
    for (std::size_t i = 0; i < N; ++i) {
        std::size_t best = (i == 0) ? 1 : 0;
        for (std::size_t j = 0; j < N; ++j) {
            if (j == i) continue;
            if (better(metric, m[i * N + j], m[i * N + best])) best = j;
        }
        const bool same = (i < gen.size()) == (best < gen.size());
        if (same) ++correct;
    }
    return static_cast<double>(correct) / N;
}

std::string MetricsReport::to_json() const {
    nlohmann::json j;
    j["cd"] = cd_mean;
    j["emd"] = emd_mean;
    j["f1"] = f1_mean;
    j["jsd"] = jsd_val;
    j["cov"] = {{"cd", cov_cd}, {"emd", cov_emd}, {"f1", cov_f1}};
    j["mmd"] = {{"cd", mmd_cd}, {"emd", mmd_emd}, {"f1", mmd_f1}};
    j["nna1"] = {{"cd", nna_cd}, {"emd", nna_emd}, {"f1", nna_f1}};
    j["settings"] = {{"tau", tau},
                     {"grid_resolution", grid_resolution},
                     {"emd_n_exact", emd_n_exact},
                     {"emd_eps_factor", emd_eps_factor},
                     {"emd_iters", emd_iters},
                     {"seed", seed}};
    return j.dump(2);
}

std::string MetricsReport::csv_header() {
    return "cd,emd,f1,jsd,cov_cd,cov_emd,cov_f1,mmd_cd,mmd_emd,mmd_f1,"
           "nna_cd,nna_emd,nna_f1,tau,grid_resolution,emd_n_exact,emd_eps_factor,emd_iters,seed";
}

std::string MetricsReport::to_csv_row() const {
    std::ostringstream os;
    os.precision(12);
    os << cd_mean << ',' << emd_mean << ',' << f1_mean << ',' << jsd_val << ',' << cov_cd << ','
       << cov_emd << ',' << cov_f1 << ',' << mmd_cd << ',' << mmd_emd << ',' << mmd_f1 << ','
       << nna_cd << ',' << nna_emd << ',' << nna_f1 << ',' << tau << ',' << grid_resolution << ','
       << emd_n_exact << ',' << emd_eps_factor << ',' << emd_iters << ',' << seed;
    return os.str();
}

MetricsReport evaluate_sets(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& ref,
                            double tau, int grid_resolution, const EmdOptions& opt,
                            std::uint64_t seed) {
    if (gen.empty() || ref.empty()) throw InputError("evaluate_sets: empty set");
    MetricsReport r;
    r.tau = tau;
    r.grid_resolution = grid_resolution;
    r.emd_n_exact = opt.n_exact;
    r.emd_eps_factor = opt.eps_factor;
    r.emd_iters = opt.sinkhorn_iters;
    r.seed = seed;

    // paired means over min(|gen|, |ref|) index pairs (reconstruction-style view)
    const std::size_t n_pairs = std::min(gen.size(), ref.size());
    for (std::size_t i = 0; i < n_pairs; ++i) {
        r.cd_mean += chamfer(gen[i], ref[i]);
        r.emd_mean += emd(gen[i], ref[i], opt);
        r.f1_mean += f1_score(gen[i], ref[i], tau);
    }
    r.cd_mean /= n_pairs;
    r.emd_mean /= n_pairs;
    r.f1_mean /= n_pairs;

    r.jsd_val = jsd(gen, ref, grid_resolution);
    auto cm_cd = cov_mmd(gen, ref, PairMetric::CD, tau, opt);
    auto cm_emd = cov_mmd(gen, ref, PairMetric::EMD, tau, opt);
    auto cm_f1 = cov_mmd(gen, ref, PairMetric::F1, tau, opt);
    r.cov_cd = cm_cd.cov; r.mmd_cd = cm_cd.mmd;
    r.cov_emd = cm_emd.cov; r.mmd_emd = cm_emd.mmd;
    r.cov_f1 = cm_f1.cov; r.mmd_f1 = cm_f1.mmd;
    if (gen.size() == ref.size()) {
        r.nna_cd = nna1(gen, ref, PairMetric::CD, tau, opt);
        r.nna_emd = nna1(gen, ref, PairMetric::EMD, tau, opt);
        r.nna_f1 = nna1(gen, ref, PairMetric::F1, tau, opt);
    }
    return r;
}

} // namespace flowmix::metrics
