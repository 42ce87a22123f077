#include "flowmix/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "flowmix/checkpoint.hpp"
#include "flowmix/metrics.hpp"

namespace flowmix::train {

using json = nlohmann::json;

namespace {

// RNG substream keys; changing these changes every training trajectory.
constexpr std::uint64_t kInitKey = 1;
constexpr std::uint64_t kShuffleKey = 2;
constexpr std::uint64_t kNoiseKey = 3;
constexpr std::uint64_t kReparamKey = 4;
constexpr std::uint64_t kAugmentKey = 5;

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const char* const kConfigKeys[] = {
    "family", "n_shapes", "points_per_shape", "epochs", "batch_size", "lr0",
    "lr_decay_epochs", "lr_decay_factor", "noise_sigma", "warmup_epochs", "grad_clip",
    "rotation_augment", "m", "n_layers", "hidden", "latent", "size_matched",
    "encoder_widths", "prior_layers", "prior_hidden", "seed",
};

} // namespace

void TrainConfig::validate() const {
    try {
        (void)synth::family_from_name(family);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (n_shapes < 2) throw ConfigError("n_shapes must be >= 2");
    if (points_per_shape < 1) throw ConfigError("points_per_shape must be >= 1");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (batch_size < 2) throw ConfigError("batch_size must be >= 2 (batchnorm over shapes)");
    if (lr0 <= 0.0) throw ConfigError("lr0 must be positive");
    if (lr_decay_factor <= 1.0) throw ConfigError("lr_decay_factor must be > 1");
    for (std::size_t i = 0; i < lr_decay_epochs.size(); ++i) {
        if (lr_decay_epochs[i] < 0) throw ConfigError("lr decay epochs must be >= 0");
        if (i > 0 && lr_decay_epochs[i] <= lr_decay_epochs[i - 1])
            throw ConfigError("lr decay epochs must be strictly increasing");
    }
    if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
    if (warmup_epochs < 0) throw ConfigError("warmup_epochs must be >= 0");
    if (grad_clip <= 0.0) throw ConfigError("grad_clip must be positive");
    if (m < 1) throw ConfigError("m must be >= 1");
    if (n_layers < 1 || hidden < 1) throw ConfigError("N and H must be >= 1");
    if (latent < 2) throw ConfigError("latent must be >= 2 (prior coupling layers)");
    if (encoder_widths.empty()) throw ConfigError("encoder_widths must be non-empty");
    for (int w : encoder_widths)
        if (w < 1) throw ConfigError("encoder widths must be >= 1");
    if (prior_layers < 1 || prior_hidden < 1) throw ConfigError("prior depth/width must be >= 1");
}

std::string TrainConfig::to_json() const {
    json j;
    j["family"] = family;
    j["n_shapes"] = n_shapes;
    j["points_per_shape"] = points_per_shape;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["lr0"] = lr0;
    j["lr_decay_epochs"] = lr_decay_epochs;
    j["lr_decay_factor"] = lr_decay_factor;
    j["noise_sigma"] = noise_sigma;
    j["warmup_epochs"] = warmup_epochs;
    j["grad_clip"] = grad_clip;
    j["rotation_augment"] = rotation_augment;
    j["m"] = m;
    j["n_layers"] = n_layers;
    j["hidden"] = hidden;
    j["latent"] = latent;
    j["size_matched"] = size_matched;
    j["encoder_widths"] = encoder_widths;
    j["prior_layers"] = prior_layers;
    j["prior_hidden"] = prior_hidden;
    j["seed"] = seed;
    return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw InputError(std::string("config parse: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be an object");
    for (const auto& [key, val] : j.items()) {
        (void)val;
        bool known = false;
        for (const char* k : kConfigKeys)
            if (key == k) { known = true; break; }
        if (!known) {
            std::string valid;
            for (const char* k : kConfigKeys) valid += std::string(valid.empty() ? "" : ", ") + k;
            throw ConfigError("unknown config key '" + key + "' (valid keys: " + valid + ")");
        }
    }
    TrainConfig c;
    try {
        if (j.contains("family")) c.family = j["family"].get<std::string>();
        if (j.contains("n_shapes")) c.n_shapes = j["n_shapes"].get<int>();
        if (j.contains("points_per_shape")) c.points_per_shape = j["points_per_shape"].get<int>();
        if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
        if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
        if (j.contains("lr0")) c.lr0 = j["lr0"].get<double>();
        if (j.contains("lr_decay_epochs")) c.lr_decay_epochs = j["lr_decay_epochs"].get<std::vector<int>>();
        if (j.contains("lr_decay_factor")) c.lr_decay_factor = j["lr_decay_factor"].get<double>();
        if (j.contains("noise_sigma")) c.noise_sigma = j["noise_sigma"].get<double>();
        if (j.contains("warmup_epochs")) c.warmup_epochs = j["warmup_epochs"].get<int>();
        if (j.contains("grad_clip")) c.grad_clip = j["grad_clip"].get<double>();
        if (j.contains("rotation_augment")) c.rotation_augment = j["rotation_augment"].get<bool>();
        if (j.contains("m")) c.m = j["m"].get<int>();
        if (j.contains("n_layers")) c.n_layers = j["n_layers"].get<int>();
        if (j.contains("hidden")) c.hidden = j["hidden"].get<int>();
        if (j.contains("latent")) c.latent = j["latent"].get<int>();
        if (j.contains("size_matched")) c.size_matched = j["size_matched"].get<bool>();
        if (j.contains("encoder_widths")) c.encoder_widths = j["encoder_widths"].get<std::vector<int>>();
        if (j.contains("prior_layers")) c.prior_layers = j["prior_layers"].get<int>();
        if (j.contains("prior_hidden")) c.prior_hidden = j["prior_hidden"].get<int>();
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config value: ") + e.what());
    }
    return c;
}

TrainConfig preset_config(const std::string& family) {
    TrainConfig c;
    try {
        (void)synth::family_from_name(family);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    c.family = family;
    // Desk-scale schedule: a few hundred optimizer steps with a late decay.
    c.n_shapes = 48;
    c.points_per_shape = 64;
    c.epochs = 200;
    c.batch_size = 36;
    c.lr0 = 5e-3;
    c.lr_decay_epochs = {140, 175};
    c.m = 2;
    c.n_layers = 6;
    c.hidden = 24;
    c.latent = 8;
    c.encoder_widths = {32, 64, 128};
    c.prior_layers = 6;
    c.prior_hidden = 32;
    const int d = synth::family_dim(synth::family_from_name(family));
    if (d == 1) {
        c.latent = 4;
        c.encoder_widths = {16, 32, 64};
    }
    if (family == "winged_body_3d") c.m = 3;
    if (family == "checkerboard_2d") c.m = 8;
    if (family == "two_squares_2d") {
        // Deliberately weak components: deep flows win NLL here but blur the
        // per-component part assignment.
        c.epochs = 400;
        c.lr0 = 3e-3;
        c.lr_decay_epochs = {280, 340};
        c.warmup_epochs = 100;
        c.n_layers = 2;
        c.hidden = 12;
        c.encoder_widths = {16, 32, 64};
        c.prior_layers = 4;
        c.prior_hidden = 16;
    }
    return c;
}

std::string TrainLog::to_csv() const {
    std::string out = "epoch,loss,l_d,l_prior,weight_entropy,jensen_gap,lr\n";
    for (const auto& r : records) {
        out += std::to_string(r.epoch) + "," + fmt_g(r.loss) + "," + fmt_g(r.l_d) + "," +
               fmt_g(r.l_prior) + "," + fmt_g(r.weight_entropy) + "," + fmt_g(r.jensen_gap) + "," +
               fmt_g(r.lr) + "\n";
    }
    return out;
}

std::string TrainLog::to_json() const {
    json arr = json::array();
    for (const auto& r : records) {
        json j;
        j["epoch"] = r.epoch;
        j["loss"] = r.loss;
        j["l_d"] = r.l_d;
        j["l_prior"] = r.l_prior;
        j["weight_entropy"] = r.weight_entropy;
        j["jensen_gap"] = r.jensen_gap;
        j["lr"] = r.lr;
        arr.push_back(j);
    }
    return arr.dump(2);
}

Model Model::build(const TrainConfig& cfg) {
    cfg.validate();
    Model mdl;
    mdl.cfg = cfg;
    mdl.d = synth::family_dim(synth::family_from_name(cfg.family));
    Rng rng = Rng(cfg.seed).split(kInitKey);
    mdl.encoder = enc::SetEncoder(mdl.d, cfg.encoder_widths, cfg.latent, rng);
    if (cfg.size_matched) {
        mdl.decoder = mix::sized_mixture(cfg.m, cfg.n_layers, cfg.hidden, mdl.d, cfg.latent, rng,
                                         &mdl.sizing);
    } else {
        mdl.decoder = mix::MixtureFlowDecoder(mdl.d, cfg.m, cfg.n_layers, cfg.hidden, cfg.latent, rng);
        const std::size_t count = mix::decoder_param_count(mdl.d, cfg.m, cfg.n_layers, cfg.hidden, cfg.latent);
        mdl.sizing = {cfg.m, cfg.n_layers, cfg.hidden, cfg.n_layers, cfg.hidden, count, count};
    }
    mdl.prior = prior::PriorFlow(cfg.latent, cfg.prior_layers, cfg.prior_hidden, 0, rng);
    mdl.encoder.register_params(mdl.registry, "enc");
    mdl.decoder.register_params(mdl.registry, "dec");
    mdl.prior.register_params(mdl.registry, "prior");
    return mdl;
}

Tensor Model::encode_mean(const PointCloud& pc) const {
    if (pc.d != d) throw DimensionError("encode: cloud dimension mismatch");
    if (pc.size() < 1) throw InputError("encode: empty cloud");
    Tensor x = Tensor::zeros(pc.size(), d);
    for (int i = 0; i < pc.size(); ++i)
        for (int c = 0; c < d; ++c) x.at(i, c) = pc.at(i, c);
    auto post = encoder.encode(x, pc.size(), false);
    return Tensor::from(1, cfg.latent, post.mu.data());
}

std::string Model::meta_json() const {
    json j;
    j["format"] = "flowmix-model";
    j["d"] = d;
    j["config"] = json::parse(cfg.to_json());
    j["sizing"] = {{"m", sizing.m},
                   {"n_ref", sizing.n_ref},
                   {"h_ref", sizing.h_ref},
                   {"n_hat", sizing.n_hat},
                   {"h_hat", sizing.h_hat},
                   {"param_count", sizing.param_count},
                   {"ref_param_count", sizing.ref_param_count}};
    return j.dump(2);
}

void save_model(const std::string& path, const Model& model) {
    ckpt::save(path, model.registry, model.meta_json());
}

Model load_model(const std::string& path) {
    const auto meta_text = ckpt::peek_meta(path);
    json meta;
    try {
        meta = json::parse(meta_text);
    } catch (const json::exception& e) {
        throw InputError(std::string("checkpoint meta: ") + e.what());
    }
    if (!meta.contains("format") || meta["format"] != "flowmix-model")
        throw InputError("checkpoint meta: not a flowmix model");
    TrainConfig cfg = TrainConfig::from_json(meta["config"].dump());
    Model mdl = Model::build(cfg);
    ckpt::load(path, mdl.registry);
    return mdl;
}

namespace {

std::vector<std::vector<double>> snapshot_params(const nn::ParamRegistry& reg) {
    std::vector<std::vector<double>> snap;
    snap.reserve(reg.entries.size());
    for (const auto& e : reg.entries) snap.push_back(e.tensor.data());
    return snap;
}

void restore_params(nn::ParamRegistry& reg, const std::vector<std::vector<double>>& snap) {
    for (std::size_t i = 0; i < reg.entries.size(); ++i)
        reg.entries[i].tensor.data() = snap[i];
}

// Mean over shapes of -sum_i w_i log w_i from a value-level log-weight matrix.
double weight_entropy_of(const Tensor& lw) {
    double total = 0.0;
    for (int r = 0; r < lw.rows(); ++r) {
        double h = 0.0;
        for (int c = 0; c < lw.cols(); ++c) {
            const double l = lw(r, c);
            h -= std::exp(l) * l;
        }
        total += h;
    }
    return total / lw.rows();
}

} // namespace

TrainResult train(Model& model, const synth::Dataset& ds) {
    const TrainConfig& cfg = model.cfg;
    cfg.validate();
    if (ds.train_idx.empty()) throw InputError("train: dataset has no training shapes");
    if (ds.points_per_shape != cfg.points_per_shape)
        throw ConfigError("train: dataset points_per_shape does not match config");
    const int P = cfg.points_per_shape;
    const int d = model.d;
    const int n_train = static_cast<int>(ds.train_idx.size());

    Rng master(cfg.seed);
    Rng shuffle_rng = master.split(kShuffleKey);
    Rng noise_rng = master.split(kNoiseKey);
    Rng reparam_rng = master.split(kReparamKey);
    Rng augment_rng = master.split(kAugmentKey);

    auto params = model.registry.params();
    nn::Adam opt(cfg.lr0);

    // Fixed probe batch (clean points, eval mode) for the per-epoch jensen gap.
    const int n_probe = std::min<int>(8, n_train);

    const auto t_start = std::chrono::steady_clock::now();
    TrainResult result;
    auto last_good = snapshot_params(model.registry);

    std::vector<int> order(ds.train_idx.begin(), ds.train_idx.end());

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        int decays = 0;
        for (int e : cfg.lr_decay_epochs)
            if (e <= epoch) ++decays;
        opt.lr = cfg.lr0 / std::pow(cfg.lr_decay_factor, decays);
        model.decoder.set_warmup(epoch < cfg.warmup_epochs);

        // Fisher-Yates on a dedicated stream so batch composition is reproducible.
        for (int i = n_train - 1; i > 0; --i) {
            const int j = static_cast<int>(shuffle_rng.randint(static_cast<std::uint64_t>(i) + 1));
            std::swap(order[i], order[j]);
        }

        double ep_loss = 0.0, ep_ld = 0.0, ep_lprior = 0.0, ep_went = 0.0;
        int steps = 0;
        std::string bad_term;

        for (int start = 0; start + 1 < n_train; start += cfg.batch_size) {
            const int B = std::min(cfg.batch_size, n_train - start);
            if (B < 2) break;
            Tensor x = Tensor::zeros(B * P, d);
            for (int b = 0; b < B; ++b) {
                const PointCloud* pc = &ds.shapes[order[start + b]];
                PointCloud rotated;
                if (cfg.rotation_augment) {
                    rotated = synth::random_rotation(*pc, augment_rng);
                    pc = &rotated;
                }
                for (int p = 0; p < P; ++p)
                    for (int c = 0; c < d; ++c)
                        x.at(b * P + p, c) = pc->at(p, c) + cfg.noise_sigma * noise_rng.normal();
            }

            auto post = model.encoder.encode(x, P, true);
            Tensor z = post.sample(reparam_rng);
            Tensor logp = model.decoder.log_prob(x, z, P, true);
            Tensor l_d = ad::neg(ad::mean_all(logp));
            Tensor prior_rows = model.prior.loss(post, z, Tensor(), true);
            Tensor l_prior = ad::mean_all(prior_rows);
            Tensor loss = ad::add(l_d, ad::scale(l_prior, 1.0 / P));

            const double v_ld = l_d.item(), v_lp = l_prior.item(), v_loss = loss.item();
            if (!std::isfinite(v_loss)) {
                bad_term = !std::isfinite(v_ld) ? "L_D (reconstruction log-likelihood)"
                                                : "L_Prior (entropy + prior log-likelihood)";
                break;
            }

            nn::Adam::zero_grad(params);
            ad::backward(loss);
            const double gnorm = nn::Adam::clip_grad_norm(params, cfg.grad_clip);
            if (!std::isfinite(gnorm)) {
                bad_term = "gradient norm";
                break;
            }
            opt.step(params);

            ep_loss += v_loss;
            ep_ld += v_ld;
            ep_lprior += v_lp;
            ep_went += weight_entropy_of(model.decoder.log_weights(z, false));
            ++steps;
        }

        if (!bad_term.empty()) {
            restore_params(model.registry, last_good);
            result.aborted = true;
            result.diagnostic = "non-finite loss in epoch " + std::to_string(epoch) +
                                ", offending term: " + bad_term +
                                "; parameters rolled back to epoch " + std::to_string(epoch - 1);
            break;
        }
        if (steps == 0) break;

        // Probe jensen gap on a fixed clean batch at the posterior mean.
        Tensor probe = Tensor::zeros(n_probe * P, d);
        for (int b = 0; b < n_probe; ++b) {
            const PointCloud& pc = ds.shapes[ds.train_idx[b]];
            for (int p = 0; p < P; ++p)
                for (int c = 0; c < d; ++c) probe.at(b * P + p, c) = pc.at(p, c);
        }
        auto probe_post = model.encoder.encode(probe, P, false);
        Tensor probe_mu = Tensor::from(n_probe, cfg.latent, probe_post.mu.data());
        const double gap = model.decoder.jensen_gap(probe, probe_mu, P);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = ep_loss / steps;
        rec.l_d = ep_ld / steps;
        rec.l_prior = ep_lprior / steps;
        rec.weight_entropy = ep_went / steps;
        rec.jensen_gap = gap;
        rec.lr = opt.lr;
        result.log.records.push_back(rec);

        last_good = snapshot_params(model.registry);
    }

    model.decoder.set_warmup(false);
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

double heldout_nll(const Model& model, const synth::Dataset& ds, const std::vector<int>& idx) {
    if (idx.empty()) throw InputError("heldout_nll: empty index set");
    const int P = ds.points_per_shape;
    const int d = model.d;
    double total = 0.0;
    long n_points = 0;
    for (int i : idx) {
        const PointCloud& pc = ds.shapes[i];
        Tensor x = Tensor::zeros(P, d);
        for (int p = 0; p < P; ++p)
            for (int c = 0; c < d; ++c) x.at(p, c) = pc.at(p, c);
        Tensor z = model.encode_mean(pc);
        Tensor lp = model.decoder.log_prob(x, z, P, false);
        for (int p = 0; p < P; ++p) total -= lp(p, 0);
        n_points += P;
    }
    return total / static_cast<double>(n_points);
}

PointCloud reconstruct(const Model& model, const PointCloud& x, int n_out, std::uint64_t seed) {
    if (n_out < 1) throw InputError("reconstruct: n_out must be >= 1");
    Tensor z = model.encode_mean(x);
    Rng rng(seed);
    auto [pts, ids] = model.decoder.sample(z, n_out, rng);
    PointCloud out = PointCloud::empty(model.d, n_out);
    for (int p = 0; p < n_out; ++p)
        for (int c = 0; c < model.d; ++c) out.at(p, c) = pts(p, c);
    out.labels = ids;
    return out;
}

std::vector<PointCloud> interpolate(const Model& model, const PointCloud& x_a, const PointCloud& x_b,
                                    int steps, int n_out, std::uint64_t seed,
                                    const std::vector<int>& component_subset) {
    if (steps < 2) throw InputError("interpolate: steps must be >= 2");
    if (n_out < 1) throw InputError("interpolate: n_out must be >= 1");
    for (int i : component_subset)
        if (i < 0 || i >= model.decoder.components())
            throw InputError("interpolate: component index " + std::to_string(i) + " out of range");
    Tensor z_a = model.encode_mean(x_a);
    Tensor z_b = model.encode_mean(x_b);
    const int L = model.cfg.latent;

    std::vector<PointCloud> out;
    for (int s = 0; s < steps; ++s) {
        const double t = static_cast<double>(s) / (steps - 1);
        Tensor z_t = Tensor::zeros(1, L);
        for (int c = 0; c < L; ++c) z_t.at(0, c) = (1.0 - t) * z_a(0, c) + t * z_b(0, c);

        // Every step reuses the same seed so t = 0 / t = 1 reproduce the
        // endpoint reconstructions bit for bit.
        Rng rng(seed);
        Tensor pts;
        std::vector<int> ids;
        if (component_subset.empty()) {
            std::tie(pts, ids) = model.decoder.sample(z_t, n_out, rng);
        } else {
            std::vector<Tensor> z_per(static_cast<std::size_t>(model.decoder.components()));
            for (int i = 0; i < model.decoder.components(); ++i) z_per[i] = z_a;
            for (int i : component_subset) z_per[i] = z_t;
            std::tie(pts, ids) = model.decoder.sample_per_component(z_a, z_per, n_out, rng);
        }
        PointCloud pc = PointCloud::empty(model.d, n_out);
        for (int p = 0; p < n_out; ++p)
            for (int c = 0; c < model.d; ++c) pc.at(p, c) = pts(p, c);
        pc.labels = ids;
        out.push_back(std::move(pc));
    }
    return out;
}

DensityFitResult fit_density(const DensityFitConfig& cfg) {
    const synth::Family fam = synth::family_from_name(cfg.family);
    if (synth::family_dim(fam) != 2)
        throw ConfigError("fit_density: needs a 2D family, got " + cfg.family);
    if (cfg.m < 1 || cfg.steps < 0 || cfg.batch_size < 2 || cfg.n_train < 2 || cfg.n_test < 1)
        throw ConfigError("fit_density: bad sizes");

    auto params = synth::default_params(fam);
    PointCloud train_pts = synth::sample_shape(fam, params, cfg.n_train, cfg.seed * 100 + 1);
    PointCloud test_pts = synth::sample_shape(fam, params, cfg.n_test, cfg.seed * 100 + 2);
    NormalizeParams np = normalize_cloud(train_pts);
    for (int i = 0; i < test_pts.size(); ++i)
        for (int c = 0; c < 2; ++c)
            test_pts.at(i, c) = (test_pts.at(i, c) - np.center[c]) / np.scale;

    Rng init(cfg.seed);
    DensityFitResult res;
    auto dec = mix::sized_mixture(cfg.m, cfg.n_ref, cfg.h_ref, 2, 0, init, &res.sizing);
    nn::ParamRegistry reg;
    dec.register_params(reg, "dec");
    auto ps = reg.params();
    nn::Adam opt(cfg.lr0);

    Tensor xt = Tensor::zeros(test_pts.size(), 2);
    for (int i = 0; i < test_pts.size(); ++i)
        for (int c = 0; c < 2; ++c) xt.at(i, c) = test_pts.at(i, c);
    res.jensen_gap_init = dec.jensen_gap(xt, Tensor(), test_pts.size());

    Rng noise = Rng(cfg.seed).split(3), pick = Rng(cfg.seed).split(4);
    for (int s = 0; s < cfg.steps; ++s) {
        dec.set_warmup(s < cfg.warmup_steps);
        if (s == cfg.steps * 7 / 10 || s == cfg.steps * 17 / 20) opt.lr /= 4.0;
        Tensor x = Tensor::zeros(cfg.batch_size, 2);
        for (int i = 0; i < cfg.batch_size; ++i) {
            const int j = static_cast<int>(pick.randint(train_pts.size()));
            for (int c = 0; c < 2; ++c)
                x.at(i, c) = train_pts.at(j, c) + cfg.noise_sigma * noise.normal();
        }
        Tensor loss = ad::neg(ad::mean_all(dec.log_prob(x, Tensor(), cfg.batch_size, true)));
        nn::Adam::zero_grad(ps);
        ad::backward(loss);
        nn::Adam::clip_grad_norm(ps, cfg.grad_clip);
        opt.step(ps);
    }
    dec.set_warmup(false);

    Tensor lp = dec.log_prob(xt, Tensor(), test_pts.size(), false);
    double nll = 0.0;
    for (int i = 0; i < test_pts.size(); ++i) nll -= lp(i, 0);
    res.test_nll = nll / test_pts.size();
    res.jensen_gap_final = dec.jensen_gap(xt, Tensor(), test_pts.size());

    auto resp = dec.responsibilities(xt, Tensor(), test_pts.size());
    for (int i = 0; i < cfg.m; ++i) {
        double mass = 0.0;
        for (int p = 0; p < test_pts.size(); ++p) mass += resp.at(p, i) / test_pts.size();
        res.max_mean_weight = std::max(res.max_mean_weight, mass);
    }
    if (cfg.m == 2 && !test_pts.labels.empty()) {
        int cnt[2][2] = {};
        for (int p = 0; p < test_pts.size(); ++p)
            if (test_pts.labels[p] == 0 || test_pts.labels[p] == 1)
                cnt[test_pts.labels[p]][resp.argmax[p]]++;
        const int agree = std::max(cnt[0][0] + cnt[1][1], cnt[0][1] + cnt[1][0]);
        res.split_purity = static_cast<double>(agree) / test_pts.size();
    }
    return res;
}

std::vector<RuntimeRow> runtime_probe(const std::vector<int>& m_list, int n_ref, int h_ref, int d,
                                      int cond_dim, int n_points, int repeats, std::uint64_t seed) {
    for (int m : m_list)
        if (m < 1) throw ConfigError("runtime_probe: m must be >= 1");
    if (n_points < 1 || repeats < 1) throw ConfigError("runtime_probe: n_points and repeats must be >= 1");

    std::vector<int> ms = {1};
    for (int m : m_list)
        if (m != 1) ms.push_back(m);

    std::vector<RuntimeRow> rows;
    double base_time = 0.0;
    for (int m : ms) {
        Rng rng(seed);
        mix::SizingReport rep;
        auto dec = mix::sized_mixture(m, n_ref, h_ref, d, cond_dim, rng, &rep);
        Tensor z = Tensor::zeros(1, cond_dim);
        Rng zr = Rng(seed).split(7);
        for (int c = 0; c < cond_dim; ++c) z.at(0, c) = zr.normal();

        Rng sr = Rng(seed).split(9);
        (void)dec.sample(z, std::min(n_points, 256), sr); // warm caches
        double best = std::numeric_limits<double>::infinity();
        for (int r = 0; r < repeats; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            (void)dec.sample(z, n_points, sr);
            const double dt =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            best = std::min(best, dt);
        }
        RuntimeRow row;
        row.m = m;
        row.n_hat = rep.n_hat;
        row.h_hat = rep.h_hat;
        row.params = rep.param_count;
        row.sec_per_point = best / n_points;
        if (m == 1) base_time = row.sec_per_point;
        row.relative = row.sec_per_point / base_time;
        rows.push_back(row);
    }
    // Report in the caller's requested order, baseline first only if asked for.
    std::vector<RuntimeRow> out;
    for (int m : m_list)
        for (const auto& r : rows)
            if (r.m == m) { out.push_back(r); break; }
    return out;
}

std::vector<ScalingRow> scaling_study(const TrainConfig& base, const std::vector<std::pair<int, int>>& sizes,
                                      const std::vector<int>& m_list, double tau) {
    if (sizes.empty() || m_list.empty()) throw ConfigError("scaling_study: empty size or m list");
    const auto family = synth::family_from_name(base.family);
    synth::Dataset ds = synth::make_dataset(family, base.n_shapes, base.points_per_shape, base.seed);

    std::vector<ScalingRow> rows;
    for (const auto& [n_ref, h_ref] : sizes) {
        for (int m : m_list) {
            TrainConfig cfg = base;
            cfg.n_layers = n_ref;
            cfg.hidden = h_ref;
            cfg.m = m;
            Model mdl = Model::build(cfg);
            (void)train(mdl, ds);

            double f1_sum = 0.0;
            for (std::size_t k = 0; k < ds.test_idx.size(); ++k) {
                const PointCloud& gt = ds.shapes[ds.test_idx[k]];
                PointCloud rec = reconstruct(mdl, gt, ds.points_per_shape, cfg.seed + k);
                f1_sum += metrics::f1_score(rec, gt, tau);
            }
            ScalingRow row;
            row.n_ref = n_ref;
            row.h_ref = h_ref;
            row.m = m;
            row.n_hat = mdl.sizing.n_hat;
            row.h_hat = mdl.sizing.h_hat;
            row.params = mdl.sizing.param_count;
            row.f1 = f1_sum / static_cast<double>(ds.test_idx.size());
            row.test_nll = heldout_nll(mdl, ds, ds.test_idx);
            rows.push_back(row);
        }
    }
    return rows;
}

} // namespace flowmix::train
