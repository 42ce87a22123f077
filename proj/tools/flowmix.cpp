// flowmix command-line tool: train / generate / reconstruct / interpolate /
// eval / probe. Every command writes a manifest next to its outputs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "flowmix/config.hpp"
#include "flowmix/metrics.hpp"
#include "flowmix/pointio.hpp"
#include "flowmix/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace flowmix;

namespace {

std::string out_root() {
    const char* env = std::getenv("FLOWMIX_OUT_ROOT");
    return env && *env ? env : ".";
}

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create directory: " + dir);
}

std::vector<std::string> list_cloud_files(const std::string& dir) {
    if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir);
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto ext = e.path().extension().string();
        if (ext == ".xyz" || ext == ".ply" || ext == ".csv") files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

PointCloud subsample(const PointCloud& pc, int n, Rng& rng) {
    if (n <= 0 || n >= pc.size()) return pc;
    std::vector<int> idx(pc.size());
    for (int i = 0; i < pc.size(); ++i) idx[i] = i;
    for (int i = 0; i < n; ++i) {
        const int j = i + static_cast<int>(rng.randint(static_cast<std::uint64_t>(pc.size() - i)));
        std::swap(idx[i], idx[j]);
    }
    PointCloud out = PointCloud::empty(pc.d, n);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < pc.d; ++c) out.at(i, c) = pc.at(idx[i], c);
    return out;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

// ---- train ---------------------------------------------------------------

struct TrainArgs {
    std::string config_path, preset, out_dir;
    // overrides; -1 / NaN mean "not set" and are guarded by CLI11 counts
    int m = 0, epochs = 0, n_layers = 0, hidden = 0, latent = 0, batch_size = 0;
    int shapes = 0, points = 0, warmup_epochs = -1;
    double lr0 = 0.0, noise_sigma = -1.0;
    std::vector<int> lr_decay;
    std::uint64_t seed = 0;
    bool rotation_augment = false, no_warmup = false, no_size_match = false;
};

int cmd_train(const TrainArgs& a, const CLI::App& sub) {
    train::TrainConfig cfg =
        a.preset.empty() ? train::TrainConfig{} : train::preset_config(a.preset);
    if (!a.config_path.empty()) {
        // Overlay file values on top of the preset defaults.
        json eff = json::parse(cfg.to_json());
        const std::string text = cfg::read_file(a.config_path);
        const auto dot = a.config_path.rfind('.');
        const std::string ext = dot == std::string::npos ? "" : a.config_path.substr(dot);
        json file;
        if (ext == ".json")
            file = json::parse(train::TrainConfig::from_json(text).to_json());
        else if (ext == ".toml")
            file = json::parse(cfg::toml_to_json(text));
        else
            throw InputError("config must be .toml or .json: " + a.config_path);
        if (ext == ".toml") (void)train::TrainConfig::from_json(file.dump()); // key check
        for (const auto& [k, v] : file.items()) eff[k] = v;
        cfg = train::TrainConfig::from_json(eff.dump());
    }
    if (sub.count("--m")) cfg.m = a.m;
    if (sub.count("--epochs")) cfg.epochs = a.epochs;
    if (sub.count("--n-layers")) cfg.n_layers = a.n_layers;
    if (sub.count("--hidden")) cfg.hidden = a.hidden;
    if (sub.count("--latent")) cfg.latent = a.latent;
    if (sub.count("--batch-size")) cfg.batch_size = a.batch_size;
    if (sub.count("--shapes")) cfg.n_shapes = a.shapes;
    if (sub.count("--points")) cfg.points_per_shape = a.points;
    if (sub.count("--lr0")) cfg.lr0 = a.lr0;
    if (sub.count("--lr-decay")) cfg.lr_decay_epochs = a.lr_decay;
    if (sub.count("--noise-sigma")) cfg.noise_sigma = a.noise_sigma;
    if (sub.count("--warmup-epochs")) cfg.warmup_epochs = a.warmup_epochs;
    if (sub.count("--seed")) cfg.seed = a.seed;
    if (a.rotation_augment) cfg.rotation_augment = true;
    if (a.no_warmup) cfg.warmup_epochs = 0;
    if (a.no_size_match) cfg.size_matched = false;
    cfg.validate();

    const std::string out = a.out_dir.empty() ? out_root() + "/train_run" : a.out_dir;
    ensure_dir(out);

    Timer timer;
    const auto family = synth::family_from_name(cfg.family);
    synth::Dataset ds = synth::make_dataset(family, cfg.n_shapes, cfg.points_per_shape, cfg.seed);
    std::cerr << "dataset: " << cfg.family << ", " << ds.shapes.size() << " shapes x "
              << ds.points_per_shape << " points\n";

    train::Model model = train::Model::build(cfg);
    std::cerr << "model: m=" << model.sizing.m << " n_hat=" << model.sizing.n_hat
              << " h_hat=" << model.sizing.h_hat << " params=" << model.sizing.param_count
              << " (single-flow reference " << model.sizing.ref_param_count << ")\n";

    train::TrainResult res = train::train(model, ds);
    if (!res.log.records.empty()) {
        for (const auto& r : res.log.records)
            if (r.epoch % 25 == 0 || r.epoch + 1 == cfg.epochs)
                std::cerr << "epoch " << r.epoch << " loss " << r.loss << " lr " << r.lr << "\n";
    }

    const std::string ckpt_path = out + "/model.ckpt";
    train::save_model(ckpt_path, model);
    cfg::write_file(out + "/train_log.csv", res.log.to_csv());
    cfg::write_file(out + "/train_log.json", res.log.to_json() + "\n");
    json sizing = {{"m", model.sizing.m},         {"n_ref", model.sizing.n_ref},
                   {"h_ref", model.sizing.h_ref}, {"n_hat", model.sizing.n_hat},
                   {"h_hat", model.sizing.h_hat}, {"param_count", model.sizing.param_count},
                   {"ref_param_count", model.sizing.ref_param_count}};
    cfg::write_file(out + "/sizing.json", sizing.dump(2) + "\n");

    if (!ds.val_idx.empty()) {
        const double vn = train::heldout_nll(model, ds, ds.val_idx);
        std::cerr << "validation NLL/point: " << vn << "\n";
    }

    cfg::RunManifest man;
    man.command = "train";
    man.config_json = cfg.to_json();
    man.seed = cfg.seed;
    man.wall_seconds = timer.seconds();
    man.outputs = {ckpt_path, out + "/train_log.csv", out + "/train_log.json", out + "/sizing.json"};
    cfg::write_manifest(out + "/manifest.json", man);

    if (res.aborted) {
        std::cerr << "training aborted: " << res.diagnostic << "\n";
        return 3;
    }
    std::cerr << "done in " << man.wall_seconds << " s -> " << ckpt_path << "\n";
    return 0;
}

// ---- generate ------------------------------------------------------------

int cmd_generate(const std::string& ckpt, int count, int points, std::uint64_t seed,
                 const std::string& out_dir) {
    if (count < 0) throw InputError("count must be >= 0");
    if (points < 1) throw InputError("points must be >= 1");
    const std::string out = out_dir.empty() ? out_root() + "/generated" : out_dir;
    ensure_dir(out);
    Timer timer;
    train::Model model = train::load_model(ckpt);

    Rng rng(seed);
    std::vector<std::string> files;
    for (int i = 0; i < count; ++i) {
        ad::Tensor z = model.prior.sample(1, ad::Tensor(), rng);
        auto [pts, ids] = model.decoder.sample(z, points, rng);
        PointCloud pc = PointCloud::empty(model.d, points);
        for (int p = 0; p < points; ++p)
            for (int c = 0; c < model.d; ++c) pc.at(p, c) = pts(p, c);
        pc.labels = ids;
        char name[32];
        std::snprintf(name, sizeof(name), "gen_%04d.ply", i);
        const std::string path = out + "/" + name;
        io::write_cloud(path, pc);
        files.push_back(path);
    }

    cfg::RunManifest man;
    man.command = "generate";
    man.config_json = model.cfg.to_json();
    man.seed = seed;
    man.wall_seconds = timer.seconds();
    man.outputs = files;
    cfg::write_manifest(out + "/manifest.json", man);
    std::cerr << "wrote " << count << " clouds to " << out << "\n";
    return 0;
}

// ---- reconstruct ---------------------------------------------------------

int cmd_reconstruct(const std::string& ckpt, const std::string& input, int n_out,
                    std::uint64_t seed, const std::string& out_dir) {
    const std::string out = out_dir.empty() ? out_root() + "/reconstructed" : out_dir;
    ensure_dir(out);
    Timer timer;
    train::Model model = train::load_model(ckpt);
    PointCloud x = io::read_cloud(input);
    if (x.d != model.d)
        throw InputError("input dimension " + std::to_string(x.d) + " does not match model dimension " +
                         std::to_string(model.d));
    // The model lives in normalized coordinates; map in, sample, map back.
    NormalizeParams np = normalize_cloud(x);
    PointCloud rec = train::reconstruct(model, x, n_out, seed);
    denormalize_cloud(rec, np);

    const std::string path = out + "/recon.ply";
    io::write_cloud(path, rec);
    cfg::RunManifest man;
    man.command = "reconstruct";
    man.config_json = model.cfg.to_json();
    man.seed = seed;
    man.wall_seconds = timer.seconds();
    man.outputs = {path};
    cfg::write_manifest(out + "/manifest.json", man);
    std::cerr << "wrote " << path << " (" << n_out << " points)\n";
    return 0;
}

// ---- interpolate ---------------------------------------------------------

int cmd_interpolate(const std::string& ckpt, const std::string& file_a, const std::string& file_b,
                    int steps, int n_out, std::uint64_t seed, const std::vector<int>& components,
                    const std::string& out_dir) {
    const std::string out = out_dir.empty() ? out_root() + "/interpolated" : out_dir;
    ensure_dir(out);
    Timer timer;
    train::Model model = train::load_model(ckpt);
    PointCloud a = io::read_cloud(file_a);
    PointCloud b = io::read_cloud(file_b);
    if (a.d != model.d || b.d != model.d) throw InputError("input dimension does not match model");
    (void)normalize_cloud(a);
    (void)normalize_cloud(b);

    auto clouds = train::interpolate(model, a, b, steps, n_out, seed, components);
    std::vector<std::string> files;
    for (std::size_t s = 0; s < clouds.size(); ++s) {
        char name[32];
        std::snprintf(name, sizeof(name), "step_%03d.ply", static_cast<int>(s));
        const std::string path = out + "/" + name;
        io::write_cloud(path, clouds[s]);
        files.push_back(path);
    }
    cfg::RunManifest man;
    man.command = "interpolate";
    man.config_json = model.cfg.to_json();
    man.seed = seed;
    man.wall_seconds = timer.seconds();
    man.outputs = files;
    cfg::write_manifest(out + "/manifest.json", man);
    std::cerr << "wrote " << clouds.size() << " steps to " << out << "\n";
    return 0;
}

// ---- eval ----------------------------------------------------------------

int cmd_eval(const std::string& gen_dir, const std::string& ref_dir, int repeats, int sub_n,
             double tau, int grid, std::uint64_t seed, const std::string& out_dir) {
    if (repeats < 1) throw InputError("repeats must be >= 1");
    const std::string out = out_dir.empty() ? out_root() + "/eval" : out_dir;
    ensure_dir(out);
    Timer timer;

    auto gen_files = list_cloud_files(gen_dir);
    auto ref_files = list_cloud_files(ref_dir);
    if (gen_files.empty() || ref_files.empty()) throw InputError("eval: empty input directory");
    std::vector<PointCloud> gen, ref;
    for (const auto& f : gen_files) gen.push_back(io::read_cloud(f));
    for (const auto& f : ref_files) ref.push_back(io::read_cloud(f));

    metrics::EmdOptions emd_opt;
    std::vector<metrics::MetricsReport> reps;
    for (int r = 0; r < repeats; ++r) {
        const std::uint64_t rep_seed = seed + static_cast<std::uint64_t>(r);
        std::vector<PointCloud> g = gen, rf = ref;
        if (sub_n > 0) {
            Rng rng = Rng(rep_seed).split(11);
            for (auto& pc : g) pc = subsample(pc, sub_n, rng);
            for (auto& pc : rf) pc = subsample(pc, sub_n, rng);
        }
        reps.push_back(metrics::evaluate_sets(g, rf, tau, grid, emd_opt, rep_seed));
        std::cerr << "repeat " << r + 1 << "/" << repeats << " done\n";
    }

    // mean +/- std across repeats, per numeric column
    auto cols = [](const metrics::MetricsReport& m) {
        return std::vector<double>{m.cd_mean, m.emd_mean, m.f1_mean, m.jsd_val,
                                   m.cov_cd,  m.cov_emd,  m.cov_f1,  m.mmd_cd, m.mmd_emd,
                                   m.mmd_f1,  m.nna_cd,   m.nna_emd, m.nna_f1};
    };
    const std::vector<std::string> names = {"cd",     "emd",     "f1",     "jsd",    "cov_cd",
                                            "cov_emd", "cov_f1",  "mmd_cd", "mmd_emd", "mmd_f1",
                                            "nna_cd", "nna_emd", "nna_f1"};
    const std::size_t nc = names.size();
    std::vector<double> mean(nc, 0.0), sd(nc, 0.0);
    for (const auto& m : reps) {
        auto v = cols(m);
        for (std::size_t c = 0; c < nc; ++c) mean[c] += v[c];
    }
    for (std::size_t c = 0; c < nc; ++c) mean[c] /= reps.size();
    for (const auto& m : reps) {
        auto v = cols(m);
        for (std::size_t c = 0; c < nc; ++c) sd[c] += (v[c] - mean[c]) * (v[c] - mean[c]);
    }
    for (std::size_t c = 0; c < nc; ++c)
        sd[c] = reps.size() > 1 ? std::sqrt(sd[c] / (reps.size() - 1)) : 0.0;

    std::string csv = metrics::MetricsReport::csv_header() + "\n";
    for (const auto& m : reps) csv += m.to_csv_row() + "\n";
    cfg::write_file(out + "/metrics.csv", csv);

    json j;
    j["repeats"] = json::array();
    for (const auto& m : reps) j["repeats"].push_back(json::parse(m.to_json()));
    for (std::size_t c = 0; c < nc; ++c) {
        j["mean"][names[c]] = mean[c];
        j["std"][names[c]] = sd[c];
    }
    j["settings"] = {{"tau", tau},
                     {"grid_resolution", grid},
                     {"emd_n_exact", emd_opt.n_exact},
                     {"emd_eps_factor", emd_opt.eps_factor},
                     {"emd_iters", emd_opt.sinkhorn_iters},
                     {"subsample", sub_n},
                     {"seed", seed},
                     {"n_gen", gen.size()},
                     {"n_ref", ref.size()}};
    cfg::write_file(out + "/metrics.json", j.dump(2) + "\n");

    std::string summary = "metric,mean,std\n";
    for (std::size_t c = 0; c < nc; ++c)
        summary += names[c] + "," + fmt_g(mean[c]) + "," + fmt_g(sd[c]) + "\n";
    cfg::write_file(out + "/metrics_summary.csv", summary);

    cfg::RunManifest man;
    man.command = "eval";
    man.config_json = json({{"gen_dir", gen_dir},
                            {"ref_dir", ref_dir},
                            {"repeats", repeats},
                            {"subsample", sub_n},
                            {"tau", tau},
                            {"grid", grid}})
                          .dump(2);
    man.seed = seed;
    man.wall_seconds = timer.seconds();
    man.outputs = {out + "/metrics.csv", out + "/metrics.json", out + "/metrics_summary.csv"};
    cfg::write_manifest(out + "/manifest.json", man);
    for (std::size_t c = 0; c < nc; ++c)
        std::cerr << names[c] << " = " << mean[c] << " +/- " << sd[c] << "\n";
    return 0;
}

// ---- probe ---------------------------------------------------------------

std::vector<std::pair<int, int>> parse_sizes(const std::vector<std::string>& toks) {
    std::vector<std::pair<int, int>> sizes;
    for (const auto& t : toks) {
        const auto x = t.find('x');
        if (x == std::string::npos) throw InputError("size must look like NxH, got '" + t + "'");
        try {
            sizes.emplace_back(std::stoi(t.substr(0, x)), std::stoi(t.substr(x + 1)));
        } catch (const std::exception&) {
            throw InputError("size must look like NxH, got '" + t + "'");
        }
    }
    return sizes;
}

int cmd_probe(bool runtime, bool scaling, const std::vector<int>& m_list, int n_ref, int h_ref,
              int d, int latent, int n_points, int probe_repeats, const std::string& preset,
              const std::vector<std::string>& size_toks, double tau, std::uint64_t seed,
              const std::string& out_dir) {
    if (runtime == scaling) throw ConfigError("probe: pass exactly one of --runtime / --scaling");
    const std::string out = out_dir.empty() ? out_root() + "/probe" : out_dir;
    ensure_dir(out);
    Timer timer;
    cfg::RunManifest man;
    man.seed = seed;

    if (runtime) {
        auto rows = train::runtime_probe(m_list, n_ref, h_ref, d, latent, n_points, probe_repeats, seed);
        std::string csv = "m,n_hat,h_hat,params,sec_per_point,relative\n";
        for (const auto& r : rows) {
            csv += std::to_string(r.m) + "," + std::to_string(r.n_hat) + "," + std::to_string(r.h_hat) +
                   "," + std::to_string(r.params) + "," + fmt_g(r.sec_per_point) + "," +
                   fmt_g(r.relative) + "\n";
            std::cerr << "m=" << r.m << " time/point " << r.sec_per_point << " s, relative "
                      << r.relative << "\n";
        }
        cfg::write_file(out + "/runtime.csv", csv);
        man.command = "probe-runtime";
        man.config_json = json({{"m_list", m_list},
                                {"n_ref", n_ref},
                                {"h_ref", h_ref},
                                {"d", d},
                                {"latent", latent},
                                {"n_points", n_points},
                                {"repeats", probe_repeats}})
                              .dump(2);
        man.outputs = {out + "/runtime.csv"};
    } else {
        auto sizes = parse_sizes(size_toks);
        train::TrainConfig base = train::preset_config(preset);
        base.seed = seed;
        auto rows = train::scaling_study(base, sizes, m_list, tau);
        std::string csv = "n_ref,h_ref,m,n_hat,h_hat,params,f1,test_nll\n";
        for (const auto& r : rows) {
            csv += std::to_string(r.n_ref) + "," + std::to_string(r.h_ref) + "," + std::to_string(r.m) +
                   "," + std::to_string(r.n_hat) + "," + std::to_string(r.h_hat) + "," +
                   std::to_string(r.params) + "," + fmt_g(r.f1) + "," + fmt_g(r.test_nll) + "\n";
            std::cerr << "N=" << r.n_ref << " H=" << r.h_ref << " m=" << r.m << " params=" << r.params
                      << " F1=" << r.f1 << " NLL=" << r.test_nll << "\n";
        }
        cfg::write_file(out + "/scaling.csv", csv);
        man.command = "probe-scaling";
        man.config_json = json({{"preset", preset}, {"sizes", size_toks}, {"m_list", m_list}, {"tau", tau}})
                              .dump(2);
        man.outputs = {out + "/scaling.csv"};
    }
    man.wall_seconds = timer.seconds();
    cfg::write_manifest(out + "/manifest.json", man);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mixtures of conditional normalizing flows for point-set distributions"};
    app.require_subcommand(1);

    // train
    TrainArgs ta;
    auto* train_cmd = app.add_subcommand("train", "train encoder + mixture decoder + prior");
    train_cmd->add_option("--config", ta.config_path, "TOML or JSON config file");
    train_cmd->add_option("--preset", ta.preset, "family preset (e.g. two_squares_2d)");
    train_cmd->add_option("--m", ta.m, "mixture components");
    train_cmd->add_option("--epochs", ta.epochs, "training epochs");
    train_cmd->add_option("--n-layers", ta.n_layers, "single-flow reference depth N");
    train_cmd->add_option("--hidden", ta.hidden, "single-flow reference width H");
    train_cmd->add_option("--latent", ta.latent, "latent dimension L");
    train_cmd->add_option("--batch-size", ta.batch_size, "shapes per step");
    train_cmd->add_option("--shapes", ta.shapes, "dataset size in shapes");
    train_cmd->add_option("--points", ta.points, "points per shape");
    train_cmd->add_option("--lr0", ta.lr0, "initial learning rate");
    train_cmd->add_option("--lr-decay", ta.lr_decay, "epochs at which lr is divided by the decay factor");
    train_cmd->add_option("--noise-sigma", ta.noise_sigma, "training noise sigma");
    train_cmd->add_option("--warmup-epochs", ta.warmup_epochs, "uniform-weight warm-up epochs");
    train_cmd->add_option("--seed", ta.seed, "master seed");
    train_cmd->add_flag("--rotation-augment", ta.rotation_augment, "random rotation augmentation");
    train_cmd->add_flag("--no-warmup", ta.no_warmup, "disable the weight warm-up");
    train_cmd->add_flag("--no-size-match", ta.no_size_match, "use N,H per component directly");
    train_cmd->add_option("--out", ta.out_dir, "output directory");

    // generate
    std::string g_ckpt, g_out;
    int g_count = 10, g_points = 2048;
    std::uint64_t g_seed = 1;
    auto* gen_cmd = app.add_subcommand("generate", "sample new clouds from the learned prior");
    gen_cmd->add_option("--checkpoint", g_ckpt, "model checkpoint")->required();
    gen_cmd->add_option("--count", g_count, "number of clouds");
    gen_cmd->add_option("--points", g_points, "points per cloud");
    gen_cmd->add_option("--seed", g_seed, "sampling seed");
    gen_cmd->add_option("--out", g_out, "output directory");

    // reconstruct
    std::string r_ckpt, r_in, r_out;
    int r_n = 2048;
    std::uint64_t r_seed = 1;
    auto* rec_cmd = app.add_subcommand("reconstruct", "encode a cloud and resample it");
    rec_cmd->add_option("--checkpoint", r_ckpt, "model checkpoint")->required();
    rec_cmd->add_option("--input", r_in, "input cloud (.xyz/.ply/.csv)")->required();
    rec_cmd->add_option("--n-out", r_n, "output point count (free; covers upsampling)");
    rec_cmd->add_option("--seed", r_seed, "sampling seed");
    rec_cmd->add_option("--out", r_out, "output directory");

    // interpolate
    std::string i_ckpt, i_a, i_b, i_out;
    int i_steps = 8, i_n = 2048;
    std::uint64_t i_seed = 1;
    std::vector<int> i_comp;
    auto* int_cmd = app.add_subcommand("interpolate", "linear latent interpolation between two clouds");
    int_cmd->add_option("--checkpoint", i_ckpt, "model checkpoint")->required();
    int_cmd->add_option("--a", i_a, "first cloud")->required();
    int_cmd->add_option("--b", i_b, "second cloud")->required();
    int_cmd->add_option("--steps", i_steps, "number of interpolation steps (>= 2)");
    int_cmd->add_option("--n-out", i_n, "points per step");
    int_cmd->add_option("--components", i_comp, "only these flow indices receive the interpolated code");
    int_cmd->add_option("--seed", i_seed, "sampling seed");
    int_cmd->add_option("--out", i_out, "output directory");

    // eval
    std::string e_gen, e_ref, e_out;
    int e_rep = 10, e_sub = 0, e_grid = 28;
    double e_tau = 1e-2;
    std::uint64_t e_seed = 1;
    auto* eval_cmd = app.add_subcommand("eval", "full metric suite between two cloud directories");
    eval_cmd->add_option("--gen", e_gen, "generated clouds directory")->required();
    eval_cmd->add_option("--ref", e_ref, "reference clouds directory")->required();
    eval_cmd->add_option("--repeats", e_rep, "evaluation repeats (mean +/- std)");
    eval_cmd->add_option("--subsample", e_sub, "points per cloud per repeat (0 = all)");
    eval_cmd->add_option("--tau", e_tau, "F1 squared-distance threshold");
    eval_cmd->add_option("--grid", e_grid, "JSD voxel resolution per side");
    eval_cmd->add_option("--seed", e_seed, "subsampling seed");
    eval_cmd->add_option("--out", e_out, "output directory");

    // probe
    bool p_runtime = false, p_scaling = false;
    std::vector<int> p_m = {1, 2, 4, 8};
    int p_nref = 12, p_href = 32, p_d = 3, p_latent = 8, p_points = 20000, p_rep = 3;
    std::string p_preset = "two_squares_2d", p_out;
    std::vector<std::string> p_sizes = {"4x12", "6x24", "8x40"};
    double p_tau = 1e-3;
    std::uint64_t p_seed = 1;
    auto* probe_cmd = app.add_subcommand("probe", "runtime and decoder-size scaling studies");
    probe_cmd->add_flag("--runtime", p_runtime, "time ancestral sampling vs m");
    probe_cmd->add_flag("--scaling", p_scaling, "train at several sizes, report F1 vs parameters");
    probe_cmd->add_option("--m-list", p_m, "mixture sizes");
    probe_cmd->add_option("--n-ref", p_nref, "reference depth N (runtime)");
    probe_cmd->add_option("--h-ref", p_href, "reference width H (runtime)");
    probe_cmd->add_option("--d", p_d, "point dimension (runtime)");
    probe_cmd->add_option("--latent", p_latent, "latent dimension (runtime)");
    probe_cmd->add_option("--points", p_points, "points per timing run");
    probe_cmd->add_option("--repeats", p_rep, "timing repeats");
    probe_cmd->add_option("--preset", p_preset, "family preset (scaling)");
    probe_cmd->add_option("--sizes", p_sizes, "NxH sizes (scaling)");
    probe_cmd->add_option("--tau", p_tau, "F1 threshold (scaling)");
    probe_cmd->add_option("--seed", p_seed, "seed");
    probe_cmd->add_option("--out", p_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(ta, *train_cmd);
        if (gen_cmd->parsed()) return cmd_generate(g_ckpt, g_count, g_points, g_seed, g_out);
        if (rec_cmd->parsed()) return cmd_reconstruct(r_ckpt, r_in, r_n, r_seed, r_out);
        if (int_cmd->parsed())
            return cmd_interpolate(i_ckpt, i_a, i_b, i_steps, i_n, i_seed, i_comp, i_out);
        if (eval_cmd->parsed())
            return cmd_eval(e_gen, e_ref, e_rep, e_sub, e_tau, e_grid, e_seed, e_out);
        if (probe_cmd->parsed())
            return cmd_probe(p_runtime, p_scaling, p_m, p_nref, p_href, p_d, p_latent, p_points,
                             p_rep, p_preset, p_sizes, p_tau, p_seed, p_out);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const InputError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const DimensionError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
