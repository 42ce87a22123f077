#pragma once

#include <string>
#include <vector>

#include "flowmix/encoder.hpp"
#include "flowmix/mixture.hpp"
#include "flowmix/prior.hpp"
#include "flowmix/synth.hpp"

namespace flowmix::train {

using ad::Tensor;

// Everything that defines one run: data, model topology and optimization
// schedule. Presets fill in per-family defaults; individual fields can then be
// overridden (config file or CLI flags).
struct TrainConfig {
    std::string family = "two_squares_2d";
    int n_shapes = 48;
    int points_per_shape = 64;

    int epochs = 200;
    int batch_size = 36;
    double lr0 = 2.56e-4;
    std::vector<int> lr_decay_epochs;
    double lr_decay_factor = 4.0;
    double noise_sigma = 0.02;
    int warmup_epochs = 5;
    double grad_clip = 100.0;
    bool rotation_augment = false;

    int m = 2;
    int n_layers = 6; // single-flow reference depth N
    int hidden = 24;  // single-flow reference width H
    int latent = 8;   // L
    bool size_matched = true; // apply the ceil(N/sqrt(m)) parameter-matched sizing

    std::vector<int> encoder_widths = {32, 64, 128};
    int prior_layers = 6;
    int prior_hidden = 32;

    std::uint64_t seed = 1;

    void validate() const;
    std::string to_json() const;
    static TrainConfig from_json(const std::string& json_text);
};

// Per-family tuned defaults. Throws ConfigError for unknown names.
TrainConfig preset_config(const std::string& family);

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double l_d = 0.0;
    double l_prior = 0.0;
    double weight_entropy = 0.0;
    double jensen_gap = 0.0;
    double lr = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> records;

    std::string to_csv() const;
    std::string to_json() const;
};

// Encoder + mixture decoder + learned prior plus the registry that fixes the
// checkpoint layout.
struct Model {
    TrainConfig cfg;
    int d = 0;
    enc::SetEncoder encoder;
    mix::MixtureFlowDecoder decoder;
    prior::PriorFlow prior;
    mix::SizingReport sizing;
    nn::ParamRegistry registry;

    // Deterministic initialization from cfg.seed.
    static Model build(const TrainConfig& cfg);

    // Posterior mean shape code for one cloud (eval mode), 1 x L.
    Tensor encode_mean(const PointCloud& pc) const;

    std::string meta_json() const;
};

void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

struct TrainResult {
    TrainLog log;
    bool aborted = false;
    std::string diagnostic; // which loss term went non-finite, when aborted
    double seconds = 0.0;
};

// Minimizes L = L_D + L_Prior / points_per_shape (the negative ELBO per
// point). Deterministic given (config, dataset): identical runs produce
// identical logs and parameters. A non-finite loss aborts with the parameters
// rolled back to the end of the last finite epoch.
TrainResult train(Model& model, const synth::Dataset& ds);

// Mean negative log-likelihood per point over the given shapes, noise-free,
// z at the posterior mean. (The training-noise convolution is deliberately
// omitted; this biases absolute values, not comparisons.)
double heldout_nll(const Model& model, const synth::Dataset& ds, const std::vector<int>& idx);

// z = posterior mean of X, then n_out ancestral samples; labels carry the
// component id per point. n_out is free, which covers upsampling.
PointCloud reconstruct(const Model& model, const PointCloud& x, int n_out, std::uint64_t seed);

// Linear latent interpolation z_t = (1-t) z_a + t z_b over `steps` clouds.
// With a non-empty component_subset only the selected flows receive z_t;
// the others (and the weights/base) keep z_a. The same sampling seed is used
// at every step, so t=0 and t=1 reproduce the endpoint reconstructions.
std::vector<PointCloud> interpolate(const Model& model, const PointCloud& x_a, const PointCloud& x_b,
                                    int steps, int n_out, std::uint64_t seed,
                                    const std::vector<int>& component_subset = {});

// Plain maximum-likelihood density fit of a (possibly single-component)
// mixture decoder on one unconditional 2D target — no encoder, no prior.
// This is the regime of the classic two-squares toy: z plays no role, the
// decoder is trained directly on noisy points of one fixed shape.
struct DensityFitConfig {
    std::string family = "two_squares_2d";
    int m = 2;
    int n_ref = 2, h_ref = 12; // single-flow reference size; sizing rule applies
    int n_train = 4096, n_test = 2048;
    int steps = 1400;
    int batch_size = 512;
    int warmup_steps = 100;
    double lr0 = 3e-3;           // quartered at 70% and 85% of the run
    double noise_sigma = 0.02;
    double grad_clip = 100.0;
    std::uint64_t seed = 1;
};

struct DensityFitResult {
    mix::SizingReport sizing;
    double test_nll = 0.0;       // mean NLL per held-out point
    double split_purity = 1.0;   // best two-way label/component agreement (m=2 on labeled targets)
    double jensen_gap_init = 0.0, jensen_gap_final = 0.0; // on the test points
    double max_mean_weight = 0.0; // largest mean responsibility mass of any component
};

DensityFitResult fit_density(const DensityFitConfig& cfg);

struct RuntimeRow {
    int m = 0;
    int n_hat = 0, h_hat = 0;
    std::size_t params = 0;
    double sec_per_point = 0.0;
    double relative = 1.0; // vs m = 1
};

// Times ancestral sampling of parameter-matched decoders at each m. The m=1
// baseline is always measured, whether or not it appears in m_list.
std::vector<RuntimeRow> runtime_probe(const std::vector<int>& m_list, int n_ref, int h_ref, int d,
                                      int cond_dim, int n_points, int repeats, std::uint64_t seed);

struct ScalingRow {
    int n_ref = 0, h_ref = 0;
    int m = 0;
    int n_hat = 0, h_hat = 0;
    std::size_t params = 0;
    double f1 = 0.0;       // mean test-set reconstruction F1
    double test_nll = 0.0; // mean held-out NLL per point
};

// Trains one model per (size, m) on a shared dataset and scores test-set
// reconstructions; the plot-ready series behind the decoder-size study.
std::vector<ScalingRow> scaling_study(const TrainConfig& base, const std::vector<std::pair<int, int>>& sizes,
                                      const std::vector<int>& m_list, double tau);

} // namespace flowmix::train
