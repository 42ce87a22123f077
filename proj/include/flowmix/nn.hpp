#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "flowmix/autodiff.hpp"
#include "flowmix/common.hpp"

namespace flowmix::nn {

using ad::Tensor;

// Ordered parameter/buffer registry. The order in which modules register
// decides checkpoint layout and Adam state indices, so it must be stable.
struct ParamRegistry {
    struct Entry {
        std::string name;
        Tensor tensor;
        bool buffer; // buffers (running stats) are checkpointed but not optimized
    };
    std::vector<Entry> entries;

    void add(const std::string& name, const Tensor& t) { entries.push_back({name, t, false}); }
    void add_buffer(const std::string& name, const Tensor& t) { entries.push_back({name, t, true}); }

    std::vector<Tensor> params() const {
        std::vector<Tensor> out;
        for (const auto& e : entries)
            if (!e.buffer) out.push_back(e.tensor);
        return out;
    }

    std::size_t total_param_count() const {
        std::size_t n = 0;
        for (const auto& e : entries)
            if (!e.buffer) n += e.tensor.size();
        return n;
    }
};

struct Linear {
    Tensor W; // in x out
    Tensor b; // 1 x out
    int in = 0, out = 0;

    Linear() = default;
    // Kaiming-uniform style init; zero_init makes the layer start as the zero map
    // (used for final layers of flow nets so flows start at the identity).
    Linear(int in_dim, int out_dim, Rng& rng, bool zero_init = false);

    Tensor operator()(const Tensor& x) const { return ad::add_row(ad::matmul(x, W), b); }

    void register_params(ParamRegistry& reg, const std::string& prefix) const {
        reg.add(prefix + ".W", W);
        reg.add(prefix + ".b", b);
    }
};

// 1-d batch normalization over the row dimension with learnable scale/shift.
// Train mode normalizes by batch statistics (requires >= 2 rows) and updates
// running statistics; eval mode uses the running statistics as constants.
struct BatchNorm1d {
    Tensor gamma, beta;       // 1 x features
    Tensor run_mean, run_var; // buffers, 1 x features
    double eps = 1e-5;
    double momentum = 0.1;
    int features = 0;

    BatchNorm1d() = default;
    explicit BatchNorm1d(int features_);

    Tensor operator()(const Tensor& x, bool train) const;

    void register_params(ParamRegistry& reg, const std::string& prefix) const {
        reg.add(prefix + ".gamma", gamma);
        reg.add(prefix + ".beta", beta);
        reg.add_buffer(prefix + ".run_mean", run_mean);
        reg.add_buffer(prefix + ".run_var", run_var);
    }
};

// Standard Adam with bias correction. State is kept per parameter slot, keyed
// by position in the parameter list.
struct Adam {
    double lr;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit Adam(double lr_) : lr(lr_) {}

    void step(const std::vector<Tensor>& params);
    static void zero_grad(const std::vector<Tensor>& params) {
        for (const auto& p : params) const_cast<Tensor&>(p).zero_grad();
    }

    // Global-norm gradient clipping; returns the pre-clip norm.
    static double clip_grad_norm(const std::vector<Tensor>& params, double max_norm);

private:
    struct Slot {
        std::vector<double> m, v;
    };
    std::vector<Slot> slots_;
    long t_ = 0;
};

} // namespace flowmix::nn
