#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "flowmix/common.hpp"

namespace flowmix::ad {

// Dense f64 matrices with taped reverse-mode differentiation. Every value is a
// rows x cols matrix; scalars are 1x1. The graph built by the ops below *is*
// the tape: backward() replays it in reverse topological order and then clears
// the backprop closures, so a second backward on the same graph throws.
struct Node {
    int rows = 0;
    int cols = 0;
    std::vector<double> val;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop; // accumulates into parents' grad

    std::size_t size() const { return val.size(); }
    void ensure_grad() {
        if (grad.empty()) grad.assign(val.size(), 0.0);
    }
};

class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(int rows, int cols, bool requires_grad = false);
    static Tensor constant(int rows, int cols, double fill);
    static Tensor from(int rows, int cols, std::vector<double> data, bool requires_grad = false);
    static Tensor scalar(double v);

    bool defined() const { return static_cast<bool>(node_); }
    int rows() const { return node_->rows; }
    int cols() const { return node_->cols; }
    std::size_t size() const { return node_->size(); }

    std::vector<double>& data() { return node_->val; }
    const std::vector<double>& data() const { return node_->val; }
    std::vector<double>& grad() { node_->ensure_grad(); return node_->grad; }
    const std::vector<double>& grad_view() const { return node_->grad; }
    bool requires_grad() const { return node_->requires_grad; }

    double operator()(int r, int c) const { return node_->val[static_cast<std::size_t>(r) * node_->cols + c]; }
    double& at(int r, int c) { return node_->val[static_cast<std::size_t>(r) * node_->cols + c]; }
    double item() const {
        if (node_->size() != 1) throw DimensionError("item() on non-scalar tensor");
        return node_->val[0];
    }

    void zero_grad() { node_->grad.assign(node_->size(), 0.0); }

    std::shared_ptr<Node> node() const { return node_; }
    explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

private:
    std::shared_ptr<Node> node_;
};

// --- elementwise / broadcast arithmetic -------------------------------------
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor add_row(const Tensor& a, const Tensor& row);   // row: 1 x cols
Tensor sub_row(const Tensor& a, const Tensor& row);
Tensor mul_row(const Tensor& a, const Tensor& row);
Tensor add_col(const Tensor& a, const Tensor& col);   // col: rows x 1
Tensor sub_col(const Tensor& a, const Tensor& col);
Tensor mul_col(const Tensor& a, const Tensor& col);

// --- elementwise functions ---------------------------------------------------
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor rsqrt(const Tensor& a);
Tensor square(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor swish(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor clamp(const Tensor& a, double lo, double hi); // zero gradient outside [lo, hi]

// --- linear algebra / reductions --------------------------------------------
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor sum_all(const Tensor& a);                      // 1x1
Tensor mean_all(const Tensor& a);                     // 1x1
Tensor sum_rows(const Tensor& a);                     // rows x 1, sum over cols
Tensor sum_cols(const Tensor& a);                     // 1 x cols, sum over rows
Tensor mean_cols(const Tensor& a);                    // 1 x cols
Tensor logsumexp_rows(const Tensor& a);               // rows x 1, max-shifted

// --- structural ops ----------------------------------------------------------
Tensor select_cols(const Tensor& a, const std::vector<int>& idx);
// Assemble a rows x dim matrix from two disjoint column sets.
Tensor merge_cols(int dim, const std::vector<int>& idx_a, const Tensor& a,
                  const std::vector<int>& idx_b, const Tensor& b);
Tensor concat_cols(const std::vector<Tensor>& parts);
// Each row repeated `times` consecutive times; backward sums over each block.
Tensor repeat_rows(const Tensor& a, int times);
// Max over consecutive groups of `group` rows; ties go to the first row.
Tensor group_max(const Tensor& a, int group);

// Reverse pass from a scalar loss. Gradients accumulate into every
// requires_grad tensor reachable from it; the tape is cleared afterwards.
void backward(const Tensor& loss);

} // namespace flowmix::ad
