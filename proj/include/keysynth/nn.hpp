#pragma once

#include <cstddef>
#include <vector>

#include "keysynth/rng.hpp"

namespace keysynth::nn {

using Vec = std::vector<double>;

// Row-major dense matrix. Small enough on purpose; everything in this kit
// works on batches of at most a few hundred rows.
struct Mat {
    std::size_t rows = 0, cols = 0;
    Vec a;

    Mat() = default;
    Mat(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const {
        return a[i * cols + j];
    }
    void zero() { a.assign(a.size(), 0.0); }
};

Mat matmul(const Mat& A, const Mat& B);            // A(m,k) * B(k,n)
Mat matmul_nt(const Mat& A, const Mat& B);         // A(m,k) * B(n,k)^T
void add_matmul_tn(Mat& C, const Mat& A, const Mat& B); // C += A^T * B

double sigmoid(double x);
double softplus(double x); // strictly positive for all finite x

enum class Act { linear, tanh_fn, sigmoid_fn, softplus_fn };

// Fully connected layer, y = act(W x + b). Forward caches what backward
// needs; backward accumulates into gW/gb and returns the input gradient.
struct Dense {
    Mat W; // out x in
    Vec b; // out
    Act act = Act::linear;

    Mat gW;
    Vec gb;

    Mat x_cache, z_cache, y_cache;

    void init(std::size_t in, std::size_t out, Act a, Rng& rng);
    std::size_t in_dim() const { return W.cols; }
    std::size_t out_dim() const { return W.rows; }

    Mat forward(const Mat& X);
    Mat backward(const Mat& dY);
    void zero_grad();
};

// Single-layer LSTM. Gate blocks are stacked [input; forget; cell; output],
// each `hidden` rows. forward() runs a whole batch of equal-length
// sequences and returns the final hidden state; backward() runs truncated
// nowhere, full backpropagation through time.
struct Lstm {
    std::size_t in_dim = 0, hidden = 0;
    Mat Wx; // 4H x in
    Mat Wh; // 4H x H
    Vec b;  // 4H

    Mat gWx, gWh;
    Vec gb;

    struct StepCache {
        Mat x, h_prev, c_prev, i, f, g, o, c, tc;
    };
    std::vector<StepCache> cache;

    void init(std::size_t in, std::size_t hid, Rng& rng);
    Mat forward(const std::vector<Mat>& xs); // xs[t] is B x in
    void backward(const Mat& dH_final);
    Vec forward_single(const std::vector<Vec>& seq) const; // no cache
    void zero_grad();
};

// Adam with bias correction. m/v are sized on first step; the parameter
// list must keep the same shapes from step to step. A positive clip caps
// the global L2 norm of each step's gradients before they enter the
// moment estimates.
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip = 0.0;
    long long step_count = 0;
    std::vector<Vec> m, v;

    void step(const std::vector<Vec*>& params,
              const std::vector<const Vec*>& grads);
};

// Dense layers composed front to back, trained or probed as one unit.
struct MlpNetwork {
    std::vector<Dense> layers;

    Mat forward(const Mat& X);
    Mat backward(const Mat& dY);
    void zero_grad();
    std::vector<Vec*> params();
    std::vector<const Vec*> grads() const;
};

void ensure_finite(const Mat& m, const char* where);

} // namespace keysynth::nn
