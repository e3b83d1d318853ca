#include "keysynth/nn.hpp"

#include <cmath>
#include <string>

#include "keysynth/errors.hpp"

namespace keysynth::nn {

namespace {

void require_shape(bool ok, const char* what) {
    if (!ok)
        throw ShapeError(what);
}

} // namespace

Mat matmul(const Mat& A, const Mat& B) {
    require_shape(A.cols == B.rows, "matmul: inner dimensions differ");
    Mat C(A.rows, B.cols);
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double* arow = &A.a[i * A.cols];
        double* crow = &C.a[i * C.cols];
        for (std::size_t p = 0; p < A.cols; ++p) {
            const double aip = arow[p];
            if (aip == 0.0)
                continue;
            const double* brow = &B.a[p * B.cols];
            for (std::size_t j = 0; j < B.cols; ++j)
                crow[j] += aip * brow[j];
        }
    }
    return C;
}

Mat matmul_nt(const Mat& A, const Mat& B) {
    require_shape(A.cols == B.cols, "matmul_nt: inner dimensions differ");
    Mat C(A.rows, B.rows);
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double* arow = &A.a[i * A.cols];
        double* crow = &C.a[i * C.cols];
        for (std::size_t j = 0; j < B.rows; ++j) {
            const double* brow = &B.a[j * B.cols];
            double acc = 0.0;
            for (std::size_t p = 0; p < A.cols; ++p)
                acc += arow[p] * brow[p];
            crow[j] = acc;
        }
    }
    return C;
}

void add_matmul_tn(Mat& C, const Mat& A, const Mat& B) {
    require_shape(A.rows == B.rows, "add_matmul_tn: batch dimensions differ");
    require_shape(C.rows == A.cols && C.cols == B.cols,
                  "add_matmul_tn: output shape mismatch");
    for (std::size_t r = 0; r < A.rows; ++r) {
        const double* arow = &A.a[r * A.cols];
        const double* brow = &B.a[r * B.cols];
        for (std::size_t i = 0; i < A.cols; ++i) {
            const double ai = arow[i];
            if (ai == 0.0)
                continue;
            double* crow = &C.a[i * C.cols];
            for (std::size_t j = 0; j < B.cols; ++j)
                crow[j] += ai * brow[j];
        }
    }
}

double sigmoid(double x) {
    if (x >= 0.0) {
        double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) {
    if (x > 30.0)
        return x;
    if (x < -30.0)
        return std::exp(x);
    return std::log1p(std::exp(x));
}

void ensure_finite(const Mat& m, const char* where) {
    for (double v : m.a)
        if (!std::isfinite(v))
            throw NumericalError(std::string("non-finite value in ") + where);
}

namespace {

double act_apply(Act act, double z) {
    switch (act) {
    case Act::linear:
        return z;
    case Act::tanh_fn:
        return std::tanh(z);
    case Act::sigmoid_fn:
        return sigmoid(z);
    case Act::softplus_fn:
        return softplus(z);
    }
    return z;
}

// derivative in terms of cached pre-activation z and output y
double act_deriv(Act act, double z, double y) {
    switch (act) {
    case Act::linear:
        return 1.0;
    case Act::tanh_fn:
        return 1.0 - y * y;
    case Act::sigmoid_fn:
        return y * (1.0 - y);
    case Act::softplus_fn:
        return sigmoid(z);
    }
    return 1.0;
}

} // namespace

void Dense::init(std::size_t in, std::size_t out, Act a, Rng& rng) {
    W = Mat(out, in);
    b.assign(out, 0.0);
    act = a;
    double r = std::sqrt(6.0 / static_cast<double>(in + out));
    for (double& w : W.a)
        w = rng.uniform(-r, r);
    zero_grad();
}

Mat Dense::forward(const Mat& X) {
    require_shape(X.cols == W.cols, "dense forward: input width mismatch");
    Mat Z = matmul_nt(X, W);
    for (std::size_t i = 0; i < Z.rows; ++i)
        for (std::size_t j = 0; j < Z.cols; ++j)
            Z(i, j) += b[j];
    Mat Y(Z.rows, Z.cols);
    for (std::size_t k = 0; k < Z.a.size(); ++k)
        Y.a[k] = act_apply(act, Z.a[k]);
    x_cache = X;
    z_cache = Z;
    y_cache = Y;
    return Y;
}

Mat Dense::backward(const Mat& dY) {
    require_shape(dY.rows == z_cache.rows && dY.cols == z_cache.cols,
                  "dense backward: gradient shape mismatch");
    Mat dZ(dY.rows, dY.cols);
    for (std::size_t k = 0; k < dY.a.size(); ++k)
        dZ.a[k] = dY.a[k] * act_deriv(act, z_cache.a[k], y_cache.a[k]);
    if (gW.rows != W.rows || gW.cols != W.cols)
        zero_grad();
    add_matmul_tn(gW, dZ, x_cache);
    for (std::size_t i = 0; i < dZ.rows; ++i)
        for (std::size_t j = 0; j < dZ.cols; ++j)
            gb[j] += dZ(i, j);
    return matmul(dZ, W);
}

void Dense::zero_grad() {
    gW = Mat(W.rows, W.cols);
    gb.assign(b.size(), 0.0);
}

void Lstm::init(std::size_t in, std::size_t hid, Rng& rng) {
    in_dim = in;
    hidden = hid;
    Wx = Mat(4 * hid, in);
    Wh = Mat(4 * hid, hid);
    b.assign(4 * hid, 0.0);
    const double r = 0.08;
    for (double& w : Wx.a)
        w = rng.uniform(-r, r);
    for (double& w : Wh.a)
        w = rng.uniform(-r, r);
    // forget gate opens at init so early gradients reach across steps
    for (std::size_t k = hidden; k < 2 * hidden; ++k)
        b[k] = 1.0;
    zero_grad();
}

Mat Lstm::forward(const std::vector<Mat>& xs) {
    require_shape(!xs.empty(), "lstm forward: empty sequence");
    const std::size_t B = xs[0].rows;
    cache.clear();
    cache.resize(xs.size());

    Mat H(B, hidden), C(B, hidden);
    for (std::size_t t = 0; t < xs.size(); ++t) {
        const Mat& X = xs[t];
        require_shape(X.rows == B && X.cols == in_dim,
                      "lstm forward: step shape mismatch");
        Mat G = matmul_nt(X, Wx);
        Mat Gh = matmul_nt(H, Wh);
        for (std::size_t k = 0; k < G.a.size(); ++k)
            G.a[k] += Gh.a[k];
        for (std::size_t r = 0; r < B; ++r)
            for (std::size_t j = 0; j < 4 * hidden; ++j)
                G(r, j) += b[j];

        StepCache& sc = cache[t];
        sc.x = X;
        sc.h_prev = H;
        sc.c_prev = C;
        sc.i = Mat(B, hidden);
        sc.f = Mat(B, hidden);
        sc.g = Mat(B, hidden);
        sc.o = Mat(B, hidden);
        sc.c = Mat(B, hidden);
        sc.tc = Mat(B, hidden);

        for (std::size_t r = 0; r < B; ++r) {
            for (std::size_t j = 0; j < hidden; ++j) {
                double gi = sigmoid(G(r, j));
                double gf = sigmoid(G(r, hidden + j));
                double gg = std::tanh(G(r, 2 * hidden + j));
                double go = sigmoid(G(r, 3 * hidden + j));
                double c_new = gf * C(r, j) + gi * gg;
                double tc = std::tanh(c_new);
                sc.i(r, j) = gi;
                sc.f(r, j) = gf;
                sc.g(r, j) = gg;
                sc.o(r, j) = go;
                sc.c(r, j) = c_new;
                sc.tc(r, j) = tc;
                C(r, j) = c_new;
                H(r, j) = go * tc;
            }
        }
    }
    return H;
}

void Lstm::backward(const Mat& dH_final) {
    require_shape(!cache.empty(), "lstm backward: no cached forward pass");
    const std::size_t B = cache[0].x.rows;
    require_shape(dH_final.rows == B && dH_final.cols == hidden,
                  "lstm backward: gradient shape mismatch");
    if (gWx.rows != Wx.rows)
        zero_grad();

    Mat dH = dH_final;
    Mat dC(B, hidden);
    for (std::size_t t = cache.size(); t-- > 0;) {
        const StepCache& sc = cache[t];
        Mat dG(B, 4 * hidden);
        for (std::size_t r = 0; r < B; ++r) {
            for (std::size_t j = 0; j < hidden; ++j) {
                double i = sc.i(r, j), f = sc.f(r, j), g = sc.g(r, j),
                       o = sc.o(r, j), tc = sc.tc(r, j);
                double dh = dH(r, j);
                double d_o = dh * tc;
                double dct = dC(r, j) + dh * o * (1.0 - tc * tc);
                double d_i = dct * g;
                double d_g = dct * i;
                double d_f = dct * sc.c_prev(r, j);
                dC(r, j) = dct * f;
                dG(r, j) = d_i * i * (1.0 - i);
                dG(r, hidden + j) = d_f * f * (1.0 - f);
                dG(r, 2 * hidden + j) = d_g * (1.0 - g * g);
                dG(r, 3 * hidden + j) = d_o * o * (1.0 - o);
            }
        }
        add_matmul_tn(gWx, dG, sc.x);
        add_matmul_tn(gWh, dG, sc.h_prev);
        for (std::size_t r = 0; r < B; ++r)
            for (std::size_t j = 0; j < 4 * hidden; ++j)
                gb[j] += dG(r, j);
        dH = matmul(dG, Wh);
    }
}

Vec Lstm::forward_single(const std::vector<Vec>& seq) const {
    require_shape(!seq.empty(), "lstm forward: empty sequence");
    Vec h(hidden, 0.0), c(hidden, 0.0), pre(4 * hidden);
    for (const Vec& x : seq) {
        require_shape(x.size() == in_dim, "lstm forward: step shape mismatch");
        for (std::size_t j = 0; j < 4 * hidden; ++j) {
            double z = b[j];
            const double* wx = &Wx.a[j * in_dim];
            for (std::size_t k = 0; k < in_dim; ++k)
                z += wx[k] * x[k];
            const double* wh = &Wh.a[j * hidden];
            for (std::size_t k = 0; k < hidden; ++k)
                z += wh[k] * h[k];
            pre[j] = z;
        }
        for (std::size_t j = 0; j < hidden; ++j) {
            double gi = sigmoid(pre[j]);
            double gf = sigmoid(pre[hidden + j]);
            double gg = std::tanh(pre[2 * hidden + j]);
            double go = sigmoid(pre[3 * hidden + j]);
            c[j] = gf * c[j] + gi * gg;
            h[j] = go * std::tanh(c[j]);
        }
    }
    return h;
}

void Lstm::zero_grad() {
    gWx = Mat(Wx.rows, Wx.cols);
    gWh = Mat(Wh.rows, Wh.cols);
    gb.assign(b.size(), 0.0);
}

void AdamState::step(const std::vector<Vec*>& params,
                     const std::vector<const Vec*>& grads) {
    if (params.size() != grads.size())
        throw ShapeError("adam: parameter/gradient list size mismatch");
    if (m.empty()) {
        m.resize(params.size());
        v.resize(params.size());
        for (std::size_t k = 0; k < params.size(); ++k) {
            m[k].assign(params[k]->size(), 0.0);
            v[k].assign(params[k]->size(), 0.0);
        }
    }
    ++step_count;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    double scale = 1.0;
    if (clip > 0.0) {
        double sq = 0.0;
        for (const Vec* g : grads)
            for (double gi : *g)
                sq += gi * gi;
        double norm = std::sqrt(sq);
        if (norm > clip)
            scale = clip / norm;
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        Vec& p = *params[k];
        const Vec& g = *grads[k];
        if (p.size() != g.size() || p.size() != m[k].size())
            throw ShapeError("adam: tensor shape changed between steps");
        for (std::size_t idx = 0; idx < p.size(); ++idx) {
            double gi = scale * g[idx];
            m[k][idx] = beta1 * m[k][idx] + (1.0 - beta1) * gi;
            v[k][idx] = beta2 * v[k][idx] + (1.0 - beta2) * gi * gi;
            double mhat = m[k][idx] / bc1;
            double vhat = v[k][idx] / bc2;
            p[idx] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

Mat MlpNetwork::forward(const Mat& X) {
    Mat cur = X;
    for (Dense& layer : layers)
        cur = layer.forward(cur);
    return cur;
}

Mat MlpNetwork::backward(const Mat& dY) {
    Mat cur = dY;
    for (std::size_t k = layers.size(); k-- > 0;)
        cur = layers[k].backward(cur);
    return cur;
}

void MlpNetwork::zero_grad() {
    for (Dense& layer : layers)
        layer.zero_grad();
}

std::vector<Vec*> MlpNetwork::params() {
    std::vector<Vec*> out;
    for (Dense& layer : layers) {
        out.push_back(&layer.W.a);
        out.push_back(&layer.b);
    }
    return out;
}

std::vector<const Vec*> MlpNetwork::grads() const {
    std::vector<const Vec*> out;
    for (const Dense& layer : layers) {
        out.push_back(&layer.gW.a);
        out.push_back(&layer.gb);
    }
    return out;
}

} // namespace keysynth::nn
