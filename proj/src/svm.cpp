#include "keysynth/svm.hpp"

#include <cmath>
#include <limits>
#include <list>
#include <unordered_map>

#include "keysynth/errors.hpp"

namespace keysynth {

double rbf_kernel(const std::vector<double>& x, const std::vector<double>& z,
                  double gamma) {
    if (x.size() != z.size())
        throw ShapeError("rbf_kernel: dimension mismatch");
    double d2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        double d = x[k] - z[k];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

double svm_decision(const SvmModel& m, const std::vector<double>& x) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.support_vectors.size(); ++i)
        acc += m.coef[i] * rbf_kernel(m.support_vectors[i], x, m.gamma);
    return acc - m.rho;
}

namespace {

// LRU cache of kernel rows in float, LIBSVM style. Row i holds K(i, j) for
// every j; gradients stay double, only the cached rows are narrowed.
class KernelCache {
public:
    KernelCache(const std::vector<std::vector<double>>& X, double gamma,
                std::size_t cache_mb)
        : X_(X), gamma_(gamma) {
        n_ = X.size();
        sqnorm_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            double s = 0.0;
            for (double v : X[i])
                s += v * v;
            sqnorm_[i] = s;
        }
        std::size_t bytes = cache_mb << 20;
        capacity_ = bytes / (sizeof(float) * std::max<std::size_t>(n_, 1));
        if (capacity_ < 2)
            capacity_ = 2;
    }

    const float* row(std::size_t i) {
        auto it = map_.find(i);
        if (it != map_.end()) {
            order_.splice(order_.begin(), order_, it->second.where);
            return it->second.data.data();
        }
        if (map_.size() >= capacity_) {
            std::size_t victim = order_.back();
            order_.pop_back();
            map_.erase(victim);
        }
        Entry e;
        e.data.resize(n_);
        const std::vector<double>& xi = X_[i];
        for (std::size_t j = 0; j < n_; ++j) {
            double dot = 0.0;
            const std::vector<double>& xj = X_[j];
            for (std::size_t k = 0; k < xi.size(); ++k)
                dot += xi[k] * xj[k];
            double d2 = sqnorm_[i] + sqnorm_[j] - 2.0 * dot;
            e.data[j] = static_cast<float>(std::exp(-gamma_ * std::max(d2, 0.0)));
        }
        order_.push_front(i);
        e.where = order_.begin();
        auto res = map_.emplace(i, std::move(e));
        return res.first->second.data.data();
    }

private:
    struct Entry {
        std::vector<float> data;
        std::list<std::size_t>::iterator where;
    };
    const std::vector<std::vector<double>>& X_;
    double gamma_;
    std::vector<double> sqnorm_;
    std::size_t n_ = 0;
    std::size_t capacity_ = 0;
    std::list<std::size_t> order_;
    std::unordered_map<std::size_t, Entry> map_;
};

constexpr double kTau = 1e-12;

// Dual problem: min 0.5 a^T Q a + p^T a, with y^T a fixed, 0 <= a_i <= C_i,
// Q_ij = y_i y_j K_ij. Maximal-violating-pair selection; terminates when
// the pair gap drops below tol.
struct SmoSolver {
    const std::vector<std::vector<double>>& X;
    std::vector<signed char> y;
    std::vector<double> p;
    std::vector<double> C;
    std::vector<double> alpha;
    double gamma;
    double tol;
    std::size_t cache_mb;

    std::size_t iterations = 0;
    double kkt_gap = 0.0;
    std::vector<double> G; // gradient of the dual objective

    void solve() {
        const std::size_t n = X.size();
        KernelCache cache(X, gamma, cache_mb);

        G = p;
        for (std::size_t i = 0; i < n; ++i) {
            if (alpha[i] == 0.0)
                continue;
            const float* Ki = cache.row(i);
            for (std::size_t j = 0; j < n; ++j)
                G[j] += static_cast<double>(y[i]) * y[j] * Ki[j] * alpha[i];
        }

        const std::size_t max_iter =
            std::max<std::size_t>(10000000, 100 * n);
        for (iterations = 0; iterations < max_iter; ++iterations) {
            // -y_i G_i maximal over the "up" set, minimal over "down"
            double m_up = -std::numeric_limits<double>::infinity();
            double m_low = std::numeric_limits<double>::infinity();
            std::size_t i_sel = n, j_sel = n;
            for (std::size_t t = 0; t < n; ++t) {
                double v = -static_cast<double>(y[t]) * G[t];
                bool in_up = (y[t] > 0 && alpha[t] < C[t]) ||
                             (y[t] < 0 && alpha[t] > 0.0);
                bool in_low = (y[t] > 0 && alpha[t] > 0.0) ||
                              (y[t] < 0 && alpha[t] < C[t]);
                if (in_up && v > m_up) {
                    m_up = v;
                    i_sel = t;
                }
                if (in_low && v < m_low) {
                    m_low = v;
                    j_sel = t;
                }
            }
            kkt_gap = m_up - m_low;
            if (!(kkt_gap > tol) || i_sel == n || j_sel == n)
                break;

            const std::size_t i = i_sel, j = j_sel;
            const float* Ki = cache.row(i);
            const float* Kj = cache.row(j);
            const double Kii = Ki[i], Kjj = Kj[j], Kij = Ki[j];

            double old_ai = alpha[i], old_aj = alpha[j];
            // quad = Q_ii + Q_jj - 2 y_i y_j Q_ij = K_ii + K_jj - 2 K_ij
            // in both branches once the labels are folded in
            if (y[i] != y[j]) {
                double quad = Kii + Kjj - 2.0 * Kij;
                if (quad <= 0.0)
                    quad = kTau;
                double delta = (-G[i] - G[j]) / quad;
                double diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if (diff > 0.0 && alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                } else if (diff <= 0.0 && alpha[i] < 0.0) {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if (diff > C[i] - C[j] && alpha[i] > C[i]) {
                    alpha[i] = C[i];
                    alpha[j] = C[i] - diff;
                } else if (diff <= C[i] - C[j] && alpha[j] > C[j]) {
                    alpha[j] = C[j];
                    alpha[i] = C[j] + diff;
                }
            } else {
                double quad = Kii + Kjj - 2.0 * Kij;
                if (quad <= 0.0)
                    quad = kTau;
                double delta = (G[i] - G[j]) / quad;
                double sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if (sum > C[i] && alpha[i] > C[i]) {
                    alpha[i] = C[i];
                    alpha[j] = sum - C[i];
                } else if (sum <= C[i] && alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if (sum > C[j] && alpha[j] > C[j]) {
                    alpha[j] = C[j];
                    alpha[i] = sum - C[j];
                } else if (sum <= C[j] && alpha[i] < 0.0) {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }

            double dai = alpha[i] - old_ai;
            double daj = alpha[j] - old_aj;
            if (dai == 0.0 && daj == 0.0)
                break; // numerically stuck; gap is already ~tol
            for (std::size_t t = 0; t < G.size(); ++t)
                G[t] += static_cast<double>(y[t]) *
                        (y[i] * Ki[t] * dai + y[j] * Kj[t] * daj);
        }
    }

    double compute_rho() const {
        // average -y G over free vectors; fall back to the bound midpoint
        double ub = std::numeric_limits<double>::infinity();
        double lb = -std::numeric_limits<double>::infinity();
        double sum_free = 0.0;
        std::size_t n_free = 0;
        for (std::size_t t = 0; t < alpha.size(); ++t) {
            double yg = static_cast<double>(y[t]) * G[t];
            if (alpha[t] >= C[t]) {
                if (y[t] < 0)
                    ub = std::min(ub, yg);
                else
                    lb = std::max(lb, yg);
            } else if (alpha[t] <= 0.0) {
                if (y[t] > 0)
                    ub = std::min(ub, yg);
                else
                    lb = std::max(lb, yg);
            } else {
                ++n_free;
                sum_free += yg;
            }
        }
        if (n_free > 0)
            return sum_free / static_cast<double>(n_free);
        return (ub + lb) / 2.0;
    }
};

SvmModel collect_model(const SmoSolver& solver, bool one_class) {
    SvmModel m;
    m.gamma = solver.gamma;
    m.one_class = one_class;
    m.rho = solver.compute_rho();
    for (std::size_t i = 0; i < solver.alpha.size(); ++i) {
        if (solver.alpha[i] <= 0.0)
            continue;
        m.support_vectors.push_back(solver.X[i]);
        m.coef.push_back(static_cast<double>(solver.y[i]) * solver.alpha[i]);
    }
    return m;
}

} // namespace

SvmModel svm_fit_binary(const std::vector<std::vector<double>>& X,
                        const std::vector<int>& labels, double C,
                        double gamma, double tol, std::size_t cache_mb,
                        SvmFitInfo* info) {
    if (X.empty() || X.size() != labels.size())
        throw EmptyClass("svm_fit_binary: empty or mismatched training set");
    if (!(C > 0.0) || !(gamma > 0.0))
        throw InvalidParameters("svm_fit_binary: C and gamma must be "
                                "positive");
    bool has0 = false, has1 = false;
    SmoSolver solver{X, {}, {}, {}, {}, gamma, tol, cache_mb};
    solver.y.resize(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) {
        if (labels[i] == 1) {
            solver.y[i] = 1;
            has1 = true;
        } else {
            solver.y[i] = -1;
            has0 = true;
        }
    }
    if (!has0 || !has1)
        throw EmptyClass("svm_fit_binary: need both classes present");
    solver.p.assign(X.size(), -1.0);
    solver.C.assign(X.size(), C);
    solver.alpha.assign(X.size(), 0.0);
    solver.solve();
    if (info)
        *info = {solver.iterations, solver.kkt_gap, 0};
    SvmModel m = collect_model(solver, false);
    if (info)
        info->n_support = m.support_vectors.size();
    return m;
}

SvmModel svm_fit_one_class(const std::vector<std::vector<double>>& X,
                           double nu, double gamma, double tol,
                           std::size_t cache_mb, SvmFitInfo* info) {
    if (X.empty())
        throw EmptyClass("svm_fit_one_class: empty training set");
    if (!(nu > 0.0) || nu > 1.0 || !(gamma > 0.0))
        throw InvalidParameters("svm_fit_one_class: need 0 < nu <= 1 and "
                                "gamma > 0");
    const std::size_t n = X.size();
    SmoSolver solver{X, {}, {}, {}, {}, gamma, tol, cache_mb};
    solver.y.assign(n, 1);
    solver.p.assign(n, 0.0);
    const double cap = 1.0 / (nu * static_cast<double>(n));
    solver.C.assign(n, cap);
    solver.alpha.assign(n, 0.0);
    // feasible start: sum alpha = 1 spread over the first ceil(nu*n) slots
    double remaining = 1.0;
    for (std::size_t i = 0; i < n && remaining > 0.0; ++i) {
        double take = std::min(cap, remaining);
        solver.alpha[i] = take;
        remaining -= take;
    }
    solver.solve();
    if (info)
        *info = {solver.iterations, solver.kkt_gap, 0};
    SvmModel m = collect_model(solver, true);
    if (info)
        info->n_support = m.support_vectors.size();
    return m;
}

} // namespace keysynth
