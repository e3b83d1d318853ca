#pragma once

#include <cstdint>
#include <vector>

namespace keysynth {

// RBF kernel machine, decision(x) = sum_i coef_i * K(sv_i, x) - rho.
// Binary fits store coef_i = y_i * alpha_i; one-class fits store alpha_i.
struct SvmModel {
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> coef;
    double rho = 0.0;
    double gamma = 0.0;
    bool one_class = false;
};

// Diagnostics from the dual optimization. kkt_gap is the maximal violating
// pair gap at termination and must end up below the tolerance.
struct SvmFitInfo {
    std::size_t iterations = 0;
    double kkt_gap = 0.0;
    std::size_t n_support = 0;
};

double rbf_kernel(const std::vector<double>& x, const std::vector<double>& z,
                  double gamma);

double svm_decision(const SvmModel& m, const std::vector<double>& x);

// C-SVM, labels in {0, 1} mapped to {-1, +1}. Sequential minimal
// optimization over the dual with a maximal-violating-pair working set and
// an LRU kernel row cache.
SvmModel svm_fit_binary(const std::vector<std::vector<double>>& X,
                        const std::vector<int>& labels, double C,
                        double gamma, double tol = 1e-3,
                        std::size_t cache_mb = 256,
                        SvmFitInfo* info = nullptr);

// One-class nu-SVM over unlabeled (human) vectors; decision >= 0 inside.
SvmModel svm_fit_one_class(const std::vector<std::vector<double>>& X,
                           double nu, double gamma, double tol = 1e-3,
                           std::size_t cache_mb = 256,
                           SvmFitInfo* info = nullptr);

} // namespace keysynth
