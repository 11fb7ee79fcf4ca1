#pragma once

#include "mrs/datagen.hpp"
#include "mrs/preprocess.hpp"

namespace mrs {

struct FitResult {
    ConcentrationVector concentrations;      // normalised to sum 1 (zero vector as-is)
    ConcentrationVector raw_concentrations;  // the fitted non-negative amplitudes
    double residual_norm = 0.0;
    int iterations = 0;
};

struct FitDiverged : ConvergenceError {
    FitDiverged(const std::string& msg, FitResult best_)
        : ConvergenceError(msg), best(std::move(best_)) {}
    FitResult best;
};

// Design matrix for the non-negative fit: each metabolite's basis spectra run
// through the component extraction of `cfg` (acquisitions-major) and flatten
// to one column. No B0 shift and no per-row rescaling are applied on this
// path; both would break the linear mixture model the fit solves. Alignment
// of experimental observations happens upstream, on the observation.
std::vector<std::vector<double>> fit_design_matrix(const BasisSet& basis, const InputConfig& cfg);

// Matching observation vector for a sample (same pipeline as the columns).
std::vector<double> fit_observation(const Sample& sample, const InputConfig& cfg,
                                    bool b0_align = false);

// Lawson-Hanson active-set solve of min ||A c - y||^2, c >= 0, where A's
// columns come from fit_design_matrix. Tolerance 1e-10 on the dual vector,
// at most 10 * |metabolites| passive-set changes.
FitResult nnls_fit(const InputTensor& observed, const BasisSet& basis, const InputConfig& cfg);

// Raw NNLS on an explicit system (columns indexed like `labels`).
FitResult nnls_solve(const std::vector<std::vector<double>>& columns,
                     const std::vector<double>& y, const std::vector<std::string>& labels);

}  // namespace mrs
