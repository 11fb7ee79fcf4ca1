#include "mrs/fitting.hpp"

#include <algorithm>
#include <cmath>

namespace mrs {

namespace {

constexpr double kDualTolerance = 1e-10;

// Solve G z = b restricted to the index set P (G symmetric positive definite
// on passive sets of independent columns). Plain Gaussian elimination with
// partial pivoting; systems here have at most a handful of unknowns.
std::vector<double> solve_subsystem(const std::vector<double>& gram, const std::vector<double>& b,
                                    const std::vector<int>& set, int n) {
    const int m = int(set.size());
    std::vector<double> a(size_t(m) * size_t(m + 1));
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < m; ++c)
            a[size_t(r) * size_t(m + 1) + size_t(c)] =
                gram[size_t(set[size_t(r)]) * size_t(n) + size_t(set[size_t(c)])];
        a[size_t(r) * size_t(m + 1) + size_t(m)] = b[size_t(set[size_t(r)])];
    }
    for (int col = 0; col < m; ++col) {
        int pivot = col;
        for (int r = col + 1; r < m; ++r)
            if (std::abs(a[size_t(r) * size_t(m + 1) + size_t(col)]) >
                std::abs(a[size_t(pivot) * size_t(m + 1) + size_t(col)]))
                pivot = r;
        for (int c = 0; c <= m; ++c)
            std::swap(a[size_t(col) * size_t(m + 1) + size_t(c)],
                      a[size_t(pivot) * size_t(m + 1) + size_t(c)]);
        const double d = a[size_t(col) * size_t(m + 1) + size_t(col)];
        if (d == 0.0) throw ConvergenceError("singular passive-set system in NNLS");
        for (int r = 0; r < m; ++r) {
            if (r == col) continue;
            const double f = a[size_t(r) * size_t(m + 1) + size_t(col)] / d;
            if (f == 0.0) continue;
            for (int c = col; c <= m; ++c)
                a[size_t(r) * size_t(m + 1) + size_t(c)] -=
                    f * a[size_t(col) * size_t(m + 1) + size_t(c)];
        }
    }
    std::vector<double> z(static_cast<size_t>(m));
    for (int r = 0; r < m; ++r)
        z[size_t(r)] = a[size_t(r) * size_t(m + 1) + size_t(m)] /
                       a[size_t(r) * size_t(m + 1) + size_t(r)];
    return z;
}

}  // namespace

std::vector<std::vector<double>> fit_design_matrix(const BasisSet& basis, const InputConfig& cfg) {
    if (basis.entries.empty()) throw NoBasis("basis set has no entries");
    std::vector<std::vector<double>> columns;
    columns.reserve(basis.entries.size());
    for (const auto& entry : basis.entries) {
        std::vector<double> col;
        col.reserve(size_t(cfg.rows()) * size_t(cfg.window.bins));
        for (AcquisitionKind a : cfg.acquisitions) {
            const Spectrum& s = entry.spectrum(a);
            if (int(s.size()) != cfg.window.bins)
                throw ShapeError("basis bins do not match the input config window");
            for (ComponentKind c : cfg.components) {
                const auto row = extract_component(s, c);
                col.insert(col.end(), row.begin(), row.end());
            }
        }
        columns.push_back(std::move(col));
    }
    return columns;
}

std::vector<double> fit_observation(const Sample& sample, const InputConfig& cfg, bool b0_align) {
    return assemble_input(sample, cfg, AssembleOptions{.b0 = b0_align, .normalize = false}).data;
}

FitResult nnls_solve(const std::vector<std::vector<double>>& columns,
                     const std::vector<double>& y, const std::vector<std::string>& labels) {
    const int n = int(columns.size());
    if (n == 0) throw NoBasis("no design columns");
    if (int(labels.size()) != n) throw ShapeError("label count does not match design columns");
    const size_t m = y.size();
    for (const auto& col : columns)
        if (col.size() != m) throw ShapeError("design column length does not match observation");

    // precompute the Gram matrix and projected observation; the active-set
    // iteration then works in n dimensions
    std::vector<double> gram(size_t(n) * size_t(n));
    std::vector<double> proj(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            double s = 0.0;
            for (size_t k = 0; k < m; ++k) s += columns[size_t(i)][k] * columns[size_t(j)][k];
            gram[size_t(i) * size_t(n) + size_t(j)] = s;
            gram[size_t(j) * size_t(n) + size_t(i)] = s;
        }
        double s = 0.0;
        for (size_t k = 0; k < m; ++k) s += columns[size_t(i)][k] * y[k];
        proj[size_t(i)] = s;
    }

    std::vector<double> c(size_t(n), 0.0);
    std::vector<bool> passive(size_t(n), false);
    std::vector<double> w(static_cast<size_t>(n));
    const int max_outer = 10 * n;
    int iterations = 0;

    auto finish = [&](bool converged) {
        FitResult res;
        res.iterations = iterations;
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            res.raw_concentrations[labels[size_t(i)]] = c[size_t(i)];
            total += c[size_t(i)];
        }
        for (int i = 0; i < n; ++i)
            res.concentrations[labels[size_t(i)]] =
                total > 0.0 ? c[size_t(i)] / total : c[size_t(i)];
        double rr = 0.0;
        for (size_t k = 0; k < m; ++k) {
            double fit = 0.0;
            for (int i = 0; i < n; ++i)
                if (c[size_t(i)] != 0.0) fit += c[size_t(i)] * columns[size_t(i)][k];
            const double d = y[k] - fit;
            rr += d * d;
        }
        res.residual_norm = std::sqrt(rr);
        if (!converged)
            throw FitDiverged("NNLS did not converge within " + std::to_string(max_outer) +
                              " iterations", res);
        return res;
    };

    for (;;) {
        // dual vector w = A^T (y - A c)
        for (int i = 0; i < n; ++i) {
            double s = proj[size_t(i)];
            for (int j = 0; j < n; ++j)
                if (c[size_t(j)] != 0.0) s -= gram[size_t(i) * size_t(n) + size_t(j)] * c[size_t(j)];
            w[size_t(i)] = s;
        }
        int candidate = -1;
        double best = kDualTolerance;
        for (int i = 0; i < n; ++i) {
            if (passive[size_t(i)]) continue;
            if (w[size_t(i)] > best) {
                best = w[size_t(i)];
                candidate = i;
            }
        }
        if (candidate < 0) return finish(true);  // KKT satisfied
        if (iterations >= max_outer) return finish(false);
        ++iterations;
        passive[size_t(candidate)] = true;

        for (;;) {
            std::vector<int> pset;
            for (int i = 0; i < n; ++i)
                if (passive[size_t(i)]) pset.push_back(i);
            const auto z = solve_subsystem(gram, proj, pset, n);

            double alpha = 1.0;
            for (size_t k = 0; k < pset.size(); ++k) {
                if (z[k] > 0.0) continue;
                const double ck = c[size_t(pset[k])];
                const double a = ck / (ck - z[k]);
                alpha = std::min(alpha, a);
            }
            if (alpha >= 1.0) {
                for (size_t k = 0; k < pset.size(); ++k) c[size_t(pset[k])] = z[k];
                break;
            }
            for (size_t k = 0; k < pset.size(); ++k) {
                const int i = pset[k];
                c[size_t(i)] += alpha * (z[k] - c[size_t(i)]);
                if (c[size_t(i)] <= kDualTolerance) {
                    c[size_t(i)] = 0.0;
                    passive[size_t(i)] = false;
                }
            }
        }
    }
}

FitResult nnls_fit(const InputTensor& observed, const BasisSet& basis, const InputConfig& cfg) {
    const auto columns = fit_design_matrix(basis, cfg);
    if (observed.rows != cfg.rows() || observed.bins != cfg.window.bins)
        throw ShapeError("observation shape does not match the input config");
    return nnls_solve(columns, observed.data, basis.metabolite_names());
}

}  // namespace mrs
