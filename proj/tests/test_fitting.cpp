#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mrs/fitting.hpp"
#include "mrs/util.hpp"

using namespace mrs;

namespace {

const BasisSet& quick_basis() {
    static const BasisSet basis = [] {
        SynthesisInfo info;
        info.time_samples = 2048;
        return build_basis(default_models(), {1.0}, PpmWindow{}, info)[0];
    }();
    return basis;
}

InputTensor observe(const Sample& s, const InputConfig& cfg) {
    InputTensor t;
    t.rows = cfg.rows();
    t.bins = cfg.window.bins;
    t.data = fit_observation(s, cfg);
    return t;
}

}  // namespace

TEST_CASE("noiseless in-basis mixtures are recovered exactly") {
    const BasisSet& basis = quick_basis();
    const InputConfig cfg = parse_input_config("off,diff", "r,i");
    const auto names = basis.metabolite_names();
    const std::vector<double> weights = {0.3, 0.2, 0.1, 0.25, 0.15};

    ConcentrationVector c;
    for (size_t i = 0; i < names.size(); ++i) c[names[i]] = weights[i];
    const Sample s = synthesize_sample(basis, c, 0.0, 1);
    const FitResult fit = nnls_fit(observe(s, cfg), basis, cfg);

    const double total = 0.3 + 0.2 + 0.1 + 0.25 + 0.15;
    for (size_t i = 0; i < names.size(); ++i)
        CHECK(std::abs(fit.concentrations.at(names[i]) - weights[i] / total) < 1e-6);
    CHECK(fit.residual_norm < 1e-8);
}

TEST_CASE("exact recovery across many random mixtures") {
    const BasisSet& basis = quick_basis();
    const InputConfig cfg = parse_input_config("off,diff", "r,i");
    const auto names = basis.metabolite_names();
    SplitMix rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        ConcentrationVector c;
        double total = 0.0;
        for (const auto& name : names) {
            c[name] = rng.uniform();
            total += c[name];
        }
        const Sample s = synthesize_sample(basis, c, 0.0, 1);
        const FitResult fit = nnls_fit(observe(s, cfg), basis, cfg);
        for (const auto& name : names)
            CHECK(std::abs(fit.concentrations.at(name) - c[name] / total) < 1e-6);
        CHECK(fit.residual_norm < 1e-8);
    }
}

TEST_CASE("zero observation fits to zero") {
    const BasisSet& basis = quick_basis();
    const InputConfig cfg = parse_input_config("off", "r,i");
    InputTensor zero;
    zero.rows = cfg.rows();
    zero.bins = cfg.window.bins;
    zero.data.assign(size_t(zero.rows) * size_t(zero.bins), 0.0);
    const FitResult fit = nnls_fit(zero, basis, cfg);
    for (const auto& [name, v] : fit.concentrations) CHECK(v == 0.0);
    CHECK(fit.residual_norm == doctest::Approx(0.0));
}

TEST_CASE("single metabolite observation yields an indicator") {
    const BasisSet& basis = quick_basis();
    const InputConfig cfg = parse_input_config("off,diff", "r,i");
    for (const auto& name : basis.metabolite_names()) {
        const Sample s = synthesize_sample(basis, {{name, 0.6}}, 0.0, 1);
        const FitResult fit = nnls_fit(observe(s, cfg), basis, cfg);
        for (const auto& other : basis.metabolite_names())
            CHECK(std::abs(fit.concentrations.at(other) - (other == name ? 1.0 : 0.0)) < 1e-6);
    }
}

TEST_CASE("scaling the observation scales the raw fit") {
    const BasisSet& basis = quick_basis();
    const InputConfig cfg = parse_input_config("off,diff", "r,i");
    ConcentrationVector c{{"NAA", 0.5}, {"GABA", 0.25}, {"Cr", 0.7}};
    const Sample s = synthesize_sample(basis, c, 0.0, 1);
    InputTensor y = observe(s, cfg);
    const FitResult base = nnls_fit(y, basis, cfg);
    for (auto& v : y.data) v *= 2.5;
    const FitResult scaled = nnls_fit(y, basis, cfg);
    for (const auto& [name, v] : base.raw_concentrations)
        CHECK(scaled.raw_concentrations.at(name) == doctest::Approx(2.5 * v).epsilon(1e-9));
}

TEST_CASE("dual vector satisfies the optimality tolerance") {
    const BasisSet& basis = quick_basis();
    const InputConfig cfg = parse_input_config("off,diff", "r,i");
    // mixture missing two metabolites exercises the zero-constrained set
    ConcentrationVector c{{"NAA", 0.8}, {"Cr", 0.4}, {"Glu", 0.3}};
    const Sample s = synthesize_sample(basis, c, 0.0, 1);
    const InputTensor y = observe(s, cfg);
    const FitResult fit = nnls_fit(y, basis, cfg);

    const auto columns = fit_design_matrix(basis, cfg);
    const auto names = basis.metabolite_names();
    std::vector<double> residual = y.data;
    for (size_t j = 0; j < names.size(); ++j) {
        const double cj = fit.raw_concentrations.at(names[j]);
        if (cj == 0.0) continue;
        for (size_t k = 0; k < residual.size(); ++k) residual[k] -= cj * columns[j][k];
    }
    for (size_t j = 0; j < names.size(); ++j) {
        double w = 0.0;
        for (size_t k = 0; k < residual.size(); ++k) w += columns[j][k] * residual[k];
        if (fit.raw_concentrations.at(names[j]) > 0.0)
            CHECK(std::abs(w) < 1e-8);  // active column: gradient vanishes
        else
            CHECK(w <= 1e-8);  // zero-constrained column: no ascent direction
    }
}

TEST_CASE("duplicate columns resolve to a valid zero-residual solution") {
    // the active-set method admits one of the twins and the other's dual
    // drops to zero, so the degenerate system still solves cleanly
    std::vector<std::vector<double>> columns = {{1.0, 0.0}, {1.0, 0.0}};
    const std::vector<double> y = {2.0, 0.0};
    const FitResult fit = nnls_solve(columns, y, {"a", "b"});
    CHECK(fit.residual_norm < 1e-12);
    CHECK(fit.raw_concentrations.at("a") + fit.raw_concentrations.at("b") ==
          doctest::Approx(2.0));
}

TEST_CASE("shape mismatches are rejected") {
    const BasisSet& basis = quick_basis();
    const InputConfig cfg = parse_input_config("off", "m");
    InputTensor bad;
    bad.rows = 2;
    bad.bins = cfg.window.bins;
    bad.data.assign(size_t(bad.rows) * size_t(bad.bins), 0.0);
    CHECK_THROWS_AS(nnls_fit(bad, basis, cfg), ShapeError);
}
