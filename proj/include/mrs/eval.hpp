#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mrs/datagen.hpp"
#include "mrs/fitting.hpp"
#include "mrs/nn.hpp"

namespace mrs {

// Actual and predicted relative concentrations, N samples x L metabolites.
struct EvaluationRecord {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> actual;
    std::vector<std::vector<double>> predicted;

    size_t count() const { return actual.size(); }
};

// How the spread around the mean absolute error is computed. `Predictions`
// measures the deviation of the predicted values themselves around epsilon;
// `AbsoluteErrors` is the conventional deviation of |a - p| around epsilon.
enum class SigmaMode { Predictions, AbsoluteErrors };

const char* sigma_mode_name(SigmaMode m);
SigmaMode sigma_mode_from_name(const std::string& name);

struct ErrorStats {
    double epsilon = 0.0;
    double sigma = 0.0;
};

ErrorStats mean_abs_error(const EvaluationRecord& rec, SigmaMode mode = SigmaMode::Predictions);

// Per-metabolite mean absolute percentage error over entries with a > 0;
// metabolites with no positive actual value report nullopt.
std::map<std::string, std::optional<double>> mape_per_metabolite(const EvaluationRecord& rec);

struct ReducedRecord {
    EvaluationRecord record;
    size_t dropped_rows = 0;  // rows whose kept concentrations summed to zero
};

// Restrict to `keep` (empty = all), optionally merging Glu+Gln into GLX
// first, then renormalise every row to sum 1.
ReducedRecord rescale_reduced(const EvaluationRecord& rec, const std::vector<std::string>& keep,
                              bool merge_glx);

struct RegressionStats {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double p_value = 1.0;  // two-sided test of zero slope
    double std_error = 0.0;
};

RegressionStats linregress(const std::vector<double>& x, const std::vector<double>& y);

// Regularised incomplete beta function I_x(a, b) (used for the slope t-test).
double incomplete_beta(double a, double b, double x);

// --- quantifier front ends -------------------------------------------------------

class Quantifier {
  public:
    virtual ~Quantifier() = default;
    virtual std::vector<std::string> labels() const = 0;
    // predictions aligned with labels()
    virtual std::vector<double> quantify(const Sample& sample) = 0;
    virtual std::string describe() const = 0;
};

class NetworkQuantifier : public Quantifier {
  public:
    explicit NetworkQuantifier(nn::Network& net) : net_(net) {}
    std::vector<std::string> labels() const override { return net_.labels; }
    std::vector<double> quantify(const Sample& sample) override;
    std::string describe() const override { return "network"; }

  private:
    nn::Network& net_;
};

class NnlsQuantifier : public Quantifier {
  public:
    NnlsQuantifier(const BasisSet& basis, const InputConfig& cfg, bool b0_align = true);
    std::vector<std::string> labels() const override { return labels_; }
    std::vector<double> quantify(const Sample& sample) override;
    std::string describe() const override { return "nnls"; }

  private:
    const BasisSet& basis_;
    InputConfig cfg_;
    bool b0_align_;
    std::vector<std::string> labels_;
    std::vector<std::vector<double>> columns_;
};

// --- reports ----------------------------------------------------------------------

struct EvaluationReport {
    std::string method;
    std::string dataset_tag;
    size_t count = 0;
    size_t dropped_rows = 0;
    std::vector<std::string> labels;
    double epsilon = 0.0;
    double sigma = 0.0;
    std::string sigma_mode;
    std::map<std::string, std::optional<double>> mape;
    std::map<std::string, std::optional<RegressionStats>> regression;
};

struct ReductionOptions {
    std::vector<std::string> keep;  // empty = all
    bool merge_glx = false;
};

EvaluationRecord build_record(Quantifier& q, const Dataset& data);

EvaluationReport evaluate_record(const EvaluationRecord& rec, const ReductionOptions& reduction,
                                 SigmaMode mode = SigmaMode::Predictions);

EvaluationReport evaluate(Quantifier& q, const Dataset& data, const ReductionOptions& reduction,
                          SigmaMode mode = SigmaMode::Predictions);

std::string report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const std::string& text);
void save_report(const EvaluationReport& report, const std::string& path);
EvaluationReport load_report(const std::string& path);

}  // namespace mrs
