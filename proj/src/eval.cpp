#include "mrs/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace mrs {

const char* sigma_mode_name(SigmaMode m) {
    return m == SigmaMode::Predictions ? "predictions" : "absolute-errors";
}

SigmaMode sigma_mode_from_name(const std::string& name) {
    if (name == "predictions") return SigmaMode::Predictions;
    if (name == "absolute-errors") return SigmaMode::AbsoluteErrors;
    throw Error("unknown sigma mode: " + name);
}

namespace {

void check_record(const EvaluationRecord& rec) {
    if (rec.actual.empty() || rec.labels.empty())
        throw ShapeError("evaluation record is empty");
    if (rec.actual.size() != rec.predicted.size())
        throw ShapeError("actual and predicted row counts differ");
    for (size_t i = 0; i < rec.actual.size(); ++i)
        if (rec.actual[i].size() != rec.labels.size() ||
            rec.predicted[i].size() != rec.labels.size())
            throw ShapeError("record row width does not match the label count");
}

}  // namespace

ErrorStats mean_abs_error(const EvaluationRecord& rec, SigmaMode mode) {
    check_record(rec);
    const double nl = double(rec.actual.size()) * double(rec.labels.size());
    ErrorStats out;
    for (size_t i = 0; i < rec.actual.size(); ++i)
        for (size_t j = 0; j < rec.labels.size(); ++j)
            out.epsilon += std::abs(rec.actual[i][j] - rec.predicted[i][j]);
    out.epsilon /= nl;
    double ss = 0.0;
    for (size_t i = 0; i < rec.actual.size(); ++i) {
        for (size_t j = 0; j < rec.labels.size(); ++j) {
            const double d = mode == SigmaMode::Predictions
                                 ? rec.predicted[i][j] - out.epsilon
                                 : std::abs(rec.actual[i][j] - rec.predicted[i][j]) - out.epsilon;
            ss += d * d;
        }
    }
    out.sigma = std::sqrt(ss / nl);
    return out;
}

std::map<std::string, std::optional<double>> mape_per_metabolite(const EvaluationRecord& rec) {
    check_record(rec);
    std::map<std::string, std::optional<double>> out;
    for (size_t j = 0; j < rec.labels.size(); ++j) {
        double sum = 0.0;
        size_t n = 0;
        for (size_t i = 0; i < rec.actual.size(); ++i) {
            const double a = rec.actual[i][j];
            if (a <= 0.0) continue;  // percentage error undefined at zero actual
            sum += 100.0 * std::abs(a - rec.predicted[i][j]) / a;
            ++n;
        }
        out[rec.labels[j]] = n > 0 ? std::optional<double>(sum / double(n)) : std::nullopt;
    }
    return out;
}

ReducedRecord rescale_reduced(const EvaluationRecord& rec, const std::vector<std::string>& keep,
                              bool merge_glx) {
    check_record(rec);

    EvaluationRecord merged = rec;
    if (merge_glx) {
        const auto glu = std::find(merged.labels.begin(), merged.labels.end(), "Glu");
        const auto gln = std::find(merged.labels.begin(), merged.labels.end(), "Gln");
        if (glu == merged.labels.end() || gln == merged.labels.end())
            throw InvalidReduction("GLX merge needs both Glu and Gln columns");
        const size_t ig = size_t(glu - merged.labels.begin());
        const size_t in = size_t(gln - merged.labels.begin());
        EvaluationRecord next;
        for (size_t j = 0; j < merged.labels.size(); ++j)
            if (j != ig && j != in) next.labels.push_back(merged.labels[j]);
        next.labels.push_back("GLX");
        for (size_t i = 0; i < merged.count(); ++i) {
            std::vector<double> a, p;
            for (size_t j = 0; j < merged.labels.size(); ++j) {
                if (j == ig || j == in) continue;
                a.push_back(merged.actual[i][j]);
                p.push_back(merged.predicted[i][j]);
            }
            a.push_back(merged.actual[i][ig] + merged.actual[i][in]);
            p.push_back(merged.predicted[i][ig] + merged.predicted[i][in]);
            next.actual.push_back(std::move(a));
            next.predicted.push_back(std::move(p));
        }
        merged = std::move(next);
    }

    std::vector<size_t> cols;
    if (keep.empty()) {
        for (size_t j = 0; j < merged.labels.size(); ++j) cols.push_back(j);
    } else {
        for (const auto& name : keep) {
            const auto it = std::find(merged.labels.begin(), merged.labels.end(), name);
            if (it == merged.labels.end())
                throw InvalidReduction("metabolite not in the record: " + name);
            cols.push_back(size_t(it - merged.labels.begin()));
        }
    }
    if (cols.empty()) throw InvalidReduction("empty reduced metabolite set");

    ReducedRecord out;
    for (size_t j : cols) out.record.labels.push_back(merged.labels[j]);
    for (size_t i = 0; i < merged.count(); ++i) {
        std::vector<double> a, p;
        double asum = 0.0, psum = 0.0;
        for (size_t j : cols) {
            a.push_back(merged.actual[i][j]);
            p.push_back(merged.predicted[i][j]);
            asum += a.back();
            psum += p.back();
        }
        if (asum <= 0.0 || psum <= 0.0) {
            ++out.dropped_rows;
            continue;
        }
        for (auto& v : a) v /= asum;
        for (auto& v : p) v /= psum;
        out.record.actual.push_back(std::move(a));
        out.record.predicted.push_back(std::move(p));
    }
    if (out.record.actual.empty())
        throw InvalidReduction("reduction dropped every row of the record");
    return out;
}

// --- incomplete beta / regression ---------------------------------------------

namespace {

// continued fraction for the incomplete beta function (Lentz's method)
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double bt = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                               a * std::log(x) + b * std::log(1.0 - x));
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_cf(a, b, x) / a;
    return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

RegressionStats linregress(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    if (n != y.size()) throw ShapeError("linregress length mismatch");
    if (n < 3) throw DegenerateRegression("need at least 3 points");

    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(n);
    my /= double(n);

    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx <= 0.0) throw DegenerateRegression("x values are all equal");

    RegressionStats out;
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;

    double sse = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double r = y[i] - (out.intercept + out.slope * x[i]);
        sse += r * r;
    }
    out.r_squared = syy > 0.0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : (sse <= 0.0 ? 1.0 : 0.0);

    const double df = double(n - 2);
    out.std_error = std::sqrt(std::max(sse, 0.0) / df / sxx);
    if (out.std_error > 0.0) {
        const double t = out.slope / out.std_error;
        out.p_value = incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
    } else {
        out.p_value = out.slope == 0.0 ? 1.0 : 0.0;
    }
    return out;
}

// --- quantifiers -----------------------------------------------------------------

std::vector<double> NetworkQuantifier::quantify(const Sample& sample) {
    const InputTensor x = assemble_input(sample, net_.input_config);
    return net_.predict_values(x);
}

NnlsQuantifier::NnlsQuantifier(const BasisSet& basis, const InputConfig& cfg, bool b0_align)
    : basis_(basis), cfg_(cfg), b0_align_(b0_align) {
    labels_ = basis.metabolite_names();
    columns_ = fit_design_matrix(basis, cfg);
}

std::vector<double> NnlsQuantifier::quantify(const Sample& sample) {
    const auto y = fit_observation(sample, cfg_, b0_align_);
    FitResult fit;
    try {
        fit = nnls_solve(columns_, y, labels_);
    } catch (const FitDiverged& e) {
        fit = e.best;  // best iterate still yields a usable comparison point
    }
    std::vector<double> out;
    out.reserve(labels_.size());
    for (const auto& name : labels_) out.push_back(fit.concentrations.at(name));
    return out;
}

// --- evaluation -------------------------------------------------------------------

EvaluationRecord build_record(Quantifier& q, const Dataset& data) {
    if (data.samples.empty()) throw Error("dataset is empty");
    const auto qlabels = q.labels();
    // map quantifier output order onto the dataset's metabolite order
    std::vector<size_t> where(data.metabolite_order.size());
    for (size_t j = 0; j < data.metabolite_order.size(); ++j) {
        const auto it = std::find(qlabels.begin(), qlabels.end(), data.metabolite_order[j]);
        if (it == qlabels.end())
            throw UnknownMetabolite("quantifier does not report " + data.metabolite_order[j]);
        where[j] = size_t(it - qlabels.begin());
    }

    EvaluationRecord rec;
    rec.labels = data.metabolite_order;
    rec.actual.reserve(data.size());
    rec.predicted.reserve(data.size());
    for (size_t i = 0; i < data.size(); ++i) {
        rec.actual.push_back(data.label_vector(i));
        const auto p = q.quantify(data.samples[i]);
        std::vector<double> row(rec.labels.size());
        for (size_t j = 0; j < rec.labels.size(); ++j) row[j] = p[where[j]];
        rec.predicted.push_back(std::move(row));
    }
    return rec;
}

EvaluationReport evaluate_record(const EvaluationRecord& rec, const ReductionOptions& reduction,
                                 SigmaMode mode) {
    const ReducedRecord reduced = rescale_reduced(rec, reduction.keep, reduction.merge_glx);
    const EvaluationRecord& r = reduced.record;

    EvaluationReport report;
    report.count = r.count();
    report.dropped_rows = reduced.dropped_rows;
    report.labels = r.labels;
    const ErrorStats stats = mean_abs_error(r, mode);
    report.epsilon = stats.epsilon;
    report.sigma = stats.sigma;
    report.sigma_mode = sigma_mode_name(mode);
    report.mape = mape_per_metabolite(r);
    for (size_t j = 0; j < r.labels.size(); ++j) {
        std::vector<double> a, p;
        a.reserve(r.count());
        p.reserve(r.count());
        for (size_t i = 0; i < r.count(); ++i) {
            a.push_back(r.actual[i][j]);
            p.push_back(r.predicted[i][j]);
        }
        try {
            report.regression[r.labels[j]] = linregress(a, p);
        } catch (const DegenerateRegression&) {
            report.regression[r.labels[j]] = std::nullopt;
        }
    }
    return report;
}

EvaluationReport evaluate(Quantifier& q, const Dataset& data, const ReductionOptions& reduction,
                          SigmaMode mode) {
    EvaluationReport report = evaluate_record(build_record(q, data), reduction, mode);
    report.method = q.describe();
    report.dataset_tag = data.basis_tag;
    return report;
}

// --- report serialisation ----------------------------------------------------------

std::string report_to_json(const EvaluationReport& report) {
    nlohmann::json j;
    j["method"] = report.method;
    j["dataset"] = report.dataset_tag;
    j["count"] = report.count;
    j["dropped_rows"] = report.dropped_rows;
    j["labels"] = report.labels;
    j["epsilon"] = report.epsilon;
    j["sigma"] = report.sigma;
    j["sigma_mode"] = report.sigma_mode;
    j["mape"] = nlohmann::json::object();
    for (const auto& [name, value] : report.mape)
        j["mape"][name] = value ? nlohmann::json(*value) : nlohmann::json(nullptr);
    j["regression"] = nlohmann::json::object();
    for (const auto& [name, value] : report.regression) {
        if (!value) {
            j["regression"][name] = nullptr;
            continue;
        }
        j["regression"][name] = {{"slope", value->slope},
                                 {"intercept", value->intercept},
                                 {"r_squared", value->r_squared},
                                 {"p_value", value->p_value},
                                 {"std_error", value->std_error}};
    }
    return j.dump(2) + "\n";
}

EvaluationReport report_from_json(const std::string& text) {
    EvaluationReport report;
    try {
        const nlohmann::json j = nlohmann::json::parse(text);
        report.method = j.at("method").get<std::string>();
        report.dataset_tag = j.at("dataset").get<std::string>();
        report.count = j.at("count").get<size_t>();
        report.dropped_rows = j.at("dropped_rows").get<size_t>();
        report.labels = j.at("labels").get<std::vector<std::string>>();
        report.epsilon = j.at("epsilon").get<double>();
        report.sigma = j.at("sigma").get<double>();
        report.sigma_mode = j.at("sigma_mode").get<std::string>();
        for (const auto& [name, value] : j.at("mape").items())
            report.mape[name] = value.is_null() ? std::nullopt
                                                : std::optional<double>(value.get<double>());
        for (const auto& [name, value] : j.at("regression").items()) {
            if (value.is_null()) {
                report.regression[name] = std::nullopt;
                continue;
            }
            RegressionStats s;
            s.slope = value.at("slope").get<double>();
            s.intercept = value.at("intercept").get<double>();
            s.r_squared = value.at("r_squared").get<double>();
            s.p_value = value.at("p_value").get<double>();
            s.std_error = value.at("std_error").get<double>();
            report.regression[name] = s;
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("cannot parse evaluation report: ") + e.what());
    }
    return report;
}

void save_report(const EvaluationReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << report_to_json(report);
    if (!out) throw Error("write failed: " + path);
}

EvaluationReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return report_from_json(ss.str());
}

}  // namespace mrs
