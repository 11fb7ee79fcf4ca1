#include "mrs/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace mrs {

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

InputConfig parse_input_config(const std::string& acquisitions, const std::string& components,
                               const PpmWindow& window) {
    InputConfig cfg;
    cfg.window = window;
    for (const auto& a : split_list(acquisitions)) cfg.acquisitions.push_back(acquisition_from_name(a));
    for (const auto& c : split_list(components)) cfg.components.push_back(component_from_name(c));
    if (cfg.acquisitions.empty()) throw Error("no acquisitions configured");
    if (cfg.components.empty()) throw Error("no components configured");
    if (cfg.rows() > 9) throw Error("input config exceeds 9 rows");
    return cfg;
}

B0Result b0_correct(const std::array<Spectrum, 3>& spectra, double search_low_ppm,
                    double search_high_ppm) {
    const Spectrum& off = spectra[size_t(AcquisitionKind::EditOff)];
    if (off.values.empty()) throw MissingAcquisition("B0 correction needs the edit-off spectrum");
    const auto& axis = off.ppm_axis;
    const size_t n = off.size();

    B0Result res;
    res.spectra = spectra;

    // search indices: axis is descending
    size_t lo = 0, hi = 0;
    for (size_t i = 0; i < n; ++i) {
        if (axis[i] <= search_high_ppm) { lo = i; break; }
    }
    for (size_t i = lo; i < n && axis[i] >= search_low_ppm; ++i) hi = i;
    if (hi <= lo) throw WindowOutOfRange("B0 search window outside the spectrum axis");

    std::vector<double> mag;
    mag.reserve(hi - lo + 1);
    size_t peak = lo;
    double peak_value = -1.0;
    for (size_t i = lo; i <= hi; ++i) {
        const double m = std::abs(off.values[i]);
        mag.push_back(m);
        if (m > peak_value) {
            peak_value = m;
            peak = i;
        }
    }
    std::nth_element(mag.begin(), mag.begin() + long(mag.size() / 2), mag.end());
    const double median = mag[mag.size() / 2];
    if (peak_value < 3.0 * median) {
        res.peak_found = false;  // correction skipped
        return res;
    }
    res.peak_found = true;

    // reference: nearest bin to the NAA methyl position
    size_t ref = 0;
    double best = std::abs(axis[0] - kB0ReferencePpm);
    for (size_t i = 1; i < n; ++i) {
        const double d = std::abs(axis[i] - kB0ReferencePpm);
        if (d < best) {
            best = d;
            ref = i;
        }
    }

    const int shift = int(ref) - int(peak);
    res.shift_bins = shift;
    if (shift != 0) {
        for (auto& s : res.spectra) {
            if (s.values.empty()) continue;
            std::vector<cplx> rotated(s.size());
            const long m = long(s.size());
            for (long i = 0; i < m; ++i) rotated[size_t(((i + shift) % m + m) % m)] = s.values[size_t(i)];
            s.values = std::move(rotated);
        }
    }
    return res;
}

TimeSignal butterworth_filter(const TimeSignal& t, double cutoff_fraction) {
    if (!(cutoff_fraction > 0.0 && cutoff_fraction < 1.0))
        throw InvalidCutoff("cutoff fraction must be in (0, 1)");
    if (t.samples.empty()) throw InvalidSignal("empty signal");

    // bilinear transform with pre-warping; DC gain is exactly 1
    const double g = std::tan(std::numbers::pi * cutoff_fraction / 2.0);
    const double b0 = g / (1.0 + g);
    const double b1 = b0;
    const double a1 = (g - 1.0) / (1.0 + g);

    auto pass = [&](std::vector<cplx>& x) {
        // steady-state initial condition so constant inputs pass unchanged
        cplx z = x.front() * (1.0 - b0);
        for (auto& v : x) {
            const cplx y = b0 * v + z;
            z = b1 * v - a1 * y;
            v = y;
        }
    };

    TimeSignal out = t;
    pass(out.samples);
    std::reverse(out.samples.begin(), out.samples.end());
    pass(out.samples);
    std::reverse(out.samples.begin(), out.samples.end());
    return out;
}

void normalize_rows(std::vector<double>& rows, int row_count, int bins) {
    for (int r = 0; r < row_count; ++r) {
        double* row = rows.data() + size_t(r) * size_t(bins);
        double mean = 0.0;
        for (int j = 0; j < bins; ++j) mean += row[j];
        mean /= double(bins);
        double peak = 0.0;
        for (int j = 0; j < bins; ++j) {
            row[j] -= mean;
            peak = std::max(peak, std::abs(row[j]));
        }
        if (peak > 0.0)
            for (int j = 0; j < bins; ++j) row[j] /= peak;
    }
}

InputTensor normalize(const InputTensor& t) {
    InputTensor out = t;
    normalize_rows(out.data, out.rows, out.bins);
    return out;
}

InputTensor assemble_input(const Sample& sample, const InputConfig& cfg,
                           const AssembleOptions& opts, AssembleReport* report) {
    for (AcquisitionKind k : cfg.acquisitions)
        if (sample.spectrum(k).values.empty())
            throw MissingAcquisition(std::string("sample lacks the ") + acquisition_name(k) +
                                     " acquisition");

    const std::array<Spectrum, 3>* spectra = &sample.spectra;
    B0Result b0;
    if (opts.b0) {
        b0 = b0_correct(sample.spectra);
        spectra = &b0.spectra;
        if (report) {
            report->b0_applied = true;
            report->b0_shift_bins = b0.shift_bins;
            report->b0_peak_found = b0.peak_found;
        }
    } else if (report) {
        *report = {};
    }

    InputTensor out;
    out.rows = cfg.rows();
    out.bins = cfg.window.bins;
    out.data.reserve(size_t(out.rows) * size_t(out.bins));
    for (AcquisitionKind a : cfg.acquisitions) {
        const Spectrum& s = (*spectra)[size_t(a)];
        if (int(s.size()) != cfg.window.bins)
            throw ShapeError("sample has " + std::to_string(s.size()) +
                             " bins, input config expects " + std::to_string(cfg.window.bins));
        for (ComponentKind c : cfg.components) {
            const auto row = extract_component(s, c);
            out.data.insert(out.data.end(), row.begin(), row.end());
        }
    }
    if (opts.normalize) normalize_rows(out.data, out.rows, out.bins);
    return out;
}

Sample preprocess_scan(const std::array<std::optional<TimeSignal>, 3>& acquisitions,
                       const PpmWindow& window, double butterworth_cutoff,
                       double carrier_ppm) {
    Sample out;
    for (AcquisitionKind k : {AcquisitionKind::EditOff, AcquisitionKind::EditOn,
                              AcquisitionKind::Difference}) {
        const auto& maybe = acquisitions[size_t(k)];
        if (!maybe.has_value()) continue;
        TimeSignal filtered = butterworth_filter(*maybe, butterworth_cutoff);
        Spectrum full = fft_to_spectrum(filtered, k, carrier_ppm);
        out.spectra[size_t(k)] = resample_to_window(full, window, filtered, carrier_ppm);
    }
    const auto& off = out.spectrum(AcquisitionKind::EditOff);
    const auto& on = out.spectrum(AcquisitionKind::EditOn);
    if (out.spectrum(AcquisitionKind::Difference).values.empty() && !off.values.empty() &&
        !on.values.empty())
        out.spectra[size_t(AcquisitionKind::Difference)] = difference_spectrum(on, off);
    return out;
}

}  // namespace mrs
