#include "mrs/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mrs {

const char* acquisition_name(AcquisitionKind k) {
    switch (k) {
        case AcquisitionKind::EditOff: return "off";
        case AcquisitionKind::EditOn: return "on";
        case AcquisitionKind::Difference: return "diff";
    }
    return "?";
}

AcquisitionKind acquisition_from_name(const std::string& name) {
    if (name == "off") return AcquisitionKind::EditOff;
    if (name == "on") return AcquisitionKind::EditOn;
    if (name == "diff" || name == "difference") return AcquisitionKind::Difference;
    throw Error("unknown acquisition kind: " + name);
}

const char* component_name(ComponentKind k) {
    switch (k) {
        case ComponentKind::Real: return "r";
        case ComponentKind::Imaginary: return "i";
        case ComponentKind::Magnitude: return "m";
    }
    return "?";
}

ComponentKind component_from_name(const std::string& name) {
    if (name == "r" || name == "real") return ComponentKind::Real;
    if (name == "i" || name == "imaginary" || name == "imag") return ComponentKind::Imaginary;
    if (name == "m" || name == "magnitude" || name == "abs") return ComponentKind::Magnitude;
    throw Error("unknown component kind: " + name);
}

bool operator==(const PpmWindow& a, const PpmWindow& b) {
    return a.high_ppm == b.high_ppm && a.low_ppm == b.low_ppm && a.bins == b.bins;
}

std::vector<double> window_axis(const PpmWindow& w) {
    std::vector<double> axis(size_t(w.bins));
    const double step = w.step();
    for (int j = 0; j < w.bins; ++j) axis[size_t(j)] = w.high_ppm - j * step;
    return axis;
}

namespace {

size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Iterative radix-2 Cooley-Tukey, in place; `a` must be a power of two long.
void fft_pow2(std::vector<cplx>& a, bool inverse) {
    const size_t n = a.size();
    // bit-reversal permutation
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / double(len);
        const cplx wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                cplx u = a[i + k];
                cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

}  // namespace

std::vector<cplx> fft(std::vector<cplx> a) {
    if (a.empty()) throw InvalidSignal("fft of empty signal");
    a.resize(next_pow2(a.size()), cplx(0.0, 0.0));
    fft_pow2(a, false);
    return a;
}

std::vector<cplx> ifft(std::vector<cplx> a) {
    if (a.empty()) throw InvalidSignal("ifft of empty signal");
    a.resize(next_pow2(a.size()), cplx(0.0, 0.0));
    fft_pow2(a, true);
    const double scale = 1.0 / double(a.size());
    for (auto& v : a) v *= scale;
    return a;
}

Spectrum fft_to_spectrum(const TimeSignal& t, AcquisitionKind acquisition, double carrier_ppm) {
    if (t.samples.size() < 2) throw InvalidSignal("need at least 2 samples");
    if (t.bandwidth_hz <= 0.0) throw InvalidSignal("bandwidth must be positive");
    if (t.reference_frequency_mhz <= 0.0) throw InvalidSignal("reference frequency must be positive");

    std::vector<cplx> x = fft(t.samples);
    const size_t n = x.size();

    Spectrum s;
    s.acquisition = acquisition;
    s.values.resize(n);
    s.ppm_axis.resize(n);
    // shift so bin i carries frequency (i - n/2) * bw / n, ascending
    const double df = t.bandwidth_hz / double(n);
    for (size_t i = 0; i < n; ++i) {
        s.values[i] = x[(i + n / 2) % n];
        const double f = (double(i) - double(n) / 2.0) * df;
        s.ppm_axis[i] = carrier_ppm - f / t.reference_frequency_mhz;
    }
    return s;
}

TimeSignal spectrum_to_time(const Spectrum& s, double bandwidth_hz,
                            double reference_frequency_mhz) {
    const size_t n = s.size();
    if (n < 2) throw InvalidSignal("need at least 2 spectral values");
    std::vector<cplx> x(n);
    for (size_t i = 0; i < n; ++i) x[(i + n / 2) % n] = s.values[i];
    TimeSignal t;
    t.samples = ifft(std::move(x));
    t.bandwidth_hz = bandwidth_hz;
    t.reference_frequency_mhz = reference_frequency_mhz;
    return t;
}

double ppm_to_hz(double shift_ppm, double reference_frequency_mhz) {
    if (reference_frequency_mhz <= 0.0) throw InvalidSignal("reference frequency must be positive");
    return shift_ppm * reference_frequency_mhz;
}

WindowPlan window_plan(size_t time_samples, double bandwidth_hz, double reference_frequency_mhz,
                       double carrier_ppm, const PpmWindow& w) {
    if (w.high_ppm <= w.low_ppm) throw WindowOutOfRange("window high_ppm must exceed low_ppm");

    // zero-fill until the window spans >= bins raw frequency bins
    size_t n = next_pow2(std::max<size_t>(time_samples, 2));
    while ((w.high_ppm - w.low_ppm) * reference_frequency_mhz * double(n) / bandwidth_hz <
           double(w.bins))
        n <<= 1;

    // fine grid: ppm_i = carrier - (i - n/2) * dppm, so i = n/2 + (carrier - ppm)/dppm
    const double dppm = bandwidth_hz / (double(n) * reference_frequency_mhz);
    WindowPlan plan;
    plan.fine_samples = n;
    plan.fine_indices.resize(size_t(w.bins));
    const auto axis = window_axis(w);
    for (int j = 0; j < w.bins; ++j) {
        const auto i = llround(double(n) / 2.0 + (carrier_ppm - axis[size_t(j)]) / dppm);
        if (i < 0 || size_t(i) >= n) throw WindowOutOfRange("window outside acquired bandwidth");
        plan.fine_indices[size_t(j)] = size_t(i);
    }
    return plan;
}

Spectrum resample_to_window(const Spectrum& s, const PpmWindow& w, const TimeSignal& original_time,
                            double carrier_ppm) {
    if (s.ppm_axis.empty()) throw InvalidSignal("empty spectrum");
    if (w.high_ppm <= w.low_ppm) throw WindowOutOfRange("window high_ppm must exceed low_ppm");
    // the spectrum must cover every window grid point (the lowest sits one
    // bin above low_ppm)
    const double lowest = w.high_ppm - (w.bins - 1) * w.step();
    const double slack = 1e-12 * (w.high_ppm - w.low_ppm);
    if (s.ppm_axis.front() < w.high_ppm - slack || s.ppm_axis.back() > lowest + slack)
        throw WindowOutOfRange("window outside acquired bandwidth");

    const WindowPlan plan = window_plan(original_time.samples.size(), original_time.bandwidth_hz,
                                        original_time.reference_frequency_mhz, carrier_ppm, w);

    TimeSignal padded = original_time;
    padded.samples.resize(plan.fine_samples, cplx(0.0, 0.0));
    Spectrum fine = fft_to_spectrum(padded, s.acquisition, carrier_ppm);

    Spectrum out;
    out.acquisition = s.acquisition;
    out.values.resize(size_t(w.bins));
    out.ppm_axis = window_axis(w);
    for (int j = 0; j < w.bins; ++j) out.values[size_t(j)] = fine.values[plan.fine_indices[size_t(j)]];
    return out;
}

Spectrum difference_spectrum(const Spectrum& on, const Spectrum& off) {
    if (on.size() != off.size() || on.ppm_axis != off.ppm_axis)
        throw AxisMismatch("edit-on and edit-off spectra must share one ppm axis");
    Spectrum d;
    d.acquisition = AcquisitionKind::Difference;
    d.ppm_axis = on.ppm_axis;
    d.values.resize(on.size());
    for (size_t i = 0; i < on.size(); ++i) d.values[i] = on.values[i] - off.values[i];
    return d;
}

std::vector<double> extract_component(const Spectrum& s, ComponentKind kind) {
    std::vector<double> out(s.size());
    switch (kind) {
        case ComponentKind::Real:
            for (size_t i = 0; i < s.size(); ++i) out[i] = s.values[i].real();
            break;
        case ComponentKind::Imaginary:
            for (size_t i = 0; i < s.size(); ++i) out[i] = s.values[i].imag();
            break;
        case ComponentKind::Magnitude:
            for (size_t i = 0; i < s.size(); ++i) out[i] = std::abs(s.values[i]);
            break;
    }
    return out;
}

}  // namespace mrs
