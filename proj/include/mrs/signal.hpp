#pragma once

#include <complex>
#include <string>
#include <vector>

#include "mrs/errors.hpp"

namespace mrs {

using cplx = std::complex<double>;

enum class AcquisitionKind { EditOff = 0, EditOn = 1, Difference = 2 };

const char* acquisition_name(AcquisitionKind k);
AcquisitionKind acquisition_from_name(const std::string& name);

// Spectrometer frequency of a 3 T clinical scanner; 1 ppm = 127 Hz.
inline constexpr double kDefaultReferenceMHz = 127.0;

// ppm position of the carrier (zero frequency offset), water by convention.
inline constexpr double kDefaultCarrierPpm = 4.7;

// Complex time-domain acquisition (free induction decay).
struct TimeSignal {
    std::vector<cplx> samples;
    double bandwidth_hz = 2000.0;
    double reference_frequency_mhz = kDefaultReferenceMHz;

    double dwell_time() const { return 1.0 / bandwidth_hz; }
};

// Complex frequency-domain signal on a strictly descending, uniform ppm axis.
struct Spectrum {
    std::vector<cplx> values;
    std::vector<double> ppm_axis;
    AcquisitionKind acquisition = AcquisitionKind::EditOff;

    size_t size() const { return values.size(); }
};

// Output frequency window: `bins` uniform bins tiling [high_ppm, low_ppm),
// inclusive at the high edge.
struct PpmWindow {
    double high_ppm = 4.5;
    double low_ppm = 1.5;
    int bins = 2048;

    double step() const { return (high_ppm - low_ppm) / bins; }
};

bool operator==(const PpmWindow& a, const PpmWindow& b);

// The ppm grid a window tiles: axis[j] = high_ppm - j*step, descending.
std::vector<double> window_axis(const PpmWindow& w);

// Raw transforms (forward is the plain sum DFT, inverse divides by N).
// Lengths that are not a power of two are zero-filled up to the next one.
std::vector<cplx> fft(std::vector<cplx> a);
std::vector<cplx> ifft(std::vector<cplx> a);

// Forward transform with the axis in ppm relative to the carrier:
// bin i of the shifted spectrum sits at f_i = (i - N/2) * bandwidth / N and
// ppm_i = carrier - f_i / reference_frequency.
Spectrum fft_to_spectrum(const TimeSignal& t, AcquisitionKind acquisition,
                         double carrier_ppm = kDefaultCarrierPpm);

// Inverse of fft_to_spectrum (undoes the frequency shift, then inverse DFT).
TimeSignal spectrum_to_time(const Spectrum& s, double bandwidth_hz,
                            double reference_frequency_mhz = kDefaultReferenceMHz);

// Chemical-shift conversion: ppm * MHz = Hz.
double ppm_to_hz(double shift_ppm, double reference_frequency_mhz);

// How a windowed spectrum is cut out of a raw transform: the time signal is
// zero-filled to fine_samples, transformed, and shifted-bin fine_indices[j]
// supplies window bin j (nearest raw bin to the window grid position).
struct WindowPlan {
    size_t fine_samples = 0;
    std::vector<size_t> fine_indices;
};

WindowPlan window_plan(size_t time_samples, double bandwidth_hz, double reference_frequency_mhz,
                       double carrier_ppm, const PpmWindow& w);

// Zero-fills the time signal until the window holds at least `w.bins` raw
// frequency bins, transforms, and picks the nearest raw bin for each of the
// window's grid positions.
Spectrum resample_to_window(const Spectrum& s, const PpmWindow& w, const TimeSignal& original_time,
                            double carrier_ppm = kDefaultCarrierPpm);

// on - off, elementwise; axes must match exactly.
Spectrum difference_spectrum(const Spectrum& on, const Spectrum& off);

enum class ComponentKind { Real = 0, Imaginary = 1, Magnitude = 2 };

const char* component_name(ComponentKind k);
ComponentKind component_from_name(const std::string& name);

std::vector<double> extract_component(const Spectrum& s, ComponentKind kind);

}  // namespace mrs
