#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mrs/datagen.hpp"
#include "mrs/signal.hpp"

namespace mrs {

// Which rows the network input tensor carries: acquisitions-major,
// components-minor, rows = |acquisitions| * |components|.
struct InputConfig {
    std::vector<AcquisitionKind> acquisitions;
    std::vector<ComponentKind> components;
    PpmWindow window;

    int rows() const { return int(acquisitions.size() * components.size()); }
};

InputConfig parse_input_config(const std::string& acquisitions, const std::string& components,
                               const PpmWindow& window = {});

struct InputTensor {
    int rows = 0;
    int bins = 0;
    std::vector<double> data;  // row-major rows x bins

    double* row(int r) { return data.data() + size_t(r) * size_t(bins); }
    const double* row(int r) const { return data.data() + size_t(r) * size_t(bins); }
};

// Outcome of the B0 alignment: shift applied (in bins) and whether a usable
// reference peak was found. A missed peak is not an error; the correction is
// skipped and the caller may log the warning.
struct B0Result {
    std::array<Spectrum, 3> spectra;
    int shift_bins = 0;
    bool peak_found = false;
};

// Aligns the magnitude maximum of the edit-off spectrum inside search
// [low, high] ppm to the reference bin (nearest bin to 2.008 ppm, the NAA
// methyl singlet) and applies the same circular shift to all acquisitions.
inline constexpr double kB0ReferencePpm = 2.008;

B0Result b0_correct(const std::array<Spectrum, 3>& spectra, double search_low_ppm = 1.8,
                    double search_high_ppm = 2.2);

// First-order low-pass Butterworth, run forward and backward (zero net phase)
// over the real and imaginary channels. cutoff_fraction is relative to Nyquist.
TimeSignal butterworth_filter(const TimeSignal& t, double cutoff_fraction);

// Per row: subtract the mean, then scale the largest absolute value to 1.
// Rows that end up all-zero pass through unchanged.
void normalize_rows(std::vector<double>& rows, int row_count, int bins);
InputTensor normalize(const InputTensor& t);

struct AssembleOptions {
    bool b0 = false;
    bool normalize = true;
};

struct AssembleReport {
    int b0_shift_bins = 0;
    bool b0_peak_found = true;
    bool b0_applied = false;
};

// Windowed spectra -> network input rows: B0 correct, extract the configured
// components, normalise. (Samples are already transformed and windowed; raw
// scans go through preprocess_scan first.)
InputTensor assemble_input(const Sample& sample, const InputConfig& cfg,
                           const AssembleOptions& opts = {}, AssembleReport* report = nullptr);

// Raw acquisition -> windowed spectra: Butterworth (time domain), transform,
// resample to the window. Output feeds assemble_input.
Sample preprocess_scan(const std::array<std::optional<TimeSignal>, 3>& acquisitions,
                       const PpmWindow& window, double butterworth_cutoff = 0.25,
                       double carrier_ppm = kDefaultCarrierPpm);

}  // namespace mrs
