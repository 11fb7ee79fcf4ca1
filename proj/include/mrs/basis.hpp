#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "mrs/signal.hpp"

namespace mrs {

// One Lorentzian line of a metabolite model. The acquisition signs encode
// MEGA-PRESS editing behaviour: +1 upright, -1 inverted, 0 suppressed.
struct SpectralLine {
    double center_ppm = 0.0;
    double relative_amplitude = 0.0;
    int edit_on_sign = +1;
    int edit_off_sign = +1;
};

struct MetaboliteModel {
    std::string name;
    std::vector<SpectralLine> lines;
};

// Parameters the synthesis ran with; needed to reproduce the raw frequency
// grid (e.g. when injecting time-domain noise into mixtures later).
struct SynthesisInfo {
    int time_samples = 8192;
    double bandwidth_hz = 2000.0;
    double reference_frequency_mhz = kDefaultReferenceMHz;
    double carrier_ppm = kDefaultCarrierPpm;
};

struct BasisEntry {
    std::string name;
    // indexed by AcquisitionKind: EditOff, EditOn, Difference
    std::array<Spectrum, 3> spectra;

    const Spectrum& spectrum(AcquisitionKind k) const { return spectra[size_t(k)]; }
    Spectrum& spectrum(AcquisitionKind k) { return spectra[size_t(k)]; }
};

// Normalised per-metabolite reference spectra for one linewidth. Entry order
// is the model order and defines the label order everywhere downstream.
struct BasisSet {
    std::vector<BasisEntry> entries;
    double linewidth_hz = 1.0;
    PpmWindow window;
    std::string source_tag = "parametric-v1";
    SynthesisInfo synthesis;

    const BasisEntry* find(const std::string& name) const;
    std::vector<std::string> metabolite_names() const;
};

// Mixture time signal for one acquisition: a sum of complex exponentials at
// each line's offset frequency with exp(-pi * linewidth * t) decay, so each
// line transforms to a Lorentzian of FWHM = linewidth_hz.
TimeSignal synthesize_time_signal(const MetaboliteModel& model, AcquisitionKind acquisition,
                                  double linewidth_hz, const SynthesisInfo& info);

// Reference spectra for one metabolite: edit-off / edit-on / difference,
// windowed and normalised so the edit-off magnitude peak is 1.
std::array<Spectrum, 3> synthesize_metabolite(const MetaboliteModel& model, double linewidth_hz,
                                              const PpmWindow& window,
                                              const SynthesisInfo& info = {});

// One BasisSet per linewidth, all sharing the window's ppm axis.
std::vector<BasisSet> build_basis(const std::vector<MetaboliteModel>& models,
                                  const std::vector<double>& linewidths_hz,
                                  const PpmWindow& window, const SynthesisInfo& info = {},
                                  const std::string& source_tag = "parametric-v1");

void save_basis(const BasisSet& b, const std::string& path);
BasisSet load_basis(const std::string& path);

// Bundled MEGA-PRESS model set: NAA, Cr, Glu, Gln, GABA.
std::vector<MetaboliteModel> default_models();

// Text (JSON) model definitions:
//   {"metabolites":[{"name":..,"lines":[{"ppm":..,"amplitude":..,"on_sign":..,"off_sign":..}]}]}
std::vector<MetaboliteModel> parse_model_definitions(const std::string& text);
std::vector<MetaboliteModel> load_model_definitions(const std::string& path);
std::string format_model_definitions(const std::vector<MetaboliteModel>& models);

}  // namespace mrs
