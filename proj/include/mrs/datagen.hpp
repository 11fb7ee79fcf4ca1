#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mrs/basis.hpp"
#include "mrs/sobol.hpp"

namespace mrs {

// Relative concentrations, one entry per metabolite, each in [0,1].
using ConcentrationVector = std::map<std::string, double>;

struct Sample {
    // indexed by AcquisitionKind
    std::array<Spectrum, 3> spectra;
    ConcentrationVector label;  // normalised to sum 1
    ConcentrationVector raw;    // the raw sampled scaling factors
    double noise_sigma = 0.0;

    const Spectrum& spectrum(AcquisitionKind k) const { return spectra[size_t(k)]; }
};

enum class Split { Train, Validation, Test };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct Dataset {
    std::vector<Sample> samples;
    std::vector<std::string> metabolite_order;
    PpmWindow window;
    std::string basis_tag;
    uint64_t seed = 0;
    uint64_t start_index = 0;  // global sample index of samples[0]
    double noisy_fraction = 0.5;
    Split split = Split::Train;

    size_t size() const { return samples.size(); }
    // label of sample i as a dense vector in metabolite_order
    std::vector<double> label_vector(size_t i) const;
};

// Linear combination of basis spectra plus optional time-domain noise.
// Noise of standard deviation `noise_sigma` per real/imaginary component is
// added to the zero-filled time-domain signal of the edit-off and edit-on
// acquisitions independently (the difference inherits both) before the final
// transform; spectra and noise share the unitary transform scale, so the
// per-bin spectral noise floor is also `noise_sigma`.
Sample synthesize_sample(const BasisSet& basis, const ConcentrationVector& c, double noise_sigma,
                         uint64_t rng_seed);

// Sobol-samples `count` concentration vectors over the basis metabolites,
// assigns sigma ~ U[0, 0.25] to exactly floor(noisy_fraction*count) samples,
// and distributes samples round-robin across the given linewidth bases.
// Bit-exact reproducible from (bases, count, seed, noisy_fraction, start_index).
Dataset generate_dataset(const std::vector<BasisSet>& bases, int count, uint64_t seed,
                         double noisy_fraction, uint64_t start_index = 0);

void save_dataset(const Dataset& d, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace mrs
