#include "mrs/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "mrs/io.hpp"
#include "mrs/util.hpp"

namespace mrs {

namespace {

// stream tags for the per-dataset RNG keys
constexpr uint64_t kStreamSigma = 0x5349474dULL;  // sigma values
constexpr uint64_t kStreamMask = 0x4d41534bULL;   // noisy-sample selection
constexpr uint64_t kStreamNoise = 0x4e4f4953ULL;  // per-sample noise seeds

}  // namespace

const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Validation: return "val";
        case Split::Test: return "test";
    }
    return "?";
}

Split split_from_name(const std::string& name) {
    if (name == "train") return Split::Train;
    if (name == "val" || name == "validation") return Split::Validation;
    if (name == "test") return Split::Test;
    throw Error("unknown split name: " + name);
}

std::vector<double> Dataset::label_vector(size_t i) const {
    std::vector<double> v;
    v.reserve(metabolite_order.size());
    for (const auto& name : metabolite_order) v.push_back(samples[i].label.at(name));
    return v;
}

Sample synthesize_sample(const BasisSet& basis, const ConcentrationVector& c, double noise_sigma,
                         uint64_t rng_seed) {
    if (basis.entries.empty()) throw NoBasis("basis set has no entries");
    if (noise_sigma < 0.0) throw Error("noise sigma must be >= 0");

    double total = 0.0;
    for (const auto& [name, value] : c) {
        if (basis.find(name) == nullptr) throw UnknownMetabolite("not in basis: " + name);
        total += value;
    }
    if (total <= 0.0) throw DegenerateSample("all-zero concentration vector");

    const int bins = basis.window.bins;
    const auto axis = window_axis(basis.window);

    Sample out;
    out.noise_sigma = noise_sigma;
    out.raw = c;
    for (const auto& [name, value] : c) out.label[name] = value / total;

    for (AcquisitionKind k : {AcquisitionKind::EditOff, AcquisitionKind::EditOn,
                              AcquisitionKind::Difference}) {
        Spectrum s;
        s.acquisition = k;
        s.ppm_axis = axis;
        s.values.assign(size_t(bins), cplx(0.0, 0.0));
        for (const auto& [name, value] : c) {
            if (value == 0.0) continue;
            const Spectrum& b = basis.find(name)->spectrum(k);
            for (int j = 0; j < bins; ++j) s.values[size_t(j)] += value * b.values[size_t(j)];
        }
        out.spectra[size_t(k)] = std::move(s);
    }

    if (noise_sigma > 0.0) {
        const auto& info = basis.synthesis;
        const WindowPlan plan = window_plan(size_t(info.time_samples), info.bandwidth_hz,
                                            info.reference_frequency_mhz, info.carrier_ppm,
                                            basis.window);
        const size_t n = plan.fine_samples;
        const double scale = 1.0 / std::sqrt(double(n));
        for (AcquisitionKind k : {AcquisitionKind::EditOff, AcquisitionKind::EditOn}) {
            SplitMix rng(rng_seed, kStreamNoise, uint64_t(k));
            std::vector<cplx> noise(n);
            for (size_t i = 0; i < n; ++i) {
                const double re = noise_sigma * rng.gaussian();
                const double im = noise_sigma * rng.gaussian();
                noise[i] = cplx(re, im);
            }
            std::vector<cplx> spec = fft(std::move(noise));
            auto& values = out.spectra[size_t(k)].values;
            for (int j = 0; j < bins; ++j) {
                const size_t fine = (plan.fine_indices[size_t(j)] + n / 2) % n;
                values[size_t(j)] += scale * spec[fine];
            }
        }
        out.spectra[size_t(AcquisitionKind::Difference)] =
            difference_spectrum(out.spectrum(AcquisitionKind::EditOn),
                                out.spectrum(AcquisitionKind::EditOff));
    }
    return out;
}

Dataset generate_dataset(const std::vector<BasisSet>& bases, int count, uint64_t seed,
                         double noisy_fraction, uint64_t start_index) {
    if (bases.empty()) throw NoBasis("no basis sets given");
    if (count < 1) throw Error("sample count must be >= 1");
    if (noisy_fraction < 0.0 || noisy_fraction > 1.0)
        throw Error("noisy fraction must be in [0, 1]");

    const auto names = bases.front().metabolite_names();
    for (const auto& b : bases) {
        if (b.metabolite_names() != names)
            throw NoBasis("basis sets disagree on metabolite order");
        if (!(b.window == bases.front().window))
            throw NoBasis("basis sets disagree on the ppm window");
    }
    const int dim = int(names.size());

    Dataset d;
    d.metabolite_order = names;
    d.window = bases.front().window;
    d.seed = seed;
    d.start_index = start_index;
    d.noisy_fraction = noisy_fraction;
    {
        std::string tag;
        for (size_t i = 0; i < bases.size(); ++i) {
            if (i) tag += "+";
            tag += bases[i].source_tag + "@" + std::to_string(bases[i].linewidth_hz) + "Hz";
        }
        d.basis_tag = tag;
    }

    // which samples receive noise: a seeded shuffle, first floor(f*count) win
    const int noisy_count = int(std::floor(noisy_fraction * double(count)));
    std::vector<int> order(static_cast<size_t>(count));
    std::iota(order.begin(), order.end(), 0);
    {
        SplitMix rng(seed, kStreamMask);
        for (int i = count - 1; i > 0; --i)
            std::swap(order[size_t(i)], order[rng.next() % uint64_t(i + 1)]);
    }
    std::vector<double> sigma(size_t(count), 0.0);
    for (int i = 0; i < noisy_count; ++i) {
        const uint64_t global = start_index + uint64_t(order[size_t(i)]);
        sigma[size_t(order[size_t(i)])] = 0.25 * SplitMix(seed, kStreamSigma, global).uniform();
    }

    // concentration vectors from the Sobol stream; index 0 (all zeros) is
    // skipped by the sequence itself, degenerate draws skip to the next index
    SobolSequence sobol(dim, start_index);
    std::vector<ConcentrationVector> concentrations;
    concentrations.reserve(size_t(count));
    while (int(concentrations.size()) < count) {
        const auto point = sobol.next();
        double total = 0.0;
        for (double v : point) total += v;
        if (total <= 0.0) continue;
        ConcentrationVector c;
        for (int k = 0; k < dim; ++k) c[names[size_t(k)]] = point[size_t(k)];
        concentrations.push_back(std::move(c));
    }

    d.samples.resize(size_t(count));
    std::vector<const BasisSet*> basis_ptrs;
    for (const auto& b : bases) basis_ptrs.push_back(&b);
    parallel_for(0, count, [&](int64_t i) {
        const BasisSet& b = *basis_ptrs[size_t(i) % basis_ptrs.size()];
        const uint64_t global = start_index + uint64_t(i);
        d.samples[size_t(i)] =
            synthesize_sample(b, concentrations[size_t(i)], sigma[size_t(i)], mix64(seed, global));
    });
    return d;
}

// --- archive format ----------------------------------------------------------

namespace {
constexpr char kDataMagic[8] = {'M', 'R', 'S', 'D', 'A', 'T', 'A', '1'};
constexpr uint32_t kDataVersion = 1;
}  // namespace

void save_dataset(const Dataset& d, const std::string& path) {
    nlohmann::json manifest;
    manifest["count"] = d.samples.size();
    manifest["window"] = {{"high_ppm", d.window.high_ppm},
                          {"low_ppm", d.window.low_ppm},
                          {"bins", d.window.bins}};
    manifest["metabolite_order"] = d.metabolite_order;
    manifest["seed"] = d.seed;
    manifest["start_index"] = d.start_index;
    manifest["noisy_fraction"] = d.noisy_fraction;
    manifest["basis_tag"] = d.basis_tag;
    manifest["split"] = split_name(d.split);
    const std::string mtext = manifest.dump();

    io::Writer w(path);
    w.magic(kDataMagic);
    w.u32(kDataVersion);
    w.u64(mtext.size());
    w.bytes(mtext.data(), mtext.size());
    for (const auto& s : d.samples) {
        for (const auto& name : d.metabolite_order) w.f64(s.label.at(name));
        for (const auto& name : d.metabolite_order) w.f64(s.raw.at(name));
        w.f64(s.noise_sigma);
        for (const auto& spec : s.spectra) w.complex_array(spec.values);
    }
    w.close();
}

Dataset load_dataset(const std::string& path) {
    io::Reader r(path);
    r.expect_magic(kDataMagic);
    const uint32_t version = r.u32();
    if (version != kDataVersion)
        throw VersionError("unsupported dataset archive version " + std::to_string(version) +
                           " in " + path);
    const uint64_t mlen = r.u64();
    const size_t moff = r.offset();

    Dataset d;
    size_t count = 0;
    try {
        const nlohmann::json manifest = nlohmann::json::parse(r.str(mlen));
        count = manifest.at("count").get<size_t>();
        d.window.high_ppm = manifest.at("window").at("high_ppm").get<double>();
        d.window.low_ppm = manifest.at("window").at("low_ppm").get<double>();
        d.window.bins = manifest.at("window").at("bins").get<int>();
        d.metabolite_order = manifest.at("metabolite_order").get<std::vector<std::string>>();
        d.seed = manifest.at("seed").get<uint64_t>();
        d.start_index = manifest.at("start_index").get<uint64_t>();
        d.noisy_fraction = manifest.at("noisy_fraction").get<double>();
        d.basis_tag = manifest.at("basis_tag").get<std::string>();
        d.split = split_from_name(manifest.at("split").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad dataset manifest: ") + e.what(), moff);
    }

    const auto axis = window_axis(d.window);
    d.samples.resize(count);
    for (size_t i = 0; i < count; ++i) {
        Sample& s = d.samples[i];
        for (const auto& name : d.metabolite_order) s.label[name] = r.f64();
        for (const auto& name : d.metabolite_order) s.raw[name] = r.f64();
        s.noise_sigma = r.f64();
        for (AcquisitionKind k : {AcquisitionKind::EditOff, AcquisitionKind::EditOn,
                                  AcquisitionKind::Difference}) {
            Spectrum& spec = s.spectra[size_t(k)];
            spec.acquisition = k;
            spec.ppm_axis = axis;
            spec.values = r.complex_array(size_t(d.window.bins));
        }
    }
    r.expect_eof();
    return d;
}

}  // namespace mrs
