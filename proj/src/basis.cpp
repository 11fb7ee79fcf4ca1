#include "mrs/basis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mrs/io.hpp"

namespace mrs {

const BasisEntry* BasisSet::find(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

std::vector<std::string> BasisSet::metabolite_names() const {
    std::vector<std::string> names;
    names.reserve(entries.size());
    for (const auto& e : entries) names.push_back(e.name);
    return names;
}

TimeSignal synthesize_time_signal(const MetaboliteModel& model, AcquisitionKind acquisition,
                                  double linewidth_hz, const SynthesisInfo& info) {
    if (linewidth_hz <= 0.0) throw InvalidLinewidth("linewidth must be positive");
    if (model.lines.empty()) throw EmptyModel("model has no lines: " + model.name);

    TimeSignal t;
    t.bandwidth_hz = info.bandwidth_hz;
    t.reference_frequency_mhz = info.reference_frequency_mhz;
    t.samples.assign(size_t(info.time_samples), cplx(0.0, 0.0));

    const double dt = t.dwell_time();
    for (const auto& line : model.lines) {
        double sign = 0.0;
        switch (acquisition) {
            case AcquisitionKind::EditOff: sign = double(line.edit_off_sign); break;
            case AcquisitionKind::EditOn: sign = double(line.edit_on_sign); break;
            case AcquisitionKind::Difference:
                sign = double(line.edit_on_sign - line.edit_off_sign);
                break;
        }
        const double amp = line.relative_amplitude * sign;
        if (amp == 0.0) continue;
        const double f = ppm_to_hz(info.carrier_ppm - line.center_ppm, info.reference_frequency_mhz);
        const double w = 2.0 * std::numbers::pi * f;
        const double decay_rate = std::numbers::pi * linewidth_hz;
        for (size_t n = 0; n < t.samples.size(); ++n) {
            const double tn = double(n) * dt;
            const double e = amp * std::exp(-decay_rate * tn);
            t.samples[n] += cplx(e * std::cos(w * tn), e * std::sin(w * tn));
        }
    }
    return t;
}

std::array<Spectrum, 3> synthesize_metabolite(const MetaboliteModel& model, double linewidth_hz,
                                              const PpmWindow& window, const SynthesisInfo& info) {
    if (linewidth_hz <= 0.0) throw InvalidLinewidth("linewidth must be positive");
    if (info.time_samples < 512) throw Error("synthesis needs at least 512 time samples");
    bool any = false;
    for (const auto& l : model.lines) any = any || l.relative_amplitude != 0.0;
    if (!any) throw EmptyModel("model has no nonzero line amplitudes: " + model.name);

    std::array<Spectrum, 3> out;
    for (AcquisitionKind k : {AcquisitionKind::EditOff, AcquisitionKind::EditOn}) {
        TimeSignal t = synthesize_time_signal(model, k, linewidth_hz, info);
        Spectrum full = fft_to_spectrum(t, k, info.carrier_ppm);
        out[size_t(k)] = resample_to_window(full, window, t, info.carrier_ppm);
    }

    // normalise so the edit-off magnitude peak is exactly 1
    double peak = 0.0;
    for (const auto& v : out[size_t(AcquisitionKind::EditOff)].values)
        peak = std::max(peak, std::abs(v));
    if (peak <= 0.0)
        throw EmptyModel("model is invisible in the edit-off acquisition: " + model.name);
    for (AcquisitionKind k : {AcquisitionKind::EditOff, AcquisitionKind::EditOn})
        for (auto& v : out[size_t(k)].values) v /= peak;

    out[size_t(AcquisitionKind::Difference)] = difference_spectrum(
        out[size_t(AcquisitionKind::EditOn)], out[size_t(AcquisitionKind::EditOff)]);
    return out;
}

std::vector<BasisSet> build_basis(const std::vector<MetaboliteModel>& models,
                                  const std::vector<double>& linewidths_hz,
                                  const PpmWindow& window, const SynthesisInfo& info,
                                  const std::string& source_tag) {
    if (linewidths_hz.empty()) throw InvalidLinewidth("no linewidths given");
    for (double lw : linewidths_hz)
        if (lw <= 0.0) throw InvalidLinewidth("linewidth must be positive");
    if (models.empty()) throw EmptyModel("no metabolite models given");
    std::set<std::string> seen;
    for (const auto& m : models)
        if (!seen.insert(m.name).second)
            throw DuplicateMetabolite("duplicate metabolite name: " + m.name);

    std::vector<BasisSet> out;
    out.reserve(linewidths_hz.size());
    for (double lw : linewidths_hz) {
        BasisSet b;
        b.linewidth_hz = lw;
        b.window = window;
        b.source_tag = source_tag;
        b.synthesis = info;
        for (const auto& m : models) {
            BasisEntry e;
            e.name = m.name;
            e.spectra = synthesize_metabolite(m, lw, window, info);
            b.entries.push_back(std::move(e));
        }
        out.push_back(std::move(b));
    }
    return out;
}

// --- archive format ----------------------------------------------------------

namespace {
constexpr char kBasisMagic[8] = {'M', 'R', 'S', 'B', 'A', 'S', 'I', 'S'};
constexpr uint32_t kBasisVersion = 1;
}  // namespace

void save_basis(const BasisSet& b, const std::string& path) {
    nlohmann::json header;
    header["metabolites"] = b.metabolite_names();
    header["window"] = {{"high_ppm", b.window.high_ppm},
                        {"low_ppm", b.window.low_ppm},
                        {"bins", b.window.bins}};
    header["linewidth_hz"] = b.linewidth_hz;
    header["source_tag"] = b.source_tag;
    header["axis"] = {{"time_samples", b.synthesis.time_samples},
                      {"bandwidth_hz", b.synthesis.bandwidth_hz},
                      {"reference_frequency_mhz", b.synthesis.reference_frequency_mhz},
                      {"carrier_ppm", b.synthesis.carrier_ppm}};
    const std::string htext = header.dump();

    io::Writer w(path);
    w.magic(kBasisMagic);
    w.u32(kBasisVersion);
    w.u64(htext.size());
    w.bytes(htext.data(), htext.size());
    for (const auto& e : b.entries)
        for (const auto& s : e.spectra) w.complex_array(s.values);
    w.close();
}

BasisSet load_basis(const std::string& path) {
    io::Reader r(path);
    r.expect_magic(kBasisMagic);
    const uint32_t version = r.u32();
    if (version != kBasisVersion)
        throw VersionError("unsupported basis archive version " + std::to_string(version) +
                           " in " + path);
    const uint64_t hlen = r.u64();
    const size_t hoff = r.offset();
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(r.str(hlen));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad basis header: ") + e.what(), hoff);
    }

    BasisSet b;
    try {
        b.window.high_ppm = header.at("window").at("high_ppm").get<double>();
        b.window.low_ppm = header.at("window").at("low_ppm").get<double>();
        b.window.bins = header.at("window").at("bins").get<int>();
        b.linewidth_hz = header.at("linewidth_hz").get<double>();
        b.source_tag = header.at("source_tag").get<std::string>();
        b.synthesis.time_samples = header.at("axis").at("time_samples").get<int>();
        b.synthesis.bandwidth_hz = header.at("axis").at("bandwidth_hz").get<double>();
        b.synthesis.reference_frequency_mhz =
            header.at("axis").at("reference_frequency_mhz").get<double>();
        b.synthesis.carrier_ppm = header.at("axis").at("carrier_ppm").get<double>();
        const auto names = header.at("metabolites").get<std::vector<std::string>>();
        const auto axis = window_axis(b.window);
        for (const auto& name : names) {
            BasisEntry e;
            e.name = name;
            for (AcquisitionKind k : {AcquisitionKind::EditOff, AcquisitionKind::EditOn,
                                      AcquisitionKind::Difference}) {
                Spectrum s;
                s.acquisition = k;
                s.ppm_axis = axis;
                s.values = r.complex_array(size_t(b.window.bins));
                e.spectrum(k) = std::move(s);
            }
            b.entries.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad basis header field: ") + e.what(), hoff);
    }
    r.expect_eof();
    return b;
}

// --- model definitions --------------------------------------------------------

std::vector<MetaboliteModel> default_models() {
    // Landmarks: the NAA 2.008 ppm singlet vanishes in the edit-on acquisition,
    // Cr singlets at 3.027/3.913 ppm are unedited, the outer peaks of the GABA
    // 3 ppm triplet flip sign between acquisitions, and Glu/Gln overlap around
    // 2.1-2.4 ppm and 3.75 ppm. Remaining positions/amplitudes are bundled
    // configuration, editable via --defs.
    std::vector<MetaboliteModel> m;
    m.push_back({"NAA",
                 {{2.008, 1.00, 0, +1},
                  {2.490, 0.15, +1, +1},
                  {2.670, 0.15, +1, +1}}});
    m.push_back({"Cr",
                 {{3.027, 1.00, +1, +1},
                  {3.913, 0.70, +1, +1}}});
    m.push_back({"Glu",
                 {{2.080, 0.45, +1, +1},
                  {2.350, 0.80, +1, +1},
                  {3.746, 0.70, +1, +1}}});
    m.push_back({"Gln",
                 {{2.135, 0.45, +1, +1},
                  {2.450, 0.80, +1, +1},
                  {3.765, 0.70, +1, +1}}});
    m.push_back({"GABA",
                 {{1.889, 0.70, 0, +1},
                  {2.284, 0.70, +1, +1},
                  {2.950, 0.50, +1, -1},
                  {3.010, 1.00, +1, +1},
                  {3.070, 0.50, +1, -1}}});
    return m;
}

namespace {

int parse_sign(const nlohmann::json& j, const std::string& field) {
    const int s = j.get<int>();
    if (s != -1 && s != 0 && s != 1)
        throw Error("field '" + field + "' must be -1, 0 or 1, got " + std::to_string(s));
    return s;
}

}  // namespace

std::vector<MetaboliteModel> parse_model_definitions(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("cannot parse model definitions: ") + e.what());
    }
    std::vector<MetaboliteModel> models;
    try {
        for (const auto& jm : doc.at("metabolites")) {
            MetaboliteModel m;
            m.name = jm.at("name").get<std::string>();
            for (const auto& jl : jm.at("lines")) {
                SpectralLine l;
                l.center_ppm = jl.at("ppm").get<double>();
                if (l.center_ppm < 0.0 || l.center_ppm > 8.0)
                    throw Error("metabolite " + m.name + ": field 'ppm' out of range [0, 8]: " +
                                std::to_string(l.center_ppm));
                l.relative_amplitude = jl.at("amplitude").get<double>();
                if (std::abs(l.relative_amplitude) > 1.0)
                    throw Error("metabolite " + m.name + ": field 'amplitude' out of range [-1, 1]");
                l.edit_on_sign = parse_sign(jl.at("on_sign"), "on_sign");
                l.edit_off_sign = parse_sign(jl.at("off_sign"), "off_sign");
                m.lines.push_back(l);
            }
            if (m.lines.empty()) throw Error("metabolite " + m.name + " has no lines");
            models.push_back(std::move(m));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("bad model definitions: ") + e.what());
    }
    if (models.empty()) throw Error("model definitions list no metabolites");
    return models;
}

std::vector<MetaboliteModel> load_model_definitions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model definitions: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model_definitions(ss.str());
}

std::string format_model_definitions(const std::vector<MetaboliteModel>& models) {
    nlohmann::json doc;
    doc["metabolites"] = nlohmann::json::array();
    for (const auto& m : models) {
        nlohmann::json jm;
        jm["name"] = m.name;
        jm["lines"] = nlohmann::json::array();
        for (const auto& l : m.lines)
            jm["lines"].push_back({{"ppm", l.center_ppm},
                                   {"amplitude", l.relative_amplitude},
                                   {"on_sign", l.edit_on_sign},
                                   {"off_sign", l.edit_off_sign}});
        doc["metabolites"].push_back(std::move(jm));
    }
    return doc.dump(2) + "\n";
}

}  // namespace mrs
