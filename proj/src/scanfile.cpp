#include "mrs/scanfile.hpp"

#include "json.hpp"
#include "mrs/io.hpp"

namespace mrs {

namespace {
constexpr char kScanMagic[8] = {'M', 'R', 'S', 'S', 'C', 'A', 'N', '1'};
constexpr uint32_t kScanVersion = 1;
}  // namespace

void save_scan(const Scan& scan, const std::string& path) {
    nlohmann::json header;
    header["carrier_ppm"] = scan.carrier_ppm;
    header["acquisitions"] = nlohmann::json::array();
    for (AcquisitionKind k : {AcquisitionKind::EditOff, AcquisitionKind::EditOn,
                              AcquisitionKind::Difference}) {
        const auto& maybe = scan.acquisitions[size_t(k)];
        if (!maybe) continue;
        header["acquisitions"].push_back(
            {{"kind", acquisition_name(k)},
             {"samples", maybe->samples.size()},
             {"bandwidth_hz", maybe->bandwidth_hz},
             {"reference_frequency_mhz", maybe->reference_frequency_mhz}});
    }
    if (header["acquisitions"].empty()) throw Error("scan has no acquisitions to save");
    const std::string htext = header.dump();

    io::Writer w(path);
    w.magic(kScanMagic);
    w.u32(kScanVersion);
    w.u64(htext.size());
    w.bytes(htext.data(), htext.size());
    for (const auto& maybe : scan.acquisitions)
        if (maybe) w.complex_array(maybe->samples);
    w.close();
}

Scan load_scan(const std::string& path) {
    io::Reader r(path);
    r.expect_magic(kScanMagic);
    const uint32_t version = r.u32();
    if (version != kScanVersion)
        throw VersionError("unsupported scan container version " + std::to_string(version) +
                           " in " + path);
    const uint64_t hlen = r.u64();
    const size_t hoff = r.offset();

    Scan scan;
    struct Pending {
        AcquisitionKind kind;
        size_t samples;
        double bandwidth;
        double reference;
    };
    std::vector<Pending> order;
    try {
        const nlohmann::json header = nlohmann::json::parse(r.str(hlen));
        scan.carrier_ppm = header.at("carrier_ppm").get<double>();
        for (const auto& ja : header.at("acquisitions")) {
            Pending p;
            p.kind = acquisition_from_name(ja.at("kind").get<std::string>());
            p.samples = ja.at("samples").get<size_t>();
            p.bandwidth = ja.at("bandwidth_hz").get<double>();
            p.reference = ja.at("reference_frequency_mhz").get<double>();
            if (p.samples < 2 || p.bandwidth <= 0.0 || p.reference <= 0.0)
                throw FormatError("invalid acquisition header in " + path, hoff);
            order.push_back(p);
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad scan header: ") + e.what(), hoff);
    }
    if (order.empty()) throw FormatError("scan lists no acquisitions", hoff);

    for (const auto& p : order) {
        TimeSignal t;
        t.bandwidth_hz = p.bandwidth;
        t.reference_frequency_mhz = p.reference;
        t.samples = r.complex_array(p.samples);
        scan.acquisitions[size_t(p.kind)] = std::move(t);
    }
    r.expect_eof();
    return scan;
}

}  // namespace mrs
