#pragma once

#include <array>
#include <optional>
#include <string>

#include "mrs/signal.hpp"

namespace mrs {

// One scan's raw acquisitions: complex time-domain arrays plus the header
// needed to place them on a ppm axis. The difference acquisition is optional;
// when absent it is derived from edit-on minus edit-off downstream.
struct Scan {
    std::array<std::optional<TimeSignal>, 3> acquisitions;  // indexed by AcquisitionKind
    double carrier_ppm = kDefaultCarrierPpm;
};

void save_scan(const Scan& scan, const std::string& path);
Scan load_scan(const std::string& path);

}  // namespace mrs
