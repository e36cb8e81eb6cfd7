#pragma once

#include <string>

#include "ebridge/bridge.hpp"
#include "ebridge/gramian.hpp"
#include "ebridge/sim.hpp"

namespace ebridge {

// Serialized reports. Key order is fixed and doubles print in shortest-roundtrip
// form, so identical inputs produce identical bytes. A non-invertible Gramian has
// no finite condition number; it serializes as null.
std::string controllability_json(const ControllabilityReport& report, double time_refinement_delta,
                                 int indent = 2);
std::string endpoint_stats_json(const EndpointStats& stats, int indent = 2);
std::string convergence_json(const ConvergenceReport& report, int indent = 2);
std::string gains_meta_json(const ControllerGains& gains, int indent = 2);

}  // namespace ebridge
