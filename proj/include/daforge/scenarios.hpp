#pragma once

// Scenario pipelines: construct -> certify -> simulate, assembled into
// deterministic reports.

#include "daforge/config.hpp"
#include "daforge/report.hpp"
#include "daforge/systems.hpp"

namespace daforge {

// Parameters resolved from a config: unset search fields are filled by the
// corresponding searches, set fields are re-validated.
struct Resolved {
    RunConfig cfg;              // all search fields concrete
    double m_pve = 0, m_mixed = 0;
    double M_paowu = 0;
    std::vector<Check> checks;  // search / revalidation records
};

Resolved resolve_parameters(const RunConfig& cfg, bool force_search = false);

PveParams build_pve(const Resolved& r);
MixedParams build_mixed(const Resolved& r);

Report run_scenario(const RunConfig& cfg);

} // namespace daforge
