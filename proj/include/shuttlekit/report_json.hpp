#pragma once

#include <json.hpp>

#include "shuttlekit/excitation.hpp"
#include "shuttlekit/oracle.hpp"

namespace shuttlekit {

inline nlohmann::json to_json(const ExcitationReport& r) {
    return {{"E_n_J", r.mode_energy},
            {"G_SI", r.sensitivity},
            {"E_e_J", r.excitation_energy},
            {"terms", {{"static", r.terms.static_term}, {"dynamic", r.terms.dynamic_term}}},
            {"intensity", r.intensity},
            {"method", to_string(r.method)},
            {"warning_perturbative", r.warning_perturbative}};
}

inline nlohmann::json to_json(const MomentState& ms) {
    return {{"mean_q", ms.mean_q},
            {"mean_p", ms.mean_p},
            {"m2_q", ms.m2_q()},
            {"m2_p", ms.m2_p()},
            {"cross", ms.cross()}};
}

} // namespace shuttlekit
