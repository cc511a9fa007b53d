#pragma once

#include <string>

#include "em/protocols.hpp"
#include "em/states.hpp"

namespace em {

// Decimal rendering with 17 significant digits: parsing the output recovers
// the exact double, so emitted numbers round-trip.
std::string format_double17(double v);

std::string json_escape(const std::string& s);

// Serialize the state spec exactly as it is accepted on input.
std::string state_spec_to_json(const StateSpec& spec);

std::string report_to_json(const ProtocolReport& report);

} // namespace em
