#include "em/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace em {

namespace {

void append_number_array(std::ostringstream& out, const std::vector<double>& v) {
    out << '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out << ',';
        out << format_double17(v[i]);
    }
    out << ']';
}

} // namespace

std::string format_double17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                out += buf;
            } else {
                out += c;
            }
        }
    }
    return out;
}

std::string state_spec_to_json(const StateSpec& spec) {
    std::ostringstream out;
    switch (spec.kind) {
    case StateKind::pure_schmidt:
        out << "{\"kind\":\"pure_schmidt\",\"lambdas\":";
        append_number_array(out, spec.schmidt.lambdas);
        out << '}';
        break;
    case StateKind::max_entangled:
        out << "{\"kind\":\"max_entangled\",\"d\":" << spec.d << '}';
        break;
    case StateKind::werner:
    case StateKind::isotropic:
    case StateKind::cna: {
        const char* name = spec.kind == StateKind::werner ? "werner"
                         : spec.kind == StateKind::isotropic ? "isotropic" : "cna";
        out << "{\"kind\":\"" << name << "\",\"d\":" << spec.d
            << ",\"x\":" << format_double17(spec.x) << '}';
        break;
    }
    case StateKind::dense: {
        out << "{\"kind\":\"dense\",\"dA\":" << spec.dA << ",\"dB\":" << spec.dB << ",\"re\":[";
        for (std::size_t i = 0; i < spec.re.size(); ++i) {
            if (i) out << ',';
            append_number_array(out, spec.re[i]);
        }
        out << "],\"im\":[";
        for (std::size_t i = 0; i < spec.im.size(); ++i) {
            if (i) out << ',';
            append_number_array(out, spec.im[i]);
        }
        out << "]}";
        break;
    }
    case StateKind::ensemble: {
        out << "{\"kind\":\"ensemble\",\"weights\":";
        append_number_array(out, spec.weights);
        out << ",\"members\":[";
        for (std::size_t i = 0; i < spec.members.size(); ++i) {
            if (i) out << ',';
            out << "{\"kind\":\"pure_schmidt\",\"lambdas\":";
            append_number_array(out, spec.members[i].lambdas);
            out << '}';
        }
        out << "]}";
        break;
    }
    }
    return out.str();
}

std::string report_to_json(const ProtocolReport& r) {
    std::ostringstream out;
    out << "{\"protocol\":\"" << json_escape(r.protocol) << "\",";
    out << "\"state\":" << (r.state.has_value() ? state_spec_to_json(*r.state) : "null") << ',';
    out << "\"mode\":\"" << to_string(r.mode) << "\",";
    if (r.shots.has_value()) out << "\"shots\":" << *r.shots << ',';
    if (r.seed.has_value()) out << "\"seed\":" << *r.seed << ',';
    if (r.multi_unitary) {
        out << "\"visibility\":";
        append_number_array(out, r.visibility);
        out << ",\"phase\":";
        append_number_array(out, r.phase);
        out << ',';
    } else {
        out << "\"visibility\":" << format_double17(r.visibility.at(0)) << ',';
        out << "\"phase\":" << format_double17(r.phase.at(0)) << ',';
    }
    out << "\"estimate\":" << format_double17(r.estimate) << ',';
    out << "\"verdict\":\"" << to_string(r.verdict) << "\",";
    if (r.oracle.has_value()) {
        out << "\"oracle\":" << format_double17(*r.oracle) << ',';
        out << "\"discrepancy\":" << format_double17(std::abs(r.estimate - *r.oracle)) << ',';
    } else {
        out << "\"oracle\":null,\"discrepancy\":null,";
    }
    out << "\"flags\":[";
    for (std::size_t i = 0; i < r.flags.size(); ++i) {
        if (i) out << ',';
        out << '"' << json_escape(r.flags[i]) << '"';
    }
    out << "]}";
    return out.str();
}

} // namespace em
