#include "qoecost/tcp_qoe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qoecost {

namespace {

void validate_scenario(const TcpScenario& s) {
    if (s.n_sources < 0) {
        throw std::domain_error("tcp_qoe: n_sources must be >= 0");
    }
    if (s.ack_ratio < 1) {
        throw std::domain_error("tcp_qoe: ack_ratio must be >= 1");
    }
    if (!std::isfinite(s.rate_reduction) || s.rate_reduction <= 0.0 || s.rate_reduction > 1.0) {
        throw std::domain_error("tcp_qoe: rate_reduction must be in (0, 1]");
    }
    if (!std::isfinite(s.rtt_s) || s.rtt_s <= 0.0) {
        throw std::domain_error("tcp_qoe: rtt must be a positive finite number of seconds");
    }
    if (!std::isfinite(s.buffer_pkts) || s.buffer_pkts < 0.0) {
        throw std::domain_error("tcp_qoe: buffer length must be a non-negative finite packet count");
    }
    if (!std::isfinite(s.capacity_pps) || s.capacity_pps <= 0.0) {
        throw std::domain_error("tcp_qoe: capacity must be a positive finite packet rate");
    }
}

}  // namespace

MosScore::MosScore(double raw) : value_(raw), clamped_(std::min(5.0, std::max(1.0, raw))) {
    if (!std::isfinite(raw)) {
        throw std::domain_error("tcp_qoe: MOS value must be finite");
    }
}

Plp plp(const TcpScenario& s) {
    validate_scenario(s);
    if (s.n_sources == 0) {
        return Plp{0.0, false};
    }
    const double pipe = s.capacity_pps * s.rtt_s + s.buffer_pkts;
    if (pipe == 0.0) {
        throw std::domain_error("tcp_qoe: C*RTT + Q must be nonzero");
    }
    const double sources = static_cast<double>(s.n_sources);
    const double reduction = 1.0 + s.rate_reduction;
    const double raw = 32.0 * sources * sources /
                       (3.0 * static_cast<double>(s.ack_ratio) * reduction * reduction * pipe * pipe);
    if (raw > 1.0) {
        return Plp{1.0, true};
    }
    return Plp{raw, false};
}

MosScore mos_from_plp(const Plp& p) {
    if (!std::isfinite(p.value) || p.value < 0.0 || p.value > 1.0) {
        throw std::domain_error("tcp_qoe: loss probability must lie in [0, 1]");
    }
    // Single-exponential first term; the nested-exponential variant sometimes
    // quoted for this mapping does not reproduce the reference MOS tables.
    const double raw = 1.46 * std::exp(-44.0 * p.value) + 4.14 * std::exp(-2.9 * p.value);
    return MosScore(raw);
}

double capacity_from_bandwidth(LinkBandwidth bw) {
    if (!std::isfinite(bw.mbps) || bw.mbps <= 0.0) {
        throw std::domain_error("tcp_qoe: bandwidth must be a positive finite Mbps value");
    }
    // Evaluated exactly in this order so 12-Mbps multiples stay exact.
    return bw.mbps * 1000000.0 / 12000.0;
}

MosScore mos_from_bandwidth(LinkBandwidth bw, const TcpScenario& base) {
    TcpScenario s = base;
    s.capacity_pps = capacity_from_bandwidth(bw);
    return mos_from_plp(plp(s));
}

std::string_view mos_label(const MosScore& m) {
    // Nearest integer, ties up.
    const int grade = static_cast<int>(std::floor(m.clamped_value() + 0.5));
    switch (grade) {
        case 5: return "Excellent";
        case 4: return "Good";
        case 3: return "Fair";
        case 2: return "Poor";
        default: return "Bad";
    }
}

}  // namespace qoecost
