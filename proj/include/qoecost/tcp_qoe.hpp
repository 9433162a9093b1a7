#ifndef QOECOST_TCP_QOE_HPP
#define QOECOST_TCP_QOE_HPP

#include <string_view>

namespace qoecost {

/// Parameters of the fluid-model packet loss probability for N TCP sources
/// sharing a bottleneck:
///
///   PLP = 32 N^2 / (3 b (m+1)^2 (C*RTT + Q)^2)
///
/// with b the ACK ratio, m the multiplicative rate reduction, C the
/// bottleneck capacity in packets/second and Q the buffer length in packets.
struct TcpScenario {
    int n_sources = 50;           // N, >= 0 (0 is the degenerate no-traffic case)
    int ack_ratio = 1;            // b, packets acknowledged per ACK, >= 1
    double rate_reduction = 0.5;  // m, in (0, 1]
    double rtt_s = 0.1;           // round trip time, seconds, > 0
    double buffer_pkts = 10.0;    // Q, packets, >= 0
    double capacity_pps = 12500.0;  // C, packets/second, > 0
};

/// Packet loss probability. `saturated` is set when the raw model value
/// exceeded 1 and was clamped; the model is a fluid approximation, not a
/// probability, for small C*RTT + Q.
struct Plp {
    double value = 0.0;
    bool saturated = false;
};

/// Mean Opinion Score. `value` is the raw mapping output (up to 5.6 at zero
/// loss); `clamped_value` is the presentation value on the nominal 1..5 scale.
class MosScore {
  public:
    explicit MosScore(double raw);

    double value() const { return value_; }
    double clamped_value() const { return clamped_; }

  private:
    double value_;
    double clamped_;
};

/// Access-link bandwidth in megabits/second, > 0.
struct LinkBandwidth {
    double mbps = 0.0;
};

/// Evaluates the loss model for a scenario. Values above 1 are clamped and
/// flagged; n_sources == 0 yields PLP 0. Throws std::domain_error on invalid
/// or non-finite parameters and on C*RTT + Q == 0.
Plp plp(const TcpScenario& s);

/// Maps loss probability to MOS:
///
///   MOS = 1.46 * exp(-44 * plp) + 4.14 * exp(-2.9 * plp)
///
/// A nested-exponential variant of the first term is sometimes quoted for
/// this mapping; it does not reproduce the reference MOS tables the model is
/// calibrated against, so the single-exponential form is used. Strictly
/// decreasing on [0, 1]. Throws std::domain_error for p outside [0, 1].
MosScore mos_from_plp(const Plp& p);

/// Converts link bandwidth to bottleneck capacity assuming 12000-bit packets:
/// C = mbps * 1e6 / 12000 packets/second.
double capacity_from_bandwidth(LinkBandwidth bw);

/// MOS as a function of access bandwidth: `base` supplies N, b, m, RTT and Q;
/// its capacity field is ignored and replaced by capacity_from_bandwidth(bw).
MosScore mos_from_bandwidth(LinkBandwidth bw, const TcpScenario& base);

/// Nominal quality label for a score: the clamped value is rounded to the
/// nearest integer (ties up) and mapped 5=Excellent, 4=Good, 3=Fair, 2=Poor,
/// 1=Bad.
std::string_view mos_label(const MosScore& m);

}  // namespace qoecost

#endif
