#ifndef QOECOST_PRICING_HPP
#define QOECOST_PRICING_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "qoecost/power_fit.hpp"
#include "qoecost/tcp_qoe.hpp"

namespace qoecost {

struct PricePoint {
    double bandwidth_mbps = 0.0;
    double cost = 0.0;  // monthly cost, currency units
};

/// Tariff samples ordered by strictly increasing bandwidth. The currency is
/// an opaque display label; no conversion is attempted.
struct PricingTable {
    std::vector<PricePoint> samples;
    std::string currency_label;
};

enum class CostProvenance { fitted, paper_eq4, user_supplied };

/// Monthly cost as a power law of bandwidth: cost = a * bandwidth^b, with
/// a > 0 and b != 0 so the model is invertible.
struct CostModel {
    PowerLaw law;
    CostProvenance provenance = CostProvenance::user_supplied;
};

/// Validates invertibility (a > 0, b != 0, finite) and builds a model.
CostModel make_cost_model(PowerLaw law, CostProvenance provenance);

/// The built-in reference model cost = 27.13 * bandwidth^0.0986, so the
/// published curves are reproducible without refitting.
CostModel paper_eq4();

double cost_from_bandwidth(const CostModel& m, LinkBandwidth bw);

/// Inverse of the cost model: bandwidth = (cost/a)^(1/b).
LinkBandwidth bandwidth_from_cost(const CostModel& m, double cost);

/// MOS attainable for a monthly spend: composes bandwidth_from_cost with
/// mos_from_bandwidth. Strictly increasing in cost in the unclamped region
/// (for a, b > 0).
MosScore mos_from_cost(double cost, const CostModel& m, const TcpScenario& base);

/// Parses a two-column CSV with header `bandwidth_mbps,cost`. Rejects
/// duplicate or non-increasing bandwidths, non-positive values, and malformed
/// rows, naming the offending line. Requires at least 2 samples.
PricingTable load_pricing(std::istream& in);
PricingTable load_pricing_file(const std::string& path);

/// Pricing samples as fit input (x = bandwidth, y = cost).
DataSet to_dataset(const PricingTable& table);

}  // namespace qoecost

#endif
