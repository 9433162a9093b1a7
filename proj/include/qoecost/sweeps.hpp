#ifndef QOECOST_SWEEPS_HPP
#define QOECOST_SWEEPS_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qoecost/pricing.hpp"
#include "qoecost/tcp_qoe.hpp"

namespace qoecost {

enum class SweepAxis { bandwidth, cost, buffer };

/// Grid description for a table run. The grid is the inclusive range start,
/// start+step, ..., evaluated by index so the spacing does not drift; when
/// explicit_grid is non-empty it replaces the range (values must be positive
/// and strictly increasing). A cost axis requires a cost model. clamp_mos is
/// a presentation hint carried through from the caller; rows always hold both
/// the raw and the clamped score.
struct SweepSpec {
    SweepAxis axis = SweepAxis::bandwidth;
    double start = 0.0;
    double stop = 0.0;
    double step = 1.0;
    std::vector<double> explicit_grid;
    TcpScenario scenario;
    std::optional<CostModel> cost_model;
    bool clamp_mos = false;
};

struct SweepRow {
    double axis_value = 0.0;
    double bandwidth_mbps = 0.0;
    double capacity_pps = 0.0;
    double plp = 0.0;
    double mos_raw = 0.0;
    double mos_clamped = 0.0;
    std::optional<double> cost;  // present when the sweep carries a cost model
};

/// One row per grid point, ascending by axis value, each recomputable from
/// its own bandwidth via the loss/MOS/cost operations. Domain errors name the
/// offending grid point.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);

enum class OutputFormat { csv, json };

/// Serializes rows as CSV (header row, one line per point) or a JSON array of
/// records. Numbers are rendered in shortest round-trip form, so re-parsing
/// reproduces the row values exactly and identical rows give identical bytes.
/// Rows must be non-empty.
void emit(const std::vector<SweepRow>& rows, OutputFormat format, std::ostream& out);
std::string emit_string(const std::vector<SweepRow>& rows, OutputFormat format);

}  // namespace qoecost

#endif
