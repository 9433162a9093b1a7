#include "qoecost/sweeps.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace qoecost {

namespace {

std::string shortest(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::vector<double> grid_values(const SweepSpec& spec) {
    if (!spec.explicit_grid.empty()) {
        double prev = 0.0;
        for (double v : spec.explicit_grid) {
            if (!std::isfinite(v) || v <= 0.0) {
                throw std::domain_error("sweeps: explicit grid values must be positive and finite");
            }
            if (v <= prev) {
                throw std::domain_error("sweeps: explicit grid must be strictly increasing");
            }
            prev = v;
        }
        return spec.explicit_grid;
    }
    if (!std::isfinite(spec.start) || !std::isfinite(spec.stop) || !std::isfinite(spec.step) ||
        spec.start <= 0.0 || spec.step <= 0.0) {
        throw std::domain_error("sweeps: start and step must be positive and finite");
    }
    if (spec.start > spec.stop) {
        throw std::domain_error("sweeps: start must not exceed stop");
    }
    // Nudge before flooring so an endpoint that lands a few ULP below an
    // integer multiple (0.1 .. 0.7 by 0.1) is not dropped from the grid.
    const double steps = (spec.stop - spec.start) / spec.step;
    const auto count = static_cast<std::size_t>(std::floor(steps + steps * 1e-12 + 1e-12)) + 1;
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) {
        // By-index accumulation; repeated addition would drift.
        values[i] = spec.start + static_cast<double>(i) * spec.step;
    }
    return values;
}

SweepRow evaluate_point(const SweepSpec& spec, double axis_value) {
    SweepRow row;
    row.axis_value = axis_value;
    TcpScenario scenario = spec.scenario;

    switch (spec.axis) {
        case SweepAxis::bandwidth:
            row.bandwidth_mbps = axis_value;
            break;
        case SweepAxis::cost:
            row.bandwidth_mbps = bandwidth_from_cost(*spec.cost_model, axis_value).mbps;
            break;
        case SweepAxis::buffer:
            scenario.buffer_pkts = axis_value;
            // Report the bandwidth the scenario capacity corresponds to.
            row.bandwidth_mbps = scenario.capacity_pps * 12000.0 / 1000000.0;
            break;
    }

    row.capacity_pps = capacity_from_bandwidth(LinkBandwidth{row.bandwidth_mbps});
    if (spec.axis != SweepAxis::buffer) {
        scenario.capacity_pps = row.capacity_pps;
    }
    const Plp loss = plp(scenario);
    const MosScore mos = mos_from_plp(loss);
    row.plp = loss.value;
    row.mos_raw = mos.value();
    row.mos_clamped = mos.clamped_value();
    if (spec.cost_model) {
        row.cost = cost_from_bandwidth(*spec.cost_model, LinkBandwidth{row.bandwidth_mbps});
    }
    return row;
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
    if (spec.axis == SweepAxis::cost && !spec.cost_model) {
        throw std::domain_error("sweeps: a cost-axis sweep requires a cost model");
    }
    const std::vector<double> values = grid_values(spec);
    std::vector<SweepRow> rows;
    rows.reserve(values.size());
    for (double v : values) {
        try {
            rows.push_back(evaluate_point(spec, v));
        } catch (const std::exception& e) {
            throw std::domain_error("sweeps: at axis value " + shortest(v) + ": " + e.what());
        }
    }
    return rows;
}

void emit(const std::vector<SweepRow>& rows, OutputFormat format, std::ostream& out) {
    if (rows.empty()) {
        throw std::domain_error("sweeps: nothing to emit (no rows)");
    }
    const bool with_cost = rows.front().cost.has_value();
    if (format == OutputFormat::csv) {
        out << "axis_value,bandwidth_mbps,capacity_pps,plp,mos_raw,mos_clamped";
        if (with_cost) out << ",cost";
        out << '\n';
        for (const auto& r : rows) {
            out << shortest(r.axis_value) << ',' << shortest(r.bandwidth_mbps) << ','
                << shortest(r.capacity_pps) << ',' << shortest(r.plp) << ','
                << shortest(r.mos_raw) << ',' << shortest(r.mos_clamped);
            if (with_cost) out << ',' << shortest(r.cost.value());
            out << '\n';
        }
        return;
    }
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json rec;
        rec["axis_value"] = r.axis_value;
        rec["bandwidth_mbps"] = r.bandwidth_mbps;
        rec["capacity_pps"] = r.capacity_pps;
        rec["plp"] = r.plp;
        rec["mos_raw"] = r.mos_raw;
        rec["mos_clamped"] = r.mos_clamped;
        if (with_cost) rec["cost"] = r.cost.value();
        doc.push_back(std::move(rec));
    }
    out << doc.dump(2) << '\n';
}

std::string emit_string(const std::vector<SweepRow>& rows, OutputFormat format) {
    std::ostringstream os;
    emit(rows, format, os);
    return os.str();
}

}  // namespace qoecost
