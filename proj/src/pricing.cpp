#include "qoecost/pricing.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace qoecost {

namespace {

void validate_model(const CostModel& m) {
    if (!std::isfinite(m.law.a) || !std::isfinite(m.law.b)) {
        throw std::domain_error("pricing: cost model coefficients must be finite");
    }
    if (m.law.a <= 0.0) {
        throw std::domain_error("pricing: cost model requires a > 0");
    }
    if (m.law.b == 0.0) {
        throw std::domain_error("pricing: cost model requires b != 0 (invertibility)");
    }
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_number(const std::string& field, int line_no) {
    const std::string text = trim(field);
    if (text.empty()) {
        throw std::domain_error("pricing: line " + std::to_string(line_no) + ": empty field");
    }
    errno = 0;
    char* end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(value)) {
        throw std::domain_error("pricing: line " + std::to_string(line_no) +
                                ": not a finite number: '" + text + "'");
    }
    return value;
}

std::string format_value(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

CostModel make_cost_model(PowerLaw law, CostProvenance provenance) {
    CostModel m{law, provenance};
    validate_model(m);
    return m;
}

CostModel paper_eq4() {
    return CostModel{PowerLaw{27.13, 0.0986}, CostProvenance::paper_eq4};
}

double cost_from_bandwidth(const CostModel& m, LinkBandwidth bw) {
    validate_model(m);
    if (!std::isfinite(bw.mbps) || bw.mbps <= 0.0) {
        throw std::domain_error("pricing: bandwidth must be a positive finite Mbps value");
    }
    return m.law(bw.mbps);
}

LinkBandwidth bandwidth_from_cost(const CostModel& m, double cost) {
    validate_model(m);
    if (!std::isfinite(cost) || cost <= 0.0) {
        throw std::domain_error("pricing: cost must be a positive finite value");
    }
    return LinkBandwidth{std::pow(cost / m.law.a, 1.0 / m.law.b)};
}

MosScore mos_from_cost(double cost, const CostModel& m, const TcpScenario& base) {
    return mos_from_bandwidth(bandwidth_from_cost(m, cost), base);
}

PricingTable load_pricing(std::istream& in) {
    PricingTable table;
    std::string line;
    int line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.size() >= 3 &&
            static_cast<unsigned char>(line[0]) == 0xEF &&
            static_cast<unsigned char>(line[1]) == 0xBB &&
            static_cast<unsigned char>(line[2]) == 0xBF) {
            line.erase(0, 3);  // UTF-8 BOM
        }
        const std::string text = trim(line);
        if (text.empty()) continue;
        if (!saw_header) {
            if (text != "bandwidth_mbps,cost") {
                throw std::domain_error(
                    "pricing: line " + std::to_string(line_no) +
                    ": expected header 'bandwidth_mbps,cost', got '" + text + "'");
            }
            saw_header = true;
            continue;
        }
        const auto comma = text.find(',');
        if (comma == std::string::npos || text.find(',', comma + 1) != std::string::npos) {
            throw std::domain_error("pricing: line " + std::to_string(line_no) +
                                    ": expected exactly 2 comma-separated fields");
        }
        const double bw = parse_number(text.substr(0, comma), line_no);
        const double cost = parse_number(text.substr(comma + 1), line_no);
        if (bw <= 0.0) {
            throw std::domain_error("pricing: line " + std::to_string(line_no) +
                                    ": bandwidth must be positive, got " + format_value(bw));
        }
        if (cost <= 0.0) {
            throw std::domain_error("pricing: line " + std::to_string(line_no) +
                                    ": cost must be positive, got " + format_value(cost));
        }
        if (!table.samples.empty() && bw <= table.samples.back().bandwidth_mbps) {
            throw std::domain_error("pricing: line " + std::to_string(line_no) +
                                    ": bandwidth " + format_value(bw) +
                                    " is out of order (bandwidths must be strictly increasing)");
        }
        table.samples.push_back(PricePoint{bw, cost});
    }
    if (!saw_header) {
        throw std::domain_error("pricing: need at least 2 samples (input has no header row)");
    }
    if (table.samples.size() < 2) {
        throw std::domain_error("pricing: need at least 2 samples, got " +
                                std::to_string(table.samples.size()));
    }
    return table;
}

PricingTable load_pricing_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::domain_error("pricing: cannot open file: " + path);
    }
    return load_pricing(in);
}

DataSet to_dataset(const PricingTable& table) {
    DataSet data;
    data.points.reserve(table.samples.size());
    for (const auto& s : table.samples) {
        data.points.push_back(PointXY{s.bandwidth_mbps, s.cost});
    }
    return data;
}

}  // namespace qoecost
