#include "qoecost/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qoecost/pricing.hpp"
#include "qoecost/sweeps.hpp"
#include "qoecost/tcp_qoe.hpp"

namespace qoecost::cli {

namespace {

using nlohmann::ordered_json;

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string sci6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6e", v);
    return buf;
}

std::string shortest(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string_view term_name(Termination t) {
    switch (t) {
        case Termination::tol_fun: return "tol_fun";
        case Termination::tol_x: return "tol_x";
        case Termination::max_iter: return "max_iter";
        case Termination::max_fun_evals: return "max_fun_evals";
    }
    return "unknown";
}

std::pair<double, double> parse_pair(const std::string& text, const char* what) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) {
        throw std::domain_error(std::string("cli: ") + what + " must be two comma-separated numbers");
    }
    try {
        std::size_t used = 0;
        const double first = std::stod(text.substr(0, comma), &used);
        if (used != comma) throw std::invalid_argument("");
        const std::string rest = text.substr(comma + 1);
        const double second = std::stod(rest, &used);
        if (used != rest.size()) throw std::invalid_argument("");
        return {first, second};
    } catch (const std::exception&) {
        throw std::domain_error(std::string("cli: ") + what + " must be two comma-separated numbers, got '" +
                                text + "'");
    }
}

CostModel parse_model(const std::string& text) {
    if (text == "paper-eq4") {
        return paper_eq4();
    }
    if (text.rfind("fit:", 0) == 0) {
        const PricingTable table = load_pricing_file(text.substr(4));
        const FitResult fitted = fit_power_law(to_dataset(table));
        return make_cost_model(fitted.model, CostProvenance::fitted);
    }
    const auto [a, b] = parse_pair(text, "--model");
    return make_cost_model(PowerLaw{a, b}, CostProvenance::user_supplied);
}

struct ScenarioOpts {
    int sources = 50;
    int ack_ratio = 1;
    double rate_reduction = 0.5;
    double rtt = 0.1;
    double buffer = 10.0;
};

void add_scenario_flags(CLI::App* sub, ScenarioOpts& s) {
    sub->add_option("--sources", s.sources, "Number of TCP sources")->capture_default_str();
    sub->add_option("--ack-ratio", s.ack_ratio, "Packets acknowledged per ACK")->capture_default_str();
    sub->add_option("--rate-reduction", s.rate_reduction, "TCP sending-rate reduction factor")
        ->capture_default_str();
    sub->add_option("--rtt", s.rtt, "Round trip time, seconds")->capture_default_str();
    sub->add_option("--buffer", s.buffer, "Bottleneck buffer length, packets")->capture_default_str();
}

TcpScenario to_scenario(const ScenarioOpts& s) {
    TcpScenario scenario;
    scenario.n_sources = s.sources;
    scenario.ack_ratio = s.ack_ratio;
    scenario.rate_reduction = s.rate_reduction;
    scenario.rtt_s = s.rtt;
    scenario.buffer_pkts = s.buffer;
    return scenario;
}

double reference_sse(const DataSet& data, const PowerLaw& law) {
    double sse = 0.0;
    for (const auto& p : data.points) {
        const double r = p.y - law(p.x);
        sse += r * r;
    }
    return sse;
}

double reference_abs_residuals(const DataSet& data, const PowerLaw& law) {
    double total = 0.0;
    for (const auto& p : data.points) {
        total += std::fabs(p.y - law(p.x));
    }
    return total;
}

ordered_json interval_json(const ConfidenceInterval& ci) {
    ordered_json j;
    j["lower"] = ci.degenerate ? ordered_json(nullptr) : ordered_json(ci.lower);
    j["upper"] = ci.degenerate ? ordered_json(nullptr) : ordered_json(ci.upper);
    j["degenerate"] = ci.degenerate;
    return j;
}

std::string bounds_text(const ConfidenceInterval& ci) {
    if (ci.degenerate) {
        return "(bounds unavailable)";
    }
    return "(" + fixed6(ci.lower) + ", " + fixed6(ci.upper) + ")";
}

// Applies QOE_COST_CONFIG key=value entries as flag defaults on every
// subcommand that has a matching option. Unknown keys are ignored.
void apply_config_defaults(CLI::App& app, const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::domain_error("cli: cannot open config file: " + path);
    }
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        const std::string entry = line.substr(first, last - first + 1);
        const auto eq = entry.find('=');
        if (eq == std::string::npos) {
            throw std::domain_error("cli: config " + path + " line " + std::to_string(line_no) +
                                    ": expected key=value");
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t");
            return s.substr(b, e - b + 1);
        };
        const std::string key = trim(entry.substr(0, eq));
        const std::string value = trim(entry.substr(eq + 1));
        if (key.empty()) {
            throw std::domain_error("cli: config " + path + " line " + std::to_string(line_no) +
                                    ": empty key");
        }
        for (CLI::App* sub : app.get_subcommands(nullptr)) {
            CLI::Option* opt = sub->get_option_no_throw("--" + key);
            if (opt == nullptr) continue;
            try {
                if (opt->get_expected_min() == 0) {
                    opt->default_val(value == "true" || value == "1" ? "true" : "false");
                } else {
                    opt->default_val(value);
                }
            } catch (const CLI::Error& e) {
                throw std::domain_error("cli: config " + path + " line " + std::to_string(line_no) +
                                        ": bad value for '" + key + "': " + e.what());
            }
        }
    }
}

void write_payload(const std::string& payload, const std::string& out_path, std::ostream& out) {
    if (out_path.empty()) {
        out << payload;
        return;
    }
    std::ofstream file(out_path, std::ios::binary);
    if (!file) {
        throw std::domain_error("cli: cannot open output file: " + out_path);
    }
    file << payload;
    if (!file) {
        throw std::domain_error("cli: failed writing output file: " + out_path);
    }
}

}  // namespace

std::string describe_fit(const FitResult& result, const DataSet& data) {
    const FitDiagnostics& d = result.diagnostics;
    const PowerLaw reference = paper_eq4().law;
    std::ostringstream os;
    os << "power law fit: f(x) = a * x^b\n";
    os << "  a = " << fixed6(result.model.a) << "  95% " << bounds_text(result.confidence[0]) << "\n";
    os << "  b = " << fixed6(result.model.b) << "  95% " << bounds_text(result.confidence[1]) << "\n";
    os << "converged: " << (result.converged ? "yes" : "no") << " (" << term_name(result.termination)
       << ", " << result.iterations << " iterations)\n";
    os << "goodness of fit:\n";
    os << "  SSE       " << fixed6(d.sse) << "\n";
    os << "  R-square  " << (d.r_square ? fixed6(*d.r_square) : "n/a") << "\n";
    os << "  DFE       " << d.dfe << "\n";
    os << "  Adj R-sq  " << (d.adj_r_square ? fixed6(*d.adj_r_square) : "n/a") << "\n";
    os << "  RMSE      " << (d.rmse ? fixed6(*d.rmse) : "n/a") << "\n";
    os << "  coeff     " << d.n_coeff << "\n";
    os << "paper reference: a=27.13, b=0.0986\n";
    os << "  reference SSE on this data:            " << fixed6(reference_sse(data, reference)) << "\n";
    os << "  reference sum |residual| on this data: " << fixed6(reference_abs_residuals(data, reference))
       << "\n";
    return os.str();
}

std::string fit_result_to_json(const FitResult& result, const DataSet& data) {
    const FitDiagnostics& d = result.diagnostics;
    const PowerLaw reference = paper_eq4().law;
    ordered_json j;
    j["model"] = {{"a", result.model.a}, {"b", result.model.b}};
    j["converged"] = result.converged;
    j["iterations"] = result.iterations;
    j["termination"] = std::string(term_name(result.termination));
    ordered_json diag;
    diag["sse"] = d.sse;
    diag["sst"] = d.sst;
    diag["r_square"] = d.r_square ? ordered_json(*d.r_square) : ordered_json(nullptr);
    diag["adj_r_square"] = d.adj_r_square ? ordered_json(*d.adj_r_square) : ordered_json(nullptr);
    diag["rmse"] = d.rmse ? ordered_json(*d.rmse) : ordered_json(nullptr);
    diag["dfe"] = d.dfe;
    diag["n_coeff"] = d.n_coeff;
    diag["sum_abs_residuals"] = reference_abs_residuals(data, result.model);
    j["diagnostics"] = std::move(diag);
    j["confidence_level"] = 0.95;
    j["confidence"] = {{"a", interval_json(result.confidence[0])},
                       {"b", interval_json(result.confidence[1])}};
    j["reference"] = {{"a", reference.a},
                      {"b", reference.b},
                      {"sse", reference_sse(data, reference)},
                      {"sum_abs_residuals", reference_abs_residuals(data, reference)}};
    return j.dump(2) + "\n";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Models end-user quality (MOS) for TCP internet access as a function of\n"
                 "link bandwidth and of monthly bandwidth cost."};
    app.name("qoecost");
    app.require_subcommand(1);

    ScenarioOpts scenario_opts;
    std::string out_path;
    std::string model_text = "paper-eq4";
    bool clamp = false;

    // plp
    auto* plp_cmd = app.add_subcommand("plp", "Packet loss probability for a scenario");
    double plp_bandwidth = 0.0, plp_capacity = 0.0;
    auto* plp_src = plp_cmd->add_option_group("link", "Link rate (choose one)");
    auto* plp_bw_opt = plp_src->add_option("--bandwidth", plp_bandwidth, "Access bandwidth, Mbps");
    plp_src->add_option("--capacity", plp_capacity, "Bottleneck capacity, packets/second");
    plp_src->require_option(1);
    add_scenario_flags(plp_cmd, scenario_opts);
    std::string plp_format = "text";
    plp_cmd->add_option("--format", plp_format, "Output format")->check(CLI::IsMember({"text", "json"}));
    plp_cmd->add_option("--out", out_path, "Write output to a file");

    // mos
    auto* mos_cmd = app.add_subcommand("mos", "Mean Opinion Score for a bandwidth, loss rate, or spend");
    double mos_bandwidth = 0.0, mos_plp = 0.0, mos_cost = 0.0;
    auto* mos_src = mos_cmd->add_option_group("input", "Input quantity (choose one)");
    auto* mos_bw_opt = mos_src->add_option("--bandwidth", mos_bandwidth, "Access bandwidth, Mbps");
    auto* mos_plp_opt = mos_src->add_option("--plp", mos_plp, "Packet loss probability in [0,1]");
    mos_src->add_option("--cost", mos_cost, "Monthly cost (uses --model)");
    mos_src->require_option(1);
    add_scenario_flags(mos_cmd, scenario_opts);
    mos_cmd->add_option("--model", model_text, "Cost model: paper-eq4 | fit:<csv> | a,b")
        ->capture_default_str();
    mos_cmd->add_flag("--clamp", clamp, "Clamp the score to the 1..5 scale");
    bool mos_label_only = false;
    mos_cmd->add_flag("--label", mos_label_only, "Print the quality label instead of the score");
    std::string mos_format = "text";
    mos_cmd->add_option("--format", mos_format, "Output format")->check(CLI::IsMember({"text", "json"}));
    mos_cmd->add_option("--out", out_path, "Write output to a file");

    // capacity
    auto* cap_cmd = app.add_subcommand("capacity", "Convert bandwidth to packets/second");
    double cap_bandwidth = 0.0;
    cap_cmd->add_option("--bandwidth", cap_bandwidth, "Access bandwidth, Mbps")->required();
    std::string cap_format = "text";
    cap_cmd->add_option("--format", cap_format, "Output format")->check(CLI::IsMember({"text", "json"}));
    cap_cmd->add_option("--out", out_path, "Write output to a file");

    // fit
    auto* fit_cmd = app.add_subcommand("fit", "Fit cost = a * bandwidth^b to tariff data");
    std::string fit_file;
    fit_cmd->add_option("file", fit_file, "Pricing CSV (header: bandwidth_mbps,cost)")->required();
    std::string fit_robust = "none";
    fit_cmd->add_option("--robust", fit_robust, "Robust weighting")
        ->check(CLI::IsMember({"none", "lar", "bisquare"}))
        ->capture_default_str();
    std::string fit_start;
    fit_cmd->add_option("--start", fit_start, "Start point as a,b (default: log-log regression)");
    FitOptions fit_opts;
    fit_cmd->add_option("--tol-fun", fit_opts.tol_fun, "Gradient tolerance")->capture_default_str();
    fit_cmd->add_option("--tol-x", fit_opts.tol_x, "Step tolerance")->capture_default_str();
    fit_cmd->add_option("--max-iter", fit_opts.max_iter, "Iteration cap")->capture_default_str();
    fit_cmd->add_option("--max-fun-evals", fit_opts.max_fun_evals, "Function evaluation cap")
        ->capture_default_str();
    std::string fit_format = "text";
    fit_cmd->add_option("--format", fit_format, "Output format")->check(CLI::IsMember({"text", "json"}));
    fit_cmd->add_option("--out", out_path, "Write output to a file");

    // cost
    auto* cost_cmd = app.add_subcommand("cost", "Monthly cost of a bandwidth under a cost model");
    double cost_bandwidth = 0.0;
    cost_cmd->add_option("--bandwidth", cost_bandwidth, "Access bandwidth, Mbps")->required();
    cost_cmd->add_option("--model", model_text, "Cost model: paper-eq4 | fit:<csv> | a,b")
        ->capture_default_str();
    std::string cost_format = "text";
    cost_cmd->add_option("--format", cost_format, "Output format")->check(CLI::IsMember({"text", "json"}));
    cost_cmd->add_option("--out", out_path, "Write output to a file");

    // bandwidth
    auto* bw_cmd = app.add_subcommand("bandwidth", "Bandwidth purchasable for a monthly cost");
    double bw_cost = 0.0;
    bw_cmd->add_option("--cost", bw_cost, "Monthly cost")->required();
    bw_cmd->add_option("--model", model_text, "Cost model: paper-eq4 | fit:<csv> | a,b")
        ->capture_default_str();
    std::string bw_format = "text";
    bw_cmd->add_option("--format", bw_format, "Output format")->check(CLI::IsMember({"text", "json"}));
    bw_cmd->add_option("--out", out_path, "Write output to a file");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Tabulate MOS along a bandwidth, cost, or buffer grid");
    std::string sweep_axis = "bandwidth";
    sweep_cmd->add_option("--axis", sweep_axis, "Sweep axis")
        ->check(CLI::IsMember({"bandwidth", "cost", "buffer"}))
        ->capture_default_str();
    double sweep_start = 0.0, sweep_stop = 0.0, sweep_step = 0.0;
    auto* sweep_start_opt = sweep_cmd->add_option("--start", sweep_start, "Grid start (inclusive)");
    auto* sweep_stop_opt = sweep_cmd->add_option("--stop", sweep_stop, "Grid stop (inclusive)");
    auto* sweep_step_opt = sweep_cmd->add_option("--step", sweep_step, "Grid step");
    add_scenario_flags(sweep_cmd, scenario_opts);
    double sweep_bandwidth = 0.0, sweep_capacity = 0.0;
    auto* sweep_link = sweep_cmd->add_option_group("link", "Fixed link rate for buffer sweeps");
    auto* sweep_bw_opt = sweep_link->add_option("--bandwidth", sweep_bandwidth, "Access bandwidth, Mbps");
    auto* sweep_cap_opt = sweep_link->add_option("--capacity", sweep_capacity, "Capacity, packets/second");
    sweep_link->require_option(0, 1);
    auto* sweep_model_opt =
        sweep_cmd->add_option("--model", model_text, "Cost model: paper-eq4 | fit:<csv> | a,b");
    sweep_cmd->add_flag("--clamp", clamp, "Presentation hint recorded with the sweep");
    std::string sweep_format = "csv";
    sweep_cmd->add_option("--format", sweep_format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    sweep_cmd->add_option("--out", out_path, "Write output to a file");

    if (const char* cfg = std::getenv("QOE_COST_CONFIG")) {
        try {
            apply_config_defaults(app, cfg);
        } catch (const std::exception& e) {
            err << "error: " << e.what() << '\n';
            return 2;
        }
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        const auto subs = app.get_subcommands();
        out << (subs.empty() ? app.help() : subs.front()->help());
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        std::string payload;

        if (plp_cmd->parsed()) {
            TcpScenario s = to_scenario(scenario_opts);
            s.capacity_pps = plp_bw_opt->count() > 0
                                 ? capacity_from_bandwidth(LinkBandwidth{plp_bandwidth})
                                 : plp_capacity;
            const Plp p = plp(s);
            if (plp_format == "json") {
                ordered_json j;
                j["plp"] = p.value;
                j["saturated"] = p.saturated;
                payload = j.dump(2) + "\n";
            } else {
                payload = sci6(p.value) + "\n";
            }
        } else if (mos_cmd->parsed()) {
            const TcpScenario s = to_scenario(scenario_opts);
            MosScore score = [&] {
                if (mos_bw_opt->count() > 0) {
                    return mos_from_bandwidth(LinkBandwidth{mos_bandwidth}, s);
                }
                if (mos_plp_opt->count() > 0) {
                    return mos_from_plp(Plp{mos_plp, false});
                }
                return mos_from_cost(mos_cost, parse_model(model_text), s);
            }();
            if (mos_format == "json") {
                ordered_json j;
                j["mos_raw"] = score.value();
                j["mos_clamped"] = score.clamped_value();
                j["label"] = std::string(mos_label(score));
                payload = j.dump(2) + "\n";
            } else if (mos_label_only) {
                payload = std::string(mos_label(score)) + "\n";
            } else {
                payload = fixed6(clamp ? score.clamped_value() : score.value()) + "\n";
            }
        } else if (cap_cmd->parsed()) {
            const double pps = capacity_from_bandwidth(LinkBandwidth{cap_bandwidth});
            if (cap_format == "json") {
                ordered_json j;
                j["capacity_pps"] = pps;
                payload = j.dump(2) + "\n";
            } else {
                payload = shortest(pps) + "\n";
            }
        } else if (fit_cmd->parsed()) {
            if (fit_robust == "bisquare") {
                throw std::domain_error("cli: robust mode 'bisquare' is not implemented; use none or lar");
            }
            fit_opts.robust = fit_robust == "lar" ? RobustMode::lar : RobustMode::none;
            if (!fit_start.empty()) {
                fit_opts.start = parse_pair(fit_start, "--start");
            }
            const DataSet data = to_dataset(load_pricing_file(fit_file));
            const FitResult result = fit_power_law(data, fit_opts);
            payload = fit_format == "json" ? fit_result_to_json(result, data)
                                           : describe_fit(result, data);
        } else if (cost_cmd->parsed()) {
            const double c = cost_from_bandwidth(parse_model(model_text), LinkBandwidth{cost_bandwidth});
            if (cost_format == "json") {
                ordered_json j;
                j["cost"] = c;
                payload = j.dump(2) + "\n";
            } else {
                payload = fixed6(c) + "\n";
            }
        } else if (bw_cmd->parsed()) {
            const LinkBandwidth bw = bandwidth_from_cost(parse_model(model_text), bw_cost);
            if (bw_format == "json") {
                ordered_json j;
                j["bandwidth_mbps"] = bw.mbps;
                payload = j.dump(2) + "\n";
            } else {
                payload = fixed6(bw.mbps) + "\n";
            }
        } else if (sweep_cmd->parsed()) {
            SweepSpec spec;
            spec.clamp_mos = clamp;
            spec.scenario = to_scenario(scenario_opts);
            if (sweep_bw_opt->count() > 0) {
                spec.scenario.capacity_pps = capacity_from_bandwidth(LinkBandwidth{sweep_bandwidth});
            } else if (sweep_cap_opt->count() > 0) {
                spec.scenario.capacity_pps = sweep_capacity;
            }

            double def_start = 15.0, def_stop = 120.0, def_step = 15.0;
            if (sweep_axis == "cost") {
                spec.axis = SweepAxis::cost;
                def_start = 28.0;
                def_stop = 46.0;
                def_step = 1.0;
            } else if (sweep_axis == "buffer") {
                spec.axis = SweepAxis::buffer;
                def_start = 10.0;
                def_stop = 1000.0;
                def_step = 90.0;
            }
            const bool ranged = sweep_start_opt->count() > 0 || sweep_stop_opt->count() > 0 ||
                                sweep_step_opt->count() > 0;
            if (spec.axis == SweepAxis::buffer && !ranged) {
                spec.explicit_grid = {10.0, 100.0, 200.0, 400.0, 600.0, 800.0, 1000.0};
            } else {
                spec.start = sweep_start_opt->count() > 0 ? sweep_start : def_start;
                spec.stop = sweep_stop_opt->count() > 0 ? sweep_stop : def_stop;
                spec.step = sweep_step_opt->count() > 0 ? sweep_step : def_step;
            }
            if (spec.axis == SweepAxis::cost || sweep_model_opt->count() > 0) {
                spec.cost_model = parse_model(model_text);
            }
            const std::vector<SweepRow> rows = run_sweep(spec);
            payload = emit_string(rows, sweep_format == "json" ? OutputFormat::json : OutputFormat::csv);
        }

        write_payload(payload, out_path, out);
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    args.reserve(argc > 0 ? static_cast<std::size_t>(argc - 1) : 0);
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return run(args, out, err);
}

}  // namespace qoecost::cli
