#ifndef QOECOST_CLI_HPP
#define QOECOST_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "qoecost/power_fit.hpp"

namespace qoecost::cli {

/// Dispatches a command line: subcommands plp, mos, capacity, fit, cost,
/// bandwidth, sweep. Results go to `out` (or the --out file), errors to `err`
/// as one `error: ...` line. Returns 0 on success, 1 on domain errors, 2 on
/// usage errors. If QOE_COST_CONFIG names a key=value file, its entries
/// become flag defaults.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Human-readable fit report: coefficients with 95% bounds, SSE, R-square,
/// Adj R-sq, RMSE, DFE, termination reason, and a comparison block against
/// the built-in reference cost model evaluated on the same data.
std::string describe_fit(const FitResult& result, const DataSet& data);

/// JSON form of a fit result (the same content as describe_fit).
std::string fit_result_to_json(const FitResult& result, const DataSet& data);

}  // namespace qoecost::cli

#endif
