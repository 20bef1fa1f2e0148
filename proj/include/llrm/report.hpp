#pragma once

#include <optional>
#include <string>

#include "llrm/ga.hpp"

namespace llrm {

// Fully parsed command-line configuration. A scenario preset (A/B/C) or an
// explicit mode flag (vmin / imax / psch) selects the market mode; a preset
// may be combined only with the parameter flag of its own mode.
struct RunConfig {
    std::string network_file;
    std::string load_file;
    std::string consumer_file;
    std::string bid_file;

    std::optional<char> scenario;          // 'A', 'B', 'C'
    std::optional<double> v_min_pu;
    std::optional<double> i_max_pu;
    std::optional<int> p_sch_kw;
    std::optional<double> wholesale_mwh;   // $/MWh on the CLI
    std::optional<double> interval_hours;

    GaConfig ga;
    std::string out_dir = ".";
    std::string format = "json";           // "json" or "csv"
};

// Scenario presets:
//   A: voltage regulation, v_min 0.95 pu, wholesale 40 $/MWh
//   B: congestion relief, i_max 0.04 pu, wholesale 40 $/MWh
//   C: scheduled reduction, 500 kW, wholesale 300 $/MWh
MarketRequest preset_request(char scenario);

// Loads the data, clears the market, and writes the report plus plot data
// into config.out_dir:
//   report.json (or report.csv), trace.csv, summary.txt,
//   voltages_before/after.csv, currents_before/after.csv,
//   consumer_reductions.csv
// Exit status: 0 feasible clearing, 2 infeasible request, 1 input error.
int run(const RunConfig& config);

// Fig-style plot data: per-bus voltages and per-branch currents before/after,
// and per-consumer offered vs accepted reduction.
void emit_plot_data(const std::string& out_dir,
                    const Network& network,
                    const std::vector<Consumer>& consumers,
                    const std::vector<BidCurve>& bids,
                    const ClearingSolution& solution,
                    const PowerFlowResult& before,
                    const PowerFlowResult& after);

void write_trace_csv(const std::string& path, const std::vector<TracePoint>& trace);

} // namespace llrm
