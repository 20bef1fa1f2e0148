#include "llrm/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "llrm/errors.hpp"

namespace llrm {

namespace {

using nlohmann::json;

const char* mode_name(MarketMode mode) {
    switch (mode) {
    case MarketMode::VoltageRegulation: return "VoltageRegulation";
    case MarketMode::CongestionRelief: return "CongestionRelief";
    case MarketMode::ScheduledReduction: return "ScheduledReduction";
    }
    return "?";
}

json flow_summary(const PowerFlowResult& flow) {
    return json{{"loss_kw", flow.total_loss_kw},
                {"min_voltage_pu", min_voltage(flow)},
                {"max_current_pu", max_branch_current(flow)},
                {"iterations", flow.iterations}};
}

json request_json(const MarketRequest& request, const Network& network) {
    json r{{"mode", mode_name(request.mode)},
           {"wholesale_per_kwh", request.wholesale_price},
           {"interval_hours", request.interval_hours}};
    if (request.mode == MarketMode::VoltageRegulation) r["v_min_pu"] = request.v_min_pu;
    if (request.mode == MarketMode::CongestionRelief) r["i_max_pu"] = request.i_max_pu;
    if (request.mode == MarketMode::ScheduledReduction) r["p_sch_kw"] = request.p_sch_kw;
    // per-unit limits are only meaningful against the declared bases
    r["bases"] = json{{"base_kv", network.base_kv},
                      {"base_mva", network.base_mva},
                      {"slack_voltage", network.slack_voltage}};
    return r;
}

json solution_json(const ClearingSolution& sol,
                   const std::vector<Consumer>& consumers,
                   const std::vector<BidCurve>& bids,
                   const MarketRequest& request) {
    json decisions = json::array();
    for (const Decision& d : sol.decisions) {
        const Consumer* c = find_consumer(consumers, d.bus_id);
        const BidCurve* bid = find_bid(bids, d.bus_id);
        decisions.push_back(json{
            {"bus", d.bus_id},
            {"p_cr_kw", d.p_cr_kw},
            {"p_dr_kw", d.p_dr_kw},
            {"curtail_cost", c ? curtailment_cost(*c, d.p_cr_kw, request.interval_hours) : 0.0},
            {"dr_payment", bid ? dr_payment(*bid, d.p_dr_kw, request.interval_hours) : 0.0},
        });
    }
    return json{{"feasible", sol.feasible},
                {"decisions", decisions},
                {"curtail_cost_total", sol.curtail_cost_total},
                {"dr_payment_total", sol.dr_payment_total},
                {"loss_cost", sol.loss_cost},
                {"total_cost", sol.total_cost},
                {"total_reduction_kw", sol.total_reduction_kw()},
                {"after", flow_summary(sol.flow_after)}};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error(path + ": cannot write");
    out << text;
}

// Flat key,value mirror of the JSON report for --format csv consumers.
void flatten(const json& node, const std::string& prefix, std::string& out) {
    if (node.is_object()) {
        for (auto it = node.begin(); it != node.end(); ++it)
            flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
    } else if (node.is_array()) {
        for (size_t i = 0; i < node.size(); ++i)
            flatten(node[i], prefix + "[" + std::to_string(i) + "]", out);
    } else {
        out += prefix;
        out += ',';
        out += node.dump();
        out += '\n';
    }
}

} // namespace

MarketRequest preset_request(char scenario) {
    switch (scenario) {
    case 'A': return MarketRequest::voltage_regulation(0.95, 0.04, 1.0);
    case 'B': return MarketRequest::congestion_relief(0.04, 0.04, 1.0);
    case 'C': return MarketRequest::scheduled_reduction(500, 0.30, 1.0);
    }
    throw Error(std::string("unknown scenario preset `") + scenario + "`");
}

void write_trace_csv(const std::string& path, const std::vector<TracePoint>& trace) {
    std::ofstream out(path);
    if (!out) throw Error(path + ": cannot write");
    out << "iteration,best_cost,mean_cost,feasible_count\n";
    char line[128];
    for (const TracePoint& p : trace) {
        std::snprintf(line, sizeof line, "%d,%.6f,%.6f,%d\n", p.iteration, p.best_cost,
                      p.mean_cost, p.feasible_count);
        out << line;
    }
}

void emit_plot_data(const std::string& out_dir,
                    const Network& network,
                    const std::vector<Consumer>& consumers,
                    const std::vector<BidCurve>& bids,
                    const ClearingSolution& solution,
                    const PowerFlowResult& before,
                    const PowerFlowResult& after) {
    namespace fs = std::filesystem;
    const fs::path dir(out_dir);
    write_voltage_csv((dir / "voltages_before.csv").string(), network, before);
    write_voltage_csv((dir / "voltages_after.csv").string(), network, after);
    write_current_csv((dir / "currents_before.csv").string(), network, before);
    write_current_csv((dir / "currents_after.csv").string(), network, after);

    std::ofstream out(dir / "consumer_reductions.csv");
    if (!out) throw Error((dir / "consumer_reductions.csv").string() + ": cannot write");
    out << "bus,offered_kw,accepted_kw,curtailed_kw\n";
    for (const Consumer& c : consumers) {
        const BidCurve* bid = find_bid(bids, c.bus_id);
        const int offered = bid ? bid->max_level_kw() : 0;
        int accepted = 0, curtailed = 0;
        for (const Decision& d : solution.decisions)
            if (d.bus_id == c.bus_id) {
                accepted = d.p_dr_kw;
                curtailed = d.p_cr_kw;
            }
        if (offered == 0 && accepted == 0 && curtailed == 0) continue;
        out << c.bus_id << ',' << offered << ',' << accepted << ',' << curtailed << '\n';
    }
}

namespace {

MarketRequest build_request(const RunConfig& config) {
    MarketRequest request;
    if (config.scenario) {
        request = preset_request(*config.scenario);
        // A preset accepts overrides only for its own mode's parameter.
        if (config.v_min_pu && request.mode != MarketMode::VoltageRegulation)
            throw Error("--vmin only applies to scenario A / voltage regulation");
        if (config.i_max_pu && request.mode != MarketMode::CongestionRelief)
            throw Error("--imax-pu only applies to scenario B / congestion relief");
        if (config.p_sch_kw && request.mode != MarketMode::ScheduledReduction)
            throw Error("--psch-kw only applies to scenario C / scheduled reduction");
        if (config.v_min_pu) request.v_min_pu = *config.v_min_pu;
        if (config.i_max_pu) request.i_max_pu = *config.i_max_pu;
        if (config.p_sch_kw) request.p_sch_kw = *config.p_sch_kw;
    } else {
        const int picked = int(config.v_min_pu.has_value()) +
                           int(config.i_max_pu.has_value()) +
                           int(config.p_sch_kw.has_value());
        if (picked != 1)
            throw Error("pick a scenario preset or exactly one of --vmin / --imax-pu / --psch-kw");
        if (config.v_min_pu)
            request = MarketRequest::voltage_regulation(*config.v_min_pu);
        else if (config.i_max_pu)
            request = MarketRequest::congestion_relief(*config.i_max_pu);
        else
            request = MarketRequest::scheduled_reduction(*config.p_sch_kw);
    }
    if (config.wholesale_mwh) request.wholesale_price = *config.wholesale_mwh / 1000.0;
    if (config.interval_hours) request.interval_hours = *config.interval_hours;
    request.validate();
    return request;
}

std::string summary_text(const ClearingSolution* market,
                         const ClearingSolution* baseline,
                         const std::string& baseline_note) {
    char buf[256];
    std::string text = "                         cost ($)    reduction (kW)    loss (kW)\n";
    if (market) {
        std::snprintf(buf, sizeof buf, "market clearing     %13.2f    %10d    %9.2f\n",
                      market->total_cost, market->total_reduction_kw(),
                      market->flow_after.total_loss_kw);
        text += buf;
    } else {
        text += "market clearing          infeasible\n";
    }
    if (baseline) {
        std::snprintf(buf, sizeof buf, "curtailment only    %13.2f    %10d    %9.2f\n",
                      baseline->total_cost, baseline->total_reduction_kw(),
                      baseline->flow_after.total_loss_kw);
        text += buf;
    } else {
        text += "curtailment only         infeasible (" + baseline_note + ")\n";
    }
    if (market && baseline && market->total_cost > 0) {
        std::snprintf(buf, sizeof buf, "baseline / market   %13.1fx\n",
                      baseline->total_cost / market->total_cost);
        text += buf;
    }
    return text;
}

} // namespace

int run(const RunConfig& config) {
    namespace fs = std::filesystem;

    Network network;
    std::vector<Consumer> consumers;
    std::vector<BidCurve> bids;
    MarketRequest request;
    try {
        request = build_request(config);
        network = load_network(config.network_file, config.load_file);
        consumers = load_consumers(config.consumer_file, network);
        bids = load_bids(config.bid_file, consumers);
        fs::create_directories(config.out_dir);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    const PowerFlowResult before = solve(network);
    try {
        require_converged(before);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    json report;
    report["request"] = request_json(request, network);
    report["ga"] = json{{"population", config.ga.population_size},
                        {"iterations", config.ga.iterations},
                        {"seed", config.ga.rng_seed},
                        {"elitism", config.ga.elitism}};
    report["before"] = flow_summary(before);

    ClearingSolution baseline;
    bool have_baseline = false;
    std::string baseline_note;
    try {
        baseline = curtailment_only_baseline(network, consumers, request);
        have_baseline = true;
        report["baseline"] = solution_json(baseline, consumers, bids, request);
    } catch (const Infeasible& e) {
        baseline_note = e.what();
        report["baseline"] = json{{"feasible", false}, {"reason", baseline_note}};
    }

    const fs::path dir(config.out_dir);
    auto write_report = [&] {
        if (config.format == "csv") {
            std::string flat = "key,value\n";
            flatten(report, "", flat);
            write_text((dir / "report.csv").string(), flat);
        } else {
            write_text((dir / "report.json").string(), report.dump(2) + "\n");
        }
    };

    ClearingOutcome outcome;
    try {
        outcome = clear_market(network, consumers, bids, request, config.ga);
    } catch (const InfeasibleProblem& e) {
        report["market"] = json{{"feasible", false}, {"reason", e.what()}};
        write_report();
        write_text((dir / "summary.txt").string(),
                   summary_text(nullptr, have_baseline ? &baseline : nullptr, baseline_note));
        std::cerr << "infeasible: " << e.what() << "\n";
        return 2;
    }

    report["market"] = solution_json(outcome.solution, consumers, bids, request);
    write_report();
    write_trace_csv((dir / "trace.csv").string(), outcome.trace);
    emit_plot_data(config.out_dir, network, consumers, bids, outcome.solution, before,
                   outcome.solution.flow_after);
    write_text((dir / "summary.txt").string(),
               summary_text(&outcome.solution, have_baseline ? &baseline : nullptr,
                            baseline_note));

    std::cout << "cleared: total cost " << outcome.solution.total_cost << " $, "
              << outcome.solution.total_reduction_kw() << " kW reduced, loss "
              << outcome.solution.flow_after.total_loss_kw << " kW\n";
    return outcome.solution.feasible ? 0 : 2;
}

} // namespace llrm
