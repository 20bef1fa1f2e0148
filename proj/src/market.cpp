#include "llrm/market.hpp"

#include <algorithm>
#include <cmath>

#include "llrm/errors.hpp"

namespace llrm {

MarketRequest MarketRequest::voltage_regulation(double v_min_pu, double wholesale,
                                                double hours) {
    MarketRequest r;
    r.mode = MarketMode::VoltageRegulation;
    r.v_min_pu = v_min_pu;
    r.wholesale_price = wholesale;
    r.interval_hours = hours;
    r.validate();
    return r;
}

MarketRequest MarketRequest::congestion_relief(double i_max_pu, double wholesale,
                                               double hours) {
    MarketRequest r;
    r.mode = MarketMode::CongestionRelief;
    r.i_max_pu = i_max_pu;
    r.wholesale_price = wholesale;
    r.interval_hours = hours;
    r.validate();
    return r;
}

MarketRequest MarketRequest::scheduled_reduction(int p_sch_kw, double wholesale,
                                                 double hours) {
    MarketRequest r;
    r.mode = MarketMode::ScheduledReduction;
    r.p_sch_kw = p_sch_kw;
    r.wholesale_price = wholesale;
    r.interval_hours = hours;
    r.validate();
    return r;
}

void MarketRequest::validate() const {
    if (wholesale_price <= 0) throw Error("wholesale price must be positive");
    if (interval_hours <= 0) throw Error("clearing interval must be positive");
    if (mode == MarketMode::VoltageRegulation && v_min_pu <= 0)
        throw Error("voltage regulation needs a positive v_min");
    if (mode == MarketMode::CongestionRelief && i_max_pu <= 0)
        throw Error("congestion relief needs a positive i_max");
    if (mode == MarketMode::ScheduledReduction && p_sch_kw < 0)
        throw Error("scheduled reduction target cannot be negative");
}

int ClearingSolution::total_reduction_kw() const {
    int sum = 0;
    for (const Decision& d : decisions) sum += d.p_cr_kw + d.p_dr_kw;
    return sum;
}

double dr_payment(const BidCurve& bid, int p_kw, double interval_hours) {
    if (p_kw == 0) return 0.0;
    // price_at throws InvalidLevel when p is not an offered level
    return p_kw * bid.price_at(p_kw) * interval_hours;
}

double curtailment_cost(const Consumer& consumer, int p_kw, double interval_hours) {
    if (p_kw < 0 || p_kw > consumer.non_firmed_kw)
        throw OverCapacity("consumer " + std::to_string(consumer.bus_id) +
                           ": curtailment " + std::to_string(p_kw) +
                           " kW outside [0, " + std::to_string(consumer.non_firmed_kw) +
                           "] kW");
    return p_kw * consumer.curtail_cost * interval_hours;
}

ClearingSolution evaluate(const Network& network,
                          const std::vector<Consumer>& consumers,
                          const std::vector<BidCurve>& bids,
                          const std::vector<Decision>& decisions,
                          const MarketRequest& request) {
    request.validate();

    ClearingSolution sol;
    sol.decisions = decisions;

    // Settle first: any cap (2)-(4) violation is a caller error and throws
    // before we touch the network.
    for (const Decision& d : decisions) {
        const Consumer* consumer = find_consumer(consumers, d.bus_id);
        if (!consumer)
            throw OverCapacity("decision for unknown consumer " + std::to_string(d.bus_id));
        if (d.p_cr_kw + d.p_dr_kw > consumer->non_firmed_kw)
            throw OverReductionError("consumer " + std::to_string(d.bus_id) +
                                     ": joint reduction exceeds non-firmed capacity");
        sol.curtail_cost_total += curtailment_cost(*consumer, d.p_cr_kw,
                                                   request.interval_hours);
        if (d.p_dr_kw > 0) {
            const BidCurve* bid = find_bid(bids, d.bus_id);
            if (!bid)
                throw InvalidLevel("consumer " + std::to_string(d.bus_id) +
                                   " has no bid curve");
            sol.dr_payment_total += dr_payment(*bid, d.p_dr_kw, request.interval_hours);
        }
    }

    const Network after = apply_reduction(network, consumers, decisions);
    sol.flow_after = solve(after);
    require_converged(sol.flow_after);

    sol.loss_cost = sol.flow_after.total_loss_kw * request.interval_hours *
                    request.wholesale_price;
    sol.total_cost = sol.curtail_cost_total + sol.dr_payment_total + sol.loss_cost;
    sol.feasible = check_constraints(decisions, consumers, bids, sol.flow_after,
                                     request).empty();
    return sol;
}

std::vector<Violation> check_constraints(const std::vector<Decision>& decisions,
                                         const std::vector<Consumer>& consumers,
                                         const std::vector<BidCurve>& bids,
                                         const PowerFlowResult& flow_after,
                                         const MarketRequest& request) {
    std::vector<Violation> report;

    for (const Decision& d : decisions) {
        const Consumer* consumer = find_consumer(consumers, d.bus_id);
        const double cap = consumer ? consumer->non_firmed_kw : 0.0;
        if (d.p_cr_kw < 0 || d.p_cr_kw > cap)
            report.push_back({Constraint::CurtailmentCap, d.bus_id, cap, double(d.p_cr_kw)});

        const BidCurve* bid = find_bid(bids, d.bus_id);
        const int dr_max = bid ? bid->max_level_kw() : 0;
        const bool on_curve = d.p_dr_kw == 0 || (bid && bid->has_level(d.p_dr_kw));
        if (d.p_dr_kw < 0 || d.p_dr_kw > dr_max || !on_curve)
            report.push_back({Constraint::BidCap, d.bus_id, double(dr_max),
                              double(d.p_dr_kw)});

        if (d.p_cr_kw + d.p_dr_kw > cap)
            report.push_back({Constraint::JointCap, d.bus_id, cap,
                              double(d.p_cr_kw + d.p_dr_kw)});
    }

    switch (request.mode) {
    case MarketMode::ScheduledReduction: {
        int total = 0;
        for (const Decision& d : decisions) total += d.p_cr_kw + d.p_dr_kw;
        if (total < request.p_sch_kw)
            report.push_back({Constraint::ScheduledTarget, 0,
                              double(request.p_sch_kw), double(total)});
        break;
    }
    case MarketMode::CongestionRelief:
        for (size_t b = 0; b < flow_after.branch_current.size(); ++b) {
            const double i = std::abs(flow_after.branch_current[b]);
            if (i > request.i_max_pu)
                report.push_back({Constraint::BranchCurrent, int(b) + 1,
                                  request.i_max_pu, i});
        }
        break;
    case MarketMode::VoltageRegulation:
        for (size_t i = 0; i < flow_after.bus_voltage.size(); ++i) {
            const double v = std::abs(flow_after.bus_voltage[i]);
            if (v < request.v_min_pu)
                report.push_back({Constraint::BusVoltage, int(i) + 1,
                                  request.v_min_pu, v});
        }
        break;
    }
    return report;
}

namespace {

bool baseline_satisfied(const Network& current, const MarketRequest& request,
                        int curtailed_kw, PowerFlowResult* flow_out) {
    if (request.mode == MarketMode::ScheduledReduction)
        return curtailed_kw >= request.p_sch_kw;
    PowerFlowResult flow = solve(current);
    require_converged(flow);
    bool ok = false;
    if (request.mode == MarketMode::VoltageRegulation)
        ok = min_voltage(flow) >= request.v_min_pu;
    else
        ok = max_branch_current(flow) <= request.i_max_pu;
    if (flow_out) *flow_out = flow;
    return ok;
}

} // namespace

ClearingSolution curtailment_only_baseline(const Network& network,
                                           const std::vector<Consumer>& consumers,
                                           const MarketRequest& request) {
    request.validate();

    // Cheapest $/kWh first, ties by bus id.
    std::vector<const Consumer*> order;
    for (const Consumer& c : consumers)
        if (c.non_firmed_kw >= 1.0) order.push_back(&c);
    std::sort(order.begin(), order.end(), [](const Consumer* a, const Consumer* b) {
        if (a->curtail_cost != b->curtail_cost) return a->curtail_cost < b->curtail_cost;
        return a->bus_id < b->bus_id;
    });

    std::vector<Decision> decisions;
    Network current = network;
    int total_kw = 0;

    bool met = baseline_satisfied(current, request, total_kw, nullptr);
    for (size_t pick = 0; pick < order.size() && !met; ++pick) {
        const Consumer& c = *order[pick];
        const int cap = int(std::floor(c.non_firmed_kw));
        Decision d{c.bus_id, 0, 0};
        while (d.p_cr_kw < cap && !met) {
            const int block = std::min(kMarketStepKw, cap - d.p_cr_kw);
            d.p_cr_kw += block;
            total_kw += block;
            const std::vector<Decision> delta{{c.bus_id, block, 0}};
            current = apply_reduction(current, consumers, delta);
            met = baseline_satisfied(current, request, total_kw, nullptr);
        }
        if (d.p_cr_kw > 0) decisions.push_back(d);
    }

    if (!met) {
        PowerFlowResult flow = solve(current);
        std::string detail;
        if (flow.converged) {
            if (request.mode == MarketMode::VoltageRegulation)
                detail = "min voltage reaches only " + std::to_string(min_voltage(flow)) +
                         " pu at full curtailment";
            else if (request.mode == MarketMode::CongestionRelief)
                detail = "max branch current still " +
                         std::to_string(max_branch_current(flow)) + " pu at full curtailment";
            else
                detail = "total curtailable capacity " + std::to_string(total_kw) +
                         " kW is below the " + std::to_string(request.p_sch_kw) +
                         " kW target";
        }
        throw Infeasible("curtailment-only baseline cannot meet the request: " + detail);
    }

    // Note apply_reduction scaled Q step by step; re-deriving from the original
    // network with the final decisions gives the identical load state.
    ClearingSolution sol = evaluate(network, consumers, {}, decisions, request);
    sol.decisions = decisions;
    return sol;
}

} // namespace llrm
