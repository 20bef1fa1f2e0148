#pragma once

#include <vector>

#include "llrm/network.hpp"
#include "llrm/power_flow.hpp"

namespace llrm {

enum class MarketMode {
    VoltageRegulation,   // keep every bus voltage >= v_min
    CongestionRelief,    // keep every branch current <= i_max
    ScheduledReduction,  // reduce at least p_sch kW of feeder load
};

// A clearing request. Only the limit belonging to the selected mode is active;
// the other two are ignored (the utility neglects them in that scenario).
struct MarketRequest {
    MarketMode mode = MarketMode::ScheduledReduction;
    double v_min_pu = 0.0;
    double i_max_pu = 0.0;
    int p_sch_kw = 0;
    double wholesale_price = 0.04; // $/kWh, prices the loss term
    double interval_hours = 1.0;

    static MarketRequest voltage_regulation(double v_min_pu,
                                            double wholesale = 0.04,
                                            double hours = 1.0);
    static MarketRequest congestion_relief(double i_max_pu,
                                           double wholesale = 0.04,
                                           double hours = 1.0);
    static MarketRequest scheduled_reduction(int p_sch_kw,
                                             double wholesale = 0.30,
                                             double hours = 1.0);
    void validate() const;   // throws Error on non-positive price/interval
};

// Which constraint a violation refers to. The numbering is part of the
// reporting contract: per-consumer curtailment cap (2), bid cap (3), joint
// non-firmed cap (4), scheduled-reduction target (5), branch current limit
// (6), voltage floor (7).
enum class Constraint {
    CurtailmentCap = 2,
    BidCap = 3,
    JointCap = 4,
    ScheduledTarget = 5,
    BranchCurrent = 6,
    BusVoltage = 7,
};

struct Violation {
    Constraint constraint;
    int subject = 0;     // bus id (2,3,4,7), branch to-bus (6); 0 for (5)
    double limit = 0.0;
    double actual = 0.0;
};

struct ClearingSolution {
    std::vector<Decision> decisions;   // one per consumer with any reduction
    double curtail_cost_total = 0.0;
    double dr_payment_total = 0.0;
    double loss_cost = 0.0;
    double total_cost = 0.0;           // always the exact sum of the three
    PowerFlowResult flow_after;
    bool feasible = false;

    int total_reduction_kw() const;
};

// Pay-as-bid settlement: p * price-at-level(p) * hours.
// p must be 0 or an exact level of the curve (InvalidLevel otherwise).
double dr_payment(const BidCurve& bid, int p_kw, double interval_hours);

// Utility-forced curtailment: p * curtail_cost * hours, 0 <= p <= non-firmed
// (OverCapacity otherwise).
double curtailment_cost(const Consumer& consumer, int p_kw, double interval_hours);

// Applies the decisions, solves the resulting power flow, and fills the full
// cost breakdown plus feasibility against the request's active constraint.
// Capacity violations (caps 2-4) are errors, not infeasibility; network-limit
// violations make the solution infeasible but still evaluated.
ClearingSolution evaluate(const Network& network,
                          const std::vector<Consumer>& consumers,
                          const std::vector<BidCurve>& bids,
                          const std::vector<Decision>& decisions,
                          const MarketRequest& request);

// Pure reporting: every violated constraint with its limit and actual value.
// Empty report <=> the decisions are feasible for this request.
std::vector<Violation> check_constraints(const std::vector<Decision>& decisions,
                                         const std::vector<Consumer>& consumers,
                                         const std::vector<BidCurve>& bids,
                                         const PowerFlowResult& flow_after,
                                         const MarketRequest& request);

// The "no market" reference: greedy forced curtailment, cheapest $/kWh first
// (ties by bus id), in 10 kW blocks until the request's active constraint is
// met. Throws Infeasible when even full non-firmed curtailment falls short.
ClearingSolution curtailment_only_baseline(const Network& network,
                                           const std::vector<Consumer>& consumers,
                                           const MarketRequest& request);

} // namespace llrm
