#pragma once

#include <string>
#include <vector>

namespace llrm {

struct Bus {
    int id = 0;             // 1-based; the slack bus is id 1
    double p_load_kw = 0.0;
    double q_load_kvar = 0.0;
};

struct Branch {
    int from_bus = 0;
    int to_bus = 0;
    double r_ohm = 0.0;
    double x_ohm = 0.0;
};

struct PerUnitBases {
    double base_kv = 12.66;     // line-to-line
    double base_mva = 100.0;
    double slack_voltage = 1.0; // per-unit magnitude at the slack bus
};

// Radial distribution feeder. Immutable after loading; share freely across
// concurrent solver evaluations.
struct Network {
    std::vector<Bus> buses;       // input order; buses[0] need not be slack
    std::vector<Branch> branches; // input order
    double base_kv = 12.66;
    double base_mva = 100.0;
    double slack_voltage = 1.0;
    int slack_id = 1;

    int bus_index(int id) const;            // -1 when the id is unknown
    double total_p_load_kw() const;
    double total_q_load_kvar() const;
    double z_base_ohm() const { return base_kv * base_kv / base_mva; }
    // Current base in amps: base_mva / (sqrt(3) * base_kv), in kA * 1000.
    double i_base_amp() const;
};

// One consumer per bus: the firmed part is protected, the non-firmed part is
// available for curtailment and (if the consumer bids) market reduction.
struct Consumer {
    int bus_id = 0;
    double firmed_kw = 0.0;
    double non_firmed_kw = 0.0;   // curtailment cap
    double curtail_cost = 0.0;    // $/kWh the utility pays to force-curtail
};

struct BidStep {
    int power_kw = 0;     // cumulative reduction level, multiple of 10 kW
    double price = 0.0;   // $/kWh paid at this level (pay-as-bid)
};

struct BidCurve {
    int consumer_id = 0;  // == bus id
    std::vector<BidStep> steps;

    int max_level_kw() const { return steps.empty() ? 0 : steps.back().power_kw; }
    // Price at an exact level; throws InvalidLevel when p is neither 0 nor a level.
    double price_at(int p_kw) const;
    bool has_level(int p_kw) const;
};

// One clearing decision per consumer: forced curtailment + accepted bid level.
struct Decision {
    int bus_id = 0;
    int p_cr_kw = 0;
    int p_dr_kw = 0;
};

inline constexpr int kMarketStepKw = 10;   // bid granularity
inline constexpr int kGlobalBidCapKw = 130;

// --- loading ---------------------------------------------------------------

// Branch file: `from,to,r_ohm,x_ohm`; load file: `bus,p_kw,q_kvar`.
// Validates radiality (spanning tree rooted at the slack), bus references,
// and positive bases.
Network load_network(const std::string& branch_file,
                     const std::string& load_file,
                     const PerUnitBases& bases = {});

// Consumer file: `bus,firmed_kw,nonfirmed_kw,curtail_cost_per_kwh`.
// Returns one Consumer per network bus (buses without a row are fully firmed);
// each row must reconcile firmed+non-firmed against the bus load within 0.5 kW.
std::vector<Consumer> load_consumers(const std::string& consumer_file,
                                     const Network& network);

// Bid file: `bus,power_kw,price_per_kwh`, one row per (consumer, level).
// Levels must be ascending multiples of 10 kW within the consumer's non-firmed
// capacity and the 130 kW global cap; prices must be non-decreasing.
// Consumers absent from the file simply have no curve (curtailment only).
std::vector<BidCurve> load_bids(const std::string& bid_file,
                                const std::vector<Consumer>& consumers);

// --- reduction -------------------------------------------------------------

// Returns a copy of `network` with each decided bus's p_load lowered by
// p_cr + p_dr and q_load scaled in proportion (constant power factor).
// Throws OverReductionError if any decision exceeds its consumer's
// non-firmed capacity.
Network apply_reduction(const Network& network,
                        const std::vector<Consumer>& consumers,
                        const std::vector<Decision>& decisions);

// Helpers shared by market and solver code.
const Consumer* find_consumer(const std::vector<Consumer>& consumers, int bus_id);
const BidCurve* find_bid(const std::vector<BidCurve>& bids, int bus_id);

} // namespace llrm
