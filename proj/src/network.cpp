#include "llrm/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>

#include "llrm/csv.hpp"
#include "llrm/errors.hpp"

namespace llrm {

int Network::bus_index(int id) const {
    for (size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return int(i);
    return -1;
}

double Network::total_p_load_kw() const {
    double sum = 0.0;
    for (const Bus& b : buses) sum += b.p_load_kw;
    return sum;
}

double Network::total_q_load_kvar() const {
    double sum = 0.0;
    for (const Bus& b : buses) sum += b.q_load_kvar;
    return sum;
}

double Network::i_base_amp() const {
    return base_mva * 1e6 / (std::sqrt(3.0) * base_kv * 1e3);
}

double BidCurve::price_at(int p_kw) const {
    for (const BidStep& s : steps)
        if (s.power_kw == p_kw) return s.price;
    throw InvalidLevel("consumer " + std::to_string(consumer_id) + ": " +
                       std::to_string(p_kw) + " kW is not an offered level");
}

bool BidCurve::has_level(int p_kw) const {
    for (const BidStep& s : steps)
        if (s.power_kw == p_kw) return true;
    return false;
}

namespace {

// The feeder must be a spanning tree rooted at the slack bus: exactly
// |buses|-1 branches, no repeated edges, every bus reachable.
void validate_radial(const Network& net) {
    if (net.branches.size() != net.buses.size() - 1)
        throw RadialityError("expected " + std::to_string(net.buses.size() - 1) +
                             " branches for " + std::to_string(net.buses.size()) +
                             " buses, got " + std::to_string(net.branches.size()));

    std::map<int, std::vector<int>> adjacency;
    std::set<std::pair<int, int>> seen;
    for (const Branch& br : net.branches) {
        auto key = std::minmax(br.from_bus, br.to_bus);
        if (br.from_bus == br.to_bus || seen.count(key))
            throw RadialityError("branch " + std::to_string(br.from_bus) + "-" +
                                 std::to_string(br.to_bus) + " forms a cycle");
        seen.insert(key);
        adjacency[br.from_bus].push_back(br.to_bus);
        adjacency[br.to_bus].push_back(br.from_bus);
    }

    std::set<int> visited{net.slack_id};
    std::queue<int> frontier;
    frontier.push(net.slack_id);
    while (!frontier.empty()) {
        int bus = frontier.front();
        frontier.pop();
        for (int next : adjacency[bus])
            if (visited.insert(next).second) frontier.push(next);
    }
    for (const Bus& b : net.buses)
        if (!visited.count(b.id))
            throw RadialityError("bus " + std::to_string(b.id) +
                                 " is not connected to the slack bus");
}

} // namespace

Network load_network(const std::string& branch_file,
                     const std::string& load_file,
                     const PerUnitBases& bases) {
    if (bases.base_kv <= 0 || bases.base_mva <= 0 || bases.slack_voltage <= 0)
        throw BaseError("per-unit bases must be positive");

    Network net;
    net.base_kv = bases.base_kv;
    net.base_mva = bases.base_mva;
    net.slack_voltage = bases.slack_voltage;

    for (const CsvRow& row : read_csv(load_file, "bus,p_kw,q_kvar")) {
        Bus bus;
        bus.id = parse_int(load_file, row, 0);
        bus.p_load_kw = parse_double(load_file, row, 1);
        bus.q_load_kvar = parse_double(load_file, row, 2);
        if (bus.id <= 0)
            throw ParseError(load_file + ":" + std::to_string(row.line_no) +
                             ": bus ids are 1-based");
        if (bus.p_load_kw < 0 || bus.q_load_kvar < 0)
            throw ParseError(load_file + ":" + std::to_string(row.line_no) +
                             ": loads must be non-negative");
        if (net.bus_index(bus.id) >= 0)
            throw ParseError(load_file + ":" + std::to_string(row.line_no) +
                             ": duplicate bus " + std::to_string(bus.id));
        net.buses.push_back(bus);
    }
    if (net.bus_index(net.slack_id) < 0)
        throw ParseError(load_file + ": slack bus 1 missing");
    const Bus& slack = net.buses[size_t(net.bus_index(net.slack_id))];
    if (slack.p_load_kw != 0 || slack.q_load_kvar != 0)
        throw ParseError(load_file + ": slack bus must carry no load");

    for (const CsvRow& row : read_csv(branch_file, "from,to,r_ohm,x_ohm")) {
        Branch br;
        br.from_bus = parse_int(branch_file, row, 0);
        br.to_bus = parse_int(branch_file, row, 1);
        br.r_ohm = parse_double(branch_file, row, 2);
        br.x_ohm = parse_double(branch_file, row, 3);
        if (net.bus_index(br.from_bus) < 0 || net.bus_index(br.to_bus) < 0)
            throw ParseError(branch_file + ":" + std::to_string(row.line_no) +
                             ": branch references unknown bus");
        if (br.r_ohm <= 0 || br.x_ohm < 0)
            throw ParseError(branch_file + ":" + std::to_string(row.line_no) +
                             ": need r > 0 and x >= 0");
        net.branches.push_back(br);
    }

    validate_radial(net);
    return net;
}

std::vector<Consumer> load_consumers(const std::string& consumer_file,
                                     const Network& network) {
    std::map<int, Consumer> by_bus;
    for (const CsvRow& row : read_csv(consumer_file,
                                      "bus,firmed_kw,nonfirmed_kw,curtail_cost_per_kwh")) {
        Consumer c;
        c.bus_id = parse_int(consumer_file, row, 0);
        c.firmed_kw = parse_double(consumer_file, row, 1);
        c.non_firmed_kw = parse_double(consumer_file, row, 2);
        c.curtail_cost = parse_double(consumer_file, row, 3);
        const int idx = network.bus_index(c.bus_id);
        if (idx < 0)
            throw ParseError(consumer_file + ":" + std::to_string(row.line_no) +
                             ": unknown bus " + std::to_string(c.bus_id));
        if (c.firmed_kw < 0 || c.non_firmed_kw < 0)
            throw ParseError(consumer_file + ":" + std::to_string(row.line_no) +
                             ": negative load split");
        if (c.non_firmed_kw > 0 && c.curtail_cost <= 0)
            throw ParseError(consumer_file + ":" + std::to_string(row.line_no) +
                             ": curtailable consumers need a positive curtailment cost");
        const double p_load = network.buses[size_t(idx)].p_load_kw;
        if (std::abs(c.firmed_kw + c.non_firmed_kw - p_load) > 0.5)
            throw MismatchError(consumer_file + ":" + std::to_string(row.line_no) +
                                ": firmed " + std::to_string(c.firmed_kw) +
                                " + non-firmed " + std::to_string(c.non_firmed_kw) +
                                " does not reconcile with bus load " +
                                std::to_string(p_load) + " kW");
        if (by_bus.count(c.bus_id))
            throw ParseError(consumer_file + ":" + std::to_string(row.line_no) +
                             ": duplicate consumer for bus " + std::to_string(c.bus_id));
        by_bus[c.bus_id] = c;
    }

    // One consumer per bus; buses without a row are fully firmed.
    std::vector<Consumer> consumers;
    std::vector<int> ids;
    for (const Bus& bus : network.buses) ids.push_back(bus.id);
    std::sort(ids.begin(), ids.end());
    for (int id : ids) {
        auto it = by_bus.find(id);
        if (it != by_bus.end()) {
            consumers.push_back(it->second);
        } else {
            const Bus& bus = network.buses[size_t(network.bus_index(id))];
            consumers.push_back(Consumer{id, bus.p_load_kw, 0.0, 0.0});
        }
    }
    return consumers;
}

std::vector<BidCurve> load_bids(const std::string& bid_file,
                                const std::vector<Consumer>& consumers) {
    std::map<int, BidCurve> by_bus;
    for (const CsvRow& row : read_csv(bid_file, "bus,power_kw,price_per_kwh")) {
        const int bus = parse_int(bid_file, row, 0);
        const int power = parse_int(bid_file, row, 1);
        const double price = parse_double(bid_file, row, 2);

        const Consumer* consumer = find_consumer(consumers, bus);
        if (!consumer)
            throw ParseError(bid_file + ":" + std::to_string(row.line_no) +
                             ": bid from unknown consumer " + std::to_string(bus));
        if (power <= 0 || power % kMarketStepKw != 0)
            throw StepError(bid_file + ":" + std::to_string(row.line_no) +
                            ": bid levels must be positive multiples of " +
                            std::to_string(kMarketStepKw) + " kW, got " +
                            std::to_string(power));
        if (power > consumer->non_firmed_kw)
            throw CapacityError(bid_file + ":" + std::to_string(row.line_no) +
                                ": consumer " + std::to_string(bus) + " bids " +
                                std::to_string(power) + " kW above its non-firmed " +
                                std::to_string(consumer->non_firmed_kw) + " kW");
        if (power > kGlobalBidCapKw)
            throw CapacityError(bid_file + ":" + std::to_string(row.line_no) +
                                ": bid level exceeds the " +
                                std::to_string(kGlobalBidCapKw) + " kW market cap");
        if (price <= 0)
            throw ParseError(bid_file + ":" + std::to_string(row.line_no) +
                             ": bid prices must be positive");

        BidCurve& curve = by_bus[bus];
        curve.consumer_id = bus;
        if (!curve.steps.empty()) {
            if (power <= curve.steps.back().power_kw)
                throw StepError(bid_file + ":" + std::to_string(row.line_no) +
                                ": levels must be strictly increasing");
            if (price < curve.steps.back().price)
                throw ParseError(bid_file + ":" + std::to_string(row.line_no) +
                                 ": prices must be non-decreasing in power");
        }
        curve.steps.push_back(BidStep{power, price});
    }

    std::vector<BidCurve> bids;
    for (auto& [bus, curve] : by_bus) bids.push_back(std::move(curve));
    return bids;
}

Network apply_reduction(const Network& network,
                        const std::vector<Consumer>& consumers,
                        const std::vector<Decision>& decisions) {
    Network reduced = network;
    std::set<int> decided;
    for (const Decision& d : decisions) {
        if (!decided.insert(d.bus_id).second)
            throw OverReductionError("duplicate decision for consumer " +
                                     std::to_string(d.bus_id));
        if (d.p_cr_kw == 0 && d.p_dr_kw == 0) continue;
        const Consumer* consumer = find_consumer(consumers, d.bus_id);
        if (!consumer)
            throw OverReductionError("decision for unknown consumer " +
                                     std::to_string(d.bus_id));
        if (d.p_cr_kw < 0 || d.p_dr_kw < 0 ||
            d.p_cr_kw + d.p_dr_kw > consumer->non_firmed_kw)
            throw OverReductionError(
                "consumer " + std::to_string(d.bus_id) + ": reduction " +
                std::to_string(d.p_cr_kw + d.p_dr_kw) + " kW exceeds non-firmed " +
                std::to_string(consumer->non_firmed_kw) + " kW");

        Bus& bus = reduced.buses[size_t(reduced.bus_index(d.bus_id))];
        const double before = bus.p_load_kw;
        bus.p_load_kw = before - (d.p_cr_kw + d.p_dr_kw);
        // Constant power factor: Q shrinks in proportion to remaining P.
        if (before > 0) bus.q_load_kvar *= bus.p_load_kw / before;
    }
    return reduced;
}

const Consumer* find_consumer(const std::vector<Consumer>& consumers, int bus_id) {
    for (const Consumer& c : consumers)
        if (c.bus_id == bus_id) return &c;
    return nullptr;
}

const BidCurve* find_bid(const std::vector<BidCurve>& bids, int bus_id) {
    for (const BidCurve& b : bids)
        if (b.consumer_id == bus_id) return &b;
    return nullptr;
}

} // namespace llrm
