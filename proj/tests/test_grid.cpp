#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "llrm/errors.hpp"
#include "llrm/network.hpp"
#include "test_util.hpp"

using namespace llrm;
using test::TempFile;

namespace {

const char* kLoads3 = "bus,p_kw,q_kvar\n1,0,0\n2,50,30\n3,40,20\n";
const char* kBranches3 = "from,to,r_ohm,x_ohm\n1,2,0.1,0.05\n2,3,0.2,0.1\n";

} // namespace

TEST_CASE("canonical feeder loads with the expected totals") {
    Network net = test::load_canonical_network();
    CHECK(net.buses.size() == 33);
    CHECK(net.branches.size() == 32);
    CHECK(net.total_p_load_kw() == doctest::Approx(3715.0).epsilon(1e-12));
    CHECK(net.total_q_load_kvar() == doctest::Approx(2300.0).epsilon(1e-12));

    CHECK(net.slack_id == 1);
    const Bus& slack = net.buses[size_t(net.bus_index(1))];
    CHECK(slack.p_load_kw == 0.0);
    CHECK(slack.q_load_kvar == 0.0);

    CHECK(net.bus_index(33) >= 0);
    CHECK(net.bus_index(99) == -1);

    // Default per-unit system.
    CHECK(net.base_kv == 12.66);
    CHECK(net.base_mva == 100.0);
    CHECK(net.slack_voltage == 1.0);
    CHECK(net.z_base_ohm() == doctest::Approx(12.66 * 12.66 / 100.0));
    CHECK(net.i_base_amp() == doctest::Approx(100e6 / (std::sqrt(3.0) * 12.66e3)));
}

TEST_CASE("comments and blank lines are ignored anywhere") {
    TempFile loads("# feeder loads\n\nbus,p_kw,q_kvar\n1,0,0\n# mid comment\n2,50,30\n\n3,40,20\n");
    TempFile branches(kBranches3);
    Network net = load_network(branches.path(), loads.path());
    CHECK(net.buses.size() == 3);
    CHECK(net.total_p_load_kw() == doctest::Approx(90.0));
}

TEST_CASE("network loader rejects malformed files") {
    TempFile loads(kLoads3);
    TempFile branches(kBranches3);

    SUBCASE("missing load file") {
        CHECK_THROWS_AS(load_network(branches.path(), "/nonexistent/loads.csv"), ParseError);
    }
    SUBCASE("missing branch file") {
        CHECK_THROWS_AS(load_network("/nonexistent/branches.csv", loads.path()), ParseError);
    }
    SUBCASE("wrong load header") {
        TempFile bad("bus,p,q\n1,0,0\n2,50,30\n3,40,20\n");
        CHECK_THROWS_AS(load_network(branches.path(), bad.path()), ParseError);
    }
    SUBCASE("non-numeric load") {
        TempFile bad("bus,p_kw,q_kvar\n1,0,0\n2,abc,30\n3,40,20\n");
        CHECK_THROWS_AS(load_network(branches.path(), bad.path()), ParseError);
    }
    SUBCASE("wrong field count") {
        TempFile bad("bus,p_kw,q_kvar\n1,0,0\n2,50\n3,40,20\n");
        CHECK_THROWS_AS(load_network(branches.path(), bad.path()), ParseError);
    }
    SUBCASE("duplicate bus") {
        TempFile bad("bus,p_kw,q_kvar\n1,0,0\n2,50,30\n2,40,20\n");
        TempFile bad_branches("from,to,r_ohm,x_ohm\n1,2,0.1,0.05\n1,2,0.2,0.1\n");
        CHECK_THROWS_AS(load_network(bad_branches.path(), bad.path()), ParseError);
    }
    SUBCASE("negative load") {
        TempFile bad("bus,p_kw,q_kvar\n1,0,0\n2,-50,30\n3,40,20\n");
        CHECK_THROWS_AS(load_network(branches.path(), bad.path()), ParseError);
    }
    SUBCASE("slack bus missing") {
        TempFile bad("bus,p_kw,q_kvar\n2,50,30\n3,40,20\n");
        CHECK_THROWS_AS(load_network(branches.path(), bad.path()), ParseError);
    }
    SUBCASE("slack bus carries load") {
        TempFile bad("bus,p_kw,q_kvar\n1,10,0\n2,50,30\n3,40,20\n");
        CHECK_THROWS_AS(load_network(branches.path(), bad.path()), ParseError);
    }
    SUBCASE("branch references an unknown bus") {
        TempFile bad("from,to,r_ohm,x_ohm\n1,2,0.1,0.05\n2,9,0.2,0.1\n");
        CHECK_THROWS_AS(load_network(bad.path(), loads.path()), ParseError);
    }
    SUBCASE("non-positive branch resistance") {
        TempFile bad("from,to,r_ohm,x_ohm\n1,2,0.1,0.05\n2,3,0,0.1\n");
        CHECK_THROWS_AS(load_network(bad.path(), loads.path()), ParseError);
    }
}

TEST_CASE("radiality validation") {
    TempFile loads(kLoads3);

    SUBCASE("too few branches") {
        TempFile bad("from,to,r_ohm,x_ohm\n1,2,0.1,0.05\n");
        CHECK_THROWS_AS(load_network(bad.path(), loads.path()), RadialityError);
    }
    SUBCASE("duplicate edge") {
        TempFile bad("from,to,r_ohm,x_ohm\n1,2,0.1,0.05\n2,1,0.2,0.1\n");
        CHECK_THROWS_AS(load_network(bad.path(), loads.path()), RadialityError);
    }
    SUBCASE("self loop") {
        TempFile bad("from,to,r_ohm,x_ohm\n1,2,0.1,0.05\n3,3,0.2,0.1\n");
        CHECK_THROWS_AS(load_network(bad.path(), loads.path()), RadialityError);
    }
    SUBCASE("island disconnected from the slack") {
        TempFile loads5("bus,p_kw,q_kvar\n1,0,0\n2,50,30\n3,40,20\n4,30,10\n5,20,10\n");
        TempFile bad("from,to,r_ohm,x_ohm\n1,2,0.1,0.05\n3,4,0.2,0.1\n4,5,0.2,0.1\n5,3,0.2,0.1\n");
        CHECK_THROWS_AS(load_network(bad.path(), loads5.path()), RadialityError);
    }
}

TEST_CASE("per-unit bases must be positive") {
    TempFile loads(kLoads3);
    TempFile branches(kBranches3);
    CHECK_THROWS_AS(load_network(branches.path(), loads.path(), PerUnitBases{0.0, 100.0, 1.0}),
                    BaseError);
    CHECK_THROWS_AS(load_network(branches.path(), loads.path(), PerUnitBases{12.66, -1.0, 1.0}),
                    BaseError);
    CHECK_THROWS_AS(load_network(branches.path(), loads.path(), PerUnitBases{12.66, 100.0, 0.0}),
                    BaseError);

    Network net = load_network(branches.path(), loads.path(), PerUnitBases{11.0, 10.0, 1.05});
    CHECK(net.base_kv == 11.0);
    CHECK(net.base_mva == 10.0);
    CHECK(net.slack_voltage == 1.05);
}

TEST_CASE("canonical consumers cover every bus and reconcile with the loads") {
    Network net = test::load_canonical_network();
    std::vector<Consumer> consumers = test::load_canonical_consumers(net);
    REQUIRE(consumers.size() == 33);

    const Consumer* c8 = find_consumer(consumers, 8);
    REQUIRE(c8 != nullptr);
    CHECK(c8->firmed_kw == doctest::Approx(60.0));
    CHECK(c8->non_firmed_kw == doctest::Approx(140.0));
    CHECK(c8->curtail_cost == doctest::Approx(45.0));

    const Consumer* c1 = find_consumer(consumers, 1);
    REQUIRE(c1 != nullptr);
    CHECK(c1->firmed_kw == 0.0);
    CHECK(c1->non_firmed_kw == 0.0);

    double non_firmed_total = 0.0;
    for (const Consumer& c : consumers) {
        const Bus& bus = net.buses[size_t(net.bus_index(c.bus_id))];
        CHECK(c.firmed_kw + c.non_firmed_kw ==
              doctest::Approx(bus.p_load_kw).epsilon(1e-9));
        CHECK(c.firmed_kw >= 0.0);
        CHECK(c.non_firmed_kw >= 0.0);
        non_firmed_total += c.non_firmed_kw;
    }
    CHECK(non_firmed_total == doctest::Approx(1525.0));
}

TEST_CASE("consumer loader rejects bad rows") {
    Network net = test::load_canonical_network();

    SUBCASE("load split does not reconcile") {
        TempFile bad("bus,firmed_kw,nonfirmed_kw,curtail_cost_per_kwh\n2,80,30,73\n");
        CHECK_THROWS_AS(load_consumers(bad.path(), net), MismatchError);
    }
    SUBCASE("duplicate consumer") {
        TempFile bad("bus,firmed_kw,nonfirmed_kw,curtail_cost_per_kwh\n2,80,20,73\n2,80,20,73\n");
        CHECK_THROWS_AS(load_consumers(bad.path(), net), ParseError);
    }
    SUBCASE("unknown bus") {
        TempFile bad("bus,firmed_kw,nonfirmed_kw,curtail_cost_per_kwh\n99,80,20,73\n");
        CHECK_THROWS_AS(load_consumers(bad.path(), net), ParseError);
    }
    SUBCASE("curtailable capacity without a cost") {
        TempFile bad("bus,firmed_kw,nonfirmed_kw,curtail_cost_per_kwh\n2,80,20,0\n");
        CHECK_THROWS_AS(load_consumers(bad.path(), net), ParseError);
    }
    SUBCASE("buses without a row become fully firmed") {
        TempFile only2("bus,firmed_kw,nonfirmed_kw,curtail_cost_per_kwh\n2,80,20,73\n");
        std::vector<Consumer> consumers = load_consumers(only2.path(), net);
        REQUIRE(consumers.size() == 33);
        const Consumer* c5 = find_consumer(consumers, 5);
        REQUIRE(c5 != nullptr);
        CHECK(c5->firmed_kw == doctest::Approx(60.0));   // full bus load
        CHECK(c5->non_firmed_kw == 0.0);
        const Consumer* c2 = find_consumer(consumers, 2);
        REQUIRE(c2 != nullptr);
        CHECK(c2->non_firmed_kw == doctest::Approx(20.0));
    }
}

TEST_CASE("canonical bid curves") {
    Network net = test::load_canonical_network();
    std::vector<Consumer> consumers = test::load_canonical_consumers(net);
    std::vector<BidCurve> bids = test::load_canonical_bids(consumers);
    CHECK(bids.size() == 19);

    // Largest curve: consumer 25 offers 13 steps up to the 130 kW market cap.
    const BidCurve* b25 = find_bid(bids, 25);
    REQUIRE(b25 != nullptr);
    REQUIRE(b25->steps.size() == 13);
    CHECK(b25->steps.front().power_kw == 10);
    CHECK(b25->steps.front().price == doctest::Approx(0.19));
    CHECK(b25->max_level_kw() == 130);
    CHECK(b25->steps.back().price == doctest::Approx(0.79));
    CHECK(b25->price_at(30) == doctest::Approx(0.29));

    const BidCurve* b12 = find_bid(bids, 12);
    REQUIRE(b12 != nullptr);
    REQUIRE(b12->steps.size() == 2);
    CHECK(b12->price_at(10) == doctest::Approx(0.28));
    CHECK(b12->price_at(20) == doctest::Approx(0.42));
    CHECK_THROWS_AS(b12->price_at(15), InvalidLevel);
    CHECK(b12->has_level(20));
    CHECK_FALSE(b12->has_level(30));

    // Consumer 11 has under 10 kW of non-firmed load, so it cannot bid.
    CHECK(find_bid(bids, 11) == nullptr);

    // Offered levels sum to the market's reachable depth.
    const std::map<int, int> expected_max = {
        {2, 20},  {3, 20},  {4, 20},  {7, 100}, {9, 10},  {10, 10}, {12, 20},
        {14, 20}, {16, 10}, {17, 20}, {18, 30}, {22, 30}, {23, 30}, {24, 130},
        {25, 130}, {29, 20}, {30, 50}, {32, 70}, {33, 20}};
    int offered_total = 0;
    for (const BidCurve& curve : bids) {
        auto it = expected_max.find(curve.consumer_id);
        REQUIRE(it != expected_max.end());
        CHECK(curve.max_level_kw() == it->second);
        offered_total += curve.max_level_kw();
    }
    CHECK(offered_total == 760);
}

TEST_CASE("every loaded bid curve is a valid ascending step function") {
    Network net = test::load_canonical_network();
    std::vector<Consumer> consumers = test::load_canonical_consumers(net);
    std::vector<BidCurve> bids = test::load_canonical_bids(consumers);

    for (const BidCurve& curve : bids) {
        const Consumer* consumer = find_consumer(consumers, curve.consumer_id);
        REQUIRE(consumer != nullptr);
        int prev_level = 0;
        double prev_price = 0.0;
        for (const BidStep& step : curve.steps) {
            CHECK(step.power_kw % kMarketStepKw == 0);
            CHECK(step.power_kw > prev_level);
            CHECK(step.price >= prev_price);
            CHECK(step.price > 0.0);
            prev_level = step.power_kw;
            prev_price = step.price;
        }
        CHECK(curve.max_level_kw() <= consumer->non_firmed_kw);
        CHECK(curve.max_level_kw() <= kGlobalBidCapKw);
    }
}

TEST_CASE("bid loader rejects invalid offers") {
    Network net = test::load_canonical_network();
    std::vector<Consumer> consumers = test::load_canonical_consumers(net);

    SUBCASE("level above the consumer's non-firmed capacity") {
        TempFile bad("bus,power_kw,price_per_kwh\n9,30,0.40\n");
        CHECK_THROWS_AS(load_bids(bad.path(), consumers), CapacityError);
    }
    SUBCASE("level that is not a 10 kW multiple") {
        TempFile bad("bus,power_kw,price_per_kwh\n2,15,0.30\n");
        CHECK_THROWS_AS(load_bids(bad.path(), consumers), StepError);
    }
    SUBCASE("levels must strictly increase") {
        TempFile bad("bus,power_kw,price_per_kwh\n2,10,0.30\n2,10,0.35\n");
        CHECK_THROWS_AS(load_bids(bad.path(), consumers), StepError);
    }
    SUBCASE("price decreasing in power") {
        TempFile bad("bus,power_kw,price_per_kwh\n2,10,0.30\n2,20,0.25\n");
        CHECK_THROWS_AS(load_bids(bad.path(), consumers), ParseError);
    }
    SUBCASE("non-positive price") {
        TempFile bad("bus,power_kw,price_per_kwh\n2,10,0\n");
        CHECK_THROWS_AS(load_bids(bad.path(), consumers), ParseError);
    }
    SUBCASE("unknown consumer") {
        TempFile bad("bus,power_kw,price_per_kwh\n99,10,0.30\n");
        CHECK_THROWS_AS(load_bids(bad.path(), consumers), ParseError);
    }
}

TEST_CASE("apply_reduction lowers P and scales Q at constant power factor") {
    Network net = test::load_canonical_network();
    std::vector<Consumer> consumers = test::load_canonical_consumers(net);

    SUBCASE("no decisions is the identity") {
        Network same = apply_reduction(net, consumers, {});
        REQUIRE(same.buses.size() == net.buses.size());
        for (size_t i = 0; i < net.buses.size(); ++i) {
            CHECK(same.buses[i].p_load_kw == net.buses[i].p_load_kw);
            CHECK(same.buses[i].q_load_kvar == net.buses[i].q_load_kvar);
        }
    }
    SUBCASE("full non-firmed reduction leaves exactly the firmed load") {
        // Bus 25 carries 420 kW / 200 kVAr; 170 kW of it is non-firmed.
        Network reduced = apply_reduction(net, consumers, {Decision{25, 100, 70}});
        const Bus& bus = reduced.buses[size_t(reduced.bus_index(25))];
        CHECK(bus.p_load_kw == doctest::Approx(250.0));
        CHECK(bus.q_load_kvar == doctest::Approx(200.0 * 250.0 / 420.0));

        // The input network is untouched.
        const Bus& original = net.buses[size_t(net.bus_index(25))];
        CHECK(original.p_load_kw == doctest::Approx(420.0));
        CHECK(original.q_load_kvar == doctest::Approx(200.0));
    }
    SUBCASE("reduction above the non-firmed cap") {
        CHECK_THROWS_AS(apply_reduction(net, consumers, {Decision{9, 0, 20}}),
                        OverReductionError);
    }
    SUBCASE("joint curtailment plus bid above the cap") {
        CHECK_THROWS_AS(apply_reduction(net, consumers, {Decision{9, 5, 10}}),
                        OverReductionError);
    }
    SUBCASE("negative components are rejected") {
        CHECK_THROWS_AS(apply_reduction(net, consumers, {Decision{9, -5, 10}}),
                        OverReductionError);
    }
    SUBCASE("two decisions for one consumer are rejected") {
        CHECK_THROWS_AS(
            apply_reduction(net, consumers, {Decision{3, 10, 0}, Decision{3, 10, 0}}),
            OverReductionError);
    }
    SUBCASE("decision for an unknown consumer") {
        CHECK_THROWS_AS(apply_reduction(net, consumers, {Decision{99, 10, 0}}),
                        OverReductionError);
    }
}
