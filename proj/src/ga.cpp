#include "llrm/ga.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

#include "llrm/errors.hpp"

namespace llrm {

namespace {

constexpr double kInfeasibleFitness = std::numeric_limits<double>::infinity();

int thread_cap() {
    if (const char* env = std::getenv("LLRM_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc ? int(hc) : 1;
}

// Index-parallel map with deterministic output placement. The worker count
// never affects results: f(i) is pure per index.
template <typename F>
void parallel_for(int n, F&& f) {
    const int workers = std::min(thread_cap(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace

void GaConfig::validate() const {
    if (population_size < 2) throw Error("population must hold at least 2 genomes");
    if (iterations < 1) throw Error("need at least 1 iteration");
    if (crossover_fraction < 0 || crossover_fraction > 1 ||
        mutation_fraction < 0 || mutation_fraction > 1)
        throw Error("operator fractions must lie in [0,1]");
    if (elitism < 0 || elitism >= population_size)
        throw Error("elitism must lie in [0, population)");
}

GaInstance GaInstance::build(const Network& network,
                             const std::vector<Consumer>& consumers,
                             const std::vector<BidCurve>& bids,
                             const MarketRequest& request) {
    request.validate();
    GaInstance inst;
    inst.network = &network;
    inst.consumers = &consumers;
    inst.bids = &bids;
    inst.request = request;

    for (const BidCurve& curve : bids) {
        if (curve.steps.empty()) continue;
        const Consumer* c = find_consumer(consumers, curve.consumer_id);
        if (!c) throw Error("bid curve for unknown consumer " +
                            std::to_string(curve.consumer_id));
        inst.bidder_curve.push_back(&curve);
        inst.bidder.push_back(c);
    }
    for (const Consumer& c : consumers)
        if (c.non_firmed_kw >= 1.0) inst.curtailable.push_back(&c);

    std::sort(inst.bidder_curve.begin(), inst.bidder_curve.end(),
              [](const BidCurve* a, const BidCurve* b) { return a->consumer_id < b->consumer_id; });
    std::sort(inst.bidder.begin(), inst.bidder.end(),
              [](const Consumer* a, const Consumer* b) { return a->bus_id < b->bus_id; });
    std::sort(inst.curtailable.begin(), inst.curtailable.end(),
              [](const Consumer* a, const Consumer* b) { return a->bus_id < b->bus_id; });
    return inst;
}

int GaInstance::dr_kw(const Genome& g, int i) const {
    const int idx = g.dr[size_t(i)];
    return idx == 0 ? 0 : bidder_curve[size_t(i)]->steps[size_t(idx) - 1].power_kw;
}

std::vector<Decision> GaInstance::decode(const Genome& g) const {
    std::map<int, Decision> by_bus;
    for (size_t i = 0; i < bidder_curve.size(); ++i) {
        const int p = dr_kw(g, int(i));
        if (p > 0) {
            Decision& d = by_bus[bidder[i]->bus_id];
            d.bus_id = bidder[i]->bus_id;
            d.p_dr_kw = p;
        }
    }
    for (size_t j = 0; j < curtailable.size(); ++j) {
        if (g.cr[j] > 0) {
            Decision& d = by_bus[curtailable[j]->bus_id];
            d.bus_id = curtailable[j]->bus_id;
            d.p_cr_kw = g.cr[j];
        }
    }
    std::vector<Decision> decisions;
    for (auto& [bus, d] : by_bus) decisions.push_back(d);
    return decisions;
}

void GaInstance::truncate(Genome& g) const {
    g.dr.resize(bidder_curve.size(), 0);
    g.cr.resize(curtailable.size(), 0);
    std::map<int, int> dr_at_bus;
    for (size_t i = 0; i < bidder_curve.size(); ++i) {
        g.dr[i] = std::clamp(g.dr[i], 0, int(bidder_curve[i]->steps.size()));
        dr_at_bus[bidder[i]->bus_id] = dr_kw(g, int(i));
    }
    for (size_t j = 0; j < curtailable.size(); ++j) {
        const int cap = int(std::floor(curtailable[j]->non_firmed_kw));
        auto it = dr_at_bus.find(curtailable[j]->bus_id);
        const int room = cap - (it == dr_at_bus.end() ? 0 : it->second);
        g.cr[j] = std::clamp(g.cr[j], 0, std::max(0, room));
    }
}

namespace {

// One candidate repair block: either the next bid step of a bidding consumer
// or a 10 kW curtailment slab. Ordered by marginal $/kWh, then bus, then
// bids before curtailment — fully deterministic.
struct RepairBlock {
    double marginal = 0.0;   // $/kWh of the added kW
    int bus = 0;
    bool is_curtail = false;
    int gene = 0;            // dr or cr gene index
    int add_kw = 0;

    bool operator<(const RepairBlock& o) const {
        if (marginal != o.marginal) return marginal < o.marginal;
        if (bus != o.bus) return bus < o.bus;
        return is_curtail < o.is_curtail;
    }
};

} // namespace

bool GaInstance::repair(Genome& g) const {
    truncate(g);

    auto total_kw = [&] {
        int sum = 0;
        for (size_t i = 0; i < bidder_curve.size(); ++i) sum += dr_kw(g, int(i));
        for (int c : g.cr) sum += c;
        return sum;
    };
    auto room_at = [&](size_t j) {
        const int cap = int(std::floor(curtailable[j]->non_firmed_kw));
        int dr_here = 0;
        for (size_t i = 0; i < bidder.size(); ++i)
            if (bidder[i]->bus_id == curtailable[j]->bus_id) dr_here = dr_kw(g, int(i));
        return cap - dr_here - g.cr[j];
    };
    auto active_met = [&]() -> bool {
        switch (request.mode) {
        case MarketMode::ScheduledReduction:
            return total_kw() >= request.p_sch_kw;
        case MarketMode::VoltageRegulation:
        case MarketMode::CongestionRelief: {
            const Network after = apply_reduction(*network, *consumers, decode(g));
            const PowerFlowResult flow = solve(after);
            require_converged(flow);
            return request.mode == MarketMode::VoltageRegulation
                       ? min_voltage(flow) >= request.v_min_pu
                       : max_branch_current(flow) <= request.i_max_pu;
        }
        }
        return true;
    };

    while (!active_met()) {
        // Cheapest missing reduction, by $/kWh of the added block.
        bool found = false;
        RepairBlock best;
        for (size_t i = 0; i < bidder_curve.size(); ++i) {
            const auto& steps = bidder_curve[i]->steps;
            if (g.dr[i] >= int(steps.size())) continue;
            const int cur_kw = dr_kw(g, int(i));
            const BidStep& next = steps[size_t(g.dr[i])];
            const int add = next.power_kw - cur_kw;
            // The step must fit beside the bus's existing curtailment.
            int cr_here = 0, cap = int(std::floor(bidder[i]->non_firmed_kw));
            for (size_t j = 0; j < curtailable.size(); ++j)
                if (curtailable[j]->bus_id == bidder[i]->bus_id) cr_here = g.cr[j];
            if (next.power_kw + cr_here > cap) continue;
            const double cur_cost = cur_kw > 0 ? cur_kw * steps[size_t(g.dr[i]) - 1].price : 0.0;
            const double marginal = (next.power_kw * next.price - cur_cost) / add;
            RepairBlock cand{marginal, bidder[i]->bus_id, false, int(i), add};
            if (!found || cand < best) { best = cand; found = true; }
        }
        for (size_t j = 0; j < curtailable.size(); ++j) {
            const int room = room_at(j);
            if (room <= 0) continue;
            RepairBlock cand{curtailable[j]->curtail_cost, curtailable[j]->bus_id,
                             true, int(j), std::min(kMarketStepKw, room)};
            if (!found || cand < best) { best = cand; found = true; }
        }
        if (!found) return false;   // capacity exhausted, constraint still unmet
        if (best.is_curtail)
            g.cr[size_t(best.gene)] += best.add_kw;
        else
            g.dr[size_t(best.gene)] += 1;
    }
    return true;
}

ClearingSolution GaInstance::evaluate_genome(const Genome& g) const {
    return evaluate(*network, *consumers, *bids, decode(g), request);
}

std::vector<Genome> random_feasible_population(const GaInstance& instance,
                                               const GaConfig& config,
                                               std::mt19937_64& rng) {
    config.validate();

    // The do-nothing candidate, repaired up to the cheapest feasible point,
    // anchors the population: with no binding constraint it stays all-zero.
    Genome zero;
    zero.dr.assign(instance.bidder_curve.size(), 0);
    zero.cr.assign(instance.curtailable.size(), 0);
    if (!instance.repair(zero)) {
        std::string why = "no decision vector can satisfy the request";
        Genome full;
        full.dr.assign(instance.bidder_curve.size(), 0);
        full.cr.assign(instance.curtailable.size(), std::numeric_limits<int>::max());
        instance.truncate(full);
        const Network saturated =
            apply_reduction(*instance.network, *instance.consumers, instance.decode(full));
        const PowerFlowResult flow = solve(saturated);
        if (flow.converged) {
            if (instance.request.mode == MarketMode::VoltageRegulation)
                why += ": min voltage reaches only " + std::to_string(min_voltage(flow)) +
                       " pu at full curtailment, below the " +
                       std::to_string(instance.request.v_min_pu) + " pu floor";
            else if (instance.request.mode == MarketMode::CongestionRelief)
                why += ": max branch current is still " +
                       std::to_string(max_branch_current(flow)) + " pu at full curtailment";
            else
                why += ": total curtailable capacity is below the " +
                       std::to_string(instance.request.p_sch_kw) + " kW target";
        }
        throw InfeasibleProblem(why);
    }

    std::vector<Genome> population;
    population.push_back(zero);
    while (int(population.size()) < config.population_size) {
        Genome g;
        g.dr.resize(instance.bidder_curve.size());
        g.cr.resize(instance.curtailable.size());
        for (size_t i = 0; i < g.dr.size(); ++i) {
            std::uniform_int_distribution<int> pick(0, int(instance.bidder_curve[i]->steps.size()));
            g.dr[i] = pick(rng);
        }
        for (size_t j = 0; j < g.cr.size(); ++j) {
            std::uniform_int_distribution<int> pick(
                0, int(std::floor(instance.curtailable[j]->non_firmed_kw)));
            g.cr[j] = pick(rng);
        }
        if (instance.repair(g)) population.push_back(g);
    }
    return population;
}

namespace {

// Random draws without the repair pass, so the engine can separate (serial)
// randomness from (parallel) evaluation. The public operators wrap these.
Genome mutate_raw(const GaInstance& instance, Genome g, std::mt19937_64& rng,
                  double per_gene_prob = -1.0) {
    const int genes = std::max(1, instance.gene_count());
    const double p = per_gene_prob < 0 ? 1.0 / genes : per_gene_prob;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (size_t i = 0; i < g.dr.size(); ++i) {
        const double u = coin(rng);
        std::uniform_int_distribution<int> pick(0, int(instance.bidder_curve[i]->steps.size()));
        const int value = pick(rng);
        if (u < p) g.dr[i] = value;
    }
    for (size_t j = 0; j < g.cr.size(); ++j) {
        const double u = coin(rng);
        std::uniform_int_distribution<int> pick(
            0, int(std::floor(instance.curtailable[j]->non_firmed_kw)));
        const int value = pick(rng);
        if (u < p) g.cr[j] = value;
    }
    return g;
}

std::pair<Genome, Genome> crossover_raw(const Genome& a, const Genome& b,
                                        std::mt19937_64& rng) {
    Genome c1 = a, c2 = b;
    std::uniform_int_distribution<int> bit(0, 1);
    for (size_t i = 0; i < c1.dr.size(); ++i)
        if (bit(rng)) std::swap(c1.dr[i], c2.dr[i]);
    for (size_t j = 0; j < c1.cr.size(); ++j)
        if (bit(rng)) std::swap(c1.cr[j], c2.cr[j]);
    return {c1, c2};
}

} // namespace

Genome mutate(const GaInstance& instance, const Genome& genome, std::mt19937_64& rng,
              double per_gene_prob) {
    Genome g = mutate_raw(instance, genome, rng, per_gene_prob);
    if (!instance.repair(g))
        return genome;   // cannot happen on a feasible instance; keep the parent
    return g;
}

std::pair<Genome, Genome> crossover(const GaInstance& instance,
                                    const Genome& a, const Genome& b,
                                    std::mt19937_64& rng) {
    auto [c1, c2] = crossover_raw(a, b, rng);
    if (!instance.repair(c1)) c1 = a;
    if (!instance.repair(c2)) c2 = b;
    return {c1, c2};
}

namespace {

struct Evaluated {
    Genome genome;
    double cost = kInfeasibleFitness;
    ClearingSolution solution;
};

Evaluated evaluate_repaired(const GaInstance& instance, Genome g) {
    Evaluated e;
    if (!instance.repair(g)) {
        e.genome = std::move(g);
        return e;   // irreparable: +inf fitness, never selected
    }
    e.genome = std::move(g);
    e.solution = instance.evaluate_genome(e.genome);
    e.cost = e.solution.feasible ? e.solution.total_cost : kInfeasibleFitness;
    return e;
}

} // namespace

ClearingOutcome clear_market(const Network& network,
                             const std::vector<Consumer>& consumers,
                             const std::vector<BidCurve>& bids,
                             const MarketRequest& request,
                             const GaConfig& config) {
    config.validate();
    const GaInstance instance = GaInstance::build(network, consumers, bids, request);
    std::mt19937_64 rng(config.rng_seed);

    std::vector<Genome> genomes = random_feasible_population(instance, config, rng);
    std::vector<Evaluated> population(genomes.size());
    parallel_for(int(genomes.size()), [&](int i) {
        population[size_t(i)] = evaluate_repaired(instance, genomes[size_t(i)]);
    });

    ClearingOutcome out;
    int best_index = -1;

    auto record = [&](int iteration) {
        TracePoint point;
        point.iteration = iteration;
        double sum = 0.0;
        for (size_t i = 0; i < population.size(); ++i) {
            const Evaluated& e = population[i];
            if (e.cost == kInfeasibleFitness) continue;
            ++point.feasible_count;
            sum += e.cost;
            if (best_index < 0 || e.cost < population[size_t(best_index)].cost)
                best_index = int(i);
        }
        point.best_cost = best_index >= 0 ? population[size_t(best_index)].cost
                                          : kInfeasibleFitness;
        point.mean_cost = point.feasible_count ? sum / point.feasible_count
                                               : kInfeasibleFitness;
        out.trace.push_back(point);
    };

    record(1);
    // best_index points into the current population; keep the best solution
    // by value since generations replace the storage.
    Evaluated best = best_index >= 0 ? population[size_t(best_index)] : Evaluated{};

    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<int> pick_member(0, config.population_size - 1);
    auto tournament = [&]() -> const Evaluated& {
        const int a = pick_member(rng);
        const int b = pick_member(rng);
        // size-2 tournament; ties keep the earlier member for determinism
        if (population[size_t(b)].cost < population[size_t(a)].cost)
            return population[size_t(b)];
        return population[size_t(a)];
    };

    for (int it = 2; it <= config.iterations; ++it) {
        // Elites survive unchanged (already evaluated).
        std::vector<int> order(population.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return population[size_t(a)].cost < population[size_t(b)].cost;
        });
        std::vector<Evaluated> next;
        next.reserve(population.size());
        for (int e = 0; e < config.elitism; ++e)
            next.push_back(population[size_t(order[size_t(e)])]);

        // All randomness for this generation is drawn here, sequentially;
        // repair + fitness of the raw children then run in parallel.
        std::vector<Genome> children;
        while (int(next.size() + children.size()) < config.population_size) {
            const bool pair_ok =
                int(next.size() + children.size()) + 2 <= config.population_size;
            if (pair_ok && coin(rng) < config.crossover_fraction) {
                const Genome& pa = tournament().genome;
                const Genome& pb = tournament().genome;
                auto [c1, c2] = crossover_raw(pa, pb, rng);
                if (coin(rng) < config.mutation_fraction) c1 = mutate_raw(instance, c1, rng);
                if (coin(rng) < config.mutation_fraction) c2 = mutate_raw(instance, c2, rng);
                children.push_back(std::move(c1));
                children.push_back(std::move(c2));
            } else {
                Genome c = tournament().genome;
                if (coin(rng) < config.mutation_fraction) c = mutate_raw(instance, c, rng);
                children.push_back(std::move(c));
            }
        }

        std::vector<Evaluated> evaluated(children.size());
        parallel_for(int(children.size()), [&](int i) {
            evaluated[size_t(i)] = evaluate_repaired(instance, std::move(children[size_t(i)]));
        });
        for (auto& e : evaluated) next.push_back(std::move(e));
        population = std::move(next);

        best_index = -1;
        record(it);
        if (best_index >= 0 && population[size_t(best_index)].cost < best.cost)
            best = population[size_t(best_index)];
        if (best_index < 0 && best.cost < kInfeasibleFitness) {
            // keep global best visible in the trace even if a generation lost it
            out.trace.back().best_cost = best.cost;
        }
    }

    if (best.cost == kInfeasibleFitness)
        throw InfeasibleProblem("no feasible genome was ever produced");
    out.solution = best.solution;
    return out;
}

ClearingSolution exhaustive_oracle(const Network& network,
                                   const std::vector<Consumer>& consumers,
                                   const std::vector<BidCurve>& bids,
                                   const MarketRequest& request) {
    const GaInstance instance = GaInstance::build(network, consumers, bids, request);

    // Joint (dr level, curtailment) options per bus, curtailment on the
    // 10 kW grid plus the exact remaining-capacity endpoint.
    struct BusOptions {
        int dr_gene = -1;
        int cr_gene = -1;
        std::vector<std::pair<int, int>> choices;   // (dr index, cr kW)
    };
    std::map<int, BusOptions> per_bus;
    for (size_t i = 0; i < instance.bidder_curve.size(); ++i)
        per_bus[instance.bidder[i]->bus_id].dr_gene = int(i);
    for (size_t j = 0; j < instance.curtailable.size(); ++j)
        per_bus[instance.curtailable[j]->bus_id].cr_gene = int(j);

    double space = 1.0;
    for (auto& [bus, opt] : per_bus) {
        const Consumer* consumer = find_consumer(consumers, bus);
        const int cap = int(std::floor(consumer->non_firmed_kw));
        const int dr_count =
            opt.dr_gene >= 0 ? int(instance.bidder_curve[size_t(opt.dr_gene)]->steps.size()) : 0;
        for (int dr = 0; dr <= dr_count; ++dr) {
            const int dr_p =
                dr == 0 ? 0
                        : instance.bidder_curve[size_t(opt.dr_gene)]->steps[size_t(dr) - 1].power_kw;
            const int room = cap - dr_p;
            if (room < 0) continue;
            if (opt.cr_gene < 0) {
                opt.choices.push_back({dr, 0});
                continue;
            }
            for (int cr = 0; cr <= room; cr += kMarketStepKw) opt.choices.push_back({dr, cr});
            if (room % kMarketStepKw != 0) opt.choices.push_back({dr, room});
        }
        space *= double(opt.choices.size());
        if (space > 1e7)
            throw SpaceTooLarge("search space exceeds the 1e7-combination guard");
    }

    std::vector<const BusOptions*> buses;
    for (auto& [bus, opt] : per_bus) buses.push_back(&opt);

    Genome current;
    current.dr.assign(instance.bidder_curve.size(), 0);
    current.cr.assign(instance.curtailable.size(), 0);

    bool have_best = false;
    double best_cost = 0.0;
    int best_reduction = 0;
    Genome best_genome;
    ClearingSolution best_solution;

    auto consider = [&](const Genome& g) {
        ClearingSolution sol = instance.evaluate_genome(g);
        if (!sol.feasible) return;
        const int reduction = sol.total_reduction_kw();
        const auto key = std::tie(g.dr, g.cr);
        const auto best_key = std::tie(best_genome.dr, best_genome.cr);
        const bool better =
            !have_best || sol.total_cost < best_cost ||
            (sol.total_cost == best_cost &&
             (reduction < best_reduction || (reduction == best_reduction && key < best_key)));
        if (better) {
            have_best = true;
            best_cost = sol.total_cost;
            best_reduction = reduction;
            best_genome = g;
            best_solution = std::move(sol);
        }
    };

    auto walk = [&](auto&& self, size_t depth) -> void {
        if (depth == buses.size()) {
            consider(current);
            return;
        }
        const BusOptions& opt = *buses[depth];
        for (const auto& [dr, cr] : opt.choices) {
            if (opt.dr_gene >= 0) current.dr[size_t(opt.dr_gene)] = dr;
            if (opt.cr_gene >= 0) current.cr[size_t(opt.cr_gene)] = cr;
            self(self, depth + 1);
        }
        if (opt.dr_gene >= 0) current.dr[size_t(opt.dr_gene)] = 0;
        if (opt.cr_gene >= 0) current.cr[size_t(opt.cr_gene)] = 0;
    };
    walk(walk, 0);

    if (!have_best)
        throw InfeasibleProblem("exhaustive search found no feasible decision vector");
    return best_solution;
}

} // namespace llrm
