#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "llrm/market.hpp"

namespace llrm {

// Integer decision genome. dr[i] indexes into bidding consumer i's steps
// (0 = bid not accepted, k = k-th level); cr[j] is curtailable consumer j's
// forced curtailment in kW. Gene order is fixed by GaInstance.
struct Genome {
    std::vector<int> dr;
    std::vector<int> cr;

    bool operator==(const Genome&) const = default;
};

struct GaConfig {
    int population_size = 100;
    int iterations = 200;
    // Fraction of offspring produced by uniform crossover (the rest are
    // cloned from their tournament winner).
    double crossover_fraction = 0.8;
    // Fraction of offspring receiving a mutation pass; within a pass each
    // gene resamples uniformly over its feasible range with probability
    // 1/(total gene count).
    double mutation_fraction = 0.3;
    std::uint64_t rng_seed = 42;
    int elitism = 2;

    void validate() const;   // population >= 2, fractions in [0,1], iterations >= 1
};

// Fixed gene layout for one clearing problem: which consumers carry a dr gene
// (those with a bid curve) and which carry a cr gene (non-firmed > 0), both
// ordered by ascending bus id. Holds only pointers; keep the inputs alive.
struct GaInstance {
    const Network* network = nullptr;
    const std::vector<Consumer>* consumers = nullptr;
    const std::vector<BidCurve>* bids = nullptr;
    MarketRequest request;

    std::vector<const BidCurve*> bidder_curve;  // per dr gene
    std::vector<const Consumer*> bidder;        // per dr gene
    std::vector<const Consumer*> curtailable;   // per cr gene

    static GaInstance build(const Network& network,
                            const std::vector<Consumer>& consumers,
                            const std::vector<BidCurve>& bids,
                            const MarketRequest& request);

    int gene_count() const { return int(bidder_curve.size() + curtailable.size()); }
    int dr_kw(const Genome& g, int i) const;   // accepted level of dr gene i, in kW
    std::vector<Decision> decode(const Genome& g) const;

    // Clamps every gene into its feasible range; cr genes are truncated to
    // whatever non-firmed room the dr acceptance leaves (caps 2-4 hold by
    // construction afterwards).
    void truncate(Genome& g) const;

    // Adds cheapest-available reduction ($/kWh, next bid step or a 10 kW
    // curtailment block) until the request's active constraint holds,
    // re-solving the power flow once per added block. Returns false when
    // capacity runs out first (irreparable genome).
    bool repair(Genome& g) const;

    ClearingSolution evaluate_genome(const Genome& g) const;
};

// Population-size random genomes, each feasible after repair. Genome 0 is the
// repaired zero genome, i.e. the do-nothing candidate plus the cheapest
// blocks the active constraint forces — so when nothing binds, doing nothing
// stays in the gene pool. Throws InfeasibleProblem when repair cannot reach
// feasibility even from zero (capacity exhausted).
std::vector<Genome> random_feasible_population(const GaInstance& instance,
                                               const GaConfig& config,
                                               std::mt19937_64& rng);

// Per-gene uniform resampling with probability `per_gene_prob` (negative =
// the 1/(gene count) default), then truncation and repair.
Genome mutate(const GaInstance& instance, const Genome& genome, std::mt19937_64& rng,
              double per_gene_prob = -1.0);

// Uniform gene-wise exchange; children are truncated and repaired.
std::pair<Genome, Genome> crossover(const GaInstance& instance,
                                    const Genome& a, const Genome& b,
                                    std::mt19937_64& rng);

struct TracePoint {
    int iteration = 0;
    double best_cost = 0.0;
    double mean_cost = 0.0;    // over feasible genomes
    int feasible_count = 0;
};

struct ClearingOutcome {
    ClearingSolution solution;
    std::vector<TracePoint> trace;
};

// Genetic-algorithm market clearing: seeded random feasible population,
// tournament selection (size 2), uniform crossover, per-gene mutation,
// generational replacement with elitism. Fitness is the full evaluated cost;
// an irreparable genome gets +inf and is never selected. Deterministic for a
// given seed. Fitness evaluations run in parallel (LLRM_THREADS caps the
// worker count); all randomness is drawn sequentially beforehand.
ClearingOutcome clear_market(const Network& network,
                             const std::vector<Consumer>& consumers,
                             const std::vector<BidCurve>& bids,
                             const MarketRequest& request,
                             const GaConfig& config = {});

// Exhaustive enumeration over all dr levels and a 10 kW curtailment grid
// (always including each consumer's exact remaining capacity). Returns the
// cheapest feasible solution; ties prefer less total reduction, then the
// lexicographically smallest genome. Guarded to 1e7 combinations
// (SpaceTooLarge beyond); throws InfeasibleProblem when nothing is feasible.
ClearingSolution exhaustive_oracle(const Network& network,
                                   const std::vector<Consumer>& consumers,
                                   const std::vector<BidCurve>& bids,
                                   const MarketRequest& request);

} // namespace llrm
