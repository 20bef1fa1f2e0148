#include <string>

#include <CLI11.hpp>

#include "llrm/report.hpp"

int main(int argc, char** argv) {
    llrm::RunConfig config;
    config.network_file = "data/ieee33_branches.csv";
    config.load_file = "data/ieee33_loads.csv";
    config.consumer_file = "data/ieee33_consumers.csv";
    config.bid_file = "data/ieee33_bids.csv";

    CLI::App app{"Load-reduction market clearing for radial distribution feeders"};
    app.add_option("--network", config.network_file, "branch CSV (from,to,r_ohm,x_ohm)")
        ->capture_default_str();
    app.add_option("--loads", config.load_file, "bus load CSV (bus,p_kw,q_kvar)")
        ->capture_default_str();
    app.add_option("--consumers", config.consumer_file,
                   "consumer CSV (bus,firmed_kw,nonfirmed_kw,curtail_cost_per_kwh)")
        ->capture_default_str();
    app.add_option("--bids", config.bid_file, "bid CSV (bus,power_kw,price_per_kwh)")
        ->capture_default_str();

    std::string scenario;
    app.add_option("--scenario", scenario,
                   "preset: A voltage regulation (vmin 0.95), B congestion relief "
                   "(imax 0.04 pu), C scheduled reduction (500 kW)")
        ->check(CLI::IsMember({"A", "B", "C"}));
    double vmin = 0, imax = 0, wholesale = 0, interval = 0;
    int psch = 0;
    auto* vmin_opt = app.add_option("--vmin", vmin, "voltage floor in pu");
    auto* imax_opt = app.add_option("--imax-pu", imax, "branch current limit in pu");
    auto* psch_opt = app.add_option("--psch-kw", psch, "scheduled reduction target in kW");
    auto* wholesale_opt =
        app.add_option("--wholesale", wholesale, "wholesale energy price in $/MWh");
    auto* interval_opt =
        app.add_option("--interval-h", interval, "clearing interval in hours");

    app.add_option("--pop", config.ga.population_size, "GA population size")
        ->capture_default_str();
    app.add_option("--iters", config.ga.iterations, "GA iterations")->capture_default_str();
    app.add_option("--seed", config.ga.rng_seed, "RNG seed")->capture_default_str();
    app.add_option("--out", config.out_dir, "output directory")->capture_default_str();
    app.add_option("--format", config.format, "report format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;   // bad flags are input errors
    }

    if (!scenario.empty()) config.scenario = scenario[0];
    if (vmin_opt->count()) config.v_min_pu = vmin;
    if (imax_opt->count()) config.i_max_pu = imax;
    if (psch_opt->count()) config.p_sch_kw = psch;
    if (wholesale_opt->count()) config.wholesale_mwh = wholesale;
    if (interval_opt->count()) config.interval_hours = interval;

    return llrm::run(config);
}
