#include "llrm/power_flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "llrm/errors.hpp"

namespace llrm {

namespace {

// Tree view of the feeder: every branch oriented away from the slack bus.
struct SweepPlan {
    std::vector<int> order;           // bus indices, slack first, parents before children
    std::vector<int> parent_branch;   // per bus index: branch index feeding it (-1 for slack)
    std::vector<int> branch_parent;   // per branch index: bus index on the slack side
    std::vector<int> branch_child;    // per branch index: bus index on the far side
};

SweepPlan plan_sweeps(const Network& net) {
    const size_t n = net.buses.size();
    std::map<int, int> index_of;
    for (size_t i = 0; i < n; ++i) index_of[net.buses[i].id] = int(i);

    std::vector<std::vector<std::pair<int, int>>> adjacency(n); // (neighbor bus idx, branch idx)
    for (size_t b = 0; b < net.branches.size(); ++b) {
        const int u = index_of.at(net.branches[b].from_bus);
        const int v = index_of.at(net.branches[b].to_bus);
        adjacency[size_t(u)].push_back({v, int(b)});
        adjacency[size_t(v)].push_back({u, int(b)});
    }

    SweepPlan plan;
    plan.parent_branch.assign(n, -1);
    plan.branch_parent.assign(net.branches.size(), -1);
    plan.branch_child.assign(net.branches.size(), -1);

    const int slack = index_of.at(net.slack_id);
    std::vector<char> visited(n, 0);
    visited[size_t(slack)] = 1;
    plan.order.push_back(slack);
    for (size_t head = 0; head < plan.order.size(); ++head) {
        const int bus = plan.order[head];
        for (auto [next, branch] : adjacency[size_t(bus)]) {
            if (visited[size_t(next)]) continue;
            visited[size_t(next)] = 1;
            plan.parent_branch[size_t(next)] = branch;
            plan.branch_parent[size_t(branch)] = bus;
            plan.branch_child[size_t(branch)] = next;
            plan.order.push_back(next);
        }
    }
    return plan;
}

} // namespace

PowerFlowResult solve(const Network& network, double tol, int max_iter) {
    if (tol <= 0) throw Error("power flow tolerance must be positive");
    const size_t n = network.buses.size();
    const size_t nb = network.branches.size();

    const double z_base = network.z_base_ohm();
    std::vector<std::complex<double>> z_pu(nb);
    for (size_t b = 0; b < nb; ++b) {
        z_pu[b] = std::complex<double>(network.branches[b].r_ohm,
                                       network.branches[b].x_ohm) / z_base;
        if (std::abs(z_pu[b]) < 1e-12)
            throw DegenerateNetwork("branch " + std::to_string(network.branches[b].from_bus) +
                                    "-" + std::to_string(network.branches[b].to_bus) +
                                    " has (near-)zero impedance");
    }

    // Constant-power bus loads in per-unit.
    std::vector<std::complex<double>> s_pu(n);
    for (size_t i = 0; i < n; ++i)
        s_pu[i] = std::complex<double>(network.buses[i].p_load_kw,
                                       network.buses[i].q_load_kvar) /
                  (network.base_mva * 1000.0);

    const SweepPlan plan = plan_sweeps(network);

    PowerFlowResult result;
    result.bus_voltage.assign(n, std::complex<double>(network.slack_voltage, 0.0));
    result.branch_current.assign(nb, {0.0, 0.0});

    for (int it = 1; it <= max_iter; ++it) {
        // Backward: branch current = load current at the far bus plus
        // everything flowing onward, accumulated leaves-first.
        std::vector<std::complex<double>> inj(n);
        for (size_t i = 0; i < n; ++i)
            inj[i] = std::conj(s_pu[i] / result.bus_voltage[i]);

        std::vector<std::complex<double>> flow = inj;
        for (size_t k = plan.order.size(); k-- > 1;) {
            const int bus = plan.order[k];
            const int branch = plan.parent_branch[size_t(bus)];
            result.branch_current[size_t(branch)] = flow[size_t(bus)];
            flow[size_t(plan.branch_parent[size_t(branch)])] += flow[size_t(bus)];
        }

        // Forward: drop each branch's IZ from the slack outwards.
        double delta = 0.0;
        for (size_t k = 1; k < plan.order.size(); ++k) {
            const int bus = plan.order[k];
            const int branch = plan.parent_branch[size_t(bus)];
            const std::complex<double> v =
                result.bus_voltage[size_t(plan.branch_parent[size_t(branch)])] -
                z_pu[size_t(branch)] * result.branch_current[size_t(branch)];
            delta = std::max(delta, std::abs(std::abs(v) - std::abs(result.bus_voltage[size_t(bus)])));
            result.bus_voltage[size_t(bus)] = v;
        }

        result.iterations = it;
        result.last_delta = delta;
        if (delta < tol) {
            result.converged = true;
            break;
        }
    }

    double loss_pu = 0.0;
    for (size_t b = 0; b < nb; ++b)
        loss_pu += std::norm(result.branch_current[b]) * z_pu[b].real();
    result.total_loss_kw = loss_pu * network.base_mva * 1000.0;

    std::complex<double> slack_flow = {0.0, 0.0};
    for (size_t b = 0; b < nb; ++b)
        if (network.buses[size_t(plan.branch_parent[b])].id == network.slack_id)
            slack_flow += result.branch_current[b];
    const std::complex<double> s_slack =
        result.bus_voltage[size_t(network.bus_index(network.slack_id))] * std::conj(slack_flow);
    result.slack_p_kw = s_slack.real() * network.base_mva * 1000.0;
    result.slack_q_kvar = s_slack.imag() * network.base_mva * 1000.0;
    return result;
}

void require_converged(const PowerFlowResult& result) {
    if (!result.converged)
        throw NonConvergence("power flow did not converge in " +
                             std::to_string(result.iterations) +
                             " sweeps (last voltage delta " +
                             std::to_string(result.last_delta) + " pu)");
}

double min_voltage(const PowerFlowResult& result) {
    if (!result.converged) throw NotConverged("min_voltage needs a converged result");
    double vmin = std::abs(result.bus_voltage.at(0));
    for (const auto& v : result.bus_voltage) vmin = std::min(vmin, std::abs(v));
    return vmin;
}

double max_branch_current(const PowerFlowResult& result) {
    if (!result.converged) throw NotConverged("max_branch_current needs a converged result");
    double imax = 0.0;
    for (const auto& i : result.branch_current) imax = std::max(imax, std::abs(i));
    return imax;
}

void write_voltage_csv(const std::string& path, const Network& network,
                       const PowerFlowResult& result) {
    std::ofstream out(path);
    if (!out) throw Error(path + ": cannot write");
    out << "bus,v_pu,angle_deg\n";
    char line[96];
    for (size_t i = 0; i < network.buses.size(); ++i) {
        const auto& v = result.bus_voltage[i];
        std::snprintf(line, sizeof line, "%d,%.8f,%.6f\n", network.buses[i].id,
                      std::abs(v), std::arg(v) * 180.0 / M_PI);
        out << line;
    }
}

void write_current_csv(const std::string& path, const Network& network,
                       const PowerFlowResult& result) {
    std::ofstream out(path);
    if (!out) throw Error(path + ": cannot write");
    out << "branch,i_pu\n";
    char line[64];
    for (size_t b = 0; b < network.branches.size(); ++b) {
        std::snprintf(line, sizeof line, "%zu,%.8f\n", b + 1,
                      std::abs(result.branch_current[b]));
        out << line;
    }
}

} // namespace llrm
