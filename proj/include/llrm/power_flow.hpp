#pragma once

#include <complex>
#include <string>
#include <vector>

#include "llrm/network.hpp"

namespace llrm {

struct PowerFlowResult {
    // Aligned with Network::buses / Network::branches input order.
    std::vector<std::complex<double>> bus_voltage;    // per-unit
    std::vector<std::complex<double>> branch_current; // per-unit of I_base
    double total_loss_kw = 0.0;
    bool converged = false;
    int iterations = 0;
    double last_delta = 0.0;   // max |V| change of the final sweep, per-unit
    // Complex power injected at the slack bus (covers loads + losses).
    double slack_p_kw = 0.0;
    double slack_q_kvar = 0.0;
};

// Backward/forward sweep for radial feeders with constant-power loads.
// Backward pass accumulates branch currents from the leaves; forward pass
// updates voltages from the slack bus. Converged when the largest per-bus
// voltage-magnitude change of a sweep drops below `tol`.
// Never throws on non-convergence: the result carries converged = false and
// the iteration diagnostics. Throws DegenerateNetwork on a (near-)zero
// impedance branch.
PowerFlowResult solve(const Network& network, double tol = 1e-6, int max_iter = 100);

// Throws NonConvergence (with the iteration diagnostics) unless result.converged.
void require_converged(const PowerFlowResult& result);

// Minimum |V| over all buses / maximum |I| over all branches.
// Both throw NotConverged on an unconverged result.
double min_voltage(const PowerFlowResult& result);
double max_branch_current(const PowerFlowResult& result);

// Plot-data dumps: `bus,v_pu,angle_deg` and `branch,i_pu` (branch numbered by
// 1-based input order).
void write_voltage_csv(const std::string& path, const Network& network,
                       const PowerFlowResult& result);
void write_current_csv(const std::string& path, const Network& network,
                       const PowerFlowResult& result);

} // namespace llrm
