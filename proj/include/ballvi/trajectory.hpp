#pragma once

// Time-discrete solution record shared by the penalty and projection solvers.
// steps[m] holds the state at t = (m+1) tau; the initial state sits apart in
// u0 because the space-time quadratures run over the computed snapshots only.

#include <vector>

#include "ballvi/grid.hpp"

namespace ballvi {

struct TrajectoryStep {
    double t = 0.0;
    VectorField u;
    ScalarField lambda; // recovered multiplier, delta wherever inactive
    int iterations = 0; // outer iterations (penalty) or sweeps (projection)
    double residual = 0.0;
};

struct Trajectory {
    VectorField u0;
    std::vector<TrajectoryStep> steps;
    double tau = 0.0;

    int step_count() const { return (int)steps.size(); }
    double horizon() const { return tau * step_count(); }
};

} // namespace ballvi
