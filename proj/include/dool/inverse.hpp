#pragma once

#include <functional>
#include <vector>

#include "dool/stepper.hpp"

namespace dool {

/// Space-time observations of one trajectory: values[n] samples the field on
/// the grid of `basis` at times[n].  times[0] is the forward initial time.
struct ObservationSet {
    BasisSpec basis;
    std::vector<double> times;
    std::vector<Arr> values;
};

/// Identify the interface coefficient gamma1 of a phase-field model from
/// observations, searching [gamma_min, gamma_max] with a trained two-branch
/// network as the forward map.
struct InversionProblem {
    ObservationSet observations;
    double gamma_min = 0.0;
    double gamma_max = 0.1;
    double tol = 1e-4;
    OperatorNet net;    // two branches: state features and the parameter
    ModelSpec model;    // forward model template; gamma1 is overridden per probe
    double dt = 1e-3;   // forward step size

    void validate() const;
};

struct GoldenResult {
    double argmin = 0.0;       // midpoint of the final interval
    double value = 0.0;        // smallest sampled value inside the final interval
    int evaluations = 0;
};

/// Golden-ratio interval shrinking until b - a <= tol.  Unimodality is
/// assumed, not checked.  Uses exactly ceil(log((b-a)/tol) / log(1/rho)) + 2
/// evaluations (one when the interval already fits the tolerance).
GoldenResult golden_section_search(const std::function<double(double)>& f, double a, double b,
                                   double tol);

/// Squared data misfit of the forward prediction at gamma1: evolve the net
/// from the first observed field and sum squared differences over every
/// observation point.  A blown-up forward run returns the sentinel 1e30 so
/// the search can continue around it.
double misfit(double gamma1, const InversionProblem& problem);

struct InversionReport {
    double gamma = 0.0;
    double misfit_value = 0.0;
    int evaluations = 0;
    std::vector<double> curve_gammas;   // every probed parameter, in order
    std::vector<double> curve_values;   // misfit at each probe
};

/// Golden-section search of the misfit over [gamma_min, gamma_max].
InversionReport invert(const InversionProblem& problem);

} // namespace dool
