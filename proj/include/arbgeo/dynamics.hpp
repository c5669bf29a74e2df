#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "arbgeo/expfam.hpp"
#include "arbgeo/forms.hpp"

namespace arbgeo::dynamics {

// Conductance linking forces to fluxes. Entries finite, square, d >= 1.
struct TransportMatrix {
    Eigen::MatrixXd L;
};

struct ForceVector {
    Eigen::VectorXd X;
};

struct FlowState {
    expfam::MeanParams eta;
    double t = 0.0;
    double divergence = 0.0;  // Bregman divergence to the flow equilibrium, nats
};

// ||L - L^T||_F / max(||L||_F, 1e-300); zero exactly when L is symmetric.
double symmetry_defect(const TransportMatrix& L);

// S = (L + L^T)/2 and A = (L - L^T)/2. S is symmetric and A antisymmetric to
// the last bit; S + A reproduces L exactly whenever the halved sums are
// representable (e.g. dyadic entries), and to roundoff otherwise.
std::pair<TransportMatrix, TransportMatrix> decompose(const TransportMatrix& L);

// Work around a closed loop in force space: the loop integral of (L x) . dx
// under the same quadrature contract as forms::line_integral. Symmetric L
// integrates an exact differential, so the result is pure quadrature noise;
// in 2-D an antisymmetric part A contributes -2 A(0,1) times the enclosed
// signed area.
double round_trip_work(const TransportMatrix& L, const forms::ParametricPath& loop, int refine);

// Relaxation toward theta_star: integrates eta' = L_eff (theta_star - theta(eta))
// with classical 4th-order steps. L_eff is the supplied matrix, or the Fisher
// metric at theta(eta) when absent (natural-gradient descent). A step whose
// stages leave the mean domain is halved, up to 40 times (then StiffnessError).
// States carry divergence = bregman_divergence(model, eta, eta_star).
std::vector<FlowState> gradient_flow(const expfam::Model& model, const expfam::MeanParams& eta0,
                                     const expfam::NaturalParams& theta_star,
                                     const std::optional<TransportMatrix>& L, double dt,
                                     int steps);

// Price impact matrix M = L^{-1}. Requires condition number below 1e12 and a
// verified residual ||L M - I||_F <= 1e-9; otherwise SingularityError.
TransportMatrix price_impact(const TransportMatrix& L);

// {"L": [[...], ...]} with rectangular numeric rows.
TransportMatrix transport_from_json(const std::string& text);

// CSV rendering: header t,eta_1..eta_d,divergence, one row per state.
std::string trajectory_csv(const std::vector<FlowState>& states);

}  // namespace arbgeo::dynamics
