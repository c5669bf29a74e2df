#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <utility>
#include <vector>

// Numerical engine for differential 1-forms on box domains: evaluation,
// scalar exterior derivative, Frobenius defect, path/loop integrals,
// annihilator (characteristic) curves, and the boundary decay probe for the
// wealth form P dx + Q dy with P = y^3(1-y)^2, Q = y^3 - 2(1-y)^2.
namespace arbgeo::forms {

using Point = Eigen::VectorXd;
using Covector = Eigen::VectorXd;

// Axis-aligned box; infinite bounds encode an unbounded domain.
// An open flag excludes that bound from the domain.
struct Box {
    Eigen::VectorXd lo, hi;
    std::vector<bool> lo_open, hi_open;

    static Box unbounded(int dim);
    static Box closed(Eigen::VectorXd lo, Eigen::VectorXd hi);
    static Box open(Eigen::VectorXd lo, Eigen::VectorXd hi);

    int dim() const { return static_cast<int>(lo.size()); }
    bool contains(const Point& p) const;
};

struct OneForm {
    int dim = 0;
    std::function<Covector(const Point&)> coeffs;
    Box domain;
    // Analytic scalar curl dQ/dx - dP/dy for 2-D forms; empty when unknown.
    // Used as the exact integrand by green_rectangle_integral.
    std::function<double(const Point&)> curl;
};

// Ordered point samples; consecutive samples distinct, >= 2 samples,
// and for closed paths first == last within 1e-12.
struct ParametricPath {
    std::vector<Point> samples;
    bool closed = false;

    static ParametricPath make(std::vector<Point> samples, bool closed);
    int dim() const { return static_cast<int>(samples.front().size()); }
    ParametricPath reversed() const;
};

// Foliation label t = x + 1/y^2 + 1/(1-y); valid only inside the strip 0 < y < 1.
struct LeafCoordinate {
    double value;
    bool valid;
};

enum class Boundary { lower, upper };

struct DecayProbeResult {
    Boundary boundary;
    double fitted_slope;   // log-log least-squares slope of w against t
    double residual;       // RMS residual of the fit
    int samples_used;
    std::vector<std::pair<double, double>> points;  // (log t, log w)
};

// The wealth form on the unbounded plane, with analytic curl attached.
OneForm boyling_form();

Covector eval_form(const OneForm& form, const Point& p);

// Scalar coefficient of the exterior derivative in 2-D, dQ/dx - dP/dy,
// via central differences with step h. O(h^2) for smooth coefficients.
double exterior_derivative_coeff(const OneForm& form, const Point& p, double h);

// Euclidean norm of the 3-form psi ^ dpsi at p (central differences, step h).
// Identically 0 for 2-D forms: every 3-form on a 2-manifold vanishes.
double frobenius_defect(const OneForm& form, const Point& p, double h);

// Integral of the form along the path; composite Simpson with `refine`
// panels per segment. Reversing the path negates the result exactly:
// the quadrature runs on a canonical orientation and flips the sign.
double line_integral(const OneForm& form, const ParametricPath& path, int refine);

// line_integral restricted to closed paths.
double loop_gain(const OneForm& form, const ParametricPath& loop, int refine);

LeafCoordinate leaf_invariant(const Point& p);

// Integrates the unit annihilator field v = (Q, -P)/|(Q, -P)| from `start`
// with classical 4th-order steps of size `step` until the requested
// arclength; stops early at the domain boundary or where |(Q, -P)| < 1e-12.
ParametricPath characteristic_curve(const OneForm& form, const Point& start,
                                    double arclength, double step);

// Samples y geometrically between gap 0.1 and y_min_gap from the chosen
// boundary at fixed x = x0 and fits the slope of log w against log t,
// w(y) = y^3(1-y)^2. Slope tends to -3/2 (lower) or -2 (upper).
DecayProbeResult decay_exponent_probe(Boundary boundary, double x0,
                                      double y_min_gap, int n_samples);

// Double integral of the scalar curl over [x0,x1]x[y0,y1] by composite
// Simpson with nx x ny panels; the analytic curl is used when the form
// carries one, otherwise central differences with step h. Independent
// cross-check for loop_gain via Green's theorem.
double green_rectangle_integral(const OneForm& form, double x0, double x1,
                                double y0, double y1, int nx, int ny, double h);

// Path factories. Loops are counterclockwise; use reversed() for clockwise.
ParametricPath segment_path(const Point& a, const Point& b, int n_segments);
ParametricPath rectangle_loop(double x0, double x1, double y0, double y1, int per_side);
ParametricPath circle_loop(double cx, double cy, double r, int n_segments);

// CSV exports: curves as `s,x,y,t` (s = cumulative arclength, t = leaf label,
// nan outside the strip), probes as `log_t,log_w`.
std::string curve_csv(const ParametricPath& path);
std::string probe_csv(const DecayProbeResult& probe);

}  // namespace arbgeo::forms
