#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "arbgeo/errors.hpp"
#include "arbgeo/forms.hpp"

using namespace arbgeo;
using namespace arbgeo::forms;

namespace {

Point pt(double x, double y) {
    Point p(2);
    p << x, y;
    return p;
}

// d(xy): coefficients (y, x), exact with potential f = x*y.
OneForm exact_xy_form() {
    OneForm f;
    f.dim = 2;
    f.domain = Box::unbounded(2);
    f.coeffs = [](const Point& p) {
        Covector c(2);
        c << p[1], p[0];
        return c;
    };
    f.curl = [](const Point&) { return 0.0; };
    return f;
}

OneForm boyling_without_analytic_curl() {
    OneForm f = boyling_form();
    f.curl = nullptr;
    return f;
}

}  // namespace

TEST_CASE("wealth form evaluation matches the closed-form coefficients") {
    const OneForm f = boyling_form();
    const Covector c = eval_form(f, pt(0.0, 0.5));
    CHECK(c[0] == doctest::Approx(0.03125).epsilon(1e-15));
    CHECK(c[1] == doctest::Approx(-0.375).epsilon(1e-15));

    for (double x : {-3.0, 0.0, 5.0}) {
        const Covector lo = eval_form(f, pt(x, 0.0));
        CHECK(lo[0] == 0.0);
        CHECK(lo[1] == -2.0);
        const Covector hi = eval_form(f, pt(x, 1.0));
        CHECK(hi[0] == 0.0);
        CHECK(hi[1] == 1.0);
    }

    // Coefficients do not depend on x.
    const Covector a = eval_form(f, pt(0.0, 0.5));
    const Covector b = eval_form(f, pt(5.0, 0.5));
    CHECK(a[0] == b[0]);
    CHECK(a[1] == b[1]);
}

TEST_CASE("eval_form: zero form and domain checking") {
    OneForm z;
    z.dim = 2;
    z.domain = Box::closed(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1));
    z.coeffs = [](const Point&) { return Covector::Zero(2); };
    CHECK(eval_form(z, pt(0.25, 0.75)).norm() == 0.0);
    CHECK_THROWS_AS(eval_form(z, pt(2.0, 0.5)), DomainError);
    CHECK_THROWS_AS(eval_form(z, pt(0.5, -0.1)), DomainError);
    CHECK_THROWS_AS(eval_form(z, Point(Eigen::Vector3d(0, 0, 0))), PreconditionError);
}

TEST_CASE("exterior derivative coefficient via central differences") {
    const OneForm f = boyling_form();
    CHECK(exterior_derivative_coeff(f, pt(0.0, 0.5), 1e-4) ==
          doctest::Approx(-0.0625).epsilon(1e-6));

    // Exact form has vanishing curl.
    CHECK(std::abs(exterior_derivative_coeff(exact_xy_form(), pt(0.3, -1.2), 1e-4)) < 1e-9);

    // x-independence: identical finite-difference stencils, identical bits.
    CHECK(exterior_derivative_coeff(f, pt(0.0, 0.31), 1e-4) ==
          exterior_derivative_coeff(f, pt(7.0, 0.31), 1e-4));

    OneForm contact;
    contact.dim = 3;
    contact.domain = Box::unbounded(3);
    contact.coeffs = [](const Point& p) {
        Covector c(3);
        c << -p[1], 0.0, 1.0;
        return c;
    };
    CHECK_THROWS_AS(exterior_derivative_coeff(contact, Point(Eigen::Vector3d(0, 0, 0)), 1e-4),
                    UnsupportedDimensionError);
}

TEST_CASE("analytic curl of the wealth form agrees with finite differences") {
    const OneForm f = boyling_form();
    for (double y : {0.1, 0.3, 0.5, 0.64, 0.9}) {
        const double fd = exterior_derivative_coeff(f, pt(0.0, y), 1e-5);
        CHECK(f.curl(pt(0.0, y)) == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("frobenius defect vanishes identically in 2-D") {
    const OneForm f = boyling_form();
    std::mt19937 rng(20123);
    std::uniform_real_distribution<double> ux(-5.0, 5.0), uy(0.01, 0.99);
    for (int i = 0; i < 50; ++i)
        CHECK(frobenius_defect(f, pt(ux(rng), uy(rng)), 1e-5) == 0.0);
    CHECK(frobenius_defect(exact_xy_form(), pt(2.0, -7.0), 1e-5) == 0.0);
}

TEST_CASE("frobenius defect in 3-D: contact form vs exact form") {
    OneForm contact;
    contact.dim = 3;
    contact.domain = Box::unbounded(3);
    contact.coeffs = [](const Point& p) {
        Covector c(3);
        c << -p[1], 0.0, 1.0;  // dz - y dx
        return c;
    };
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 10; ++i) {
        Point p(3);
        p << u(rng), u(rng), u(rng);
        CHECK(frobenius_defect(contact, p, 1e-5) == doctest::Approx(1.0).epsilon(1e-8));
    }

    OneForm dg;  // d(xyz): (yz, xz, xy)
    dg.dim = 3;
    dg.domain = Box::unbounded(3);
    dg.coeffs = [](const Point& p) {
        Covector c(3);
        c << p[1] * p[2], p[0] * p[2], p[0] * p[1];
        return c;
    };
    for (int i = 0; i < 10; ++i) {
        Point p(3);
        p << u(rng), u(rng), u(rng);
        CHECK(std::abs(frobenius_defect(dg, p, 1e-5)) < 1e-9);
    }
}

TEST_CASE("line integral of an exact form is the potential difference") {
    const OneForm f = exact_xy_form();
    const auto straight = segment_path(pt(0, 0), pt(1, 1), 16);
    CHECK(line_integral(f, straight, 4) == doctest::Approx(1.0).epsilon(1e-8));

    // Corner route through (1, 0).
    std::vector<Point> corner{pt(0, 0), pt(0.5, 0), pt(1, 0), pt(1, 0.5), pt(1, 1)};
    CHECK(line_integral(f, ParametricPath::make(corner, false), 4) ==
          doctest::Approx(1.0).epsilon(1e-8));

    // Random zigzag route between the same endpoints.
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int rep = 0; rep < 5; ++rep) {
        std::vector<Point> zig{pt(0, 0)};
        for (int i = 0; i < 7; ++i) zig.push_back(pt(u(rng), u(rng)));
        zig.push_back(pt(1, 1));
        CHECK(line_integral(f, ParametricPath::make(zig, false), 3) ==
              doctest::Approx(1.0).epsilon(1e-7));
    }
}

TEST_CASE("line integral along a horizontal segment of the wealth form") {
    const OneForm f = boyling_form();
    const auto seg = segment_path(pt(0, 0.5), pt(1, 0.5), 8);
    CHECK(line_integral(f, seg, 2) == doctest::Approx(0.03125).epsilon(1e-8));
}

TEST_CASE("reversing a path negates the line integral exactly") {
    const OneForm f = boyling_form();
    std::mt19937 rng(4242);
    std::uniform_real_distribution<double> ux(-2.0, 2.0), uy(0.05, 0.95);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<Point> s;
        const int len = 2 + static_cast<int>(rng() % 6);
        for (int i = 0; i < len; ++i) s.push_back(pt(ux(rng), uy(rng)));
        ParametricPath path;
        try {
            path = ParametricPath::make(s, false);
        } catch (const PreconditionError&) {
            continue;  // duplicate consecutive draw
        }
        const int refine = 1 + static_cast<int>(rng() % 4);
        const double fwd = line_integral(f, path, refine);
        const double bwd = line_integral(f, path.reversed(), refine);
        CHECK(fwd == -bwd);
    }

    // Out-and-back path: forward and return legs cancel exactly.
    std::vector<Point> outback{pt(0, 0.5), pt(1, 0.6), pt(0, 0.5)};
    CHECK(line_integral(f, ParametricPath::make(outback, false), 5) == 0.0);
}

TEST_CASE("loop gain on the reference rectangle matches the closed-form value") {
    const OneForm f = boyling_form();
    const auto rect = rectangle_loop(0.0, 1.0, 0.25, 0.75, 16);
    const double gain = loop_gain(f, rect, 4);
    CHECK(gain == doctest::Approx(-0.017578125).epsilon(1e-9));
    CHECK(loop_gain(f, rect.reversed(), 4) == -gain);
    CHECK(loop_gain(f, rect.reversed(), 4) == doctest::Approx(0.017578125).epsilon(1e-9));

    const auto seg = segment_path(pt(0, 0.5), pt(1, 0.5), 4);
    CHECK_THROWS_AS(loop_gain(f, seg, 2), PreconditionError);

    CHECK(std::abs(loop_gain(exact_xy_form(), rect, 4)) < 1e-8);
}

TEST_CASE("loop gain agrees with the Green's-theorem double integral") {
    const OneForm analytic = boyling_form();
    const OneForm numeric = boyling_without_analytic_curl();
    std::mt19937 rng(31337);
    std::uniform_real_distribution<double> ux(-2.0, 2.0), uy(0.05, 0.95);
    for (int rep = 0; rep < 8; ++rep) {
        double x0 = ux(rng), x1 = ux(rng), y0 = uy(rng), y1 = uy(rng);
        if (x0 > x1) std::swap(x0, x1);
        if (y0 > y1) std::swap(y0, y1);
        if (x1 - x0 < 0.2 || y1 - y0 < 0.1) continue;
        const double gain = loop_gain(analytic, rectangle_loop(x0, x1, y0, y1, 32), 8);
        const double oracle_a = green_rectangle_integral(analytic, x0, x1, y0, y1, 64, 64, 0.0);
        const double oracle_n = green_rectangle_integral(numeric, x0, x1, y0, y1, 64, 64, 1e-5);
        // Relative agreement, with an absolute floor for rectangles whose
        // curl integral nearly cancels across the sign change at y = 0.6.
        CHECK(std::abs(gain - oracle_a) <= std::max(1e-6 * std::abs(oracle_a), 1e-12));
        CHECK(std::abs(gain - oracle_n) <= std::max(1e-6 * std::abs(oracle_n), 1e-9));
    }
}

TEST_CASE("leaf coordinate") {
    CHECK(leaf_invariant(pt(0, 0.5)).valid);
    CHECK(leaf_invariant(pt(0, 0.5)).value == 6.0);
    CHECK(leaf_invariant(pt(1, 0.5)).value == 7.0);
    CHECK_FALSE(leaf_invariant(pt(0, 0)).valid);
    CHECK_FALSE(leaf_invariant(pt(0.3, 1.0)).valid);
    CHECK_FALSE(leaf_invariant(pt(2.0, -0.1)).valid);
    CHECK_FALSE(leaf_invariant(pt(2.0, 1.7)).valid);
    CHECK_THROWS_AS(leaf_invariant(Point(Eigen::Vector3d(0, 0, 0))), PreconditionError);
}

TEST_CASE("characteristic curves stay on a leaf of the foliation") {
    const OneForm f = boyling_form();
    const auto curve = characteristic_curve(f, pt(0, 0.5), 0.5, 1e-3);
    REQUIRE(curve.samples.size() > 400);
    double max_drift = 0.0;
    for (const Point& p : curve.samples) {
        const LeafCoordinate leaf = leaf_invariant(p);
        REQUIRE(leaf.valid);
        max_drift = std::max(max_drift, std::abs(leaf.value - 6.0));
    }
    CHECK(max_drift <= 1e-6);

    // Longer run, the module-level drift bound.
    const auto longer = characteristic_curve(f, pt(0, 0.5), 1.0, 1e-3);
    double drift1 = 0.0;
    for (const Point& p : longer.samples)
        drift1 = std::max(drift1, std::abs(leaf_invariant(p).value - 6.0));
    CHECK(drift1 <= 1e-5);
}

TEST_CASE("characteristic curve annihilates the form along its tangents") {
    const OneForm f = boyling_form();
    const auto curve = characteristic_curve(f, pt(0.3, 0.7), 0.4, 1e-3);
    for (std::size_t i = 0; i + 1 < curve.samples.size(); ++i) {
        const Point d = curve.samples[i + 1] - curve.samples[i];
        const Point mid = 0.5 * (curve.samples[i] + curve.samples[i + 1]);
        CHECK(std::abs(f.coeffs(mid).dot(d)) / d.norm() <= 1e-5);
    }
}

TEST_CASE("characteristic curve of dx runs straight down") {
    OneForm dx;
    dx.dim = 2;
    dx.domain = Box::unbounded(2);
    dx.coeffs = [](const Point&) {
        Covector c(2);
        c << 1.0, 0.0;
        return c;
    };
    const auto curve = characteristic_curve(dx, pt(0, 0), 1.0, 1e-3);
    const Point last = curve.samples.back();
    CHECK(last[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(last[1] == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("curve moves vertically where the dy coefficient vanishes") {
    const OneForm f = boyling_form();
    // Root of y^3 = 2(1-y)^2 inside the strip, located by bisection.
    double lo = 0.5, hi = 0.9;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double q = mid * mid * mid - 2.0 * (1.0 - mid) * (1.0 - mid);
        (q < 0 ? lo : hi) = mid;
    }
    const double ystar = 0.5 * (lo + hi);
    const auto curve = characteristic_curve(f, pt(0.0, ystar), 0.01, 1e-4);
    const Point d = curve.samples[1] - curve.samples[0];
    CHECK(std::abs(d[0]) < 0.02 * std::abs(d[1]));  // tangent is essentially (0, -P)
    CHECK(d[1] < 0.0);                              // P > 0 inside the strip
}

TEST_CASE("characteristic curve error and termination cases") {
    OneForm radial;  // vanishes at the origin
    radial.dim = 2;
    radial.domain = Box::unbounded(2);
    radial.coeffs = [](const Point& p) { return Covector(p); };
    CHECK_THROWS_AS(characteristic_curve(radial, pt(0, 0), 1.0, 1e-3), DegenerateDirectionError);

    // Restricted domain: curve stops at the boundary instead of erroring.
    OneForm banded = boyling_form();
    banded.domain = Box::closed(Eigen::Vector2d(-10, 0.45), Eigen::Vector2d(10, 0.55));
    const auto curve = characteristic_curve(banded, pt(0, 0.5), 5.0, 1e-3);
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < curve.samples.size(); ++i)
        s += (curve.samples[i + 1] - curve.samples[i]).norm();
    CHECK(s < 5.0);  // terminated early
    for (const Point& p : curve.samples) CHECK(banded.domain.contains(p));

    CHECK_THROWS_AS(characteristic_curve(boyling_form(), pt(0, 0.5), 1.0, 0.0), PreconditionError);
}

TEST_CASE("decay probe recovers the two boundary exponents") {
    const auto lower = decay_exponent_probe(Boundary::lower, 0.0, 1e-3, 20);
    CHECK(lower.fitted_slope == doctest::Approx(-1.5).epsilon(0.05 / 1.5));
    CHECK(std::abs(lower.fitted_slope + 1.5) <= 0.05);
    CHECK(lower.residual >= 0.0);
    CHECK(lower.samples_used == 20);

    const auto upper = decay_exponent_probe(Boundary::upper, 0.0, 1e-3, 20);
    CHECK(std::abs(upper.fitted_slope + 2.0) <= 0.05);

    // The base point only shifts t additively, so deep in the window
    // (where t is dominated by y^-2) the fitted slopes coincide.
    const auto far = decay_exponent_probe(Boundary::lower, 100.0, 1e-6, 20);
    const auto near0 = decay_exponent_probe(Boundary::lower, 0.0, 1e-6, 20);
    CHECK(std::abs(far.fitted_slope - near0.fitted_slope) <= 0.02);
}

TEST_CASE("decay probe slopes converge monotonically as the window tightens") {
    // Gap 1e-1 equals the fixed outer offset and is excluded by the
    // precondition, so the sweep starts just inside it.
    for (Boundary b : {Boundary::lower, Boundary::upper}) {
        const double target = b == Boundary::lower ? -1.5 : -2.0;
        double prev = std::numeric_limits<double>::infinity();
        for (double gap : {0.05, 1e-2, 1e-3}) {
            const double err = std::abs(decay_exponent_probe(b, 0.0, gap, 24).fitted_slope - target);
            CHECK(err < prev);
            prev = err;
        }
    }
}

TEST_CASE("decay probe preconditions") {
    CHECK_THROWS_AS(decay_exponent_probe(Boundary::lower, 0.0, 0.15, 20), PreconditionError);
    CHECK_THROWS_AS(decay_exponent_probe(Boundary::lower, 0.0, 0.1, 20), PreconditionError);
    CHECK_THROWS_AS(decay_exponent_probe(Boundary::lower, 0.0, -1e-3, 20), PreconditionError);
    CHECK_THROWS_AS(decay_exponent_probe(Boundary::lower, 0.0, 1e-3, 2), PreconditionError);
}

TEST_CASE("path validation") {
    CHECK_THROWS_AS(ParametricPath::make({pt(0, 0)}, false), PreconditionError);
    CHECK_THROWS_AS(ParametricPath::make({pt(0, 0), pt(0, 0)}, false), PreconditionError);
    CHECK_THROWS_AS(ParametricPath::make({pt(0, 0), pt(1, 0), pt(0, 1)}, true), PreconditionError);
    const auto ok = ParametricPath::make({pt(0, 0), pt(1, 0), pt(0, 0)}, true);
    CHECK(ok.closed);
}

TEST_CASE("line integral rejects paths that leave the domain") {
    OneForm banded = boyling_form();
    banded.domain = Box::closed(Eigen::Vector2d(0, 0.2), Eigen::Vector2d(1, 0.8));
    const auto outside = segment_path(pt(0, 0.5), pt(2, 0.5), 4);
    CHECK_THROWS_AS(line_integral(banded, outside, 2), DomainError);
    CHECK_THROWS_AS(line_integral(banded, segment_path(pt(0, 0.5), pt(1, 0.5), 4), 0),
                    PreconditionError);
}

TEST_CASE("csv exports carry the documented headers") {
    const auto curve = characteristic_curve(boyling_form(), pt(0, 0.5), 0.05, 1e-3);
    const std::string ccsv = curve_csv(curve);
    CHECK(ccsv.rfind("s,x,y,t\n", 0) == 0);
    const auto lines = std::count(ccsv.begin(), ccsv.end(), '\n');
    CHECK(lines == static_cast<long>(curve.samples.size()) + 1);

    const auto probe = decay_exponent_probe(Boundary::lower, 0.0, 1e-3, 12);
    const std::string pcsv = probe_csv(probe);
    CHECK(pcsv.rfind("log_t,log_w\n", 0) == 0);
    CHECK(std::count(pcsv.begin(), pcsv.end(), '\n') == 13);
}
