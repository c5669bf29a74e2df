#include "arbgeo/forms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "arbgeo/errors.hpp"
#include "arbgeo/format.hpp"

namespace arbgeo::forms {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_point_dim(const Point& p, int dim, const char* where) {
    if (static_cast<int>(p.size()) != dim)
        throw PreconditionError(std::string(where) + ": point has dimension " +
                                std::to_string(p.size()) + ", expected " + std::to_string(dim));
}

void check_in_domain(const OneForm& form, const Point& p, const char* where) {
    if (!form.domain.contains(p))
        throw DomainError(std::string(where) + ": point outside the form's domain");
}

// Lexicographic comparison of flattened sample lists; exact on bits.
int lex_compare(const std::vector<Point>& a, const std::vector<Point>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (Eigen::Index j = 0; j < a[i].size(); ++j) {
            if (a[i][j] < b[i][j]) return -1;
            if (a[i][j] > b[i][j]) return 1;
        }
    }
    return 0;
}

// Composite Simpson along straight segments between consecutive samples.
double raw_quadrature(const OneForm& form, const std::vector<Point>& samples, int refine) {
    double total = 0.0;
    const double hu = 1.0 / refine;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        const Point& a = samples[i];
        const Point d = samples[i + 1] - a;
        double seg = 0.0;
        for (int k = 0; k < refine; ++k) {
            const double u0 = k * hu;
            const double u1 = (k + 1) * hu;
            const double um = 0.5 * (u0 + u1);
            const double f0 = form.coeffs(a + u0 * d).dot(d);
            const double fm = form.coeffs(a + um * d).dot(d);
            const double f1 = form.coeffs(a + u1 * d).dot(d);
            seg += (hu / 6.0) * (f0 + 4.0 * fm + f1);
        }
        total += seg;
    }
    return total;
}

struct CurveStop {};  // internal signal: curve left the domain or field degenerated

}  // namespace

Box Box::unbounded(int dim) {
    Box b;
    b.lo = Eigen::VectorXd::Constant(dim, -kInf);
    b.hi = Eigen::VectorXd::Constant(dim, kInf);
    b.lo_open.assign(dim, true);
    b.hi_open.assign(dim, true);
    return b;
}

Box Box::closed(Eigen::VectorXd lo, Eigen::VectorXd hi) {
    if (lo.size() != hi.size()) throw PreconditionError("Box: lo/hi size mismatch");
    Box b;
    b.lo = std::move(lo);
    b.hi = std::move(hi);
    b.lo_open.assign(b.lo.size(), false);
    b.hi_open.assign(b.lo.size(), false);
    return b;
}

Box Box::open(Eigen::VectorXd lo, Eigen::VectorXd hi) {
    Box b = closed(std::move(lo), std::move(hi));
    b.lo_open.assign(b.lo.size(), true);
    b.hi_open.assign(b.lo.size(), true);
    return b;
}

bool Box::contains(const Point& p) const {
    if (p.size() != lo.size()) return false;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (!std::isfinite(p[i])) return false;
        if (lo_open[i] ? !(p[i] > lo[i]) : !(p[i] >= lo[i])) return false;
        if (hi_open[i] ? !(p[i] < hi[i]) : !(p[i] <= hi[i])) return false;
    }
    return true;
}

ParametricPath ParametricPath::make(std::vector<Point> samples, bool closed) {
    if (samples.size() < 2) throw PreconditionError("ParametricPath: needs at least 2 samples");
    const Eigen::Index dim = samples.front().size();
    if (dim < 1) throw PreconditionError("ParametricPath: zero-dimensional samples");
    for (const Point& s : samples)
        if (s.size() != dim) throw PreconditionError("ParametricPath: mixed sample dimensions");
    for (std::size_t i = 0; i + 1 < samples.size(); ++i)
        if ((samples[i] - samples[i + 1]).norm() == 0.0)
            throw PreconditionError("ParametricPath: consecutive samples must be distinct");
    if (closed && (samples.front() - samples.back()).norm() > 1e-12)
        throw PreconditionError("ParametricPath: closed path must end where it starts (within 1e-12)");
    ParametricPath p;
    p.samples = std::move(samples);
    p.closed = closed;
    return p;
}

ParametricPath ParametricPath::reversed() const {
    ParametricPath r;
    r.samples.assign(samples.rbegin(), samples.rend());
    r.closed = closed;
    return r;
}

OneForm boyling_form() {
    OneForm f;
    f.dim = 2;
    f.domain = Box::unbounded(2);
    f.coeffs = [](const Point& p) {
        const double y = p[1];
        const double om = 1.0 - y;
        Covector c(2);
        c << y * y * y * om * om, y * y * y - 2.0 * om * om;
        return c;
    };
    // dQ/dx - dP/dy = -dP/dy = -y^2(1-y)(3-5y)
    f.curl = [](const Point& p) {
        const double y = p[1];
        return -y * y * (1.0 - y) * (3.0 - 5.0 * y);
    };
    return f;
}

Covector eval_form(const OneForm& form, const Point& p) {
    check_point_dim(p, form.dim, "eval_form");
    check_in_domain(form, p, "eval_form");
    return form.coeffs(p);
}

double exterior_derivative_coeff(const OneForm& form, const Point& p, double h) {
    if (form.dim != 2)
        throw UnsupportedDimensionError("exterior_derivative_coeff: only 2-D forms have a scalar curl");
    if (!(h > 0)) throw PreconditionError("exterior_derivative_coeff: h must be positive");
    check_point_dim(p, 2, "exterior_derivative_coeff");
    for (int axis = 0; axis < 2; ++axis)
        for (double s : {-h, h}) {
            Point q = p;
            q[axis] += s;
            check_in_domain(form, q, "exterior_derivative_coeff");
        }
    Point ex = Eigen::Vector2d(h, 0.0), ey = Eigen::Vector2d(0.0, h);
    const double dQdx = (form.coeffs(p + ex)[1] - form.coeffs(p - ex)[1]) / (2.0 * h);
    const double dPdy = (form.coeffs(p + ey)[0] - form.coeffs(p - ey)[0]) / (2.0 * h);
    return dQdx - dPdy;
}

double frobenius_defect(const OneForm& form, const Point& p, double h) {
    if (form.dim < 2) throw PreconditionError("frobenius_defect: needs dim >= 2");
    check_point_dim(p, form.dim, "frobenius_defect");
    check_in_domain(form, p, "frobenius_defect");
    if (form.dim == 2) return 0.0;  // 3-form on a 2-manifold
    if (!(h > 0)) throw PreconditionError("frobenius_defect: h must be positive");

    const int n = form.dim;
    Eigen::MatrixXd J(n, n);  // J(i,j) = d_i P_j
    for (int i = 0; i < n; ++i) {
        Point qp = p, qm = p;
        qp[i] += h;
        qm[i] -= h;
        check_in_domain(form, qp, "frobenius_defect");
        check_in_domain(form, qm, "frobenius_defect");
        const Covector cp = form.coeffs(qp), cm = form.coeffs(qm);
        for (int j = 0; j < n; ++j) J(i, j) = (cp[j] - cm[j]) / (2.0 * h);
    }
    const Covector P = form.coeffs(p);
    double sumsq = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                const double Cjk = J(j, k) - J(k, j);
                const double Cik = J(i, k) - J(k, i);
                const double Cij = J(i, j) - J(j, i);
                const double comp = P[i] * Cjk - P[j] * Cik + P[k] * Cij;
                sumsq += comp * comp;
            }
    return std::sqrt(sumsq);
}

double line_integral(const OneForm& form, const ParametricPath& path, int refine) {
    if (refine < 1) throw PreconditionError("line_integral: refine must be >= 1");
    if (path.dim() != form.dim)
        throw PreconditionError("line_integral: path and form dimensions differ");
    for (const Point& s : path.samples) check_in_domain(form, s, "line_integral");

    // Orientation canonicalization: quadrature always runs on the
    // lexicographically smaller of (samples, reversed samples), so a reversed
    // path yields the bit-exact negation of the forward value.
    std::vector<Point> rev(path.samples.rbegin(), path.samples.rend());
    const int cmp = lex_compare(path.samples, rev);
    if (cmp == 0) return 0.0;  // palindromic path: forward and return legs cancel
    if (cmp < 0) return raw_quadrature(form, path.samples, refine);
    return -raw_quadrature(form, rev, refine);
}

double loop_gain(const OneForm& form, const ParametricPath& loop, int refine) {
    if (!loop.closed) throw PreconditionError("loop_gain: path must be closed");
    return line_integral(form, loop, refine);
}

LeafCoordinate leaf_invariant(const Point& p) {
    if (p.size() != 2) throw PreconditionError("leaf_invariant: point must be 2-D");
    const double x = p[0], y = p[1];
    if (!(y > 0.0 && y < 1.0))
        return {std::numeric_limits<double>::quiet_NaN(), false};
    return {x + 1.0 / (y * y) + 1.0 / (1.0 - y), true};
}

ParametricPath characteristic_curve(const OneForm& form, const Point& start,
                                    double arclength, double step) {
    if (form.dim != 2) throw PreconditionError("characteristic_curve: only 2-D forms supported");
    if (!(step > 0)) throw PreconditionError("characteristic_curve: step must be positive");
    if (!(arclength > 0)) throw PreconditionError("characteristic_curve: arclength must be positive");
    check_point_dim(start, 2, "characteristic_curve");
    check_in_domain(form, start, "characteristic_curve");

    auto direction = [&form](const Point& p) -> Point {
        if (!form.domain.contains(p)) throw CurveStop{};
        const Covector c = form.coeffs(p);
        Point v(2);
        v << c[1], -c[0];
        const double n = v.norm();
        if (n < 1e-12) throw CurveStop{};
        return v / n;
    };

    {
        const Covector c0 = form.coeffs(start);
        if (std::hypot(c0[0], c0[1]) < 1e-12)
            throw DegenerateDirectionError("characteristic_curve: form vanishes at the start point");
    }

    std::vector<Point> samples{start};
    Point p = start;
    double s = 0.0;
    // Relative guard: a final micro-step below rounding scale would
    // reproduce the previous sample bit-for-bit.
    while (s < arclength - 1e-12 * std::max(1.0, arclength)) {
        const double h = std::min(step, arclength - s);
        Point pn;
        try {
            const Point k1 = direction(p);
            const Point k2 = direction(p + (h / 2.0) * k1);
            const Point k3 = direction(p + (h / 2.0) * k2);
            const Point k4 = direction(p + h * k3);
            pn = p + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!form.domain.contains(pn)) break;
        } catch (const CurveStop&) {
            break;
        }
        p = pn;
        s += h;
        samples.push_back(p);
    }
    if (samples.size() < 2)
        throw DomainError("characteristic_curve: curve terminated before the first step");
    return ParametricPath::make(std::move(samples), false);
}

DecayProbeResult decay_exponent_probe(Boundary boundary, double x0,
                                      double y_min_gap, int n_samples) {
    if (!(y_min_gap > 0.0 && y_min_gap < 0.1))
        throw PreconditionError("decay_exponent_probe: y_min_gap must lie in (0, 0.1)");
    if (n_samples < 3) throw PreconditionError("decay_exponent_probe: need at least 3 samples");

    const double gap0 = 0.1;
    const double ratio = y_min_gap / gap0;
    DecayProbeResult r;
    r.boundary = boundary;
    r.samples_used = n_samples;
    r.points.reserve(n_samples);
    for (int k = 0; k < n_samples; ++k) {
        const double gap = gap0 * std::pow(ratio, static_cast<double>(k) / (n_samples - 1));
        const double y = boundary == Boundary::lower ? gap : 1.0 - gap;
        const double t = x0 + 1.0 / (y * y) + 1.0 / (1.0 - y);
        if (!(t > 0))
            throw DomainError("decay_exponent_probe: foliation label not positive at sampled point");
        const double w = y * y * y * (1.0 - y) * (1.0 - y);
        r.points.emplace_back(std::log(t), std::log(w));
    }

    double sx = 0, sy = 0;
    for (const auto& [lt, lw] : r.points) {
        sx += lt;
        sy += lw;
    }
    const double mx = sx / n_samples, my = sy / n_samples;
    double sxx = 0, sxy = 0;
    for (const auto& [lt, lw] : r.points) {
        sxx += (lt - mx) * (lt - mx);
        sxy += (lt - mx) * (lw - my);
    }
    r.fitted_slope = sxy / sxx;
    const double intercept = my - r.fitted_slope * mx;
    double ss = 0;
    for (const auto& [lt, lw] : r.points) {
        const double e = lw - (intercept + r.fitted_slope * lt);
        ss += e * e;
    }
    r.residual = std::sqrt(ss / n_samples);
    return r;
}

double green_rectangle_integral(const OneForm& form, double x0, double x1,
                                double y0, double y1, int nx, int ny, double h) {
    if (form.dim != 2)
        throw UnsupportedDimensionError("green_rectangle_integral: only 2-D forms supported");
    if (nx < 1 || ny < 1) throw PreconditionError("green_rectangle_integral: panel counts must be >= 1");
    const double margin = form.curl ? 0.0 : h;
    for (double cx : {x0, x1})
        for (double cy : {y0, y1}) {
            Point c(2);
            c << cx + (cx == x0 ? -margin : margin), cy + (cy == y0 ? -margin : margin);
            check_in_domain(form, c, "green_rectangle_integral");
        }

    auto curl_at = [&](double x, double y) {
        Point p(2);
        p << x, y;
        return form.curl ? form.curl(p) : exterior_derivative_coeff(form, p, h);
    };

    const double hx = (x1 - x0) / nx, hy = (y1 - y0) / ny;
    double total = 0.0;
    for (int i = 0; i < nx; ++i) {
        const double xa = x0 + i * hx, xb = xa + hx, xm = xa + hx / 2.0;
        for (int j = 0; j < ny; ++j) {
            const double ya = y0 + j * hy, yb = ya + hy, ym = ya + hy / 2.0;
            const double xs[3] = {xa, xm, xb};
            const double ys[3] = {ya, ym, yb};
            const double wts[3] = {1.0, 4.0, 1.0};
            double cell = 0.0;
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) cell += wts[a] * wts[b] * curl_at(xs[a], ys[b]);
            total += cell * hx * hy / 36.0;
        }
    }
    return total;
}

ParametricPath segment_path(const Point& a, const Point& b, int n_segments) {
    if (n_segments < 1) throw PreconditionError("segment_path: need at least 1 segment");
    std::vector<Point> s;
    s.reserve(n_segments + 1);
    for (int k = 0; k < n_segments; ++k)
        s.push_back(a + (static_cast<double>(k) / n_segments) * (b - a));
    s.push_back(b);
    return ParametricPath::make(std::move(s), false);
}

ParametricPath rectangle_loop(double x0, double x1, double y0, double y1, int per_side) {
    if (per_side < 1) throw PreconditionError("rectangle_loop: per_side must be >= 1");
    if (!(x0 < x1 && y0 < y1)) throw PreconditionError("rectangle_loop: degenerate rectangle");
    const Eigen::Vector2d corners[4] = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
    std::vector<Point> s;
    s.reserve(4 * per_side + 1);
    for (int side = 0; side < 4; ++side) {
        const Eigen::Vector2d a = corners[side], b = corners[(side + 1) % 4];
        for (int k = 0; k < per_side; ++k)
            s.push_back(a + (static_cast<double>(k) / per_side) * (b - a));
    }
    s.push_back(s.front());
    return ParametricPath::make(std::move(s), true);
}

ParametricPath circle_loop(double cx, double cy, double r, int n_segments) {
    if (n_segments < 3) throw PreconditionError("circle_loop: need at least 3 segments");
    if (!(r > 0)) throw PreconditionError("circle_loop: radius must be positive");
    std::vector<Point> s;
    s.reserve(n_segments + 1);
    for (int k = 0; k < n_segments; ++k) {
        const double a = 2.0 * std::numbers::pi * k / n_segments;
        Point p(2);
        p << cx + r * std::cos(a), cy + r * std::sin(a);
        s.push_back(p);
    }
    s.push_back(s.front());
    return ParametricPath::make(std::move(s), true);
}

std::string curve_csv(const ParametricPath& path) {
    if (path.dim() != 2) throw PreconditionError("curve_csv: only 2-D paths supported");
    std::string out = "s,x,y,t\n";
    double s = 0.0;
    for (std::size_t i = 0; i < path.samples.size(); ++i) {
        if (i > 0) s += (path.samples[i] - path.samples[i - 1]).norm();
        const LeafCoordinate leaf = leaf_invariant(path.samples[i]);
        out += fmt9(s);
        out += ',';
        out += fmt9(path.samples[i][0]);
        out += ',';
        out += fmt9(path.samples[i][1]);
        out += ',';
        out += fmt9(leaf.value);
        out += '\n';
    }
    return out;
}

std::string probe_csv(const DecayProbeResult& probe) {
    std::string out = "log_t,log_w\n";
    for (const auto& [lt, lw] : probe.points) {
        out += fmt9(lt);
        out += ',';
        out += fmt9(lw);
        out += '\n';
    }
    return out;
}

}  // namespace arbgeo::forms
