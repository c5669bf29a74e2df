#include "arbgeo/dynamics.hpp"

#include <cmath>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <sstream>

#include "arbgeo/errors.hpp"
#include "arbgeo/format.hpp"

namespace arbgeo::dynamics {

namespace {

void check_transport(const TransportMatrix& m) {
    if (m.L.rows() < 1 || m.L.rows() != m.L.cols())
        throw PreconditionError("transport matrix must be square with d >= 1");
    if (!m.L.allFinite()) throw PreconditionError("transport matrix entries must be finite");
}

}  // namespace

double symmetry_defect(const TransportMatrix& L) {
    check_transport(L);
    const double num = (L.L - L.L.transpose()).norm();
    return num / std::max(L.L.norm(), 1e-300);
}

std::pair<TransportMatrix, TransportMatrix> decompose(const TransportMatrix& L) {
    check_transport(L);
    TransportMatrix S{(0.5 * (L.L + L.L.transpose())).eval()};
    TransportMatrix A{(0.5 * (L.L - L.L.transpose())).eval()};
    return {std::move(S), std::move(A)};
}

double round_trip_work(const TransportMatrix& L, const forms::ParametricPath& loop, int refine) {
    check_transport(L);
    const int d = static_cast<int>(L.L.rows());
    forms::OneForm form;
    form.dim = d;
    form.domain = forms::Box::unbounded(d);
    form.coeffs = [M = L.L](const forms::Point& x) { return (M * x).eval(); };
    if (d == 2) {
        const double curl = L.L(1, 0) - L.L(0, 1);  // dQ/dx - dP/dy = -2 A(0,1)
        form.curl = [curl](const forms::Point&) { return curl; };
    }
    return forms::loop_gain(form, loop, refine);
}

std::vector<FlowState> gradient_flow(const expfam::Model& model, const expfam::MeanParams& eta0,
                                     const expfam::NaturalParams& theta_star,
                                     const std::optional<TransportMatrix>& L, double dt,
                                     int steps) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw PreconditionError("dt must be positive");
    if (steps < 1) throw PreconditionError("steps must be positive");
    const int d = model.param_dim();
    if (L) {
        check_transport(*L);
        if (L->L.rows() != d)
            throw PreconditionError("transport matrix dimension does not match the model");
    }
    const expfam::MeanParams eta_star = expfam::mean_params(model, theta_star);

    const auto rhs = [&](const Eigen::VectorXd& eta) {
        expfam::MeanParams mp;
        mp.eta = eta;
        const expfam::NaturalParams theta = expfam::natural_from_mean(model, mp, 1e-10);
        const Eigen::VectorXd force = theta_star.theta - theta.theta;
        if (L) return (L->L * force).eval();
        return (expfam::fisher_metric(model, theta).g * force).eval();
    };

    const auto rk4 = [&](const Eigen::VectorXd& eta, double h) {
        const Eigen::VectorXd k1 = rhs(eta);
        const Eigen::VectorXd k2 = rhs(eta + 0.5 * h * k1);
        const Eigen::VectorXd k3 = rhs(eta + 0.5 * h * k2);
        const Eigen::VectorXd k4 = rhs(eta + h * k3);
        return (eta + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).eval();
    };

    // Advances one dt interval. Sub-steps are dyadic fractions of dt tracked in
    // integer units, so the interval closes exactly.
    const auto advance = [&](Eigen::VectorXd eta) {
        constexpr int kMaxHalvings = 40;
        const std::uint64_t total = std::uint64_t{1} << kMaxHalvings;
        std::uint64_t done = 0, step_units = total;
        int halvings = 0;
        while (done < total) {
            step_units = std::min(step_units, total - done);
            const double h = std::ldexp(dt * static_cast<double>(step_units), -kMaxHalvings);
            try {
                const Eigen::VectorXd candidate = rk4(eta, h);
                expfam::MeanParams probe;
                probe.eta = candidate;
                expfam::natural_from_mean(model, probe, 1e-10);  // domain check
                eta = candidate;
                done += step_units;
            } catch (const DomainError&) {
                if (++halvings > kMaxHalvings)
                    throw StiffnessError("flow step underflowed after 40 halvings");
                step_units /= 2;
            }
        }
        return eta;
    };

    std::vector<FlowState> states;
    states.reserve(static_cast<std::size_t>(steps) + 1);
    expfam::MeanParams cur = eta0;
    states.push_back({cur, 0.0, expfam::bregman_divergence(model, cur, eta_star)});
    for (int k = 1; k <= steps; ++k) {
        cur.eta = advance(cur.eta);
        states.push_back({cur, dt * k, expfam::bregman_divergence(model, cur, eta_star)});
    }
    return states;
}

TransportMatrix price_impact(const TransportMatrix& L) {
    check_transport(L);
    const Eigen::Index d = L.L.rows();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(L.L, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(d - 1);
    if (!(smin > 0.0) || !(smax / smin < 1e12))
        throw SingularityError("transport matrix condition number is not below 1e12");
    const Eigen::MatrixXd M = svd.solve(Eigen::MatrixXd::Identity(d, d));
    if ((L.L * M - Eigen::MatrixXd::Identity(d, d)).norm() > 1e-9)
        throw SingularityError("inverse residual exceeds 1e-9");
    return {M};
}

TransportMatrix transport_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid transport JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("L"))
        throw ParseError("transport JSON must be an object with an L matrix");
    for (const auto& item : doc.items())
        if (item.key() != "L") throw ParseError("unknown key in transport JSON: " + item.key());
    const auto& rows = doc["L"];
    if (!rows.is_array() || rows.empty()) throw ParseError("L must be a nonempty array of rows");
    const std::size_t d = rows.size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t r = 0; r < d; ++r) {
        if (!rows[r].is_array() || rows[r].size() != d)
            throw ParseError("L must be square: row " + std::to_string(r + 1) + " has " +
                             std::to_string(rows[r].size()) + " entries");
        for (std::size_t c = 0; c < d; ++c) {
            if (!rows[r][c].is_number()) throw ParseError("L entries must be numbers");
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                rows[r][c].get<double>();
        }
    }
    TransportMatrix out{std::move(m)};
    check_transport(out);
    return out;
}

std::string trajectory_csv(const std::vector<FlowState>& states) {
    std::ostringstream out;
    const Eigen::Index d = states.empty() ? 0 : states.front().eta.eta.size();
    out << "t";
    for (Eigen::Index i = 0; i < d; ++i) out << ",eta_" << (i + 1);
    out << ",divergence\n";
    for (const auto& s : states) {
        out << fmt9(s.t);
        for (Eigen::Index i = 0; i < d; ++i) out << "," << fmt9(s.eta.eta[i]);
        out << "," << fmt9(s.divergence) << "\n";
    }
    return out.str();
}

}  // namespace arbgeo::dynamics
