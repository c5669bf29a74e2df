#include "arbgeo/expfam.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <nlohmann/json.hpp>

#include "arbgeo/errors.hpp"

namespace arbgeo::expfam {

namespace {

void check_theta(const Model& model, const NaturalParams& theta, const char* where) {
    if (theta.theta.size() != model.param_dim())
        throw PreconditionError(std::string(where) + ": theta has length " +
                                std::to_string(theta.theta.size()) + ", expected " +
                                std::to_string(model.param_dim()));
    if (!theta.theta.allFinite())
        throw PreconditionError(std::string(where) + ": theta has non-finite components");
}

void check_eta(const Model& model, const MeanParams& eta, const char* where) {
    if (eta.eta.size() != model.param_dim())
        throw PreconditionError(std::string(where) + ": eta has length " +
                                std::to_string(eta.eta.size()) + ", expected " +
                                std::to_string(model.param_dim()));
    if (!eta.eta.allFinite())
        throw PreconditionError(std::string(where) + ": eta has non-finite components");
}

// log weights l_x = <theta, T(x)> + log h(x) over the support.
Eigen::VectorXd log_weights(const Model& model, const Eigen::VectorXd& theta) {
    return model.T_table() * theta + model.log_base();
}

double log_sum_exp(const Eigen::VectorXd& v) {
    const double m = v.maxCoeff();
    return m + std::log((v.array() - m).exp().sum());
}

// Outcome probabilities for discrete kinds, exact softmax of log weights.
Eigen::VectorXd outcome_probs(const Model& model, const Eigen::VectorXd& theta) {
    const Eigen::VectorXd lw = log_weights(model, theta);
    const double psi = log_sum_exp(lw);
    return (lw.array() - psi).exp();
}

}  // namespace

int Model::support_index(double x) const {
    for (std::size_t i = 0; i < support_.size(); ++i)
        if (support_[i] == x) return static_cast<int>(i);
    return -1;
}

Model Model::bernoulli() {
    Model m;
    m.kind_ = Kind::bernoulli;
    m.param_dim_ = 1;
    m.support_ = {0.0, 1.0};
    m.T_ = Eigen::MatrixXd(2, 1);
    m.T_ << 0.0, 1.0;
    m.log_base_ = Eigen::VectorXd::Zero(2);
    return m;
}

Model Model::poisson_truncated(int max_count) {
    if (max_count < 1) throw PreconditionError("poisson_truncated: max_count must be >= 1");
    Model m;
    m.kind_ = Kind::poisson_truncated;
    m.param_dim_ = 1;
    m.max_count_ = max_count;
    m.support_.resize(max_count + 1);
    m.T_ = Eigen::MatrixXd(max_count + 1, 1);
    m.log_base_ = Eigen::VectorXd(max_count + 1);
    for (int k = 0; k <= max_count; ++k) {
        m.support_[k] = k;
        m.T_(k, 0) = k;
        m.log_base_[k] = -std::lgamma(k + 1.0);
    }
    return m;
}

Model Model::gaussian_unit_variance() {
    Model m;
    m.kind_ = Kind::gaussian_unit_variance;
    m.param_dim_ = 1;
    return m;
}

Model Model::categorical(int k) {
    if (k < 2) throw PreconditionError("categorical: needs at least 2 categories");
    Model m;
    m.kind_ = Kind::categorical;
    m.param_dim_ = k - 1;  // minimal representation keeps the metric nondegenerate
    m.support_.resize(k);
    m.T_ = Eigen::MatrixXd::Zero(k, k - 1);
    m.log_base_ = Eigen::VectorXd::Zero(k);
    for (int j = 0; j < k; ++j) {
        m.support_[j] = j;
        if (j > 0) m.T_(j, j - 1) = 1.0;
    }
    return m;
}

Model Model::custom_finite(std::vector<double> support, Eigen::MatrixXd T_table) {
    if (support.empty()) throw PreconditionError("custom_finite: empty support");
    if (T_table.rows() != static_cast<Eigen::Index>(support.size()))
        throw PreconditionError("custom_finite: T_table must have one row per support element");
    if (T_table.cols() < 1) throw PreconditionError("custom_finite: T_table needs at least one column");
    if (!T_table.allFinite()) throw PreconditionError("custom_finite: T_table has non-finite entries");
    for (double v : support)
        if (!std::isfinite(v)) throw PreconditionError("custom_finite: non-finite support value");
    for (std::size_t i = 0; i < support.size(); ++i)
        for (std::size_t j = i + 1; j < support.size(); ++j)
            if (support[i] == support[j])
                throw PreconditionError("custom_finite: support values must be distinct");
    Model m;
    m.kind_ = Kind::custom_finite;
    m.param_dim_ = static_cast<int>(T_table.cols());
    m.support_ = std::move(support);
    m.T_ = std::move(T_table);
    m.log_base_ = Eigen::VectorXd::Zero(m.support_.size());
    return m;
}

double log_partition(const Model& model, const NaturalParams& theta) {
    check_theta(model, theta, "log_partition");
    if (model.kind() == Kind::gaussian_unit_variance) {
        const double t = theta.theta[0];
        return 0.5 * t * t;
    }
    return log_sum_exp(log_weights(model, theta.theta));
}

double density(const Model& model, const NaturalParams& theta, double x) {
    check_theta(model, theta, "density");
    if (model.kind() == Kind::gaussian_unit_variance) {
        if (!std::isfinite(x)) throw DomainError("density: non-finite outcome");
        const double t = theta.theta[0];
        return std::exp(t * x - 0.5 * t * t - 0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    }
    const int idx = model.support_index(x);
    if (idx < 0) throw DomainError("density: outcome not in the support");
    const Eigen::VectorXd lw = log_weights(model, theta.theta);
    return std::exp(lw[idx] - log_sum_exp(lw));
}

MeanParams mean_params(const Model& model, const NaturalParams& theta) {
    check_theta(model, theta, "mean_params");
    Eigen::VectorXd eta(model.param_dim());
    switch (model.kind()) {
        case Kind::gaussian_unit_variance:
            eta[0] = theta.theta[0];
            break;
        case Kind::bernoulli: {
            const double t = theta.theta[0];
            eta[0] = t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
            break;
        }
        case Kind::categorical: {
            // log p_j = theta_j - psi on the one-hot coordinates.
            const Eigen::VectorXd lw = log_weights(model, theta.theta);
            const double psi = log_sum_exp(lw);
            for (int j = 0; j < model.param_dim(); ++j) eta[j] = std::exp(lw[j + 1] - psi);
            break;
        }
        default: {
            const Eigen::VectorXd p = outcome_probs(model, theta.theta);
            eta = model.T_table().transpose() * p;
            break;
        }
    }
    return {eta};
}

FisherMetric fisher_metric(const Model& model, const NaturalParams& theta) {
    check_theta(model, theta, "fisher_metric");
    const int d = model.param_dim();
    Eigen::MatrixXd g(d, d);
    switch (model.kind()) {
        case Kind::gaussian_unit_variance:
            g(0, 0) = 1.0;
            break;
        case Kind::bernoulli: {
            const double p = mean_params(model, theta).eta[0];
            g(0, 0) = p * (1.0 - p);
            break;
        }
        case Kind::categorical: {
            const Eigen::VectorXd p = mean_params(model, theta).eta;  // free-coordinate probs
            g = p.asDiagonal();
            g -= p * p.transpose();
            break;
        }
        default: {
            const Eigen::VectorXd p = outcome_probs(model, theta.theta);
            const Eigen::VectorXd eta = model.T_table().transpose() * p;
            g.setZero();
            for (Eigen::Index x = 0; x < model.T_table().rows(); ++x) {
                const Eigen::VectorXd c = model.T_table().row(x).transpose() - eta;
                g += p[x] * c * c.transpose();
            }
            break;
        }
    }
    g = 0.5 * (g + g.transpose()).eval();
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success)
        throw DegenerateMetricError("fisher_metric: metric is not positive-definite (non-minimal family?)");
    return {g};
}

NaturalParams natural_from_mean(const Model& model, const MeanParams& eta, double tol) {
    check_eta(model, eta, "natural_from_mean");
    if (!(tol > 0)) throw PreconditionError("natural_from_mean: tol must be positive");
    const Eigen::VectorXd& e = eta.eta;

    switch (model.kind()) {
        case Kind::gaussian_unit_variance:
            return {e};
        case Kind::bernoulli: {
            if (!(e[0] > 0.0 && e[0] < 1.0))
                throw DomainError("natural_from_mean: bernoulli mean must lie strictly in (0, 1)");
            Eigen::VectorXd t(1);
            t << std::log(e[0] / (1.0 - e[0]));
            return {t};
        }
        case Kind::categorical: {
            double rest = 1.0;
            for (int j = 0; j < model.param_dim(); ++j) {
                if (!(e[j] > 0.0))
                    throw DomainError("natural_from_mean: categorical means must be positive");
                rest -= e[j];
            }
            if (!(rest > 0.0))
                throw DomainError("natural_from_mean: categorical means must sum below 1");
            Eigen::VectorXd t(model.param_dim());
            for (int j = 0; j < model.param_dim(); ++j) t[j] = std::log(e[j] / rest);
            return {t};
        }
        case Kind::poisson_truncated:
            if (!(e[0] > 0.0 && e[0] < model.max_count()))
                throw DomainError("natural_from_mean: truncated mean must lie strictly in (0, max_count)");
            break;
        case Kind::custom_finite:
            if (model.param_dim() == 1) {
                const double lo = model.T_table().col(0).minCoeff();
                const double hi = model.T_table().col(0).maxCoeff();
                if (!(e[0] > lo && e[0] < hi))
                    throw DomainError("natural_from_mean: mean outside the open statistic range");
            }
            break;
    }

    // Damped Newton on r(theta) = grad psi(theta) - eta with Fisher Jacobian.
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(model.param_dim());
    if (model.kind() == Kind::poisson_truncated) theta[0] = std::log(e[0]);

    double rnorm = (mean_params(model, {theta}).eta - e).norm();
    constexpr int kMaxIter = 100;
    constexpr double kDampFloor = 1.0 / (1 << 20);
    for (int it = 0; it < kMaxIter; ++it) {
        if (rnorm <= tol) return {theta};
        const Eigen::VectorXd r = mean_params(model, {theta}).eta - e;
        const Eigen::MatrixXd g = fisher_metric(model, {theta}).g;
        Eigen::VectorXd step = g.llt().solve(-r);
        const double cap = 10.0;  // guards against jumps into the saturated tail
        const double sn = step.lpNorm<Eigen::Infinity>();
        if (sn > cap) step *= cap / sn;
        double lambda = 1.0;
        bool accepted = false;
        while (lambda >= kDampFloor) {
            const Eigen::VectorXd cand = theta + lambda * step;
            const double cn = (mean_params(model, {cand}).eta - e).norm();
            if (cn < rnorm) {
                theta = cand;
                rnorm = cn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted)
            throw ConvergenceError("natural_from_mean: damped Newton stalled (damping floor reached)");
    }
    if (rnorm <= tol) return {theta};
    throw ConvergenceError("natural_from_mean: no convergence within 100 iterations");
}

double dual_potential(const Model& model, const MeanParams& eta) {
    check_eta(model, eta, "dual_potential");
    const NaturalParams theta = natural_from_mean(model, eta);
    return theta.theta.dot(eta.eta) - log_partition(model, theta);
}

double bregman_divergence(const Model& model, const MeanParams& eta, const MeanParams& eta_prime) {
    check_eta(model, eta, "bregman_divergence");
    check_eta(model, eta_prime, "bregman_divergence");
    const NaturalParams theta = natural_from_mean(model, eta);
    return log_partition(model, theta) + dual_potential(model, eta_prime) -
           theta.theta.dot(eta_prime.eta);
}

Model model_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model JSON: ") + e.what());
    }
    try {
        if (!j.is_object() || !j.contains("kind"))
            throw ParseError("model JSON: expected an object with a \"kind\" key");
        for (const auto& [key, _] : j.items())
            if (key != "kind" && key != "params")
                throw ParseError("model JSON: unknown key \"" + key + "\"");
        const std::string kind = j.at("kind").get<std::string>();
        const nlohmann::json params = j.value("params", nlohmann::json::object());
        auto reject_unknown = [&params](std::initializer_list<const char*> allowed) {
            for (const auto& [key, _] : params.items()) {
                bool ok = false;
                for (const char* a : allowed) ok = ok || key == a;
                if (!ok) throw ParseError("model JSON: unknown params key \"" + key + "\"");
            }
        };
        if (kind == "bernoulli") {
            reject_unknown({});
            return Model::bernoulli();
        }
        if (kind == "poisson_truncated") {
            reject_unknown({"max_count"});
            return Model::poisson_truncated(params.value("max_count", 60));
        }
        if (kind == "gaussian_unit_variance") {
            reject_unknown({});
            return Model::gaussian_unit_variance();
        }
        if (kind == "categorical") {
            reject_unknown({"k"});
            if (!params.contains("k")) throw ParseError("model JSON: categorical needs params.k");
            return Model::categorical(params.at("k").get<int>());
        }
        if (kind == "custom_finite") {
            reject_unknown({"support", "T_table"});
            if (!params.contains("support") || !params.contains("T_table"))
                throw ParseError("model JSON: custom_finite needs params.support and params.T_table");
            const auto support = params.at("support").get<std::vector<double>>();
            const auto rows = params.at("T_table").get<std::vector<std::vector<double>>>();
            if (rows.empty()) throw ParseError("model JSON: empty T_table");
            Eigen::MatrixXd T(rows.size(), rows.front().size());
            for (std::size_t r = 0; r < rows.size(); ++r) {
                if (rows[r].size() != rows.front().size())
                    throw ParseError("model JSON: ragged T_table");
                for (std::size_t c = 0; c < rows[r].size(); ++c) T(r, c) = rows[r][c];
            }
            return Model::custom_finite(support, T);
        }
        throw ParseError("model JSON: unknown kind \"" + kind + "\"");
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model JSON: ") + e.what());
    }
}

}  // namespace arbgeo::expfam
