#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

// Exponential-family information geometry: log-partition, mean parameters,
// Fisher metric, Legendre dual, and the mixed-form Bregman divergence
// D(eta || eta') = psi(theta(eta)) + phi(eta') - <theta(eta), eta'>.
namespace arbgeo::expfam {

enum class Kind { bernoulli, poisson_truncated, gaussian_unit_variance, categorical, custom_finite };

struct NaturalParams {
    Eigen::VectorXd theta;
};

struct MeanParams {
    Eigen::VectorXd eta;
};

struct FisherMetric {
    Eigen::MatrixXd g;
};

// Immutable model description. Discrete kinds carry an explicit finite
// support, a statistic table T (one row per outcome) and per-outcome log
// base measure, so normalization sums are exact finite sums.
class Model {
public:
    static Model bernoulli();
    static Model poisson_truncated(int max_count = 60);
    static Model gaussian_unit_variance();
    static Model categorical(int k);
    // T_table: one row per support element. Duplicate rows are allowed at
    // construction (they describe a non-minimal family) but make the Fisher
    // metric singular, which fisher_metric reports as an error.
    static Model custom_finite(std::vector<double> support, Eigen::MatrixXd T_table);

    Kind kind() const { return kind_; }
    int param_dim() const { return param_dim_; }
    bool discrete() const { return kind_ != Kind::gaussian_unit_variance; }
    int max_count() const { return max_count_; }

    const std::vector<double>& support() const { return support_; }
    const Eigen::MatrixXd& T_table() const { return T_; }
    const Eigen::VectorXd& log_base() const { return log_base_; }

    // Index of x in the support (exact match); -1 when absent.
    int support_index(double x) const;

private:
    Model() = default;
    Kind kind_ = Kind::custom_finite;
    int param_dim_ = 0;
    int max_count_ = 0;
    std::vector<double> support_;
    Eigen::MatrixXd T_;
    Eigen::VectorXd log_base_;
};

// Normalizer psi(theta): closed form for built-ins, log-sum-exp over the
// support for custom families; stable for |theta| <= 30.
double log_partition(const Model& model, const NaturalParams& theta);

// p(x | theta) = exp(<theta, T(x)> + log h(x) - psi(theta)).
double density(const Model& model, const NaturalParams& theta, double x);

// eta = grad psi(theta), the expectation of T under theta.
MeanParams mean_params(const Model& model, const NaturalParams& theta);

// Hessian of psi at theta; symmetric positive-definite for minimal families.
FisherMetric fisher_metric(const Model& model, const NaturalParams& theta);

// Inverse of mean_params: solves grad psi(theta) = eta to |grad psi - eta| <= tol
// by damped Newton with the Fisher metric as Jacobian; closed forms where known.
NaturalParams natural_from_mean(const Model& model, const MeanParams& eta, double tol = 1e-10);

// Legendre dual phi(eta) = <theta(eta), eta> - psi(theta(eta)).
double dual_potential(const Model& model, const MeanParams& eta);

// Mixed-form divergence with theta = theta(eta); equals the KL divergence
// KL(p_theta(eta') || p_theta(eta)) for discrete kinds.
double bregman_divergence(const Model& model, const MeanParams& eta, const MeanParams& eta_prime);

// Model description from a JSON document {"kind": "...", "params": {...}}.
Model model_from_json(const std::string& json_text);

}  // namespace arbgeo::expfam
