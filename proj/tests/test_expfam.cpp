#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "arbgeo/errors.hpp"
#include "arbgeo/expfam.hpp"

using namespace arbgeo;
using namespace arbgeo::expfam;

namespace {

NaturalParams th(double t) {
    NaturalParams p;
    p.theta = Eigen::VectorXd::Constant(1, t);
    return p;
}

NaturalParams th2(double a, double b) {
    NaturalParams p;
    p.theta = Eigen::Vector2d(a, b);
    return p;
}

MeanParams mp(double e) {
    MeanParams p;
    p.eta = Eigen::VectorXd::Constant(1, e);
    return p;
}

double psi_at(const Model& m, const Eigen::VectorXd& t) {
    NaturalParams p;
    p.theta = t;
    return log_partition(m, p);
}

Eigen::VectorXd grad_fd(const Model& m, const Eigen::VectorXd& t, double h) {
    Eigen::VectorXd g(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        Eigen::VectorXd p = t, q = t;
        p[i] += h;
        q[i] -= h;
        g[i] = (psi_at(m, p) - psi_at(m, q)) / (2 * h);
    }
    return g;
}

Eigen::MatrixXd hess_fd(const Model& m, const Eigen::VectorXd& t, double h) {
    const Eigen::Index d = t.size();
    Eigen::MatrixXd H(d, d);
    const double f0 = psi_at(m, t);
    for (Eigen::Index i = 0; i < d; ++i) {
        Eigen::VectorXd p = t, q = t;
        p[i] += h;
        q[i] -= h;
        H(i, i) = (psi_at(m, p) - 2 * f0 + psi_at(m, q)) / (h * h);
        for (Eigen::Index j = i + 1; j < d; ++j) {
            Eigen::VectorXd pp = t, pm = t, mp_ = t, mm = t;
            pp[i] += h;
            pp[j] += h;
            pm[i] += h;
            pm[j] -= h;
            mp_[i] -= h;
            mp_[j] += h;
            mm[i] -= h;
            mm[j] -= h;
            H(i, j) = H(j, i) =
                (psi_at(m, pp) - psi_at(m, pm) - psi_at(m, mp_) + psi_at(m, mm)) / (4 * h * h);
        }
    }
    return H;
}

double rel_inf(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const double ref = std::max(b.cwiseAbs().maxCoeff(), 1e-12);
    return (a - b).cwiseAbs().maxCoeff() / ref;
}

// KL(p_{theta'} || p_theta) summed over a discrete support.
double kl_oracle(const Model& m, const NaturalParams& theta_prime, const NaturalParams& theta) {
    double kl = 0.0;
    for (double x : m.support()) {
        const double pp = density(m, theta_prime, x);
        kl += pp * (std::log(pp) - std::log(density(m, theta, x)));
    }
    return kl;
}

std::vector<Eigen::VectorXd> theta_grid(const Model& m, int per_dim) {
    std::vector<Eigen::VectorXd> grid;
    const int d = m.param_dim();
    std::vector<int> idx(d, 0);
    while (true) {
        Eigen::VectorXd t(d);
        for (int i = 0; i < d; ++i) t[i] = -3.0 + 6.0 * idx[i] / (per_dim - 1);
        grid.push_back(t);
        int i = 0;
        for (; i < d; ++i) {
            if (++idx[i] < per_dim) break;
            idx[i] = 0;
        }
        if (i == d) break;
    }
    return grid;
}

Model custom_1d() {
    Eigen::MatrixXd T(3, 1);
    T << 0.0, 0.5, 1.7;
    return Model::custom_finite({0.0, 1.0, 2.0}, T);
}

Model custom_2d() {
    Eigen::MatrixXd T(4, 2);
    T << 0, 0, 1, 0, 0, 1, 1, 1;
    return Model::custom_finite({0.0, 1.0, 2.0, 3.0}, T);
}

std::vector<Model> all_test_models() {
    return {Model::bernoulli(), Model::poisson_truncated(60), Model::gaussian_unit_variance(),
            Model::categorical(3), custom_1d(), custom_2d()};
}

}  // namespace

TEST_CASE("log partition closed forms") {
    CHECK(log_partition(Model::bernoulli(), th(0)) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(log_partition(Model::gaussian_unit_variance(), th(0)) == 0.0);
    CHECK(log_partition(Model::gaussian_unit_variance(), th(3)) == 4.5);
    CHECK(log_partition(Model::categorical(3), th2(0, 0)) ==
          doctest::Approx(std::log(3.0)).epsilon(1e-14));

    // Uniform statistic: psi collapses to <theta, T> + log |support|.
    Eigen::MatrixXd T(4, 2);
    T << 0.7, -0.2, 0.7, -0.2, 0.7, -0.2, 0.7, -0.2;
    const Model uni = Model::custom_finite({0, 1, 2, 3}, T);
    for (double a : {-2.0, 0.3, 1.9})
        CHECK(log_partition(uni, th2(a, -a)) ==
              doctest::Approx(0.7 * a + 0.2 * a + std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("log partition is stable across |theta| <= 30") {
    for (const Model& m : all_test_models()) {
        for (double t : {-30.0, -12.0, 12.0, 30.0}) {
            Eigen::VectorXd v = Eigen::VectorXd::Constant(m.param_dim(), t);
            NaturalParams p;
            p.theta = v;
            CHECK(std::isfinite(log_partition(m, p)));
            if (m.discrete()) {
                double sum = 0.0;
                for (double x : m.support()) sum += density(m, p, x);
                CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("density point values") {
    CHECK(density(Model::bernoulli(), th(0), 1.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(density(Model::bernoulli(), th(std::log(4.0)), 1.0) == doctest::Approx(0.8).epsilon(1e-13));
    for (double x : {0.0, 1.0, 2.0})
        CHECK(density(Model::categorical(3), th2(0, 0), x) ==
              doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK_THROWS_AS(density(Model::bernoulli(), th(0), 2.0), DomainError);
    CHECK(density(Model::gaussian_unit_variance(), th(1.3), 1.3) ==
          doctest::Approx(1.0 / std::sqrt(2.0 * 3.14159265358979323846)).epsilon(1e-12));
}

TEST_CASE("mean parameter closed forms") {
    CHECK(mean_params(Model::bernoulli(), th(0)).eta[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(mean_params(Model::poisson_truncated(30), th(0)).eta[0] ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK(mean_params(Model::gaussian_unit_variance(), th(1.7)).eta[0] == 1.7);
}

TEST_CASE("fisher metric closed forms and degeneracy") {
    CHECK(fisher_metric(Model::bernoulli(), th(0)).g(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(fisher_metric(Model::gaussian_unit_variance(), th(-2.4)).g(0, 0) == 1.0);

    const Eigen::MatrixXd g = fisher_metric(Model::categorical(3), th2(0, 0)).g;
    CHECK(g(0, 0) == doctest::Approx(2.0 / 9.0).epsilon(1e-12));
    CHECK(g(1, 1) == doctest::Approx(2.0 / 9.0).epsilon(1e-12));
    CHECK(g(0, 1) == doctest::Approx(-1.0 / 9.0).epsilon(1e-12));
    CHECK(g(1, 0) == g(0, 1));

    // Two support points with the same statistic row: non-minimal family.
    Eigen::MatrixXd T(2, 1);
    T << 1.0, 1.0;
    const Model degenerate = Model::custom_finite({0.0, 1.0}, T);
    CHECK_THROWS_AS(fisher_metric(degenerate, th(0)), DegenerateMetricError);
}

TEST_CASE("information-geometry identities hold on the theta grid") {
    for (const Model& m : all_test_models()) {
        const auto grid = theta_grid(m, 9);
        for (const auto& t : grid) {
            NaturalParams p;
            p.theta = t;

            if (m.discrete()) {
                double sum = 0.0;
                for (double x : m.support()) sum += density(m, p, x);
                REQUIRE(sum == doctest::Approx(1.0).epsilon(1e-12));
            }

            const Eigen::VectorXd eta = mean_params(m, p).eta;
            REQUIRE(rel_inf(eta, grad_fd(m, t, 1e-6)) <= 1e-6);

            const Eigen::MatrixXd g = fisher_metric(m, p).g;  // throws unless PD
            REQUIRE((g - g.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
            REQUIRE(rel_inf(g, hess_fd(m, t, 1e-4)) <= 1e-5);
        }

        // Convexity of psi along segments between grid points.
        for (std::size_t a = 0; a < grid.size(); ++a)
            for (std::size_t b = a + 1; b < grid.size(); b += 3)
                for (double lam : {0.25, 0.5, 0.75}) {
                    const Eigen::VectorXd mid = lam * grid[a] + (1 - lam) * grid[b];
                    REQUIRE(psi_at(m, mid) <=
                            lam * psi_at(m, grid[a]) + (1 - lam) * psi_at(m, grid[b]) + 1e-12);
                }
    }
}

TEST_CASE("legendre roundtrip on mean-domain grids") {
    for (const Model& m : all_test_models()) {
        for (const auto& t : theta_grid(m, 9)) {
            NaturalParams p;
            p.theta = t;
            const MeanParams eta = mean_params(m, p);
            const NaturalParams back = natural_from_mean(m, eta, 1e-10);
            REQUIRE((mean_params(m, back).eta - eta.eta).norm() <= 1e-8);
        }
    }
}

TEST_CASE("natural_from_mean closed forms and domain errors") {
    CHECK(natural_from_mean(Model::bernoulli(), mp(0.5)).theta[0] == 0.0);
    CHECK(natural_from_mean(Model::bernoulli(), mp(0.8)).theta[0] ==
          doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK_THROWS_AS(natural_from_mean(Model::bernoulli(), mp(0.0)), DomainError);
    CHECK_THROWS_AS(natural_from_mean(Model::bernoulli(), mp(1.0)), DomainError);
    CHECK_THROWS_AS(natural_from_mean(Model::poisson_truncated(30), mp(0.0)), DomainError);
    CHECK_THROWS_AS(natural_from_mean(Model::poisson_truncated(30), mp(30.0)), DomainError);
    CHECK_THROWS_AS(natural_from_mean(custom_1d(), mp(1.8)), DomainError);

    MeanParams bad;
    bad.eta = Eigen::Vector2d(0.6, 0.6);
    CHECK_THROWS_AS(natural_from_mean(Model::categorical(3), bad), DomainError);

    MeanParams ok;
    ok.eta = Eigen::Vector2d(0.2, 0.5);
    const NaturalParams t = natural_from_mean(Model::categorical(3), ok);
    CHECK(t.theta[0] == doctest::Approx(std::log(0.2 / 0.3)).epsilon(1e-12));
    CHECK(t.theta[1] == doctest::Approx(std::log(0.5 / 0.3)).epsilon(1e-12));
}

TEST_CASE("dual potential") {
    CHECK(dual_potential(Model::bernoulli(), mp(0.5)) ==
          doctest::Approx(-std::log(2.0)).epsilon(1e-12));
    CHECK(dual_potential(Model::bernoulli(), mp(0.2)) ==
          doctest::Approx(0.2 * std::log(0.2) + 0.8 * std::log(0.8)).epsilon(1e-12));
    for (double e : {-1.5, 0.25, 2.0})
        CHECK(dual_potential(Model::gaussian_unit_variance(), mp(e)) ==
              doctest::Approx(0.5 * e * e).epsilon(1e-14));
}

TEST_CASE("bregman divergence: values, orientation and the KL oracle") {
    const Model b = Model::bernoulli();
    const double d_fwd = bregman_divergence(b, mp(0.5), mp(0.2));
    CHECK(std::abs(d_fwd - 0.192745) <= 1e-6);
    CHECK(std::abs(d_fwd - (0.2 * std::log(0.4) + 0.8 * std::log(1.6))) <= 1e-12);

    // Orientation: D(eta || eta') = KL(p_{theta(eta')} || p_{theta(eta)}).
    const double kl = kl_oracle(b, natural_from_mean(b, mp(0.2)), natural_from_mean(b, mp(0.5)));
    CHECK(std::abs(d_fwd - kl) <= 1e-9);

    const double d_rev = bregman_divergence(b, mp(0.2), mp(0.5));
    CHECK(std::abs(d_fwd - d_rev) > 1e-3);  // genuinely asymmetric

    CHECK(bregman_divergence(Model::gaussian_unit_variance(), mp(1.0), mp(0.0)) ==
          doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("bregman divergence is nonnegative and vanishes on the diagonal") {
    for (const Model& m : all_test_models()) {
        std::vector<MeanParams> etas;
        for (const auto& t : theta_grid(m, 5)) {
            NaturalParams p;
            p.theta = t;
            etas.push_back(mean_params(m, p));
        }
        for (std::size_t i = 0; i < etas.size(); ++i) {
            CHECK(std::abs(bregman_divergence(m, etas[i], etas[i])) <= 1e-12);
            for (std::size_t j = 0; j < etas.size(); j += 2) {
                const double d = bregman_divergence(m, etas[i], etas[j]);
                CHECK(d >= -1e-12);
                if (m.discrete()) {
                    const double kl =
                        kl_oracle(m, natural_from_mean(m, etas[j]), natural_from_mean(m, etas[i]));
                    CHECK(std::abs(d - kl) <= 1e-9);
                }
            }
        }
    }
}

TEST_CASE("model JSON parsing") {
    CHECK(model_from_json(R"({"kind":"bernoulli"})").kind() == Kind::bernoulli);
    const Model p = model_from_json(R"({"kind":"poisson_truncated","params":{"max_count":25}})");
    CHECK(p.kind() == Kind::poisson_truncated);
    CHECK(p.max_count() == 25);
    CHECK(model_from_json(R"({"kind":"poisson_truncated"})").max_count() == 60);
    CHECK(model_from_json(R"({"kind":"categorical","params":{"k":4}})").param_dim() == 3);

    const Model c = model_from_json(
        R"({"kind":"custom_finite","params":{"support":[0,1,2],"T_table":[[0],[0.5],[1.7]]}})");
    CHECK(c.param_dim() == 1);
    CHECK(c.T_table()(2, 0) == 1.7);

    CHECK_THROWS_AS(model_from_json("{"), ParseError);
    CHECK_THROWS_AS(model_from_json(R"({"kind":"weibull"})"), ParseError);
    CHECK_THROWS_AS(model_from_json(R"({"kind":"bernoulli","extra":1})"), ParseError);
    CHECK_THROWS_AS(model_from_json(R"({"kind":"bernoulli","params":{"p":0.5}})"), ParseError);
    CHECK_THROWS_AS(model_from_json(R"({"kind":"categorical"})"), ParseError);
    CHECK_THROWS_AS(
        model_from_json(R"({"kind":"custom_finite","params":{"support":[0,1],"T_table":[[0]]}})"),
        PreconditionError);
}
