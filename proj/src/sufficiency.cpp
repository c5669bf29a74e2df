#include "arbgeo/sufficiency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unordered_map>

#include "arbgeo/errors.hpp"

namespace arbgeo::sufficiency {

namespace {

constexpr double kEnumerationBound = 1e6;

// Number of tuples m^n, guarded against the enumeration bound.
std::uint64_t tuple_space_size(int m, int n) {
    if (n <= 0) throw PreconditionError("sample size must be positive");
    double size = 1.0;
    for (int i = 0; i < n; ++i) {
        size *= m;
        if (size > kEnumerationBound)
            throw SizeError("enumeration bound exceeded: m^n > 1e6");
    }
    return static_cast<std::uint64_t>(size);
}

std::vector<int> digits_of(std::uint64_t index, int m, int n) {
    std::vector<int> d(n);
    for (int i = n - 1; i >= 0; --i) {
        d[i] = static_cast<int>(index % m);
        index /= m;
    }
    return d;
}

double log_sum_exp(const std::vector<double>& v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

void check_family(const DiscreteFamily& f) {
    if (f.support.empty()) throw PreconditionError("family support is empty");
    if (f.prob_table.rows() != f.grid_size() || f.prob_table.cols() != f.m())
        throw PreconditionError("prob_table shape does not match grid and support");
}

}  // namespace

DiscreteFamily DiscreteFamily::make(std::vector<double> support,
                                    std::vector<Eigen::VectorXd> theta_grid,
                                    Eigen::MatrixXd prob_table) {
    if (support.empty()) throw PreconditionError("support must be nonempty");
    for (double x : support)
        if (!std::isfinite(x)) throw PreconditionError("support values must be finite");
    for (std::size_t i = 0; i < support.size(); ++i)
        for (std::size_t j = i + 1; j < support.size(); ++j)
            if (support[i] == support[j]) throw PreconditionError("support values must be distinct");

    if (theta_grid.size() < 2) throw PreconditionError("theta_grid needs at least 2 points");
    const Eigen::Index pdim = theta_grid.front().size();
    if (pdim < 1) throw PreconditionError("theta_grid points must be nonempty vectors");
    bool any_distinct = false;
    for (const auto& t : theta_grid) {
        if (t.size() != pdim) throw PreconditionError("theta_grid points must share a dimension");
        if (!t.allFinite()) throw PreconditionError("theta_grid points must be finite");
        if ((t - theta_grid.front()).norm() != 0.0) any_distinct = true;
    }
    if (!any_distinct) throw PreconditionError("theta_grid needs at least 2 distinct points");

    if (prob_table.rows() != static_cast<Eigen::Index>(theta_grid.size()) ||
        prob_table.cols() != static_cast<Eigen::Index>(support.size()))
        throw PreconditionError("prob_table shape does not match grid and support");
    for (Eigen::Index r = 0; r < prob_table.rows(); ++r) {
        double sum = 0.0;
        for (Eigen::Index c = 0; c < prob_table.cols(); ++c) {
            const double p = prob_table(r, c);
            if (!(p > 0.0) || !std::isfinite(p))
                throw PreconditionError("prob_table entries must be positive and finite");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw PreconditionError("prob_table rows must sum to 1 within 1e-12");
    }

    DiscreteFamily f;
    f.support = std::move(support);
    f.theta_grid = std::move(theta_grid);
    f.prob_table = std::move(prob_table);
    return f;
}

DiscreteFamily DiscreteFamily::from_expfam(const expfam::Model& model,
                                           const std::vector<Eigen::VectorXd>& grid) {
    if (!model.discrete())
        throw PreconditionError("from_expfam requires a discrete model");
    const auto& sup = model.support();
    Eigen::MatrixXd table(static_cast<Eigen::Index>(grid.size()),
                          static_cast<Eigen::Index>(sup.size()));
    for (std::size_t r = 0; r < grid.size(); ++r) {
        expfam::NaturalParams theta;
        theta.theta = grid[r];
        for (std::size_t c = 0; c < sup.size(); ++c)
            table(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                expfam::density(model, theta, sup[c]);
    }
    return make(sup, grid, std::move(table));
}

Statistic Statistic::sum(int n) {
    if (n < 1) throw PreconditionError("statistic arity must be positive");
    Statistic s;
    s.arity = n;
    s.dim = 1;
    s.map = [](const std::vector<double>& x) {
        double acc = 0.0;
        for (double v : x) acc += v;
        return Eigen::VectorXd::Constant(1, acc).eval();
    };
    return s;
}

Statistic Statistic::coordinate(int n, int index) {
    if (n < 1) throw PreconditionError("statistic arity must be positive");
    if (index < 0 || index >= n) throw PreconditionError("coordinate index out of range");
    Statistic s;
    s.arity = n;
    s.dim = 1;
    s.map = [index](const std::vector<double>& x) {
        return Eigen::VectorXd::Constant(1, x[static_cast<std::size_t>(index)]).eval();
    };
    return s;
}

Statistic Statistic::counts(int n, std::vector<double> support) {
    if (n < 1) throw PreconditionError("statistic arity must be positive");
    if (support.empty()) throw PreconditionError("counts statistic needs a support");
    Statistic s;
    s.arity = n;
    s.dim = static_cast<int>(support.size());
    s.map = [support = std::move(support)](const std::vector<double>& x) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(support.size()));
        for (double v : x) {
            const auto it = std::find(support.begin(), support.end(), v);
            if (it == support.end()) throw DomainError("outcome not in the statistic's support");
            c[static_cast<Eigen::Index>(it - support.begin())] += 1.0;
        }
        return c;
    };
    return s;
}

Statistic Statistic::identity(int n) {
    if (n < 1) throw PreconditionError("statistic arity must be positive");
    Statistic s;
    s.arity = n;
    s.dim = n;
    s.map = [n](const std::vector<double>& x) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = x[static_cast<std::size_t>(i)];
        return v;
    };
    return s;
}

std::vector<double> PartitionReport::decode(std::uint64_t index) const {
    const int m = static_cast<int>(support.size());
    std::vector<double> tuple(static_cast<std::size_t>(n));
    for (int i = n - 1; i >= 0; --i) {
        tuple[static_cast<std::size_t>(i)] = support[index % m];
        index /= m;
    }
    return tuple;
}

std::pair<bool, double> is_sufficient(const DiscreteFamily& family, const Statistic& stat,
                                      double tol) {
    check_family(family);
    if (!stat.map) throw PreconditionError("statistic has no map");
    const int n = stat.arity;
    const int m = family.m();
    const int rows = family.grid_size();
    const std::uint64_t total = tuple_space_size(m, n);

    Eigen::MatrixXd logp(rows, m);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < m; ++c) logp(r, c) = std::log(family.prob_table(r, c));

    // Group tuples by exact statistic value.
    std::map<std::vector<double>, std::vector<std::uint64_t>> groups;
    std::vector<double> tuple(static_cast<std::size_t>(n));
    std::vector<double> key(static_cast<std::size_t>(stat.dim));
    for (std::uint64_t idx = 0; idx < total; ++idx) {
        const auto digs = digits_of(idx, m, n);
        for (int i = 0; i < n; ++i) tuple[static_cast<std::size_t>(i)] = family.support[digs[i]];
        const Eigen::VectorXd v = stat.map(tuple);
        if (v.size() != stat.dim)
            throw PreconditionError("statistic returned a value of the wrong dimension");
        for (int i = 0; i < stat.dim; ++i) key[static_cast<std::size_t>(i)] = v[i];
        groups[key].push_back(idx);
    }

    const double log_floor = std::log(1e-300);
    double defect = 0.0;
    for (const auto& [value, members] : groups) {
        (void)value;
        const std::size_t gsz = members.size();
        // Conditional distribution over the group's tuples, one row per theta.
        Eigen::MatrixXd cond(rows, static_cast<Eigen::Index>(gsz));
        std::vector<double> lps(gsz);
        for (int r = 0; r < rows; ++r) {
            for (std::size_t t = 0; t < gsz; ++t) {
                double lp = 0.0;
                std::uint64_t idx = members[t];
                for (int i = 0; i < n; ++i) {
                    lp += logp(r, static_cast<int>(idx % m));
                    idx /= static_cast<std::uint64_t>(m);
                }
                lps[t] = lp;
            }
            const double lse = log_sum_exp(lps);
            if (lse < log_floor)
                throw UnderflowError("group probability underflows below 1e-300");
            for (std::size_t t = 0; t < gsz; ++t)
                cond(r, static_cast<Eigen::Index>(t)) = std::exp(lps[t] - lse);
        }
        for (int r = 0; r < rows; ++r)
            for (int s = r + 1; s < rows; ++s) {
                const double tv = 0.5 * (cond.row(r) - cond.row(s)).cwiseAbs().sum();
                defect = std::max(defect, tv);
            }
    }
    return {defect <= tol, defect};
}

PartitionReport minimal_sufficient_partition(const DiscreteFamily& family, int n,
                                             double ratio_tol) {
    check_family(family);
    if (!(ratio_tol > 0.0) || !std::isfinite(ratio_tol))
        throw PreconditionError("ratio_tol must be positive and finite");
    const int m = family.m();
    const int rows = family.grid_size();
    const std::uint64_t total = tuple_space_size(m, n);
    const double log_tol = std::log1p(ratio_tol);

    Eigen::MatrixXd logp(rows, m);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < m; ++c) logp(r, c) = std::log(family.prob_table(r, c));

    // Tuples with equal count vectors have identical likelihoods, so group by
    // counts first and compare one representative log-likelihood per group.
    std::map<std::vector<int>, int> count_group_of;
    std::vector<std::vector<int>> group_counts;
    std::vector<int> group_of_tuple(total);
    std::vector<int> counts(static_cast<std::size_t>(m));
    for (std::uint64_t idx = 0; idx < total; ++idx) {
        std::fill(counts.begin(), counts.end(), 0);
        std::uint64_t rem = idx;
        for (int i = 0; i < n; ++i) {
            ++counts[rem % m];
            rem /= static_cast<std::uint64_t>(m);
        }
        auto [it, inserted] = count_group_of.try_emplace(counts, static_cast<int>(group_counts.size()));
        if (inserted) group_counts.push_back(counts);
        group_of_tuple[idx] = it->second;
    }

    // Greedy class assignment with fixed representatives, in group order.
    std::vector<Eigen::VectorXd> class_rep;
    std::vector<int> class_of_group(group_counts.size());
    for (std::size_t g = 0; g < group_counts.size(); ++g) {
        Eigen::VectorXd L(rows);
        for (int r = 0; r < rows; ++r) {
            double acc = 0.0;
            for (int c = 0; c < m; ++c) acc += group_counts[g][c] * logp(r, c);
            L[r] = acc;
        }
        int assigned = -1;
        for (std::size_t k = 0; k < class_rep.size(); ++k) {
            const Eigen::VectorXd d = L - class_rep[k];
            if (d.maxCoeff() - d.minCoeff() <= log_tol) {
                assigned = static_cast<int>(k);
                break;
            }
        }
        if (assigned < 0) {
            assigned = static_cast<int>(class_rep.size());
            class_rep.push_back(L);
        }
        class_of_group[g] = assigned;
    }

    PartitionReport report;
    report.n = n;
    report.support = family.support;
    report.class_count = class_rep.size();
    report.classes.resize(class_rep.size());
    for (std::uint64_t idx = 0; idx < total; ++idx)
        report.classes[static_cast<std::size_t>(class_of_group[group_of_tuple[idx]])].push_back(idx);
    return report;
}

std::vector<std::pair<int, std::size_t>> pkd_growth_probe(const DiscreteFamily& family, int n_max,
                                                          double ratio_tol) {
    if (n_max < 1) throw PreconditionError("n_max must be positive");
    tuple_space_size(family.m(), n_max);  // fail before any work if the largest n blows the bound
    std::vector<std::pair<int, std::size_t>> probe;
    probe.reserve(static_cast<std::size_t>(n_max));
    for (int n = 1; n <= n_max; ++n)
        probe.emplace_back(n, minimal_sufficient_partition(family, n, ratio_tol).class_count);
    return probe;
}

Statistic partition_label_statistic(const PartitionReport& report) {
    if (report.support.empty() || report.n < 1)
        throw PreconditionError("partition report is empty");
    auto labels = std::make_shared<std::unordered_map<std::uint64_t, double>>();
    for (std::size_t k = 0; k < report.classes.size(); ++k)
        for (std::uint64_t idx : report.classes[k]) (*labels)[idx] = static_cast<double>(k);

    Statistic s;
    s.arity = report.n;
    s.dim = 1;
    s.map = [support = report.support, labels](const std::vector<double>& x) {
        std::uint64_t idx = 0;
        for (double v : x) {
            const auto it = std::find(support.begin(), support.end(), v);
            if (it == support.end()) throw DomainError("outcome not in the partition's support");
            idx = idx * support.size() + static_cast<std::uint64_t>(it - support.begin());
        }
        const auto hit = labels->find(idx);
        if (hit == labels->end()) throw DomainError("tuple missing from the partition");
        return Eigen::VectorXd::Constant(1, hit->second).eval();
    };
    return s;
}

DiscreteFamily family_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid family JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("family JSON must be an object");
    if (!doc.contains("theta_grid")) throw ParseError("family JSON requires theta_grid");

    const nlohmann::json grid_json = doc.at("theta_grid");
    doc.erase("theta_grid");
    if (!grid_json.is_array() || grid_json.empty())
        throw ParseError("theta_grid must be a nonempty array");

    std::vector<Eigen::VectorXd> grid;
    for (const auto& entry : grid_json) {
        if (entry.is_number()) {
            grid.push_back(Eigen::VectorXd::Constant(1, entry.get<double>()));
        } else if (entry.is_array() && !entry.empty()) {
            Eigen::VectorXd v(static_cast<Eigen::Index>(entry.size()));
            for (std::size_t i = 0; i < entry.size(); ++i) {
                if (!entry[i].is_number()) throw ParseError("theta_grid entries must be numeric");
                v[static_cast<Eigen::Index>(i)] = entry[i].get<double>();
            }
            grid.push_back(std::move(v));
        } else {
            throw ParseError("theta_grid entries must be numbers or arrays of numbers");
        }
    }

    const expfam::Model model = expfam::model_from_json(doc.dump());
    if (!model.discrete()) throw ParseError("family JSON requires a discrete model kind");
    return DiscreteFamily::from_expfam(model, grid);
}

std::string growth_csv(const std::vector<std::pair<int, std::size_t>>& probe) {
    std::ostringstream out;
    out << "n,class_count\n";
    for (const auto& [n, count] : probe) out << n << "," << count << "\n";
    return out.str();
}

}  // namespace arbgeo::sufficiency
