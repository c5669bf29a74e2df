#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "arbgeo/expfam.hpp"

namespace arbgeo::sufficiency {

// Finite family of strictly positive distributions over a common finite support,
// one prob_table row per parameter point. Rows sum to 1 within 1e-12.
struct DiscreteFamily {
    std::vector<double> support;               // m distinct outcomes
    std::vector<Eigen::VectorXd> theta_grid;   // >= 2 points, not all equal
    Eigen::MatrixXd prob_table;                // |theta_grid| x m, entries > 0

    int m() const { return static_cast<int>(support.size()); }
    int grid_size() const { return static_cast<int>(theta_grid.size()); }

    static DiscreteFamily make(std::vector<double> support,
                               std::vector<Eigen::VectorXd> theta_grid,
                               Eigen::MatrixXd prob_table);

    // Tabulates a discrete expfam model over the given natural-parameter grid.
    static DiscreteFamily from_expfam(const expfam::Model& model,
                                      const std::vector<Eigen::VectorXd>& grid);
};

// Total map from n-tuples of outcomes to R^dim.
struct Statistic {
    int arity = 0;
    int dim = 0;
    std::function<Eigen::VectorXd(const std::vector<double>&)> map;

    static Statistic sum(int n);
    static Statistic coordinate(int n, int index);
    static Statistic counts(int n, std::vector<double> support);
    static Statistic identity(int n);
};

// Partition of support^n into likelihood-ratio classes. Tuples are stored as
// big-endian base-m indices; classes appear in enumeration order.
struct PartitionReport {
    int n = 0;
    std::size_t class_count = 0;
    std::vector<std::vector<std::uint64_t>> classes;
    std::vector<double> support;

    std::vector<double> decode(std::uint64_t index) const;
};

// Factorization-criterion check: groups support^n by exact statistic value and
// measures the worst total-variation distance between the within-group
// conditionals of any two grid parameters. Returns (defect <= tol, defect).
// Throws SizeError when m^n > 1e6 and UnderflowError when a group has
// probability below 1e-300 under some parameter.
std::pair<bool, double> is_sufficient(const DiscreteFamily& family, const Statistic& stat,
                                      double tol);

// Groups tuples whose likelihood ratio is constant across the grid within
// relative ratio_tol. Comparisons run in log space against a fixed class
// representative, so classes do not drift.
PartitionReport minimal_sufficient_partition(const DiscreteFamily& family, int n,
                                             double ratio_tol = 1e-9);

// Class counts of the minimal partition for n = 1..n_max.
std::vector<std::pair<int, std::size_t>> pkd_growth_probe(const DiscreteFamily& family, int n_max,
                                                          double ratio_tol = 1e-9);

// Wraps a partition as the statistic "index of my class".
Statistic partition_label_statistic(const PartitionReport& report);

// Same schema as the expfam model JSON plus a top-level "theta_grid" array
// (entries are numbers or arrays of numbers). Continuous models are rejected.
DiscreteFamily family_from_json(const std::string& text);

// CSV rendering of a growth probe: header n,class_count.
std::string growth_csv(const std::vector<std::pair<int, std::size_t>>& probe);

}  // namespace arbgeo::sufficiency
