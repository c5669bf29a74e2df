#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace arbgeo::market_graph {

struct Edge {
    std::string from;
    std::string to;
    double rate = 0.0;  // dimensionless exchange ratio, > 0
};

// Directed rate graph: unique nonempty node ids, at most one edge per ordered
// pair, no self-loops. Immutable after construction; queries are pure.
struct MarketGraph {
    std::vector<std::string> nodes;
    std::vector<Edge> edges;

    int size() const { return static_cast<int>(nodes.size()); }
    int node_index(const std::string& id) const;  // -1 when absent

    static MarketGraph make(std::vector<std::string> nodes, std::vector<Edge> edges);
    // Derives the node list from edge endpoints in first-appearance order.
    static MarketGraph from_edges(std::vector<Edge> edges);
};

struct CycleReport {
    std::vector<std::string> cycle;  // closed: first == last
    double log_gain = 0.0;           // nats per round trip
};

// Log-price levels with pi(reference) = 0. On graphs with several weakly
// connected components each component is anchored at its lowest-index node;
// `reference` names the anchor of the component holding the first node.
struct PotentialAssignment {
    std::vector<std::pair<std::string, double>> potentials;  // graph node order
    std::string reference;

    double at(const std::string& id) const;
};

// Sum of log rates along a closed node walk. Zero means the walk prices
// consistently. Missing edges raise GraphError; an open walk is a
// PreconditionError.
double cycle_log_sum(const MarketGraph& graph, const std::vector<std::string>& cycle);

// Shortest-path relaxation on weights w = -log rate from a virtual source.
// Candidate cycles found by predecessor walks are re-priced via
// cycle_log_sum and only returned when the gain clears tol; on small graphs
// an exhaustive sweep backs up the relaxation pass so near-zero noise cycles
// cannot mask a genuine one.
std::optional<CycleReport> find_arbitrage(const MarketGraph& graph, double tol = 1e-9);

// Spanning-tree potential assignment, verified against every edge within tol.
// Returns none when some edge (equivalently, some cycle) violates.
std::optional<PotentialAssignment> node_potentials(const MarketGraph& graph, double tol = 1e-9);

// All directed 3-cycles with |log_gain| > tol, one report per rotation class,
// sorted by descending gain. When both orientations of a triangle qualify and
// exactly one is profitable, only the profitable one is reported.
std::vector<CycleReport> triangular_scan(const MarketGraph& graph, double tol = 1e-9);

// CSV rates table: header `from,to,rate`, one edge per line.
MarketGraph parse_rates_csv(const std::string& text);

// JSON rates document: {"edges": [{"from": ..., "to": ..., "rate": ...}]}.
MarketGraph parse_rates_json(const std::string& text);

// Reads a rates file, sniffing JSON (leading '{') versus CSV.
MarketGraph load_rates_file(const std::string& path);

// {"cycle": [...], "log_gain": g} with 9-significant-digit numbers.
std::string report_json(const CycleReport& report);

}  // namespace arbgeo::market_graph
