#include "arbgeo/market_graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "arbgeo/errors.hpp"
#include "arbgeo/format.hpp"

namespace arbgeo::market_graph {

namespace {

// Edge list resolved to node indices, with w = -log rate.
struct IndexedEdge {
    int u, v;
    double w;
    double rate;
};

std::vector<IndexedEdge> index_edges(const MarketGraph& g) {
    std::unordered_map<std::string, int> id;
    for (int i = 0; i < g.size(); ++i) id.emplace(g.nodes[static_cast<std::size_t>(i)], i);
    std::vector<IndexedEdge> es;
    es.reserve(g.edges.size());
    for (const auto& e : g.edges)
        es.push_back({id.at(e.from), id.at(e.to), -std::log(e.rate), e.rate});
    return es;
}

void check_tol(double tol) {
    if (!(tol >= 0.0) || !std::isfinite(tol))
        throw PreconditionError("tolerance must be nonnegative and finite");
}

std::vector<std::string> close_names(const MarketGraph& g, const std::vector<int>& cyc) {
    std::vector<std::string> names;
    names.reserve(cyc.size() + 1);
    for (int id : cyc) names.push_back(g.nodes[static_cast<std::size_t>(id)]);
    names.push_back(names.front());
    return names;
}

// Depth-first enumeration of simple cycles in canonical order (smallest node
// first). Returns the first cycle whose gain clears tol. Only used on small
// graphs, where it doubles as an exact oracle behind the relaxation pass.
std::optional<CycleReport> exhaustive_search(const MarketGraph& g,
                                             const std::vector<IndexedEdge>& es, double tol) {
    const int n = g.size();
    std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(n));
    for (const auto& e : es) adj[static_cast<std::size_t>(e.u)].emplace_back(e.v, e.w);
    for (auto& a : adj) std::sort(a.begin(), a.end());

    std::vector<int> path;
    std::vector<char> on_path(static_cast<std::size_t>(n), 0);
    std::optional<CycleReport> found;

    const std::function<bool(int, int, double)> dfs = [&](int start, int u, double sum) {
        for (const auto& [v, w] : adj[static_cast<std::size_t>(u)]) {
            if (v == start) {
                const double gain = -(sum + w);
                if (gain > tol) {
                    std::vector<std::string> names = close_names(g, path);
                    found = CycleReport{names, cycle_log_sum(g, names)};
                    return true;
                }
            } else if (v > start && !on_path[static_cast<std::size_t>(v)]) {
                on_path[static_cast<std::size_t>(v)] = 1;
                path.push_back(v);
                const bool hit = dfs(start, v, sum + w);
                path.pop_back();
                on_path[static_cast<std::size_t>(v)] = 0;
                if (hit) return true;
            }
        }
        return false;
    };

    for (int s = 0; s < n && !found; ++s) {
        path.assign(1, s);
        on_path.assign(static_cast<std::size_t>(n), 0);
        on_path[static_cast<std::size_t>(s)] = 1;
        dfs(s, s, 0.0);
    }
    return found;
}

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", static_cast<unsigned>(c));
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

int MarketGraph::node_index(const std::string& id) const {
    for (int i = 0; i < size(); ++i)
        if (nodes[static_cast<std::size_t>(i)] == id) return i;
    return -1;
}

MarketGraph MarketGraph::make(std::vector<std::string> nodes, std::vector<Edge> edges) {
    std::unordered_set<std::string> seen;
    for (const auto& id : nodes) {
        if (id.empty()) throw PreconditionError("node identifiers must be nonempty");
        if (!seen.insert(id).second)
            throw PreconditionError("duplicate node identifier: " + id);
    }
    std::unordered_set<std::string> pairs;
    for (const auto& e : edges) {
        if (!seen.count(e.from) || !seen.count(e.to))
            throw PreconditionError("edge endpoint not in node list: " + e.from + "->" + e.to);
        if (e.from == e.to) throw PreconditionError("self-loop at node: " + e.from);
        if (!(e.rate > 0.0) || !std::isfinite(e.rate))
            throw PreconditionError("edge rate must be positive and finite: " + e.from + "->" + e.to);
        if (!pairs.insert(e.from + "\x1f" + e.to).second)
            throw DuplicateEdgeError("duplicate edge: " + e.from + "->" + e.to);
    }
    MarketGraph g;
    g.nodes = std::move(nodes);
    g.edges = std::move(edges);
    return g;
}

MarketGraph MarketGraph::from_edges(std::vector<Edge> edges) {
    std::vector<std::string> nodes;
    std::unordered_set<std::string> seen;
    for (const auto& e : edges)
        for (const auto& id : {e.from, e.to})
            if (seen.insert(id).second) nodes.push_back(id);
    return make(std::move(nodes), std::move(edges));
}

double PotentialAssignment::at(const std::string& id) const {
    for (const auto& [name, value] : potentials)
        if (name == id) return value;
    throw GraphError("node not in assignment: " + id);
}

double cycle_log_sum(const MarketGraph& graph, const std::vector<std::string>& cycle) {
    if (cycle.size() < 2) throw PreconditionError("cycle needs at least two entries");
    if (cycle.front() != cycle.back()) throw PreconditionError("cycle must be closed");
    std::unordered_map<std::string, double> rate;
    for (const auto& e : graph.edges) rate.emplace(e.from + "\x1f" + e.to, e.rate);
    for (const auto& name : cycle)
        if (graph.node_index(name) < 0) throw GraphError("unknown node: " + name);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < cycle.size(); ++i) {
        const auto it = rate.find(cycle[i] + "\x1f" + cycle[i + 1]);
        if (it == rate.end())
            throw GraphError("missing edge: " + cycle[i] + "->" + cycle[i + 1]);
        sum += std::log(it->second);
    }
    return sum;
}

std::optional<CycleReport> find_arbitrage(const MarketGraph& graph, double tol) {
    check_tol(tol);
    const int n = graph.size();
    if (n == 0 || graph.edges.empty()) return std::nullopt;
    const auto es = index_edges(graph);

    // Slack keeps floating-point-noise cycles from relaxing forever, while a
    // cycle with gain > tol still fires every round: one round around it
    // improves by at least gain - |V| * eps > tol / 2 > 0.
    const double eps = tol / (2.0 * (n + 1));
    std::vector<double> dist(static_cast<std::size_t>(n), 0.0);
    std::vector<int> pred(static_cast<std::size_t>(n), -1);
    bool residual = false;
    for (int round = 0; round < n; ++round) {
        bool any = false;
        for (const auto& e : es)
            if (dist[static_cast<std::size_t>(e.u)] + e.w <
                dist[static_cast<std::size_t>(e.v)] - eps) {
                dist[static_cast<std::size_t>(e.v)] = dist[static_cast<std::size_t>(e.u)] + e.w;
                pred[static_cast<std::size_t>(e.v)] = e.u;
                any = true;
            }
        residual = any;
        if (!any) break;
    }
    if (!residual) return std::nullopt;

    for (const auto& e : es) {
        if (!(dist[static_cast<std::size_t>(e.u)] + e.w <
              dist[static_cast<std::size_t>(e.v)] - eps))
            continue;
        // Walk predecessors |V| times to land inside a predecessor cycle.
        int x = e.u;
        for (int i = 0; i < n && pred[static_cast<std::size_t>(x)] >= 0; ++i)
            x = pred[static_cast<std::size_t>(x)];
        std::vector<int> walk;
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        int y = x;
        while (y >= 0 && !seen[static_cast<std::size_t>(y)]) {
            seen[static_cast<std::size_t>(y)] = 1;
            walk.push_back(y);
            y = pred[static_cast<std::size_t>(y)];
        }
        if (y < 0) continue;
        const auto it = std::find(walk.begin(), walk.end(), y);
        std::vector<int> cyc(it, walk.end());
        std::reverse(cyc.begin(), cyc.end());  // predecessor links run against the edges
        std::rotate(cyc.begin(), std::min_element(cyc.begin(), cyc.end()), cyc.end());
        const auto names = close_names(graph, cyc);
        const double gain = cycle_log_sum(graph, names);
        if (gain > tol) return CycleReport{names, gain};
    }

    // Relaxation fired but every predecessor cycle re-priced at or below tol.
    // On small graphs settle the question exactly.
    if (n <= 10) return exhaustive_search(graph, es, tol);
    return std::nullopt;
}

std::optional<PotentialAssignment> node_potentials(const MarketGraph& graph, double tol) {
    check_tol(tol);
    const int n = graph.size();
    if (n == 0) throw PreconditionError("graph has no nodes");
    const auto es = index_edges(graph);

    std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(n));
    for (const auto& e : es) {
        adj[static_cast<std::size_t>(e.u)].emplace_back(e.v, -e.w);  // pi(v) = pi(u) + log rate
        adj[static_cast<std::size_t>(e.v)].emplace_back(e.u, e.w);
    }
    for (auto& a : adj)
        std::stable_sort(a.begin(), a.end(),
                         [](const auto& p, const auto& q) { return p.first < q.first; });

    std::vector<double> pi(static_cast<std::size_t>(n));
    std::vector<char> set(static_cast<std::size_t>(n), 0);
    for (int anchor = 0; anchor < n; ++anchor) {
        if (set[static_cast<std::size_t>(anchor)]) continue;
        pi[static_cast<std::size_t>(anchor)] = 0.0;
        set[static_cast<std::size_t>(anchor)] = 1;
        std::queue<int> q;
        q.push(anchor);
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            for (const auto& [v, dlog] : adj[static_cast<std::size_t>(u)]) {
                if (set[static_cast<std::size_t>(v)]) continue;
                pi[static_cast<std::size_t>(v)] = pi[static_cast<std::size_t>(u)] + dlog;
                set[static_cast<std::size_t>(v)] = 1;
                q.push(v);
            }
        }
    }

    for (const auto& e : es)
        if (std::abs(-e.w - (pi[static_cast<std::size_t>(e.v)] - pi[static_cast<std::size_t>(e.u)])) >
            tol)
            return std::nullopt;

    PotentialAssignment out;
    out.reference = graph.nodes.front();
    for (int i = 0; i < n; ++i)
        out.potentials.emplace_back(graph.nodes[static_cast<std::size_t>(i)],
                                    pi[static_cast<std::size_t>(i)]);
    return out;
}

std::vector<CycleReport> triangular_scan(const MarketGraph& graph, double tol) {
    check_tol(tol);
    const int n = graph.size();
    const auto es = index_edges(graph);
    std::unordered_map<long long, double> lr;
    for (const auto& e : es)
        lr.emplace(static_cast<long long>(e.u) * n + e.v, std::log(e.rate));
    const auto get = [&](int a, int b, double& out) {
        const auto it = lr.find(static_cast<long long>(a) * n + b);
        if (it == lr.end()) return false;
        out = it->second;
        return true;
    };

    std::vector<CycleReport> reports;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                double ij, jk, ki, ik, kj, ji;
                double g1 = 0.0, g2 = 0.0;
                const bool fwd = get(i, j, ij) && get(j, k, jk) && get(k, i, ki);
                const bool rev = get(i, k, ik) && get(k, j, kj) && get(j, i, ji);
                if (fwd) g1 = ij + jk + ki;
                if (rev) g2 = ik + kj + ji;
                const bool q1 = fwd && std::abs(g1) > tol;
                const bool q2 = rev && std::abs(g2) > tol;
                const bool opposite = q1 && q2 && ((g1 > 0.0) != (g2 > 0.0));
                if (q1 && !(opposite && g1 < 0.0))
                    reports.push_back({close_names(graph, {i, j, k}), g1});
                if (q2 && !(opposite && g2 < 0.0))
                    reports.push_back({close_names(graph, {i, k, j}), g2});
            }

    std::sort(reports.begin(), reports.end(), [](const CycleReport& a, const CycleReport& b) {
        if (a.log_gain != b.log_gain) return a.log_gain > b.log_gain;
        return a.cycle < b.cycle;
    });
    return reports;
}

MarketGraph parse_rates_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    std::vector<Edge> edges;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (lineno == 1) {
            if (t != "from,to,rate")
                throw ParseError("line 1: expected header from,to,rate");
            continue;
        }
        if (t.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = t.find(',', start);
            fields.push_back(trim(t.substr(start, comma - start)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 3)
            throw ParseError("line " + std::to_string(lineno) + ": expected 3 fields");
        if (fields[0].empty() || fields[1].empty())
            throw ParseError("line " + std::to_string(lineno) + ": empty node id");
        double rate = 0.0;
        const char* begin = fields[2].data();
        const char* end = begin + fields[2].size();
        const auto res = std::from_chars(begin, end, rate);
        if (res.ec != std::errc() || res.ptr != end)
            throw ParseError("line " + std::to_string(lineno) + ": invalid rate '" + fields[2] +
                             "'");
        if (!(rate > 0.0) || !std::isfinite(rate))
            throw ParseError("line " + std::to_string(lineno) + ": rate must be positive");
        edges.push_back({fields[0], fields[1], rate});
    }
    if (lineno == 0) throw ParseError("line 1: expected header from,to,rate");
    return MarketGraph::from_edges(std::move(edges));
}

MarketGraph parse_rates_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid rates JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("edges"))
        throw ParseError("rates JSON must be an object with an edges array");
    for (const auto& item : doc.items())
        if (item.key() != "edges") throw ParseError("unknown key in rates JSON: " + item.key());
    if (!doc["edges"].is_array()) throw ParseError("edges must be an array");

    std::vector<Edge> edges;
    for (const auto& entry : doc["edges"]) {
        if (!entry.is_object()) throw ParseError("each edge must be an object");
        for (const auto& item : entry.items())
            if (item.key() != "from" && item.key() != "to" && item.key() != "rate")
                throw ParseError("unknown key in edge: " + item.key());
        if (!entry.contains("from") || !entry.contains("to") || !entry.contains("rate"))
            throw ParseError("edge needs from, to and rate");
        if (!entry["from"].is_string() || !entry["to"].is_string() || !entry["rate"].is_number())
            throw ParseError("edge fields have the wrong types");
        edges.push_back({entry["from"].get<std::string>(), entry["to"].get<std::string>(),
                         entry["rate"].get<double>()});
    }
    return MarketGraph::from_edges(std::move(edges));
}

MarketGraph load_rates_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open rates file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const std::size_t first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') return parse_rates_json(text);
    return parse_rates_csv(text);
}

std::string report_json(const CycleReport& report) {
    std::string out = "{\"cycle\":[";
    for (std::size_t i = 0; i < report.cycle.size(); ++i) {
        if (i) out += ",";
        out += "\"" + json_escape(report.cycle[i]) + "\"";
    }
    out += "],\"log_gain\":" + fmt9(report.log_gain) + "}";
    return out;
}

}  // namespace arbgeo::market_graph
