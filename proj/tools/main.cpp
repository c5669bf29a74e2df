#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "arbgeo/dynamics.hpp"
#include "arbgeo/errors.hpp"
#include "arbgeo/expfam.hpp"
#include "arbgeo/format.hpp"
#include "arbgeo/forms.hpp"
#include "arbgeo/market_graph.hpp"
#include "arbgeo/sufficiency.hpp"

namespace {

using arbgeo::fmt9;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void emit(const std::string& payload, const std::string& out_path) {
    if (out_path.empty()) {
        std::fwrite(payload.data(), 1, payload.size(), stdout);
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file: " + out_path);
    f << payload;
}

std::string json_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    out += '"';
    return out;
}

Eigen::VectorXd parse_vector(const std::string& text) {
    std::vector<double> vals;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::string field =
            text.substr(start, comma == std::string::npos ? comma : comma - start);
        double v = 0.0;
        const char* b = field.data();
        const auto res = std::from_chars(b, b + field.size(), v);
        if (res.ec != std::errc() || res.ptr != b + field.size())
            throw std::runtime_error("invalid number in list: '" + field + "'");
        vals.push_back(v);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) out[static_cast<Eigen::Index>(i)] = vals[i];
    return out;
}

// Ordered key/value scalars rendered as a table, CSV rows or a JSON object.
struct Scalars {
    struct Row {
        std::string key, value;
        bool quoted;
    };
    std::vector<Row> rows;

    void num(const std::string& k, double v) { rows.push_back({k, fmt9(v), false}); }
    void str(const std::string& k, const std::string& v) { rows.push_back({k, v, true}); }

    std::string render(const std::string& format) const {
        std::string out;
        if (format == "json") {
            out += "{";
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (i) out += ",";
                out += json_quote(rows[i].key) + ":";
                out += rows[i].quoted ? json_quote(rows[i].value) : rows[i].value;
            }
            out += "}\n";
            return out;
        }
        if (format == "csv") {
            out += "key,value\n";
            for (const auto& r : rows) out += r.key + "," + r.value + "\n";
            return out;
        }
        for (const auto& r : rows) out += r.key + " " + r.value + "\n";
        return out;
    }
};

struct Common {
    std::string format = "table";
    std::string out_path;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--format", c.format, "output format")
        ->check(CLI::IsMember({"json", "csv", "table"}))
        ->capture_default_str();
    sub->add_option("--out", c.out_path, "write output to this file instead of stdout");
}

arbgeo::expfam::Model resolve_model(const std::string& name, const std::string& file) {
    if (name.empty() == file.empty())
        throw std::runtime_error("provide exactly one of --model and --model-file");
    if (!file.empty()) return arbgeo::expfam::model_from_json(read_file(file));
    return arbgeo::expfam::model_from_json("{\"kind\":\"" + name + "\"}");
}

arbgeo::sufficiency::DiscreteFamily preset_family(const std::string& name) {
    using arbgeo::sufficiency::DiscreteFamily;
    const auto grid1 = [](std::initializer_list<double> xs) {
        std::vector<Eigen::VectorXd> g;
        for (double x : xs) g.push_back(Eigen::VectorXd::Constant(1, x));
        return g;
    };
    if (name == "exp3") {
        Eigen::MatrixXd T(3, 1);
        T << 0.0, 1.0, 2.0;
        return DiscreteFamily::from_expfam(
            arbgeo::expfam::Model::custom_finite({0.0, 1.0, 2.0}, T), grid1({-1.0, 0.0, 1.0}));
    }
    if (name == "mixture") {
        const Eigen::Vector3d u(0.7, 0.2, 0.1), v(0.1, 0.3, 0.6);
        Eigen::MatrixXd t(9, 3);
        std::vector<Eigen::VectorXd> grid;
        for (int i = 0; i < 9; ++i) {
            const double th = 0.1 * (i + 1);
            grid.push_back(Eigen::VectorXd::Constant(1, th));
            t.row(i) = ((1.0 - th) * u + th * v).transpose();
        }
        return DiscreteFamily::make({0.0, 1.0, 2.0}, grid, t);
    }
    if (name == "bernoulli") {
        Eigen::MatrixXd t(3, 2);
        t << 0.8, 0.2, 0.5, 0.5, 0.2, 0.8;
        return DiscreteFamily::make({0.0, 1.0}, grid1({0.2, 0.5, 0.8}), t);
    }
    throw std::runtime_error("unknown family preset: " + name +
                             " (expected exp3, mixture or bernoulli)");
}

std::string join_cycle(const std::vector<std::string>& cycle) {
    std::string out;
    for (std::size_t i = 0; i < cycle.size(); ++i) {
        if (i) out += "->";
        out += cycle[i];
    }
    return out;
}

// ---- subcommand payloads ----

struct BoylingArgs {
    Common common;
    double x0 = 0.0;
    double gap = 1e-3;
    int samples = 20;
    double start_x = 0.0;
    double start_y = 0.5;
    double arclength = 1.0;
    double step = 1e-3;
    std::string curve_out;
};

int run_boyling(const BoylingArgs& a) {
    namespace forms = arbgeo::forms;
    const auto form = forms::boyling_form();

    const auto rect = forms::rectangle_loop(0.0, 1.0, 0.25, 0.75, 256);
    const double gain = forms::loop_gain(form, rect, 2);
    const double oracle = forms::green_rectangle_integral(form, 0.0, 1.0, 0.25, 0.75, 256, 256, 1e-4);

    const auto lower = forms::decay_exponent_probe(forms::Boundary::lower, a.x0, a.gap, a.samples);
    const auto upper = forms::decay_exponent_probe(forms::Boundary::upper, a.x0, a.gap, a.samples);

    Eigen::Vector2d start(a.start_x, a.start_y);
    const auto curve = forms::characteristic_curve(form, start, a.arclength, a.step);
    const std::string curve_csv = forms::curve_csv(curve);

    Scalars s;
    s.num("loop_gain", gain);
    s.num("green_oracle", oracle);
    s.num("slope_lower", lower.fitted_slope);
    s.num("residual_lower", lower.residual);
    s.num("slope_upper", upper.fitted_slope);
    s.num("residual_upper", upper.residual);

    std::string payload;
    if (a.common.format == "json") {
        std::string body = s.render("json");
        body.erase(body.find_last_of('}'));  // reopen the object to append the curve
        body += ",\"curve\":[";
        bool first = true;
        std::istringstream lines(curve_csv);
        std::string line;
        std::getline(lines, line);  // header
        while (std::getline(lines, line)) {
            if (!first) body += ",";
            first = false;
            body += "[";
            std::size_t pos = 0;
            bool inner_first = true;
            while (pos <= line.size()) {
                const std::size_t comma = line.find(',', pos);
                if (!inner_first) body += ",";
                inner_first = false;
                body += line.substr(pos, comma == std::string::npos ? comma : comma - pos);
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
            body += "]";
        }
        body += "]}\n";
        payload = body;
    } else {
        payload = s.render(a.common.format);
        if (a.curve_out.empty()) payload += "\n" + curve_csv;
    }
    if (!a.curve_out.empty()) emit(curve_csv, a.curve_out);
    emit(payload, a.common.out_path);
    return 0;
}

struct ExpfamArgs {
    Common common;
    std::string model, model_file;
    std::string theta, theta2;
};

int run_expfam(const ExpfamArgs& a) {
    namespace ef = arbgeo::expfam;
    const ef::Model model = resolve_model(a.model, a.model_file);
    if (a.theta.empty()) throw std::runtime_error("--theta is required");
    ef::NaturalParams theta;
    theta.theta = parse_vector(a.theta);

    const double psi = ef::log_partition(model, theta);
    const ef::MeanParams eta = ef::mean_params(model, theta);
    const ef::FisherMetric g = ef::fisher_metric(model, theta);
    const double phi = ef::dual_potential(model, eta);

    Scalars s;
    s.num("psi", psi);
    for (Eigen::Index i = 0; i < eta.eta.size(); ++i)
        s.num("eta_" + std::to_string(i + 1), eta.eta[i]);
    for (Eigen::Index r = 0; r < g.g.rows(); ++r)
        for (Eigen::Index c = 0; c < g.g.cols(); ++c)
            s.num("g_" + std::to_string(r + 1) + "_" + std::to_string(c + 1), g.g(r, c));
    s.num("phi", phi);
    if (!a.theta2.empty()) {
        ef::NaturalParams theta2;
        theta2.theta = parse_vector(a.theta2);
        const ef::MeanParams eta2 = ef::mean_params(model, theta2);
        s.num("bregman", ef::bregman_divergence(model, eta, eta2));
    }
    emit(s.render(a.common.format), a.common.out_path);
    return 0;
}

struct SufficiencyArgs {
    Common common;
    std::string family = "exp3";
    std::string family_file;
    int n_max = 6;
    double ratio_tol = 1e-9;
};

int run_sufficiency(const SufficiencyArgs& a) {
    const auto fam = a.family_file.empty()
                         ? preset_family(a.family)
                         : arbgeo::sufficiency::family_from_json(read_file(a.family_file));
    const auto probe = arbgeo::sufficiency::pkd_growth_probe(fam, a.n_max, a.ratio_tol);

    std::string payload;
    if (a.common.format == "json") {
        payload = "{\"growth\":[";
        for (std::size_t i = 0; i < probe.size(); ++i) {
            if (i) payload += ",";
            payload += "[" + std::to_string(probe[i].first) + "," +
                       std::to_string(probe[i].second) + "]";
        }
        payload += "]}\n";
    } else if (a.common.format == "csv") {
        payload = arbgeo::sufficiency::growth_csv(probe);
    } else {
        payload = "n class_count\n";
        for (const auto& [n, c] : probe)
            payload += std::to_string(n) + " " + std::to_string(c) + "\n";
    }
    emit(payload, a.common.out_path);
    return 0;
}

struct ArbArgs {
    Common common;
    std::string file;
    double tol = 1e-9;
    bool triangles = false;
};

int run_arb(const ArbArgs& a) {
    namespace mg = arbgeo::market_graph;
    const mg::MarketGraph graph = mg::load_rates_file(a.file);

    if (a.triangles) {
        const auto reports = mg::triangular_scan(graph, a.tol);
        std::string payload;
        if (a.common.format == "json") {
            payload = "{\"cycles\":[";
            for (std::size_t i = 0; i < reports.size(); ++i) {
                if (i) payload += ",";
                payload += mg::report_json(reports[i]);
            }
            payload += "]}\n";
        } else if (a.common.format == "csv") {
            payload = "cycle,log_gain\n";
            for (const auto& r : reports)
                payload += join_cycle(r.cycle) + "," + fmt9(r.log_gain) + "\n";
        } else {
            for (const auto& r : reports)
                payload += join_cycle(r.cycle) + " " + fmt9(r.log_gain) + "\n";
        }
        emit(payload, a.common.out_path);
        return reports.empty() ? 0 : 2;
    }

    const auto hit = mg::find_arbitrage(graph, a.tol);
    if (hit) {
        std::string payload;
        if (a.common.format == "json") {
            payload = mg::report_json(*hit) + "\n";
        } else if (a.common.format == "csv") {
            payload = "cycle,log_gain\n" + join_cycle(hit->cycle) + "," + fmt9(hit->log_gain) +
                      "\n";
        } else {
            payload = "cycle " + join_cycle(hit->cycle) + "\nlog_gain " + fmt9(hit->log_gain) +
                      "\n";
        }
        emit(payload, a.common.out_path);
        return 2;
    }

    const auto pot = mg::node_potentials(graph, a.tol);
    if (!pot)
        throw std::runtime_error(
            "graph is neither arbitrage-free nor potential-consistent at this tolerance");
    std::string payload;
    if (a.common.format == "json") {
        payload = "{\"consistent\":true,\"reference\":" + json_quote(pot->reference) +
                  ",\"potentials\":{";
        for (std::size_t i = 0; i < pot->potentials.size(); ++i) {
            if (i) payload += ",";
            payload += json_quote(pot->potentials[i].first) + ":" +
                       fmt9(pot->potentials[i].second);
        }
        payload += "}}\n";
    } else if (a.common.format == "csv") {
        payload = "node,potential\n";
        for (const auto& [node, value] : pot->potentials)
            payload += node + "," + fmt9(value) + "\n";
    } else {
        payload = "consistent\nreference " + pot->reference + "\n";
        for (const auto& [node, value] : pot->potentials)
            payload += node + " " + fmt9(value) + "\n";
    }
    emit(payload, a.common.out_path);
    return 0;
}

struct FlowArgs {
    Common common;
    std::string model, model_file;
    std::string eta0, theta_star;
    std::string L_inline, L_file;
    double dt = 0.01;
    int steps = 1000;
};

int run_flow(const FlowArgs& a) {
    namespace ef = arbgeo::expfam;
    namespace dyn = arbgeo::dynamics;
    const ef::Model model = resolve_model(a.model, a.model_file);
    if (a.eta0.empty() || a.theta_star.empty())
        throw std::runtime_error("--eta0 and --theta-star are required");
    ef::MeanParams eta0;
    eta0.eta = parse_vector(a.eta0);
    ef::NaturalParams theta_star;
    theta_star.theta = parse_vector(a.theta_star);

    std::optional<dyn::TransportMatrix> L;
    if (!a.L_inline.empty() && !a.L_file.empty())
        throw std::runtime_error("provide at most one of --L and --L-file");
    if (!a.L_inline.empty()) L = dyn::transport_from_json("{\"L\":" + a.L_inline + "}");
    if (!a.L_file.empty()) L = dyn::transport_from_json(read_file(a.L_file));

    const auto states = dyn::gradient_flow(model, eta0, theta_star, L, a.dt, a.steps);
    const std::string csv = dyn::trajectory_csv(states);

    std::string payload;
    if (a.common.format == "json") {
        std::istringstream lines(csv);
        std::string line;
        std::getline(lines, line);
        payload = "{\"columns\":[";
        std::size_t pos = 0;
        bool first = true;
        while (pos <= line.size()) {
            const std::size_t comma = line.find(',', pos);
            if (!first) payload += ",";
            first = false;
            payload += json_quote(line.substr(pos, comma == std::string::npos ? comma : comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        payload += "],\"rows\":[";
        bool first_row = true;
        while (std::getline(lines, line)) {
            if (!first_row) payload += ",";
            first_row = false;
            payload += "[";
            pos = 0;
            first = true;
            while (pos <= line.size()) {
                const std::size_t comma = line.find(',', pos);
                if (!first) payload += ",";
                first = false;
                payload += line.substr(pos, comma == std::string::npos ? comma : comma - pos);
                if (comma == std::string::npos) break;
                pos = comma + 1;
            }
            payload += "]";
        }
        payload += "]}\n";
    } else {
        payload = csv;  // the trajectory is already tabular
    }
    emit(payload, a.common.out_path);
    return 0;
}

struct OnsagerArgs {
    Common common;
    std::string L_inline, L_file;
    double radius = 1.0;
    double center_x = 0.0;
    double center_y = 0.0;
    int loop_samples = 20000;
};

int run_onsager(const OnsagerArgs& a) {
    namespace dyn = arbgeo::dynamics;
    if (a.L_inline.empty() == a.L_file.empty())
        throw std::runtime_error("provide exactly one of --L and --L-file");
    const dyn::TransportMatrix L = a.L_inline.empty()
                                       ? dyn::transport_from_json(read_file(a.L_file))
                                       : dyn::transport_from_json("{\"L\":" + a.L_inline + "}");
    if (L.L.rows() != 2)
        throw std::runtime_error("onsager requires a 2x2 transport matrix");

    const auto [S, A] = dyn::decompose(L);
    const auto loop = arbgeo::forms::circle_loop(a.center_x, a.center_y, a.radius, a.loop_samples);
    const double work = dyn::round_trip_work(L, loop, 1);

    Scalars s;
    s.num("symmetry_defect", dyn::symmetry_defect(L));
    for (Eigen::Index r = 0; r < 2; ++r)
        for (Eigen::Index c = 0; c < 2; ++c)
            s.num("S_" + std::to_string(r + 1) + "_" + std::to_string(c + 1), S.L(r, c));
    for (Eigen::Index r = 0; r < 2; ++r)
        for (Eigen::Index c = 0; c < 2; ++c)
            s.num("A_" + std::to_string(r + 1) + "_" + std::to_string(c + 1), A.L(r, c));
    s.num("round_trip_work", work);

    bool invertible = true;
    dyn::TransportMatrix M;
    try {
        M = dyn::price_impact(L);
    } catch (const arbgeo::SingularityError&) {
        invertible = false;
    }
    s.num("invertible", invertible ? 1.0 : 0.0);
    if (invertible)
        for (Eigen::Index r = 0; r < 2; ++r)
            for (Eigen::Index c = 0; c < 2; ++c)
                s.num("M_" + std::to_string(r + 1) + "_" + std::to_string(c + 1), M.L(r, c));

    emit(s.render(a.common.format), a.common.out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"arbitrage geometry toolkit: pathological 1-forms, exponential families,\n"
                 "sufficiency probes, rate-graph arbitrage and Onsager diagnostics"};
    app.require_subcommand(1);
    unsigned seed = 0;
    app.add_option("--seed", seed, "reserved for future randomized modes; output is deterministic");

    BoylingArgs boy;
    auto* boy_cmd = app.add_subcommand(
        "boyling", "loop gain, boundary decay slopes and a characteristic curve");
    add_common(boy_cmd, boy.common);
    boy_cmd->add_option("--x0", boy.x0, "probe launch x coordinate")->capture_default_str();
    boy_cmd->add_option("--gap", boy.gap, "smallest boundary gap, in (0, 0.1)")
        ->capture_default_str();
    boy_cmd->add_option("--samples", boy.samples, "geometric gap samples per boundary")
        ->capture_default_str();
    boy_cmd->add_option("--start-x", boy.start_x, "curve start x")->capture_default_str();
    boy_cmd->add_option("--start-y", boy.start_y, "curve start y")->capture_default_str();
    boy_cmd->add_option("--arclength", boy.arclength, "curve arclength")->capture_default_str();
    boy_cmd->add_option("--step", boy.step, "curve integration step")->capture_default_str();
    boy_cmd->add_option("--curve-out", boy.curve_out,
                        "write the curve CSV to this file instead of stdout");

    ExpfamArgs ef;
    auto* ef_cmd = app.add_subcommand("expfam", "potential, mean parameters and Fisher metric");
    add_common(ef_cmd, ef.common);
    ef_cmd->add_option("--model", ef.model,
                       "built-in model kind (bernoulli, poisson_truncated, gaussian_unit_variance)");
    ef_cmd->add_option("--model-file", ef.model_file, "model JSON file");
    ef_cmd->add_option("--theta", ef.theta, "natural parameters, comma separated");
    ef_cmd->add_option("--theta2", ef.theta2,
                       "second natural parameter point for the Bregman divergence");

    SufficiencyArgs suf;
    auto* suf_cmd = app.add_subcommand("sufficiency", "minimal-sufficient partition growth");
    add_common(suf_cmd, suf.common);
    suf_cmd->add_option("--family", suf.family, "family preset: exp3, mixture or bernoulli")
        ->capture_default_str();
    suf_cmd->add_option("--family-file", suf.family_file, "family JSON file");
    suf_cmd->add_option("--n-max", suf.n_max, "largest sample size")->capture_default_str();
    suf_cmd->add_option("--tol", suf.ratio_tol, "likelihood-ratio equivalence tolerance")
        ->capture_default_str();

    ArbArgs arb;
    auto* arb_cmd = app.add_subcommand("arb", "arbitrage scan of a rates file");
    add_common(arb_cmd, arb.common);
    arb_cmd->add_option("file", arb.file, "rates file (CSV or JSON)")->required();
    arb_cmd->add_option("--tol", arb.tol, "log-space gain tolerance")->capture_default_str();
    arb_cmd->add_flag("--triangles", arb.triangles, "scan directed 3-cycles instead");

    FlowArgs flow;
    auto* flow_cmd = app.add_subcommand("flow", "gradient flow trajectory toward an equilibrium");
    add_common(flow_cmd, flow.common);
    flow_cmd->add_option("--model", flow.model, "built-in model kind");
    flow_cmd->add_option("--model-file", flow.model_file, "model JSON file");
    flow_cmd->add_option("--eta0", flow.eta0, "initial mean parameters, comma separated");
    flow_cmd->add_option("--theta-star", flow.theta_star, "equilibrium natural parameters");
    flow_cmd->add_option("--L", flow.L_inline, "transport matrix rows as JSON");
    flow_cmd->add_option("--L-file", flow.L_file, "transport matrix JSON file");
    flow_cmd->add_option("--dt", flow.dt, "time step")->capture_default_str();
    flow_cmd->add_option("--steps", flow.steps, "number of steps")->capture_default_str();

    OnsagerArgs ons;
    auto* ons_cmd = app.add_subcommand(
        "onsager", "symmetry diagnostics, round-trip work and price impact of a transport matrix");
    add_common(ons_cmd, ons.common);
    ons_cmd->add_option("--L", ons.L_inline, "transport matrix rows as JSON");
    ons_cmd->add_option("--L-file", ons.L_file, "transport matrix JSON file");
    ons_cmd->add_option("--loop-radius", ons.radius, "work loop radius")->capture_default_str();
    ons_cmd->add_option("--loop-center-x", ons.center_x, "work loop center x")
        ->capture_default_str();
    ons_cmd->add_option("--loop-center-y", ons.center_y, "work loop center y")
        ->capture_default_str();
    ons_cmd->add_option("--loop-samples", ons.loop_samples, "work loop sample count")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help goes to stdout
        std::string msg = e.what();
        for (auto& c : msg)
            if (c == '\n') c = ' ';
        std::cerr << "error: " << msg << "\n";
        return 1;
    }

    try {
        if (boy_cmd->parsed()) return run_boyling(boy);
        if (ef_cmd->parsed()) return run_expfam(ef);
        if (suf_cmd->parsed()) return run_sufficiency(suf);
        if (arb_cmd->parsed()) return run_arb(arb);
        if (flow_cmd->parsed()) return run_flow(flow);
        if (ons_cmd->parsed()) return run_onsager(ons);
    } catch (const std::exception& e) {
        std::string msg = e.what();
        for (auto& c : msg)
            if (c == '\n') c = ' ';
        std::cerr << "error: " << msg << "\n";
        return 1;
    }
    return 0;
}
