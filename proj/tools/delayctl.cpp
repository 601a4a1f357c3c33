// SPDX-License-Identifier: MIT
//
// delayctl: command-line front end. Each subcommand loads a JSON problem spec,
// runs one computation and writes CSV tables plus manifest.json into --out.
// Exit status: 0 success, 1 invalid input, 2 numerical failure; failures also
// print a one-line JSON record on stderr.

#include "delayctl/delayctl.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#ifndef DELAYCTL_VERSION
#define DELAYCTL_VERSION "dev"
#endif

using namespace delayctl;
namespace fs = std::filesystem;

namespace {

using Cell = CsvTable::Cell;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Common {
    std::string spec;
    std::string out = ".";
    std::uint64_t seed = 1;
    bool svg = false;
    int m = 0;  // overrides the spec's interval count when positive
};

struct SolverFlags {
    std::optional<int> mlag;
    std::string grid;
    std::optional<double> tol;
    std::optional<int> max_iter;
    int gh_points = 5;
};

struct PlotHint {
    std::string x;
    std::vector<std::string> y;
    bool log_y = false;
    bool scatter = false;
};

/// Collects tables for one invocation and writes them, the plots and the
/// manifest in a single pass at the end.
class Run {
public:
    Run(std::string command, const Common& c)
        : common_(c), start_(std::chrono::steady_clock::now()) {
        manifest_.version = DELAYCTL_VERSION;
        manifest_.command = std::move(command);
        manifest_.threads = thread_count();
        manifest_.parameters["seed"] = c.seed;
    }

    LoadedSpec load() {
        if (common_.spec.empty()) throw ValidationError("--spec is required");
        const std::string text = read_file(common_.spec);
        json patch = json::object();
        if (common_.m > 0) patch["m"] = common_.m;
        LoadedSpec l = parse_spec_text(text, patch);
        manifest_.spec_path = common_.spec;
        manifest_.spec_sha256 = sha256_hex(text);
        auto& p = manifest_.parameters;
        p["model"] = l.spec.family;
        p["delay"] = l.spec.delay();
        p["m"] = l.spec.grid.intervals();
        p["model_parameters"] = l.spec.parameters;
        return l;
    }

    json& param(const std::string& key) { return manifest_.parameters[key]; }

    void table(const std::string& name, const CsvTable& t, std::optional<PlotHint> plot = std::nullopt) {
        tables_.push_back({name, t.str(), std::move(plot)});
    }

    void finish() {
        fs::create_directories(common_.out);
        for (const auto& t : tables_) {
            const fs::path path = fs::path(common_.out) / (t.name + ".csv");
            std::ofstream f(path, std::ios::binary);
            if (!f) throw ValidationError("cannot write " + path.string());
            f << t.bytes;
            manifest_.add_artifact(path.filename().string(), t.bytes);
            if (common_.svg && t.plot) {
                SvgPlot plot = plot_csv(parse_csv(t.bytes), t.plot->x, t.plot->y, manifest_.command + ": " + t.name,
                                        t.plot->scatter);
                plot.log_y(t.plot->log_y);
                plot.save((fs::path(common_.out) / (t.name + ".svg")).string());
            }
        }
        manifest_.wall_clock =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        manifest_.save((fs::path(common_.out) / "manifest.json").string());
    }

private:
    struct Pending {
        std::string name;
        std::string bytes;
        std::optional<PlotHint> plot;
    };
    Common common_;
    RunManifest manifest_;
    std::vector<Pending> tables_;
    std::chrono::steady_clock::time_point start_;
};

CsvTable key_values() { return CsvTable({"quantity", "value"}); }

void kv(CsvTable& t, const std::string& key, Cell value) { t.add({Cell(key), std::move(value)}); }

std::vector<std::string> control_names(const ProblemSpec& s) {
    if (s.p == 1) return {"u"};
    std::vector<std::string> out;
    for (int i = 0; i < s.p; ++i) out.push_back("u" + std::to_string(i + 1));
    return out;
}

std::vector<std::string> state_names(const ProblemSpec& s) {
    std::vector<std::string> out;
    for (int i = 0; i < s.n; ++i) out.push_back(s.state_name(i));
    return out;
}

template <typename... Parts>
std::vector<std::string> concat(Parts&&... parts) {
    std::vector<std::string> out;
    (out.insert(out.end(), parts.begin(), parts.end()), ...);
    return out;
}

void append(std::vector<Cell>& row, const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) row.emplace_back(v[i]);
}

// ---------------------------------------------------------------- horizons

/// Explicit --T, else the spec's horizon, else the truncation horizon for tail tolerance
/// `tol`; rounded up to a multiple of dt.
double resolve_horizon(double flag_T, const LoadedSpec& l, double dt, double tol) {
    double T = flag_T;
    if (!(T > 0.0)) {
        if (l.horizon) {
            T = *l.horizon;
        } else {
            try {
                T = truncation_horizon(l.spec, lifted_norm(l.initial), tol);
            } catch (const InadmissibleDiscountError& e) {
                throw ValidationError(std::string("no horizon given and ") + e.what() + "; pass --T or set 'horizon'");
            }
        }
    }
    if (!(dt > 0.0)) throw ValidationError("--dt must be positive");
    return std::max(1.0, std::ceil(T / dt - 1e-9)) * dt;
}

double truncation_or_nan(const LoadedSpec& l, double tol) {
    try {
        return truncation_horizon(l.spec, lifted_norm(l.initial), tol);
    } catch (const InadmissibleDiscountError&) {
        return kNaN;
    }
}

// ---------------------------------------------------------------- solving

struct Solved {
    std::unique_ptr<LagChain> chain;
    ValueIterationSettings settings;
    ValueIterationResult result;
    PolicyField feedback;
};

Solved solve(const LoadedSpec& l, const SolverFlags& f, Run& run) {
    Solved s;
    const int mlag = f.mlag.value_or(l.solver.mlag);
    const std::string grid = f.grid.empty() ? l.solver.grid : f.grid;
    if (grid.empty()) throw ValidationError("no solver grid: pass --grid or set solver.grid in the spec");
    s.settings.tol = f.tol.value_or(l.solver.tol);
    s.settings.max_iter = f.max_iter.value_or(l.solver.max_iter);
    s.settings.gh_points = f.gh_points;
    s.chain = std::make_unique<LagChain>(l.spec, mlag);
    const TensorGrid tg = chain_grid(*s.chain, parse_grid_spec(grid));
    run.param("solver") = {{"mlag", mlag},
                           {"grid", grid},
                           {"tol", s.settings.tol},
                           {"max_iter", s.settings.max_iter},
                           {"gh_points", s.settings.gh_points},
                           {"nodes", tg.size()}};
    s.result = value_iteration(*s.chain, tg, s.settings);
    for (const auto& w : s.result.warnings) std::cerr << "warning: " << w << '\n';
    s.feedback = extract_feedback(*s.chain, s.result.value);
    return s;
}

// ---------------------------------------------------------------- controls

/// A control process together with whatever it borrows (chain, policy table).
struct ControlChoice {
    ControlProcess process = ControlProcess::constant(Eigen::VectorXd::Zero(1));
    std::string label;
    std::unique_ptr<LagChain> chain;
    std::unique_ptr<RegisterPolicy> policy;
};

/// Rebuilds a policy table from a field CSV written by `solve`: coordinate columns
/// precede "value", the control index column is `column`.
std::unique_ptr<RegisterPolicy> load_policy(const ProblemSpec& spec, const std::string& path, const std::string& column,
                                            std::unique_ptr<LagChain>& chain_out) {
    const CsvData d = parse_csv(read_file(path));
    const int D = d.column("value");
    if (D < spec.n || D % spec.n != 0) throw ValidationError(path + ": coordinate columns do not match the model");
    const int ci = d.column(column);
    std::vector<Axis> axes;
    for (int k = 0; k < D; ++k) {
        std::vector<double> vals;
        for (const auto& r : d.rows) vals.push_back(detail::parse_double(r[static_cast<std::size_t>(k)], path));
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        axes.push_back({d.header[static_cast<std::size_t>(k)], vals.front(), vals.back(), static_cast<int>(vals.size())});
    }
    chain_out = std::make_unique<LagChain>(spec, D / spec.n - 1);
    for (int k = 0; k < D; ++k)
        if (axes[static_cast<std::size_t>(k)].name != chain_out->coordinate_name(k))
            throw ValidationError(path + ": column " + axes[static_cast<std::size_t>(k)].name + " where " +
                                  chain_out->coordinate_name(k) + " was expected");
    PolicyField pf{TensorGrid(axes), {}};
    if (pf.grid.size() != d.rows.size()) throw ValidationError(path + ": rows do not form a tensor grid");
    for (std::size_t node = 0; node < d.rows.size(); ++node) {
        const Eigen::VectorXd z = pf.grid.point(node);
        for (int k = 0; k < D; ++k) {
            const double v = detail::parse_double(d.rows[node][static_cast<std::size_t>(k)], path);
            if (std::abs(v - z[k]) > 1e-9 * std::max(1.0, std::abs(v)))
                throw ValidationError(path + ": rows are not in grid order");
        }
        const long long idx = detail::parse_int(d.rows[node][static_cast<std::size_t>(ci)], path);
        if (idx < 0) throw ValidationError(path + ": negative control index");
        pf.index.push_back(static_cast<std::size_t>(idx));
    }
    return std::make_unique<RegisterPolicy>(*chain_out, std::move(pf));
}

/// "const:u[,u2,...]" (must be a member of the control set) or "policy:FILE".
ControlChoice parse_control(const ProblemSpec& spec, const std::string& text) {
    ControlChoice c;
    if (text.empty()) {
        c.process = ControlProcess::constant(spec.controls.front());
        c.label = "const:" + format_number(spec.controls.front()[0]);
        return c;
    }
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (kind == "const") {
        const auto parts = detail::split(arg, ',');
        if (static_cast<int>(parts.size()) != spec.p) throw ValidationError("--control const: needs p components");
        Eigen::VectorXd u(spec.p);
        for (int i = 0; i < spec.p; ++i) u[i] = detail::parse_double(parts[static_cast<std::size_t>(i)], "--control");
        bool member = false;
        for (const auto& v : spec.controls) member = member || (v - u).norm() <= 1e-12 * std::max(1.0, u.norm());
        if (!member) throw ValidationError("--control: " + arg + " is not in the control set");
        c.process = ControlProcess::constant(u);
        c.label = text;
        return c;
    }
    if (kind == "policy") {
        if (arg.empty()) throw ValidationError("--control policy: needs a file");
        c.policy = load_policy(spec, arg, "feedback", c.chain);
        c.process = c.policy->control();
        c.label = text;
        return c;
    }
    throw ValidationError("--control must be const:u or policy:FILE");
}

MonteCarloSettings mc_settings(double T, double dt, std::size_t paths, std::uint64_t seed) {
    MonteCarloSettings s;
    s.T = T;
    s.dt = dt;
    s.paths = paths;
    s.seed = seed;
    return s;
}

// ---------------------------------------------------------------- subcommands

struct SimFlags {
    double T = 0.0;
    double dt = 0.01;
    std::size_t paths = 100;
    std::size_t keep = 5;
    std::string control;
    double tail_tol = 1e-3;
};

void cmd_simulate(const Common& c, const SimFlags& f) {
    Run run("simulate", c);
    const LoadedSpec l = run.load();
    const ControlChoice ctrl = parse_control(l.spec, f.control);
    const double T = resolve_horizon(f.T, l, f.dt, f.tail_tol);
    const std::size_t paths = std::max<std::size_t>(f.paths, 2);
    run.param("simulate") = {{"T", T}, {"dt", f.dt}, {"paths", paths}, {"control", ctrl.label}, {"tail_tol", f.tail_tol}};

    CsvTable pt(concat(std::vector<std::string>{"path", "t"}, state_names(l.spec), control_names(l.spec)));
    const std::size_t keep = std::min(f.keep, l.spec.dynamics.deterministic ? std::size_t{1} : paths);
    for (std::size_t p = 0; p < keep; ++p) {
        BrownianDriver drv(c.seed, p, l.spec.q, f.dt);
        const SddePath path = simulate_sdde(l.spec, l.initial, ctrl.process, T, f.dt, drv);
        for (int k = 0; k <= path.steps; ++k) {
            std::vector<Cell> row{static_cast<long long>(p), path.time(k)};
            append(row, path.states.col(k));
            if (k < path.steps)
                append(row, path.controls.col(k));
            else
                for (int i = 0; i < l.spec.p; ++i) row.emplace_back(kNaN);
            pt.add(std::move(row));
        }
    }
    const SampleStats st = mc_cost(l.spec, l.initial, ctrl.process, mc_settings(T, f.dt, paths, c.seed));
    CsvTable sum = key_values();
    kv(sum, "mean", st.mean);
    kv(sum, "stderr", st.std_error);
    kv(sum, "paths", static_cast<long long>(st.count));
    kv(sum, "T", T);
    kv(sum, "dt", f.dt);
    kv(sum, "T_trunc", truncation_or_nan(l, f.tail_tol));
    if (ctrl.policy) kv(sum, "clamp_rate", ctrl.policy->clamp_rate());
    run.table("paths", pt, PlotHint{"t", state_names(l.spec), false, false});
    run.table("summary", sum);
    run.finish();
}

struct LiftFlags {
    double T = 1.0;
    double dt = 1e-3;
    std::size_t paths = 1;
    std::string control;
};

void cmd_lift_check(const Common& c, const LiftFlags& f) {
    Run run("lift-check", c);
    const LoadedSpec l = run.load();
    const ControlChoice ctrl = parse_control(l.spec, f.control);
    if (ctrl.policy) throw ValidationError("lift-check needs an open-loop control");
    run.param("lift") = {{"T", f.T}, {"dt", f.dt}, {"paths", f.paths}, {"control", ctrl.label}};
    CsvTable t({"scheme", "dt", "m", "head_mismatch", "tail_mismatch", "scale", "head_relative", "ratio", "tail_ratio"});
    for (const auto scheme : {MildTail::Nodal, MildTail::Reconstructed}) {
        const auto r = equivalence_report(l.spec, l.initial, ctrl.process, f.T, f.dt, c.seed, f.paths, scheme);
        const std::string name = scheme == MildTail::Nodal ? "nodal" : "reconstructed";
        for (const auto* lv : {&r.coarse, &r.fine})
            t.add({name, lv->dt, static_cast<long long>(lv->intervals), lv->head_mismatch, lv->tail_mismatch,
                   lv->scale, lv->head_relative(), r.head_ratio(), r.tail_ratio()});
    }
    run.table("lift", t);
    run.finish();
}

struct OpFlags {
    std::size_t samples = 1000;
    int remark_m = 1280;
};

struct Extremes {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    std::size_t n = 0;
    void add(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
        ++n;
    }
};

void cmd_operators(const Common& c, const OpFlags& f) {
    Run run("operators", c);
    const LoadedSpec l = run.load();
    const SegmentGrid& g = l.spec.grid;
    const int n = l.spec.n;
    if (f.samples < 1) throw ValidationError("--samples must be >= 1");
    run.param("operators") = {{"samples", f.samples}, {"remark_m", f.remark_m}};

    // Randomized identities; sample i draws from its own stream so the table does not
    // depend on evaluation order.
    const std::vector<double> times{0.1 * g.delay(), 0.37 * g.delay(), g.delay(), 1.5 * g.delay()};
    std::vector<std::array<double, 7>> vals(f.samples);
    parallel_for(f.samples, [&](std::size_t i) {
        std::mt19937_64 rng(mix64(c.seed ^ mix64(i)));
        const LiftedState x = random_smooth_state(g, n, rng, false);
        const LiftedState xd = random_smooth_state(g, n, rng, true);
        const double nx = lifted_norm(x), nxd2 = std::pow(lifted_norm(xd), 2);
        const LiftedState inv = apply_Atilde_inv(x);
        double sg = 0.0;
        for (double t : times) sg = std::max(sg, lifted_norm(apply_semigroup_A(t, x)) / nx);
        const double dis = dissipativity_form(xd);
        vals[i] = {lifted_norm(apply_Atilde(inv) - x) / nx,
                   inv.domain_defect(),
                   x.head().norm() - minus_one_norm(x),
                   sg,
                   dis / nxd2,
                   std::abs(dis - dissipativity_closed_form(xd)) / nxd2,
                   weak_B_form(x) / (nx * nx)};
    });
    static const char* names[] = {"identity_relative_error", "domain_defect",   "head_minus_norm_gap",
                                  "semigroup_norm_ratio",    "dissipativity",   "dissipativity_closed_form_gap",
                                  "weak_B"};
    const double bounds[] = {1e-3, 0.0, 1e-9, semigroup_norm_bound(g.delay()), 1e-8, g.step(), 1e-8};
    CsvTable forms({"quantity", "min", "max", "mean", "bound"});
    for (int q = 0; q < 7; ++q) {
        Extremes e;
        for (const auto& v : vals) e.add(v[static_cast<std::size_t>(q)]);
        forms.add({names[q], e.lo, e.hi, e.sum / static_cast<double>(e.n), bounds[q]});
    }

    const OperatorMatrix B = assemble_B(g, n);
    const SpectralDecomposition sp = spectral_B(B);
    CsvTable spectrum({"index", "lambda", "bq_norm"});
    for (int i = 0; i < sp.dim(); ++i)
        spectrum.add({static_cast<long long>(i + 1), sp.eigenvalues()[i], sp.bq_norm(i + 1)});
    const Eigen::MatrixXd Bm = B.matrix;
    double trace = 0.0;
    for (int i = 0; i < Bm.rows(); ++i) trace += Bm(i, i);
    const Eigen::MatrixXd b00 = bq_head_block(sp, 0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (b00 + b00.transpose()));
    int positive_tail = 0;
    for (int i = 0; i < sp.positive_dimension(); ++i) positive_tail += sp.eigenvalues()[i] > 0.0;
    CsvTable spec_t = key_values();
    kv(spec_t, "dimension", static_cast<long long>(sp.dim()));
    kv(spec_t, "null_dimension", static_cast<long long>(sp.null_dimension()));
    kv(spec_t, "smallest", sp.smallest());
    kv(spec_t, "smallest_positive", sp.eigenvalues()[sp.positive_dimension() - 1]);
    kv(spec_t, "largest", sp.largest());
    kv(spec_t, "reconstruction_error", (sp.reconstruct() - Bm).norm() / Bm.norm());
    kv(spec_t, "trace_error", std::abs(sp.eigenvalues().sum() - trace) / std::abs(trace));
    kv(spec_t, "head_block_min_eigenvalue", es.eigenvalues()[0]);
    kv(spec_t, "atilde_inv_norm", atilde_inv_norm(sp));

    const Eigen::VectorXd tail = trace_tail_profile(l.spec, sp, l.initial);
    CsvTable trace_t({"N", "trace_tail", "bq_norm"});
    for (int N = 0; N <= sp.dim(); ++N) trace_t.add({static_cast<long long>(N), tail[N], N == 0 ? sp.largest() : sp.bq_norm(N)});

    // Oscillating spikes: small in |.|_{-1}, yet a = 1 always reads mass 1.
    const SegmentGrid rg(g.delay(), f.remark_m);
    const Kernel one = Kernel::from_preset(KernelPreset{"constant", 1.0}, rg);
    CsvTable remark({"N", "minus_one_norm", "kernel_functional"});
    for (int N = 1; N <= 1024; N *= 2) {
        LiftedState x = LiftedState::zero(rg, 1);
        try {
            x = endpoint_spike(rg, N);
        } catch (const ValidationError&) {
            continue;
        }
        remark.add({static_cast<long long>(N), minus_one_norm(x), kernel_convolve(one, x.tail())[0]});
    }
    CsvTable kernels({"kernel", "endpoint_norm", "seminorm", "accepted"});
    for (const auto& [name, k] : {std::pair<std::string, const Kernel*>{"a1", &l.spec.a1}, {"a2", &l.spec.a2},
                                  {"constant_one", &one}}) {
        const KernelReport kr = validate_kernel(*k);
        kernels.add({name, kr.endpoint_norm, kr.seminorm, static_cast<long long>(kr.ok)});
    }
    run.table("forms", forms);
    run.table("spectrum", spectrum, PlotHint{"index", {"lambda"}, true, true});
    run.table("spectral", spec_t);
    run.table("trace", trace_t, PlotHint{"N", {"trace_tail", "bq_norm"}, true, false});
    run.table("remark", remark, PlotHint{"N", {"minus_one_norm", "kernel_functional"}, false, false});
    run.table("kernels", kernels);
    run.finish();
}

void cmd_value(const Common& c, const SimFlags& f) {
    Run run("value", c);
    const LoadedSpec l = run.load();
    const ControlChoice ctrl = parse_control(l.spec, f.control);
    const double T = resolve_horizon(f.T, l, f.dt, f.tail_tol);
    const std::size_t paths = std::max<std::size_t>(f.paths, 2);
    run.param("value") = {{"T", T}, {"dt", f.dt}, {"paths", paths}, {"control", ctrl.label}, {"tail_tol", f.tail_tol}};
    const SampleStats st = mc_cost(l.spec, l.initial, ctrl.process, mc_settings(T, f.dt, paths, c.seed));
    const auto& k = l.spec.constants;
    const double rho0 = rho_zero(k.C, k.m_cost);
    const GrowthBound gb = admissible_growth_k(l.spec.rho, k.C);
    const double bn = b_operator_norm(l.spec);
    const double lip = lipschitz_discount_threshold(k.C, bn);
    CsvTable t = key_values();
    kv(t, "mean", st.mean);
    kv(t, "stderr", st.std_error);
    kv(t, "paths", static_cast<long long>(st.count));
    kv(t, "T", T);
    kv(t, "dt", f.dt);
    CsvTable gates = key_values();
    kv(gates, "rho", l.spec.rho);
    kv(gates, "C", k.C);
    kv(gates, "m_cost", k.m_cost);
    kv(gates, "rho_zero", rho0);
    kv(gates, "discount_admissible", static_cast<long long>(l.spec.rho > rho0));
    kv(gates, "growth_bound_k", gb.bound);
    kv(gates, "growth_case", std::string(gb.active == GrowthCase::Linear ? "linear" : "quadratic"));
    kv(gates, "cost_growth_in_class", static_cast<long long>(k.m_cost < gb.bound));
    kv(gates, "b_norm", bn);
    kv(gates, "lipschitz_threshold", lip);
    kv(gates, "lipschitz_guaranteed", static_cast<long long>(l.spec.rho > lip));
    kv(gates, "T_trunc", truncation_or_nan(l, f.tail_tol));
    run.table("value", t);
    run.table("gates", gates);
    run.finish();
}

void field_tables(const Solved& s, Run& run) {
    const LagChain& chain = *s.chain;
    const ProblemSpec& spec = chain.spec();
    std::vector<std::string> coords;
    for (int k = 0; k < chain.dim(); ++k) coords.push_back(chain.coordinate_name(k));
    CsvTable field(concat(coords, std::vector<std::string>{"value", "control", "feedback"}, control_names(spec)));
    const TensorGrid& g = s.result.value.grid;
    for (std::size_t node = 0; node < g.size(); ++node) {
        std::vector<Cell> row;
        append(row, g.point(node));
        row.emplace_back(s.result.value.values[static_cast<Eigen::Index>(node)]);
        row.emplace_back(static_cast<long long>(s.result.policy.index[node]));
        row.emplace_back(static_cast<long long>(s.feedback.index[node]));
        append(row, spec.controls[s.feedback.index[node]]);
        field.add(std::move(row));
    }
    CsvTable conv({"iteration", "residual"});
    for (std::size_t i = 0; i < s.result.residuals.size(); ++i)
        conv.add({static_cast<long long>(i + 1), s.result.residuals[i]});
    std::string x_axis = coords.front();
    for (int k = 0; k < g.dim(); ++k)
        if (!g.axis(k).degenerate()) {
            x_axis = coords[static_cast<std::size_t>(k)];
            break;
        }
    run.table("field", field, PlotHint{x_axis, {"value"}, false, true});
    run.table("convergence", conv, PlotHint{"iteration", {"residual"}, true, false});
}

void solver_summary(const Solved& s, const LoadedSpec& l, CsvTable& t) {
    const LagChain& chain = *s.chain;
    const Eigen::VectorXd z0 = chain.register_of(l.initial);
    const GrowthFit gf = growth_fit(chain, s.result.value, l.spec.constants.m_cost);
    kv(t, "nodes", static_cast<long long>(s.result.value.grid.size()));
    kv(t, "iterations", static_cast<long long>(s.result.iterations));
    kv(t, "residual", s.result.residual);
    kv(t, "clamp_rate", s.result.clamp_rate);
    kv(t, "chain_step", chain.step());
    kv(t, "value_at_initial", s.result.value(z0));
    kv(t, "control_at_initial", s.result.policy.at(z0) < l.spec.controls.size()
                                    ? l.spec.controls[s.result.policy.at(z0)][0]
                                    : kNaN);
    kv(t, "feedback_at_initial", l.spec.controls[s.feedback.at(z0)][0]);
    kv(t, "growth_exponent", gf.exponent);
    kv(t, "growth_constant", gf.constant);
}

void cmd_solve(const Common& c, const SolverFlags& sf) {
    Run run("solve", c);
    const LoadedSpec l = run.load();
    const Solved s = solve(l, sf, run);
    field_tables(s, run);
    CsvTable sum = key_values();
    solver_summary(s, l, sum);
    run.table("summary", sum);
    run.finish();
}

struct ResidualFlags {
    int stride = 1;
    std::size_t points = 200;
};

void cmd_residual(const Common& c, const SolverFlags& sf, const ResidualFlags& f) {
    Run run("residual", c);
    const LoadedSpec l = run.load();
    const Solved s = solve(l, sf, run);
    run.param("residual") = {{"stride", f.stride}, {"points", f.points}};
    const TensorGrid& g = s.result.value.grid;
    std::vector<std::size_t> interior;
    for (std::size_t node = 0; node < g.size(); ++node) {
        bool ok = true;
        for (int k = 0; k < g.dim() && ok; ++k) {
            const Axis& a = g.axis(k);
            if (a.degenerate()) continue;
            const int i = g.index_along(node, k);
            ok = i >= f.stride && i <= a.count - 1 - f.stride;
        }
        if (ok) interior.push_back(node);
    }
    if (interior.empty()) throw ValidationError("residual: no node lies a full stencil inside the grid");
    std::vector<std::string> coords;
    for (int k = 0; k < s.chain->dim(); ++k) coords.push_back(s.chain->coordinate_name(k));
    CsvTable t(concat(coords, std::vector<std::string>{"residual"}));
    const std::size_t P = std::min(f.points, interior.size());
    std::vector<double> res(P), absval;
    parallel_for(P, [&](std::size_t i) {
        res[i] = hjb_residual(*s.chain, s.result.value, g.point(interior[i * interior.size() / P]), f.stride);
    });
    for (std::size_t i = 0; i < P; ++i) {
        std::vector<Cell> row;
        append(row, g.point(interior[i * interior.size() / P]));
        row.emplace_back(res[i]);
        t.add(std::move(row));
        absval.push_back(std::abs(res[i]));
    }
    std::sort(absval.begin(), absval.end());
    CsvTable sum = key_values();
    kv(sum, "points", static_cast<long long>(P));
    kv(sum, "stride", static_cast<long long>(f.stride));
    kv(sum, "max_abs", absval.back());
    kv(sum, "median_abs", absval[absval.size() / 2]);
    run.table("residual", t, PlotHint{coords.front(), {"residual"}, false, true});
    run.table("summary", sum);
    run.finish();
}

struct DppFlags {
    int tau_steps = 5;
    std::size_t paths = 10000;
};

void cmd_dpp(const Common& c, const SolverFlags& sf, const DppFlags& f) {
    Run run("dpp", c);
    const LoadedSpec l = run.load();
    const Solved s = solve(l, sf, run);
    if (f.tau_steps < 0) throw ValidationError("--tau-steps must be >= 0");
    run.param("dpp") = {{"tau_steps", f.tau_steps}, {"paths", f.paths}};
    const DppGap gap = dpp_gap(*s.chain, s.result.value, l.initial, f.tau_steps * s.chain->step(), f.paths, c.seed);
    CsvTable rows(concat(std::vector<std::string>{"control"}, control_names(l.spec),
                         std::vector<std::string>{"mean", "stderr"}));
    for (const auto& r : gap.rows) {
        std::vector<Cell> row{static_cast<long long>(r.control)};
        append(row, l.spec.controls[r.control]);
        row.emplace_back(r.mean);
        row.emplace_back(r.std_error);
        rows.add(std::move(row));
    }
    CsvTable sum = key_values();
    kv(sum, "tau", f.tau_steps * s.chain->step());
    kv(sum, "value", gap.value);
    kv(sum, "best_control", static_cast<long long>(gap.best));
    kv(sum, "gap", gap.gap);
    kv(sum, "stderr", gap.std_error);
    kv(sum, "grid_tolerance", gap.grid_tolerance);
    kv(sum, "bound", 2.0 * gap.std_error + gap.grid_tolerance);
    kv(sum, "within_bound", static_cast<long long>(gap.gap <= 2.0 * gap.std_error + gap.grid_tolerance));
    run.table("dpp", rows, PlotHint{"control", {"mean"}, false, true});
    run.table("summary", sum);
    run.finish();
}

struct RegularityFlags {
    std::string box;
    std::string synthetic = "none";
    double noise = 0.0;
};

void cmd_probe_regularity(const Common& c, const SolverFlags& sf, const RegularityFlags& f) {
    Run run("probe-regularity", c);
    const LoadedSpec l = run.load();
    const int n = l.spec.n;
    run.param("regularity") = {{"box", f.box}, {"synthetic", f.synthetic}, {"noise", f.noise}};
    std::vector<Axis> box;
    if (!f.box.empty()) box = parse_grid_spec(f.box);
    std::optional<Solved> s;
    HeadEstimator V;
    RegularityClaim claim = regularity_claim(l.spec);
    if (f.synthetic == "none") {
        s = solve(l, sf, run);
        if (box.empty())
            for (int i = 0; i < n; ++i) {
                Axis a = s->result.value.grid.axis(i);
                if (!a.degenerate()) a.count = 33;
                box.push_back(a);
            }
        const LagChain* chain = s->chain.get();
        const ValueField* field = &s->result.value;
        V = [chain, field, n](const Eigen::VectorXd& x0) {
            Eigen::VectorXd z(chain->dim());
            for (int j = 0; j <= chain->lags(); ++j) z.segment(j * n, n) = x0;
            return (*field)(z);
        };
    } else {
        if (box.empty()) throw ValidationError("--synthetic needs --box");
        Eigen::VectorXd centre(static_cast<Eigen::Index>(box.size()));
        for (std::size_t k = 0; k < box.size(); ++k) centre[static_cast<Eigen::Index>(k)] = 0.5 * (box[k].min + box[k].max);
        claim = RegularityClaim::Asserted;
        if (f.synthetic == "smooth")
            V = [](const Eigen::VectorXd& x) { return 1.5 * x.squaredNorm(); };
        else if (f.synthetic == "kink")
            V = [centre](const Eigen::VectorXd& x) { return (x - centre).lpNorm<1>(); };
        else
            throw ValidationError("--synthetic must be none, smooth or kink");
    }
    if (static_cast<int>(box.size()) != n) throw ValidationError("--box needs one axis per state component");
    for (int i = 0; i < n; ++i)
        if (f.synthetic == "none" && box[static_cast<std::size_t>(i)].name != l.spec.state_name(i))
            throw ValidationError("--box axis " + box[static_cast<std::size_t>(i)].name + " where " +
                                  l.spec.state_name(i) + " was expected");
    const RegularityReport r = regularity_probe(box, V, claim, f.noise);
    CsvTable scales({"separation", "jump"});
    for (const auto& sc : r.scales) scales.add({sc.separation, sc.jump});
    CsvTable sum = key_values();
    kv(sum, "claim", std::string(to_string(r.claim)));
    kv(sum, "lipschitz", r.lipschitz);
    kv(sum, "alpha", r.alpha);
    kv(sum, "alpha_se", r.alpha_se);
    kv(sum, "alpha_lo", r.alpha_lo());
    kv(sum, "alpha_hi", r.alpha_hi());
    kv(sum, "kink", static_cast<long long>(r.kink));
    kv(sum, "inconclusive", static_cast<long long>(r.inconclusive));
    run.table("regularity", scales, PlotHint{"separation", {"jump"}, true, true});
    run.table("summary", sum);
    run.finish();
}

struct BContFlags {
    double amplitude = 0.5;
    std::string freqs = "0,1,2,4,8,16,32";
    int component = 0;
    int bins = 3;
    double tol = 0.0;
    double radius = 0.0;
    double T = 0.0;
    double dt = 0.01;
    std::size_t paths = 2000;
    std::string control = "policy";
};

void cmd_probe_bcontinuity(const Common& c, const SolverFlags& sf, const BContFlags& f) {
    Run run("probe-bcontinuity", c);
    const LoadedSpec l = run.load();
    const double T = resolve_horizon(f.T, l, f.dt, 1e-3);
    const double radius = f.radius > 0.0 ? f.radius : l.spec.constants.audit_radius;
    run.param("bcontinuity") = {{"amplitude", f.amplitude}, {"freqs", f.freqs}, {"component", f.component},
                                {"bins", f.bins},           {"tol", f.tol},     {"radius", radius},
                                {"T", T},                   {"dt", f.dt},       {"paths", f.paths},
                                {"control", f.control}};
    std::optional<Solved> s;
    std::unique_ptr<RegisterPolicy> rp;
    ControlChoice choice;
    ControlProcess ctrl = ControlProcess::constant(l.spec.controls.front());
    if (f.control == "policy") {
        s = solve(l, sf, run);
        rp = std::make_unique<RegisterPolicy>(*s->chain, s->feedback);
        ctrl = rp->control();
    } else {
        choice = parse_control(l.spec, f.control);
        ctrl = choice.process;
    }
    if (f.component < 0 || f.component >= l.spec.n) throw ValidationError("--component out of range");
    const auto pairs = oscillatory_pairs(l.initial, f.amplitude, parse_int_list(f.freqs), f.component);
    const auto est = mc_pair_estimator(l.spec, ctrl, mc_settings(T, f.dt, std::max<std::size_t>(f.paths, 2), c.seed));
    const BContinuityReport r = b_continuity_probe(pairs, est, radius, f.bins, f.tol);
    CsvTable rows({"distance", "difference", "stderr"});
    for (const auto& row : r.rows) rows.add({row.distance, row.difference, row.std_error});
    CsvTable env({"distance", "difference", "stderr"});
    for (const auto& row : r.envelope) env.add({row.distance, row.difference, row.std_error});
    CsvTable sum = key_values();
    kv(sum, "pairs", static_cast<long long>(r.rows.size()));
    kv(sum, "monotone", static_cast<long long>(r.monotone));
    kv(sum, "vanishing", static_cast<long long>(r.vanishing));
    kv(sum, "intercept", r.intercept);
    kv(sum, "intercept_stderr", r.intercept_se);
    run.table("bcontinuity", rows, PlotHint{"distance", {"difference"}, false, true});
    run.table("envelope", env, PlotHint{"distance", {"difference"}, false, false});
    run.table("summary", sum);
    run.finish();
}

struct MertonFlags {
    double dt = 0.01;
    std::size_t paths = 2000;
    std::size_t search_paths = 400;
    double value_tol = 0.03;
};

void cmd_merton_check(const Common& c, const SolverFlags& sf, const MertonFlags& f) {
    Run run("merton-check", c);
    const LoadedSpec l = run.load();
    if (l.spec.family != "merton") throw ValidationError("merton-check needs a merton spec");
    const auto& P = l.spec.parameters;
    if (P.at("mu_slope") != 0.0 || P.at("nu_slope") != 0.0)
        throw ValidationError("merton-check needs delay-free coefficients (mu and nu slopes 0)");
    const double mu = std::clamp(P.at("mu_base"), P.at("mu_min"), P.at("mu_max"));
    const double nu = std::clamp(P.at("nu_base"), P.at("nu_min"), P.at("nu_max"));
    const double r = P.at("r"), gamma = P.at("gamma"), rho = P.at("rho");
    const double z0 = l.initial.head()[1];
    const MertonOracle o = merton_classical_oracle(r, mu, nu, gamma, rho);
    const double target = -o.value(z0, gamma);  // costs are negated utilities
    const double T = resolve_horizon(0.0, l, f.dt, 1e-3);
    run.param("merton_check") = {{"dt", f.dt}, {"paths", f.paths}, {"search_paths", f.search_paths},
                                 {"T", T},     {"value_tol", f.value_tol}};

    // Policy search over constant proportions, independent of the solver.
    CsvTable search({"control", "u", "mean", "stderr", "closed_form"});
    std::size_t best = 0;
    std::vector<SampleStats> st;
    for (std::size_t u = 0; u < l.spec.controls.size(); ++u) {
        MonteCarloSettings ms = mc_settings(T, f.dt, std::max<std::size_t>(f.search_paths, 2), c.seed);
        st.push_back(mc_cost(l.spec, l.initial, ControlProcess::constant(l.spec.controls[u]), ms));
        const double uv = l.spec.controls[u][0];
        search.add({static_cast<long long>(u), uv, st.back().mean, st.back().std_error,
                    -merton_constant_control_value(r, mu, nu, gamma, rho, uv, z0, T)});
        if (st.back().mean < st[best].mean) best = u;
    }

    const Solved s = solve(l, sf, run);
    const Eigen::VectorXd zr = s.chain->register_of(l.initial);
    const double V = s.result.value(zr);
    const double step = l.spec.controls.size() > 1 ? l.spec.controls[1][0] - l.spec.controls[0][0] : 0.0;
    const double u_fb = l.spec.controls[s.feedback.at(zr)][0];
    const PolicyValue pv = policy_mc_value(*s.chain, s.feedback, l.initial, mc_settings(T, f.dt, f.paths, c.seed + 1));

    CsvTable rep({"quantity", "computed", "reference", "error", "tolerance", "pass"});
    const auto add = [&](const std::string& q, double v, double ref, double err, double tol) {
        const bool pass = err <= tol;
        rep.add({q, v, ref, err, tol, static_cast<long long>(pass)});
        std::cout << (pass ? "PASS " : "FAIL ") << q << ": computed " << format_number(v) << ", reference "
                  << format_number(ref) << ", error " << format_number(err) << " <= " << format_number(tol) << '\n';
        return pass;
    };
    bool ok = true;
    ok &= add("search_control", l.spec.controls[best][0], o.u_star, std::abs(l.spec.controls[best][0] - o.u_star),
              step + 1e-12);
    ok &= add("search_value", st[best].mean, target, std::abs(st[best].mean - target),
              f.value_tol * std::abs(target) + 2.0 * st[best].std_error);
    ok &= add("value_iteration", V, target, std::abs(V / target - 1.0), f.value_tol);
    ok &= add("feedback_control", u_fb, o.u_star, std::abs(u_fb - o.u_star), step + 1e-12);
    ok &= add("policy_value", pv.stats.mean, target, std::abs(pv.stats.mean - target),
              f.value_tol * std::abs(target) + 2.0 * pv.stats.std_error);
    std::cout << "merton-check: " << (ok ? "PASS" : "FAIL") << '\n';

    CsvTable sum = key_values();
    kv(sum, "u_star", o.u_star);
    kv(sum, "beta", o.beta);
    kv(sum, "coefficient", o.coefficient);
    kv(sum, "T", T);
    kv(sum, "policy_stderr", pv.stats.std_error);
    kv(sum, "policy_clamp_rate", pv.clamp_rate);
    solver_summary(s, l, sum);
    kv(sum, "pass", static_cast<long long>(ok));
    run.table("search", search, PlotHint{"u", {"mean", "closed_form"}, false, false});
    run.table("report", rep);
    run.table("summary", sum);
    run.finish();
}

struct DemoFlags {
    double T = 0.0;
    double dt = 0.01;
    std::size_t paths = 1000;
};

void cmd_advertising_demo(const Common& c, const SolverFlags& sf, const DemoFlags& f) {
    Run run("advertising-demo", c);
    const LoadedSpec l = run.load();
    if (l.spec.family != "advertising") throw ValidationError("advertising-demo needs an advertising spec");
    const double T = resolve_horizon(f.T, l, f.dt, 1e-3);
    run.param("demo") = {{"T", T}, {"dt", f.dt}, {"paths", f.paths}};
    const Solved s = solve(l, sf, run);
    const RegisterPolicy rp(*s.chain, s.feedback);
    const MonteCarloSettings ms = mc_settings(T, f.dt, std::max<std::size_t>(f.paths, 2), c.seed);

    CsvTable demo({"strategy", "mean", "stderr"});
    const SampleStats opt = mc_cost(l.spec, l.initial, rp.control(), ms);
    demo.add({std::string("policy"), opt.mean, opt.std_error});
    for (const std::size_t u : {std::size_t{0}, l.spec.controls.size() / 2, l.spec.controls.size() - 1}) {
        const SampleStats st = mc_cost(l.spec, l.initial, ControlProcess::constant(l.spec.controls[u]), ms);
        demo.add({"const:" + format_number(l.spec.controls[u][0]), st.mean, st.std_error});
    }

    // Policy along the head axis for a constant history.
    CsvTable pol({"y", "u", "u_bellman"});
    const Axis head = s.result.value.grid.axis(0);
    for (int i = 0; i < head.count; ++i) {
        const Eigen::VectorXd z = Eigen::VectorXd::Constant(s.chain->dim(), head.node(i));
        pol.add({head.node(i), l.spec.controls[s.feedback.at(z)][0], l.spec.controls[s.result.policy.at(z)][0]});
    }
    CsvTable path({"t", "y", "u"});
    BrownianDriver drv(c.seed, 0, l.spec.q, f.dt);
    const SddePath p = simulate_sdde(l.spec, l.initial, rp.control(), T, f.dt, drv);
    for (int k = 0; k < p.steps; ++k) path.add({p.time(k), p.states(0, k), p.controls(0, k)});
    run.table("demo", demo);
    run.table("policy", pol, PlotHint{"y", {"u", "u_bellman"}, false, false});
    run.table("path", path, PlotHint{"t", {"y", "u"}, false, false});
    run.finish();
}

// ---------------------------------------------------------------- error records

int fail(int code, const std::string& kind, const std::exception& e, json extra = json::object()) {
    json rec = {{"error", kind}, {"message", e.what()}};
    rec.update(extra);
    std::cerr << rec.dump() << '\n';
    return code;
}

void add_common(CLI::App* sc, Common& c) {
    sc->add_option("--spec", c.spec, "Problem spec (JSON)")->required();
    sc->add_option("--out", c.out, "Output directory")->capture_default_str();
    sc->add_option("--seed", c.seed, "Top-level seed")->capture_default_str();
    sc->add_option("--m", c.m, "Override the spec's interval count");
    sc->add_flag("--svg", c.svg, "Also render SVG plots of the emitted tables");
}

void add_solver(CLI::App* sc, SolverFlags& f) {
    sc->add_option("--mlag", f.mlag, "Lag register length (default: spec solver.mlag)");
    sc->add_option("--grid", f.grid, "Grid \"axis:min:max:count,...\" (default: spec solver.grid)");
    sc->add_option("--tol", f.tol, "Value iteration tolerance (default: spec solver.tol)");
    sc->add_option("--max-iter", f.max_iter, "Value iteration sweep cap (default: spec solver.max_iter)");
    sc->add_option("--gh-points", f.gh_points, "Gauss-Hermite points per noise dimension")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"delayctl: optimal control of stochastic delay equations via the lifted formulation"};
    app.set_version_flag("--version", DELAYCTL_VERSION);
    app.require_subcommand(1);

    Common common;
    SolverFlags solver;
    SimFlags sim;
    LiftFlags lift;
    OpFlags ops;
    ResidualFlags resid;
    DppFlags dpp;
    RegularityFlags reg;
    BContFlags bc;
    MertonFlags mf;
    DemoFlags demo;

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo paths and discounted cost for one control");
    add_common(simulate, common);
    simulate->add_option("--T", sim.T, "Horizon (default: spec horizon, else truncation horizon)");
    simulate->add_option("--dt", sim.dt, "Time step")->capture_default_str();
    simulate->add_option("--paths", sim.paths, "Monte Carlo paths")->capture_default_str();
    simulate->add_option("--keep", sim.keep, "Paths written to paths.csv")->capture_default_str();
    simulate->add_option("--control", sim.control, "const:u or policy:FILE (default: first control)");
    simulate->add_option("--tail-tol", sim.tail_tol, "Tail tolerance for the truncation horizon")->capture_default_str();

    auto* liftc = app.add_subcommand("lift-check", "Direct vs lifted simulation on matched noise");
    add_common(liftc, common);
    liftc->add_option("--T", lift.T, "Horizon")->capture_default_str();
    liftc->add_option("--dt", lift.dt, "Coarse time step")->capture_default_str();
    liftc->add_option("--paths", lift.paths, "Paths")->capture_default_str();
    liftc->add_option("--control", lift.control, "const:u (default: first control)");

    auto* opsc = app.add_subcommand("operators", "Operator identities, spectrum of B, kernel checks");
    add_common(opsc, common);
    opsc->add_option("--samples", ops.samples, "Random smooth states")->capture_default_str();
    opsc->add_option("--remark-m", ops.remark_m, "Intervals for the oscillating-spike sequence")->capture_default_str();

    auto* value = app.add_subcommand("value", "Cost of one control and discount/growth gates");
    add_common(value, common);
    value->add_option("--T", sim.T, "Horizon (default: spec horizon, else truncation horizon)");
    value->add_option("--dt", sim.dt, "Time step")->capture_default_str();
    value->add_option("--paths", sim.paths, "Monte Carlo paths")->capture_default_str();
    value->add_option("--control", sim.control, "const:u or policy:FILE (default: first control)");
    value->add_option("--tail-tol", sim.tail_tol, "Tail tolerance for the truncation horizon")->capture_default_str();

    auto* solvec = app.add_subcommand("solve", "Value iteration on the lag chain");
    add_common(solvec, common);
    add_solver(solvec, solver);

    auto* residual = app.add_subcommand("residual", "HJB residual of the solved field at interior nodes");
    add_common(residual, common);
    add_solver(residual, solver);
    residual->add_option("--stride", resid.stride, "Finite-difference stride in grid steps")->capture_default_str();
    residual->add_option("--points", resid.points, "Maximum nodes evaluated")->capture_default_str();

    auto* dppc = app.add_subcommand("dpp", "Dynamic programming gap over constant controls");
    add_common(dppc, common);
    add_solver(dppc, solver);
    dppc->add_option("--tau-steps", dpp.tau_steps, "Horizon in chain steps")->capture_default_str();
    dppc->add_option("--paths", dpp.paths, "Monte Carlo paths")->capture_default_str();

    auto* regc = app.add_subcommand("probe-regularity", "Lipschitz and gradient-Holder probe in the head variable");
    add_common(regc, common);
    add_solver(regc, solver);
    regc->add_option("--box", reg.box, "Head box \"axis:min:max:count,...\"");
    regc->add_option("--synthetic", reg.synthetic, "none, smooth or kink")->capture_default_str();
    regc->add_option("--noise", reg.noise, "Estimator standard error")->capture_default_str();

    auto* bcc = app.add_subcommand("probe-bcontinuity", "|V(x) - V(y)| against |x - y|_{-1} on oscillatory pairs");
    add_common(bcc, common);
    add_solver(bcc, solver);
    bcc->add_option("--amplitude", bc.amplitude, "Tail perturbation amplitude")->capture_default_str();
    bcc->add_option("--freqs", bc.freqs, "Perturbation frequencies")->capture_default_str();
    bcc->add_option("--component", bc.component, "Perturbed state component")->capture_default_str();
    bcc->add_option("--bins", bc.bins, "Envelope bins")->capture_default_str();
    bcc->add_option("--bias-tol", bc.tol, "Bias allowance for the envelope checks")->capture_default_str();
    bcc->add_option("--radius", bc.radius, "Ball radius (default: spec audit radius)");
    bcc->add_option("--T", bc.T, "Horizon (default: spec horizon, else truncation horizon)");
    bcc->add_option("--dt", bc.dt, "Time step")->capture_default_str();
    bcc->add_option("--paths", bc.paths, "Monte Carlo paths per pair")->capture_default_str();
    bcc->add_option("--control", bc.control, "policy (solve first) or const:u")->capture_default_str();

    auto* mc = app.add_subcommand("merton-check", "Solver, feedback and policy value against the Merton closed form");
    add_common(mc, common);
    add_solver(mc, solver);
    mc->add_option("--dt", mf.dt, "Monte Carlo time step")->capture_default_str();
    mc->add_option("--paths", mf.paths, "Paths for the policy value")->capture_default_str();
    mc->add_option("--search-paths", mf.search_paths, "Paths per constant control in the search")->capture_default_str();
    mc->add_option("--value-tol", mf.value_tol, "Relative value tolerance")->capture_default_str();

    auto* adv = app.add_subcommand("advertising-demo", "Solved advertising policy against constant budgets");
    add_common(adv, common);
    add_solver(adv, solver);
    adv->add_option("--T", demo.T, "Horizon (default: spec horizon, else truncation horizon)");
    adv->add_option("--dt", demo.dt, "Time step")->capture_default_str();
    adv->add_option("--paths", demo.paths, "Monte Carlo paths")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::string usage = app.help();
        for (const auto* sc : app.get_subcommands()) usage = sc->help();
        std::cerr << usage << '\n';
        json rec = {{"error", "usage"}, {"type", "parse"}, {"message", e.what()}};
        std::cerr << rec.dump() << '\n';
        return 1;
    }

    try {
        if (*simulate) cmd_simulate(common, sim);
        else if (*liftc) cmd_lift_check(common, lift);
        else if (*opsc) cmd_operators(common, ops);
        else if (*value) cmd_value(common, sim);
        else if (*solvec) cmd_solve(common, solver);
        else if (*residual) cmd_residual(common, solver, resid);
        else if (*dppc) cmd_dpp(common, solver, dpp);
        else if (*regc) cmd_probe_regularity(common, solver, reg);
        else if (*bcc) cmd_probe_bcontinuity(common, solver, bc);
        else if (*mc) cmd_merton_check(common, solver, mf);
        else if (*adv) cmd_advertising_demo(common, solver, demo);
    } catch (const ConvergenceError& e) {
        return fail(2, "numerical", e, {{"type", "convergence"}, {"residual", e.residual()}});
    } catch (const NonFiniteStateError& e) {
        return fail(2, "numerical", e, {{"type", "non_finite"}, {"step", e.step()}});
    } catch (const InadmissibleDiscountError& e) {
        return fail(2, "numerical", e, {{"type", "inadmissible_discount"}});
    } catch (const NumericalError& e) {
        return fail(2, "numerical", e, {{"type", "numerical"}});
    } catch (const DimensionError& e) {
        return fail(1, "validation", e, {{"type", "dimension"}});
    } catch (const DomainError& e) {
        return fail(1, "validation", e, {{"type", "domain"}});
    } catch (const ValidationError& e) {
        return fail(1, "validation", e, {{"type", "validation"}});
    } catch (const fs::filesystem_error& e) {
        return fail(1, "validation", e, {{"type", "filesystem"}});
    } catch (const std::exception& e) {
        return fail(2, "internal", e, {{"type", "internal"}});
    }
    return 0;
}
