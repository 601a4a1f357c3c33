// SPDX-License-Identifier: MIT
#pragma once

#include "delayctl/core/errors.hpp"
#include "delayctl/core/grid.hpp"
#include "delayctl/core/kernel.hpp"
#include "delayctl/core/problem.hpp"
#include "delayctl/models/advertising.hpp"
#include "delayctl/models/affine.hpp"
#include "delayctl/models/merton.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace delayctl {

using json = nlohmann::json;

/// Solver defaults a spec file may carry so command lines stay short.
struct SolverDefaults {
    int mlag = 1;
    std::string grid;  // "name:min:max:count,..."
    double tol = 1e-6;
    int max_iter = 20000;
};

struct LoadedSpec {
    ProblemSpec spec;
    LiftedState initial = LiftedState::zero(SegmentGrid(1.0, 1), 1);
    SolverDefaults solver;
    std::optional<double> horizon;  // explicit truncation horizon, when the discount does not bound it
    json source;                    // the document as parsed
};

namespace detail {

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ValidationError(where + ": expected an object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) throw ValidationError(where + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("spec: bad value for '") + key + "': " + e.what());
    }
}

inline void read_affine(const json& obj, const char* key, ClampedAffine& f) {
    if (!obj.contains(key)) return;
    const json& j = obj.at(key);
    if (j.is_number()) {
        f = {j.get<double>(), 0.0, f.lo, f.hi};
        return;
    }
    reject_unknown(j, {"base", "slope", "min", "max"}, std::string("spec: ") + key);
    read(j, "base", f.base);
    read(j, "slope", f.slope);
    read(j, "min", f.lo);
    read(j, "max", f.hi);
}

struct KernelField {
    KernelPreset preset;
    std::vector<double> table;
};

inline KernelField read_kernel(const json& j, KernelPreset fallback, const std::string& where) {
    KernelField k{std::move(fallback), {}};
    reject_unknown(j, {"preset", "scale", "rate", "table"}, where);
    if (j.contains("table")) {
        if (j.contains("preset")) throw ValidationError(where + ": give either preset or table");
        read(j, "table", k.table);
        if (k.table.empty()) throw ValidationError(where + ": empty table");
        return k;
    }
    read(j, "preset", k.preset.name);
    read(j, "scale", k.preset.scale);
    read(j, "rate", k.preset.rate);
    return k;
}

inline Kernel table_kernel(const Kernel& built, const std::vector<double>& table, const SegmentGrid& grid) {
    if (!built.preset()) throw ValidationError("spec: model kernel has no selector");
    // Tables may be coarser than the grid; they are resampled linearly.
    const SegmentGrid tg(grid.delay(), static_cast<int>(table.size()) - 1);
    return Kernel::from_table(tg, table, built.preset()->selector).on(grid);
}

}  // namespace detail

/// Builds a problem from a JSON document:
///   { "model": "merton" | "advertising" | "affine_test", "delay": d, "m": intervals,
///     "params": {...}, "kernels": {"a1": {"preset": ..} | {"table": [..]}, "a2": ..},
///     "initial": {"head": [..], "tail": [..] | [[..], ..]}, "solver": {...}, "horizon": T }
[[nodiscard]] inline LoadedSpec parse_spec(const json& doc) {
    using namespace detail;
    reject_unknown(doc, {"model", "delay", "m", "params", "kernels", "initial", "solver", "horizon", "description"},
                   "spec");
    if (!doc.contains("model")) throw ValidationError("spec: missing 'model'");
    const std::string model = doc.at("model").get<std::string>();
    double delay = 1.0;
    int m = 100;
    read(doc, "delay", delay);
    read(doc, "m", m);
    if (!(delay > 0.0)) throw ValidationError("spec: delay must be positive");
    if (m < 1) throw ValidationError("spec: m must be >= 1");
    const SegmentGrid grid(delay, m);
    const json params = doc.value("params", json::object());
    const json kernels = doc.value("kernels", json::object());
    reject_unknown(kernels, {"a1", "a2"}, "spec: kernels");

    LoadedSpec out;
    KernelField k1, k2;
    if (model == "merton") {
        MertonParams p;
        reject_unknown(params, {"r", "mu", "nu", "gamma", "z_floor", "rho", "controls", "audit_radius"},
                       "spec: merton params");
        read(params, "r", p.r);
        read_affine(params, "mu", p.mu);
        read_affine(params, "nu", p.nu);
        read(params, "gamma", p.utility.gamma);
        read(params, "z_floor", p.utility.z_floor);
        read(params, "rho", p.rho);
        read(params, "controls", p.control_count);
        read(params, "audit_radius", p.audit_radius);
        k1 = read_kernel(kernels.value("a1", json::object()), p.a1, "spec: kernels.a1");
        k2 = read_kernel(kernels.value("a2", json::object()), p.a2, "spec: kernels.a2");
        p.a1 = k1.preset;
        p.a2 = k2.preset;
        out.spec = build_merton(p, grid);
    } else if (model == "advertising") {
        AdvertisingParams p;
        reject_unknown(params, {"a0", "c0", "sigma0", "h", "g_slope", "g_quad", "rho", "u_max", "controls"},
                       "spec: advertising params");
        read(params, "a0", p.a0);
        read(params, "c0", p.c0);
        read(params, "sigma0", p.sigma0);
        read(params, "h", p.h_coef);
        read(params, "g_slope", p.g_slope);
        read(params, "g_quad", p.g_quad);
        read(params, "rho", p.rho);
        read(params, "u_max", p.u_max);
        read(params, "controls", p.control_count);
        if (kernels.contains("a2")) throw ValidationError("spec: advertising has no diffusion kernel");
        k1 = read_kernel(kernels.value("a1", json::object()), p.a1, "spec: kernels.a1");
        p.a1 = k1.preset;
        out.spec = build_advertising(p, grid);
    } else if (model == "affine_test") {
        AffineTestParams p;
        reject_unknown(params,
                       {"n", "b_const", "b_x", "b_i", "b_u", "s_const", "s_x", "s_floor", "c_x", "c_u", "m_cost", "rho",
                        "u_max", "controls"},
                       "spec: affine_test params");
        read(params, "n", p.n);
        read(params, "b_const", p.b_const);
        read(params, "b_x", p.b_x);
        read(params, "b_i", p.b_i);
        read(params, "b_u", p.b_u);
        read(params, "s_const", p.s_const);
        read(params, "s_x", p.s_x);
        read(params, "s_floor", p.s_floor);
        read(params, "c_x", p.c_x);
        read(params, "c_u", p.c_u);
        read(params, "m_cost", p.m_cost);
        read(params, "rho", p.rho);
        read(params, "u_max", p.u_max);
        read(params, "controls", p.control_count);
        k1 = read_kernel(kernels.value("a1", json::object()), p.a1, "spec: kernels.a1");
        k2 = read_kernel(kernels.value("a2", json::object()), p.a2, "spec: kernels.a2");
        p.a1 = k1.preset;
        p.a2 = k2.preset;
        out.spec = build_affine_test(p, grid);
    } else {
        throw ValidationError("spec: unknown model '" + model + "'");
    }
    if (!k1.table.empty()) out.spec.a1 = table_kernel(out.spec.a1, k1.table, grid);
    if (!k2.table.empty()) out.spec.a2 = table_kernel(out.spec.a2, k2.table, grid);
    out.spec.validate();

    const int n = out.spec.n;
    Eigen::VectorXd head = Eigen::VectorXd::Ones(n);
    Eigen::MatrixXd tail;
    if (doc.contains("initial")) {
        const json& ini = doc.at("initial");
        reject_unknown(ini, {"head", "tail"}, "spec: initial");
        if (ini.contains("head")) {
            const auto h = ini.at("head").get<std::vector<double>>();
            if (static_cast<int>(h.size()) != n) throw DimensionError("spec: initial.head needs n entries");
            head = Eigen::Map<const Eigen::VectorXd>(h.data(), n);
        }
        if (ini.contains("tail")) {
            const json& t = ini.at("tail");
            if (!t.is_array() || t.empty()) throw ValidationError("spec: initial.tail must be a non-empty array");
            if (t.front().is_number()) {
                const auto c = t.get<std::vector<double>>();
                if (static_cast<int>(c.size()) != n) throw DimensionError("spec: constant initial.tail needs n entries");
                tail = Eigen::Map<const Eigen::VectorXd>(c.data(), n).replicate(1, grid.size());
            } else {
                const auto rows = t.get<std::vector<std::vector<double>>>();
                if (static_cast<int>(rows.size()) != n) throw DimensionError("spec: initial.tail needs n rows");
                const int cols = static_cast<int>(rows.front().size());
                if (cols < 2) throw ValidationError("spec: tabulated initial.tail needs >= 2 nodes");
                Eigen::MatrixXd tab(n, cols);
                for (int i = 0; i < n; ++i) {
                    if (static_cast<int>(rows[i].size()) != cols) throw DimensionError("spec: ragged initial.tail");
                    for (int j = 0; j < cols; ++j) tab(i, j) = rows[i][j];
                }
                tail = resample_segment(Segment(SegmentGrid(delay, cols - 1), tab), grid).values();
            }
        }
    }
    if (tail.size() == 0) tail = head.replicate(1, grid.size());
    out.initial = LiftedState(head, Segment(grid, tail));

    if (doc.contains("solver")) {
        const json& s = doc.at("solver");
        reject_unknown(s, {"mlag", "grid", "tol", "max_iter"}, "spec: solver");
        read(s, "mlag", out.solver.mlag);
        read(s, "grid", out.solver.grid);
        read(s, "tol", out.solver.tol);
        read(s, "max_iter", out.solver.max_iter);
    }
    if (doc.contains("horizon")) out.horizon = doc.at("horizon").get<double>();
    out.source = doc;
    return out;
}

/// `patch` is merged into the document first (RFC 7386), e.g. {"m": 200} to refine the grid.
[[nodiscard]] inline LoadedSpec parse_spec_text(const std::string& text, const json& patch = json::object()) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("spec: not valid JSON: ") + e.what());
    }
    try {
        if (!doc.is_object()) throw ValidationError("spec: top level must be an object");
        doc.merge_patch(patch);
        return parse_spec(doc);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("spec: ") + e.what());
    }
}

[[nodiscard]] inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

[[nodiscard]] inline LoadedSpec load_spec(const std::string& path) { return parse_spec_text(read_file(path)); }

}  // namespace delayctl
