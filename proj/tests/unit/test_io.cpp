// SPDX-License-Identifier: MIT
#include "delayctl/io/csv.hpp"
#include "delayctl/io/grid_spec.hpp"
#include "delayctl/io/manifest.hpp"
#include "delayctl/io/spec_file.hpp"
#include "delayctl/io/svg.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace delayctl;

namespace {

const char* kMerton = R"({
  "model": "merton", "delay": 0.5, "m": 10,
  "params": {"r": 0.02, "mu": {"base": 0.08, "slope": 0.01, "min": 0.0, "max": 0.2}, "nu": 0.25,
             "gamma": 0.5, "rho": 0.12, "controls": 6},
  "kernels": {"a1": {"preset": "affine_ramp", "scale": 0.5}},
  "initial": {"head": [1.0, 2.0]},
  "solver": {"mlag": 2, "grid": "s:0.5:2:5,z:0.5:2:5", "tol": 1e-5},
  "horizon": 40
})";

}  // namespace

TEST(SpecFile, MertonRoundTrip) {
    const LoadedSpec l = parse_spec_text(kMerton);
    EXPECT_EQ(l.spec.n, 2);
    EXPECT_EQ(l.spec.controls.size(), 6u);
    EXPECT_DOUBLE_EQ(l.spec.rho, 0.12);
    EXPECT_DOUBLE_EQ(l.spec.delay(), 0.5);
    EXPECT_EQ(l.spec.grid.intervals(), 10);
    EXPECT_EQ(l.solver.mlag, 2);
    EXPECT_EQ(l.solver.grid, "s:0.5:2:5,z:0.5:2:5");
    EXPECT_DOUBLE_EQ(l.solver.tol, 1e-5);
    EXPECT_EQ(l.solver.max_iter, 20000);
    ASSERT_TRUE(l.horizon.has_value());
    EXPECT_DOUBLE_EQ(*l.horizon, 40.0);
    // constant initial tail defaults to the head, so the state lies in the domain
    EXPECT_TRUE(l.initial.in_domain());
    EXPECT_DOUBLE_EQ(l.initial.head()[1], 2.0);
    EXPECT_DOUBLE_EQ(l.initial.tail().values()(0, 0), 1.0);
    EXPECT_FALSE(l.spec.a1.is_zero());
}

TEST(SpecFile, AllModelsParseWithDefaults) {
    for (const char* m : {"merton", "advertising", "affine_test"}) {
        const LoadedSpec l = parse_spec_text(std::string(R"({"model": ")") + m + R"(", "delay": 1, "m": 8})");
        EXPECT_EQ(l.spec.grid.intervals(), 8) << m;
        EXPECT_FALSE(l.spec.controls.empty()) << m;
        EXPECT_FALSE(l.horizon.has_value()) << m;
    }
}

TEST(SpecFile, RejectsUnknownKeysAndModels) {
    EXPECT_THROW((void)parse_spec_text(R"({"model": "merton", "dleay": 1})"), ValidationError);
    EXPECT_THROW((void)parse_spec_text(R"({"model": "merton", "params": {"sigma": 1}})"), ValidationError);
    EXPECT_THROW((void)parse_spec_text(R"({"model": "advertising", "kernels": {"a2": {}}})"), ValidationError);
    EXPECT_THROW((void)parse_spec_text(R"({"model": "heston"})"), ValidationError);
    EXPECT_THROW((void)parse_spec_text(R"({"delay": 1})"), ValidationError);
    EXPECT_THROW((void)parse_spec_text(R"({"model": "merton", "delay": -1})"), ValidationError);
    EXPECT_THROW((void)parse_spec_text("{not json"), ValidationError);
    EXPECT_THROW((void)parse_spec_text(R"({"model": "merton", "m": "ten"})"), ValidationError);
    EXPECT_THROW((void)parse_spec_text(R"({"model": "merton", "params": {"gamma": 1.5}})"), ValidationError);
}

TEST(SpecFile, TableKernelMatchesPresetOnSameGrid) {
    // affine_ramp with scale -1 on [-1, 0]: profile -(xi + 1); tabulated at 3 nodes and resampled linearly
    const LoadedSpec preset = parse_spec_text(
        R"({"model": "advertising", "delay": 1, "m": 8, "kernels": {"a1": {"preset": "affine_ramp", "scale": -1}}})");
    const LoadedSpec table = parse_spec_text(
        R"({"model": "advertising", "delay": 1, "m": 8, "kernels": {"a1": {"table": [0.0, -0.5, -1.0]}}})");
    for (int j = 0; j <= 8; ++j)
        EXPECT_NEAR(table.spec.a1.at_node(j)(0, 0), preset.spec.a1.at_node(j)(0, 0), 1e-12) << j;
    EXPECT_THROW((void)parse_spec_text(
                     R"({"model": "advertising", "kernels": {"a1": {"table": [1, 2], "preset": "zero"}}})"),
                 ValidationError);
}

TEST(SpecFile, TabulatedInitialTail) {
    const LoadedSpec l = parse_spec_text(
        R"({"model": "advertising", "delay": 1, "m": 4, "initial": {"head": [2], "tail": [[0, 1, 2]]}})");
    // table over [-1, 0] at 3 nodes, linear: value at node j of m = 4 is 2 * j / 4
    for (int j = 0; j <= 4; ++j) EXPECT_NEAR(l.initial.tail().values()(0, j), 0.5 * j, 1e-12);
    EXPECT_TRUE(l.initial.in_domain());
    EXPECT_THROW((void)parse_spec_text(R"({"model": "advertising", "initial": {"head": [1, 2]}})"), DimensionError);
    EXPECT_THROW((void)parse_spec_text(R"({"model": "merton", "initial": {"tail": [[1, 2], [1]]}})"),
                 DimensionError);
}

TEST(GridSpec, ParsesAxes) {
    const auto axes = parse_grid_spec("s:0.5:2:21,z:0:40:2001,s-1:1:1:1");
    ASSERT_EQ(axes.size(), 3u);
    EXPECT_EQ(axes[0].name, "s");
    EXPECT_DOUBLE_EQ(axes[0].min, 0.5);
    EXPECT_EQ(axes[1].count, 2001);
    EXPECT_EQ(axes[2].name, "s-1");
    EXPECT_TRUE(axes[2].degenerate());
}

TEST(GridSpec, RejectsMalformed) {
    for (const char* bad : {"", "s:0:1", "s:0:1:x", "s:a:1:3", "s:1:0:3", "s:0:1:0", "s:0:1:1", ":0:1:3", "s:0:1:3,"})
        EXPECT_THROW((void)parse_grid_spec(bad), ValidationError) << bad;
    EXPECT_EQ(parse_int_list("1,2,4"), (std::vector<int>{1, 2, 4}));
    EXPECT_THROW((void)parse_int_list("1,,2"), ValidationError);
}

TEST(Csv, NumberFormatRoundTrips) {
    EXPECT_EQ(format_number(0.0), "0");
    EXPECT_EQ(format_number(-0.0), "0");
    EXPECT_EQ(format_number(1.5), "1.5");
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), "nan");
    EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
    for (double v : {1.0 / 3.0, -2.718281828459045, 1e-300, 6.02214076e23, 0.1 + 0.2})
        EXPECT_EQ(std::strtod(format_number(v).c_str(), nullptr), v);
}

TEST(Csv, TableRoundTrip) {
    CsvTable t({"name", "k", "x"});
    t.add({std::string("plain"), 3LL, 0.25});
    t.add({std::string("has,comma \"q\""), -1LL, -1e-10});
    EXPECT_THROW(t.add({1.0}), DimensionError);
    const std::string s = t.str();
    EXPECT_EQ(s.substr(0, 9), "name,k,x\n");
    const CsvData d = parse_csv(s);
    ASSERT_EQ(d.rows.size(), 2u);
    EXPECT_EQ(d.rows[1][d.column("name")], "has,comma \"q\"");
    EXPECT_EQ(d.rows[0][d.column("k")], "3");
    EXPECT_EQ(std::strtod(d.rows[1][d.column("x")].c_str(), nullptr), -1e-10);
    EXPECT_THROW((void)d.column("missing"), ValidationError);
    EXPECT_THROW((void)parse_csv("a,b\n1\n"), ValidationError);
}

TEST(Manifest, Sha256KnownVectors) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Manifest, JsonShape) {
    RunManifest m;
    m.version = "0.1.0";
    m.command = "simulate";
    m.parameters["seed"] = 7;
    m.add_artifact("paths.csv", "abc");
    const auto j = m.to_json();
    EXPECT_EQ(j["command"], "simulate");
    EXPECT_EQ(j["parameters"]["seed"], 7);
    ASSERT_EQ(j["artifacts"].size(), 1u);
    EXPECT_EQ(j["artifacts"][0]["sha256"], sha256_hex("abc"));
}

TEST(Svg, RendersSeriesAndSkipsNonPositiveOnLogAxis) {
    SvgPlot p("t", "x", "y");
    p.add({"a", {1, 2, 3}, {1, 10, 100}, false}).add({"b", {1, 2}, {0.0, 5.0}, true}).log_y();
    const std::string s = p.str();
    EXPECT_NE(s.find("<polyline"), std::string::npos);
    EXPECT_EQ(s.find("nan"), std::string::npos);
    // the zero point of "b" is dropped on a log axis, so exactly one circle remains
    std::size_t circles = 0;
    for (std::size_t pos = 0; (pos = s.find("<circle", pos)) != std::string::npos; ++pos) ++circles;
    EXPECT_EQ(circles, 1u);
    EXPECT_THROW(p.add({"c", {1}, {}, false}), DimensionError);
    const CsvData d = parse_csv("t,v\n0,1\n1,2\n");
    EXPECT_NE(plot_csv(d, "t", {"v"}, "demo").str().find("demo"), std::string::npos);
}
