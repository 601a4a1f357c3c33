// SPDX-License-Identifier: MIT
#include "delayctl/io/csv.hpp"
#include "delayctl/io/manifest.hpp"
#include "delayctl/io/spec_file.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const std::string kCli = DELAYCTL_CLI_PATH;
const std::string kConfigs = DELAYCTL_CONFIG_DIR;

struct Result {
    int code = -1;
    std::string output;
};

Result run(const std::string& args) {
    const fs::path dir = fs::temp_directory_path() / "delayctl_cli_test";
    fs::create_directories(dir);
    const fs::path log = dir / "log.txt";
    const std::string cmd = "'" + kCli + "' " + args + " > '" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, delayctl::read_file(log.string())};
}

std::string out_dir(const std::string& name) {
    return (fs::temp_directory_path() / "delayctl_cli_test" / name).string();
}

}  // namespace

TEST(Cli, HelpAndVersionExitZero) {
    EXPECT_EQ(run("--help").code, 0);
    const Result v = run("--version");
    EXPECT_EQ(v.code, 0);
    EXPECT_NE(v.output.find(DELAYCTL_VERSION), std::string::npos);
}

TEST(Cli, UsageErrorsExitOne) {
    const Result r = run("simulate --spec " + kConfigs + "/advertising.json --no-such-flag");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.output.find("\"error\":\"usage\""), std::string::npos);
    EXPECT_NE(r.output.find("--paths"), std::string::npos);  // subcommand usage
    EXPECT_EQ(run("").code, 1);
    EXPECT_EQ(run("simulate").code, 1);
}

TEST(Cli, InvalidInputExitsOne) {
    const Result r = run("simulate --spec /nonexistent.json --out " + out_dir("missing"));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.output.find("\"error\":\"validation\""), std::string::npos);
    EXPECT_EQ(run("simulate --spec " + kConfigs + "/advertising.json --control const:0.55 --out " + out_dir("ctl")).code, 1);
    EXPECT_EQ(run("solve --spec " + kConfigs + "/advertising.json --grid y:0:1 --out " + out_dir("grid")).code, 1);
}

TEST(Cli, NonConvergenceExitsTwoWithResidual) {
    const Result r = run("solve --spec " + kConfigs + "/advertising.json --max-iter 2 --out " + out_dir("conv"));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("\"error\":\"numerical\""), std::string::npos);
    EXPECT_NE(r.output.find("\"residual\""), std::string::npos);
}

TEST(Cli, WritesTablesAndManifest) {
    const std::string dir = out_dir("sim");
    fs::remove_all(dir);
    const Result r = run("simulate --spec " + kConfigs + "/advertising.json --T 1 --paths 4 --keep 1 --svg --out " + dir);
    ASSERT_EQ(r.code, 0) << r.output;
    const auto paths = delayctl::parse_csv(delayctl::read_file(dir + "/paths.csv"));
    EXPECT_EQ(paths.header, (std::vector<std::string>{"path", "t", "y", "u"}));
    EXPECT_EQ(paths.rows.size(), 101u);
    EXPECT_EQ(paths.rows.back()[3], "nan");  // no control at the final time
    EXPECT_TRUE(fs::exists(dir + "/paths.svg"));
    const auto m = nlohmann::json::parse(delayctl::read_file(dir + "/manifest.json"));
    EXPECT_EQ(m.at("command"), "simulate");
    EXPECT_EQ(m.at("spec").at("sha256"), delayctl::sha256_hex(delayctl::read_file(kConfigs + "/advertising.json")));
    ASSERT_EQ(m.at("artifacts").size(), 2u);
    EXPECT_EQ(m.at("artifacts")[0].at("sha256"), delayctl::sha256_hex(delayctl::read_file(dir + "/paths.csv")));
}

TEST(Cli, PolicyFileRoundTrip) {
    const std::string solve = out_dir("solve"), sim = out_dir("policy_sim");
    ASSERT_EQ(run("solve --spec " + kConfigs + "/advertising.json --grid y:-1:3:21 --out " + solve).code, 0);
    const Result r = run("simulate --spec " + kConfigs + "/advertising.json --T 1 --paths 4 --control policy:" + solve +
                         "/field.csv --out " + sim);
    ASSERT_EQ(r.code, 0) << r.output;
    const auto s = delayctl::parse_csv(delayctl::read_file(sim + "/summary.csv"));
    bool has_clamp = false;
    for (const auto& row : s.rows) has_clamp = has_clamp || row[0] == "clamp_rate";
    EXPECT_TRUE(has_clamp);
}
