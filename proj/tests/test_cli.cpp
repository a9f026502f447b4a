#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name)
{
    const auto d = fs::temp_directory_path() / ("omega_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

int run(const std::string& args)
{
    const std::string cmd = std::string("\"") + OMEGA_PRICER + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream o;
    o << in.rdbuf();
    return o.str();
}

std::map<std::string, std::string> summary(const fs::path& dir)
{
    std::map<std::string, std::string> out;
    std::istringstream in(slurp(dir / "summary.txt"));
    for (std::string line; std::getline(in, line);) {
        if (line.rfind("# resolved", 0) == 0) break;
        const auto eq = line.find(" = ");
        if (eq != std::string::npos) out.emplace(line.substr(0, eq), line.substr(eq + 3));
    }
    return out;
}

std::string write_config(const fs::path& dir, const std::string& text)
{
    const auto p = dir / "config.ini";
    std::ofstream(p) << text;
    return p.string();
}

} // namespace

TEST(Cli, RationalPresetInterval)
{
    const auto d = fresh_dir("rational");
    ASSERT_EQ(run("--preset bs_negative_rational --quiet --out-dir " + d.string()), 0);
    auto s = summary(d);
    const double l = std::stod(s.at("l_star")), u = std::stod(s.at("u_star"));
    EXPECT_GT(l, 7.18);
    EXPECT_LT(l, 7.28);
    EXPECT_GT(u, 8.29);
    EXPECT_LT(u, 8.39);
    std::istringstream curve(slurp(d / "curve.csv"));
    std::string line;
    std::getline(curve, line);
    EXPECT_EQ(line, "s,value,payoff");
    std::size_t rows = 0;
    while (std::getline(curve, line)) ++rows;
    EXPECT_EQ(rows, 512u);
    EXPECT_TRUE(fs::exists(d / "resolved.ini"));
}

TEST(Cli, CrashPresetOneSided)
{
    const auto d = fresh_dir("crash");
    ASSERT_EQ(run("--preset crash_linear --quiet --out-dir " + d.string()), 0);
    EXPECT_EQ(std::stod(summary(d).at("l_star")), 0.0);
}

TEST(Cli, ClassicalPreset)
{
    const auto d = fresh_dir("classical");
    ASSERT_EQ(run("--preset classical --quiet --out-dir " + d.string()), 0);
    EXPECT_NEAR(std::stod(summary(d).at("u_star")), 20.0 * 2.5 / 3.5, 1e-3);
}

TEST(Cli, GoldLoanPreset)
{
    const auto d = fresh_dir("gold");
    ASSERT_EQ(run("--preset gold_loan --quiet --out-dir " + d.string()), 0);
    EXPECT_TRUE(fs::exists(d / "symmetry.csv"));
    EXPECT_LT(std::stod(summary(d).at("symmetry_max_abs_z")), 4.0);
}

TEST(Cli, ValidationErrorsExitTwo)
{
    const auto d = fresh_dir("invalid");
    EXPECT_EQ(run("--config " + write_config(d, "[model]\nsigmaa = 0.2\n") + " --out-dir " + d.string()), 2);
    EXPECT_EQ(run("--config " + write_config(d, "[model]\nsigma = -1\n") + " --out-dir " + d.string()), 2);
    EXPECT_EQ(run("--config " + (d / "missing.ini").string()), 2);
    EXPECT_EQ(run("--preset no_such_preset"), 2);
    EXPECT_EQ(run("--preset classical --config x.ini"), 2);
    EXPECT_EQ(run("--bogus"), 2);
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("--help"), 0);
}

TEST(Cli, NumericalFailureExitsThree)
{
    const auto d = fresh_dir("nonconv");
    EXPECT_EQ(run("--config " + write_config(d, "[task]\nname = scale\n[numerics]\nrel_tol = 0\nabs_tol = 0\n") +
                  " --out-dir " + d.string()),
              3);
}

TEST(Cli, ResolvedConfigReproducesRun)
{
    const std::string mc = "[model]\nsigma = 0.2\n[discount]\nkind = constant\nr = 0.05\n[task]\nname = mc-check\n"
                           "[numerics]\nn_paths = 2000\ndt = 0.05\n";
    for (const std::string& src : {std::string("--preset bs_negative_rational"), std::string("mc")}) {
        const auto a = fresh_dir("rt_a"), b = fresh_dir("rt_b");
        const std::string first = src == "mc" ? "--config " + write_config(a, mc) : src;
        ASSERT_EQ(run(first + " --seed 77 --quiet --out-dir " + a.string()), 0);
        ASSERT_EQ(run("--config " + (a / "resolved.ini").string() + " --quiet --out-dir " + b.string()), 0);
        EXPECT_EQ(slurp(a / "resolved.ini"), slurp(b / "resolved.ini"));
        EXPECT_EQ(slurp(a / "curve.csv"), slurp(b / "curve.csv"));
        if (src == "mc") EXPECT_EQ(slurp(a / "mc.csv"), slurp(b / "mc.csv"));
        EXPECT_NE(slurp(a / "resolved.ini").find("seed = 77"), std::string::npos);
    }
}

TEST(Cli, ScaleTask)
{
    const auto d = fresh_dir("scale");
    ASSERT_EQ(run("--config " + write_config(d, "[task]\nname = scale\n") + " --quiet --out-dir " + d.string()), 0);
    std::istringstream in(slurp(d / "scale.csv"));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "x,W,Z");
}
