#include "coevo/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace coevo;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("coevo_cli_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr) {
    std::ostringstream out, err;
    const int rc = cli::run(args, out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return rc;
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> v;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) v.push_back(l);
    return v;
}

}  // namespace

TEST(Cli, PriceDefaultGrid) {
    TempDir dir("price");
    ASSERT_EQ(run({"price", "--out", dir.path.string()}), cli::kExitOk);
    const auto rows = lines(slurp(dir.path / "surface.csv"));
    ASSERT_EQ(rows.size(), 9u);
    for (const auto& r : rows) EXPECT_EQ(std::count(r.begin(), r.end(), ','), 5);
    EXPECT_TRUE(fs::exists(dir.path / "surface.csv.config.json"));
}

TEST(Cli, PriceParamsMatchLibrary) {
    TempDir dir("params");
    const fs::path pj = dir.path / "p.json";
    const HestonParams p{1.1, 0.09, 0.45, -0.3, 0.06};
    std::ofstream(pj) << params_to_json(p);
    ASSERT_EQ(run({"price", "--params", pj.string(), "--grid", "3x2", "--out", (dir.path / "o").string()}), 0);
    ExperimentConfig cfg;
    cfg.grid.strikes = 3;
    cfg.grid.maturities = 2;
    const auto surface = price_surface(p, cfg.grid.context(), cfg.grid.grid());
    const auto rows = lines(slurp(dir.path / "o" / "surface.csv"));
    ASSERT_EQ(rows.size(), 4u);
    for (std::size_t i = 0; i < 3; ++i) {
        std::istringstream in(rows[i + 1]);
        std::string cell;
        std::getline(in, cell, ',');
        EXPECT_DOUBLE_EQ(std::stod(cell), surface.grid.strikes[i]);
        for (std::size_t j = 0; j < 2; ++j) {
            std::getline(in, cell, ',');
            EXPECT_DOUBLE_EQ(std::stod(cell), surface.at(i, j));
        }
    }
}

TEST(Cli, MalformedConfigIsUsageError) {
    TempDir dir("badcfg");
    const fs::path ini = dir.path / "bad.ini";
    std::ofstream(ini) << "[ga]\npopulation = many\n";
    std::string err;
    EXPECT_EQ(run({"price", "--config", ini.string(), "--out", dir.path.string()}, nullptr, &err), cli::kExitUsage);
    EXPECT_FALSE(err.empty());
}

TEST(Cli, BadFlagsAreUsageErrors) {
    EXPECT_EQ(run({}), cli::kExitUsage);
    EXPECT_EQ(run({"nonsense"}), cli::kExitUsage);
    EXPECT_EQ(run({"price", "--grid", "8by5"}), cli::kExitUsage);
    EXPECT_EQ(run({"price", "--config", "/nonexistent.ini"}), cli::kExitUsage);
}

TEST(Cli, MissingChainFails) {
    TempDir dir("nochain");
    const int rc = run({"calibrate-real", "--chain", (dir.path / "missing.csv").string(), "--out", dir.path.string()});
    EXPECT_NE(rc, cli::kExitOk);
}

TEST(Cli, HelpListsFlags) {
    std::string out;
    EXPECT_EQ(run({"calibrate-real", "--help"}, &out), cli::kExitOk);
    for (const char* flag : {"--config", "--seed", "--generations", "--population", "--grid", "--box", "--out",
                             "--threads", "--strict-quadrature", "--verbose", "--chain", "--truth", "--rates", "--spot"}) {
        EXPECT_NE(out.find(flag), std::string::npos) << flag;
    }
}

TEST(Cli, MakeChainIsReproducible) {
    TempDir a("chain_a"), b("chain_b");
    ASSERT_EQ(run({"make-chain", "--out", a.path.string()}), 0);
    ASSERT_EQ(run({"make-chain", "--out", b.path.string()}), 0);
    for (const char* f : {"chain.csv", "truth.json", "rates.csv"}) EXPECT_EQ(slurp(a.path / f), slurp(b.path / f)) << f;
    EXPECT_EQ(params_from_json(slurp(a.path / "truth.json")), ExperimentConfig{}.params);
}

TEST(Cli, ConvergenceFixedSeedIsByteIdentical) {
    TempDir dir("conv");
    const fs::path ini = dir.path / "small.ini";
    std::ofstream(ini) << "[neuro]\npopulation = 3\nwidths = 8\n[training]\nbatch_size = 8\n";
    std::vector<std::string> args{"convergence", "--config", ini.string(), "--trials", "1", "--generations", "3",
                                  "--population", "10", "--grid", "3x2", "--seed", "11"};
    auto with_out = [&](const fs::path& o) {
        auto a = args;
        a.push_back("--out");
        a.push_back(o.string());
        return a;
    };
    ASSERT_EQ(run(with_out(dir.path / "a")), 0);
    ASSERT_EQ(run(with_out(dir.path / "b")), 0);
    for (const char* f : {"convergence.csv", "convergence_summary.csv", "target_0/telemetry.csv", "target_0/nn_fitness.csv"}) {
        const auto x = slurp(dir.path / "a" / f);
        EXPECT_FALSE(x.empty()) << f;
        EXPECT_EQ(x, slurp(dir.path / "b" / f)) << f;
    }
    EXPECT_EQ(lines(slurp(dir.path / "a" / "convergence.csv")).size(), 1u + 2 * 3);
}

TEST(Cli, TrialSeedsDiffer) {
    EXPECT_NE(cli::trial_seed(1, 1, 0), cli::trial_seed(1, 1, 1));
    EXPECT_NE(cli::trial_seed(1, 1, 0), cli::trial_seed(1, 2, 0));
    EXPECT_EQ(cli::trial_seed(5, 3, 2), cli::trial_seed(5, 3, 2));
}

TEST(Cli, RelativeErrors) {
    const auto e = cli::relative_errors({2.2, 0.05, 0.6, -0.77, 0.03}, {2.0, 0.05, 0.6, -0.7, 0.03});
    EXPECT_NEAR(e[0], 0.1, 1e-12);
    EXPECT_NEAR(e[1], 0.0, 1e-12);
    EXPECT_NEAR(e[3], 0.1, 1e-12);
}
