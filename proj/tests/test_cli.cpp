#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path temp_dir() {
    static int counter = 0;
    fs::path dir = fs::temp_directory_path() / ("contractlab_cli_test_" +
                                                std::to_string(::getpid()) + "_" +
                                                std::to_string(counter++));
    fs::create_directories(dir);
    return dir;
}

CliResult run_cli(const std::string& args) {
    const fs::path dir = temp_dir();
    const fs::path out = dir / "stdout.txt";
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = std::string(CONTRACTLAB_CLI_PATH) + " " + args + " >" +
                            out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out);
    result.err = slurp(err);
    fs::remove_all(dir);
    return result;
}

std::size_t line_count(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) ++n;
    return n;
}

}  // namespace

TEST_CASE("single run with defaults reports the mid-grid tax and writes files") {
    const fs::path out = temp_dir();
    const CliResult r = run_cli("single --seed 1 --out " + out.string());
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.out.find("final_tax=0.50") == 0);
    REQUIRE(fs::exists(out / "config.json"));
    REQUIRE(fs::exists(out / "trajectory.jsonl"));
    REQUIRE(fs::exists(out / "qtable.csv"));
    REQUIRE(line_count(out / "qtable.csv") == 102);
    fs::remove_all(out);
}

TEST_CASE("flag range and boundary violations exit with the config code") {
    const CliResult eps = run_cli("single --epsilon 1.5");
    REQUIRE(eps.exit_code == 2);
    REQUIRE(eps.err.find("epsilon") != std::string::npos);

    REQUIRE(run_cli("single --iters 0").exit_code == 2);
    REQUIRE(run_cli("dual --beta 0.7 --iters 100").exit_code == 2);
    REQUIRE(run_cli("nonsense").exit_code == 2);
}

TEST_CASE("flags override config file values which override defaults") {
    const fs::path dir = temp_dir();
    {
        std::ofstream cfg(dir / "cfg.json");
        cfg << R"({"env":"single","alpha":0.25,"seed":9,"t_max":4000})";
    }
    const fs::path out = dir / "out";
    const CliResult r = run_cli("single --config " + (dir / "cfg.json").string() +
                                " --alpha 0.15 --iters 2000 --out " + out.string());
    REQUIRE(r.exit_code == 0);
    const nlohmann::json echoed = nlohmann::json::parse(slurp(out / "config.json"));
    REQUIRE(echoed.at("alpha") == 0.15);                    // flag beats file
    REQUIRE(echoed.at("seed") == 9);                        // file beats default
    REQUIRE(echoed.at("t_max") == 2000);                    // flag beats file
    REQUIRE(echoed.at("exploration").at("fixed") == 0.2);   // untouched default
    fs::remove_all(dir);
}

TEST_CASE("dual run emits both tables and honors the dump flag") {
    const fs::path out = temp_dir();
    const CliResult r = run_cli(
        "dual --iters 20000 --seed 3 --d-p 21 --d-e 21 --dump-agent-table --out " +
        out.string());
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.out.find("final_tax_p1=") != std::string::npos);
    REQUIRE(r.out.find("final_tax_p2=") != std::string::npos);
    REQUIRE(r.out.find("effective_tax=") != std::string::npos);
    REQUIRE(line_count(out / "qtable_p1.csv") == 22);
    REQUIRE(line_count(out / "qtable_p2.csv") == 22);
    REQUIRE(line_count(out / "agent_table.csv") == 21 * 21 + 1);
    fs::remove_all(out);
}

TEST_CASE("fixed-seed subcommands produce byte-identical outputs") {
    const fs::path a = temp_dir(), b = temp_dir();
    REQUIRE(run_cli("dual --iters 30000 --seed 7 --out " + a.string()).exit_code == 0);
    REQUIRE(run_cli("dual --iters 30000 --seed 7 --out " + b.string()).exit_code == 0);
    REQUIRE(slurp(a / "trajectory.jsonl") == slurp(b / "trajectory.jsonl"));
    REQUIRE(slurp(a / "qtable_p1.csv") == slurp(b / "qtable_p1.csv"));
    REQUIRE(slurp(a / "qtable_p2.csv") == slurp(b / "qtable_p2.csv"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("innes-check verifies the debt-contract claim") {
    const CliResult ok = run_cli("innes-check --xh 2 --xl 1 --i 1.1 --c 2");
    REQUIRE(ok.exit_code == 0);
    REQUIRE(ok.out.find("low_state_full_payout=PASS") != std::string::npos);
    REQUIRE(ok.out.find("d_low_star=1.000000") != std::string::npos);

    const auto pos = ok.out.find("d_high_star=");
    REQUIRE(pos != std::string::npos);
    const double d_high = std::stod(ok.out.substr(pos + 12));
    REQUIRE(std::abs(d_high - 1.2763932022500211) <= 0.001 + 1e-9);

    const CliResult infeasible = run_cli("innes-check --xh 2 --xl 1 --i 5 --c 2");
    REQUIRE(infeasible.exit_code == 3);
    REQUIRE_FALSE(infeasible.err.empty());
}

TEST_CASE("sweep validates grid values and is parallelism-invariant") {
    REQUIRE(run_cli("sweep --param beta --grid 0.6 --seeds 2 --iters 5000").exit_code == 2);
    REQUIRE(run_cli("sweep --param nope --grid 0.1 --iters 5000").exit_code == 2);

    const fs::path a = temp_dir(), b = temp_dir();
    const std::string common = "sweep --param beta --grid 0,0.5 --seeds 2 --iters 20000 ";
    const CliResult r1 = run_cli(common + "--jobs 1 --out " + a.string());
    const CliResult r8 = run_cli(common + "--jobs 8 --out " + b.string());
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r8.exit_code == 0);
    REQUIRE(slurp(a / "sweep.csv") == slurp(b / "sweep.csv"));
    REQUIRE(r1.out == r8.out);
    REQUIRE(line_count(a / "sweep.csv") == 3);
    REQUIRE(r1.out.find("beta=0.000000") == 0);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("agent-table exports the full grid") {
    const fs::path small = temp_dir();
    const CliResult tiny = run_cli("agent-table --d-p 3 --d-e 3 --out " + small.string());
    REQUIRE(tiny.exit_code == 0);
    REQUIRE(tiny.out.find("rows=9") == 0);
    REQUIRE(line_count(small / "agent_table.csv") == 10);
    fs::remove_all(small);

    const fs::path full = temp_dir();
    const CliResult defaults = run_cli("agent-table --out " + full.string());
    REQUIRE(defaults.exit_code == 0);
    REQUIRE(defaults.out.find("rows=10201") == 0);
    REQUIRE(line_count(full / "agent_table.csv") == 10202);
    fs::remove_all(full);
}

TEST_CASE("oracle prints the collusive optimum and best-response comparison") {
    const CliResult sym = run_cli("oracle");
    REQUIRE(sym.exit_code == 0);
    REQUIRE(sym.out.find("joint_profit=0.125000") != std::string::npos);
    REQUIRE(sym.out.find("served_tax=0.500000") != std::string::npos);

    const CliResult compare = run_cli("oracle --p1 0.3 --p2 0.7");
    REQUIRE(compare.exit_code == 0);
    REQUIRE(compare.out.find("table:") != std::string::npos);
    REQUIRE(compare.out.find("closed_form:") != std::string::npos);
    REQUIRE(compare.out.find("e1=0.350000") != std::string::npos);

    const CliResult skew = run_cli("oracle --kappa 0.2");
    REQUIRE(skew.exit_code == 0);
    REQUIRE(skew.out.find("symmetric optimum") != std::string::npos);
}

TEST_CASE("help output enumerates flags with baseline defaults") {
    const CliResult top = run_cli("--help");
    REQUIRE(top.exit_code == 0);
    for (const char* sub : {"single", "dual", "sweep", "agent-table", "innes-check", "oracle"})
        REQUIRE(top.out.find(sub) != std::string::npos);

    const CliResult single = run_cli("single --help");
    REQUIRE(single.exit_code == 0);
    REQUIRE(single.out.find("--epsilon") != std::string::npos);
    REQUIRE(single.out.find("0.2") != std::string::npos);
    REQUIRE(single.out.find("--alpha") != std::string::npos);
    REQUIRE(single.out.find("0.1") != std::string::npos);

    const CliResult dual = run_cli("dual --help");
    REQUIRE(dual.exit_code == 0);
    REQUIRE(dual.out.find("--k ") != std::string::npos);
    REQUIRE(dual.out.find("5e-06") != std::string::npos);
    REQUIRE(dual.out.find("--blend-form") != std::string::npos);
    REQUIRE(dual.out.find("algorithm2") != std::string::npos);
}
