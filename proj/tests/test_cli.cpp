#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

#include "bidesp/bench.hpp"
#include "bidesp/network.hpp"

using namespace bidesp;

namespace {

int run_cli(const std::string& args) {
    std::string cmd = std::string(BIDESP_CLI_PATH) + " " + args;
    int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    nlohmann::json j;
    in >> j;
    return j;
}

struct TmpDir {
    std::string path;
    TmpDir() {
        path = "cli_tmp";
        int rc = std::system(("rm -rf " + path + " && mkdir -p " + path).c_str());
        REQUIRE(rc == 0);
    }
    ~TmpDir() {
        int rc = std::system(("rm -rf " + path).c_str());
        (void)rc;
    }
    std::string operator/(const std::string& f) const { return path + "/" + f; }
};

} // namespace

TEST_CASE("cli: gen, plan, oracle, extract round trip") {
    TmpDir tmp;
    std::string net_path = tmp / "net.json";
    REQUIRE(run_cli("gen --layers 8 --per-layer 12 --seed 5 --out " + net_path +
                    " > /dev/null") == 0);
    auto net = ReactionNetwork::load(net_path);
    CHECK(net.molecules().size() == 96);

    // A satisfiable instance from the oracle's own unconstrained route.
    auto instances = make_instances(net, 1, 3, CostMode::NegLogPlausibility, 2);
    REQUIRE(instances.size() == 1);
    const auto& inst = instances[0];

    std::string route_path = tmp / "route.json";
    std::string trace_path = tmp / "trace.json";
    REQUIRE(run_cli("plan --network " + net_path + " --target " + inst.p_star +
                    " --sm " + inst.r_star +
                    " --algo desp_f2e --heuristic exact --out " + route_path +
                    " --trace " + trace_path) == 0);
    auto plan = read_json(route_path);
    CHECK(plan["solved"].get<bool>());
    CHECK(plan["config"]["budget"].get<int>() == 500);
    CHECK(plan["target"] == inst.p_star);
    CHECK(plan["sm"] == inst.r_star);
    Route route = route_from_json(plan);
    auto rep = validate_route(route, inst.p_star, net.buyables(),
                              std::optional<std::string>(inst.r_star));
    CHECK(rep.valid);
    auto trace = read_json(trace_path);
    CHECK(trace["events"].size() >= 1);

    // Oracle on an unsatisfiable pair: exit 0 with satisfiable=false.
    std::string iso;
    for (const auto& m : net.molecules()) {
        if (m.id != inst.p_star && !reachable_into(net, m.id, inst.p_star)) {
            iso = m.id;
            break;
        }
    }
    REQUIRE(!iso.empty());
    std::string oracle_path = tmp / "oracle.json";
    REQUIRE(run_cli("oracle --network " + net_path + " --target " + inst.p_star +
                    " --sm " + iso + " --out " + oracle_path) == 0);
    auto oj = read_json(oracle_path);
    CHECK_FALSE(oj["satisfiable"].get<bool>());

    std::string pairs_path = tmp / "pairs.csv";
    REQUIRE(run_cli("extract --network " + net_path + " --out " + pairs_path +
                    " --negatives 1 > /dev/null") == 0);
    std::ifstream pairs(pairs_path);
    std::string header;
    std::getline(pairs, header);
    CHECK(header == "m,p_star,d");
}

TEST_CASE("cli: bench subcommand produces the full results schema") {
    TmpDir tmp;
    std::string net_path = tmp / "net.json";
    REQUIRE(run_cli("gen --layers 12 --per-layer 20 --max-producers 3 "
                    "--bimolecular 0.5 --bb-extra 0.05 --seed 9 --out " +
                    net_path + " > /dev/null") == 0);
    nlohmann::json cfg{{"network", net_path},
                       {"model", {{"hide_prob", 0.2}, {"noise_sigma", 0.5},
                                  {"d_max", 9}, {"seed", 4}}},
                       {"algos", {"retrostar", "desp_f2e", "bibfs"}},
                       {"budgets", {5, 15, 30}},
                       {"instances", 10},
                       {"min_depth", 3},
                       {"seed", 5},
                       {"heuristic", "noisy"}};
    std::string cfg_path = tmp / "bench.json";
    {
        std::ofstream out(cfg_path);
        out << cfg.dump(2);
    }
    std::string csv_path = tmp / "results.csv";
    std::string summary_path = tmp / "summary.json";
    REQUIRE(run_cli("bench --config " + cfg_path + " --out " + csv_path +
                    " --summary " + summary_path + " > /dev/null") == 0);
    std::ifstream csv(csv_path);
    std::string header;
    std::getline(csv, header);
    CHECK(header ==
          "instance,algo,solved,iterations_to_solve,expansions_used,route_cost,"
          "route_reactions,route_depth,forward_reactions,wall_ms,seed");
    int rows = 0;
    std::string line;
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 30);  // 10 instances x 3 algos
    auto summary = read_json(summary_path);
    CHECK(summary["algos"].contains("desp_f2e"));
    CHECK(summary["config"]["seed"].get<int>() == 5);
}

TEST_CASE("cli: exit codes") {
    CHECK(run_cli("nosuchcommand 2> /dev/null") == 1);
    CHECK(run_cli("plan 2> /dev/null") == 1);                 // missing required
    CHECK(run_cli("oracle --network missing.json --target x 2> /dev/null") == 2);
    CHECK(run_cli("--help > /dev/null") == 0);
}
