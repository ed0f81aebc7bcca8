#include <doctest.h>

#include "bidesp/baselines.hpp"
#include "test_support.hpp"

using namespace bidesp;
using bidesp::testing::NetworkBuilder;

namespace {

VectorIndex buyable_index(const ReactionNetwork& net) {
    std::vector<std::pair<std::string, BitVec>> items;
    for (const auto& m : net.molecules())
        if (m.buyable) items.push_back({m.id, m.fingerprint});
    return VectorIndex::build(items, IndexMode::Exact);
}

} // namespace

TEST_SUITE("baselines") {

TEST_CASE("random selection with a single frontier matches the retro* trace") {
    // On a pure chain every frontier has exactly one node, so random and
    // best-first must select identically.
    auto net = bidesp::testing::chain4();
    ModelSuite models(net, {});
    SearchBudget budget;
    std::vector<TraceEvent> t_rand, t_star;
    auto r1 = random_search(net, models, "pstar", "rstar", budget, CostMode::Unit,
                            HeuristicSource::ExactTable, 7, &t_rand);
    auto r2 = run_retrostar(net, models, "pstar",
                            std::optional<std::string>("rstar"), budget,
                            CostMode::Unit, HeuristicSource::ExactTable,
                            SelectPolicy::ByVt, 7, &t_star);
    REQUIRE(r1.solved);
    REQUIRE(r2.solved);
    REQUIRE(t_rand.size() == t_star.size());
    for (std::size_t i = 0; i < t_rand.size(); ++i)
        CHECK(t_rand[i].selected == t_star[i].selected);
}

TEST_CASE("random search is reproducible per seed and eventually solves") {
    NetworkGenConfig cfg;
    cfg.layers = 5;
    cfg.molecules_per_layer = 8;
    cfg.seed = 13;
    auto net = ReactionNetwork::generate(cfg);
    ModelSuite models(net, {});
    std::string target;
    for (auto it = net.molecules().rbegin(); it != net.molecules().rend(); ++it)
        if (!it->buyable) { target = it->id; break; }
    std::string rstar = *net.buyables().begin();
    SearchBudget budget;
    budget.max_expansions = 3000;
    budget.max_depth = 30;
    std::vector<TraceEvent> t1, t2;
    auto r1 = random_search(net, models, target, rstar, budget, CostMode::Unit,
                            HeuristicSource::ExactTable, 5, &t1);
    auto r2 = random_search(net, models, target, rstar, budget, CostMode::Unit,
                            HeuristicSource::ExactTable, 5, &t2);
    CHECK(r1.solved == r2.solved);
    REQUIRE(t1.size() == t2.size());
    for (std::size_t i = 0; i < t1.size(); ++i)
        CHECK(t1[i].selected == t2[i].selected);
    if (r1.solved) {
        auto rep = validate_route(*r1.route, target, net.buyables(),
                                  std::optional<std::string>(rstar));
        CHECK(rep.valid);
    }
}

TEST_CASE("bfs selection key: depth first, then parent plausibility, then id") {
    // p has two precursor branches; x sits at depth 1 via a 0.9 reaction and
    // y at depth 1 via 0.5, z at depth 2.
    auto net = NetworkBuilder()
                   .molecule("b1", 1, true)
                   .molecule("b2", 1, true)
                   .molecule("x", 2, false)
                   .molecule("y", 2, false)
                   .molecule("z", 3, false)
                   .molecule("p", 4, false)
                   .tmpl("t1", 1)
                   .tmpl("t2", 2)
                   .reaction("r1", {"x"}, "p", "t1", 0.9)
                   .reaction("r2", {"y"}, "p", "t1", 0.5)
                   .reaction("r3", {"z"}, "x", "t1", 0.9)
                   .reaction("r4", {"b1"}, "y", "t1", 0.9)
                   .reaction("r5", {"b2"}, "z", "t1", 0.9)
                   .build();
    ModelSuite models(net, {});
    std::vector<TraceEvent> trace;
    SearchBudget budget;
    budget.max_expansions = 4;
    auto res = bfs_search(net, models, "p", "b1", budget, CostMode::Unit,
                          HeuristicSource::Zero, 0, &trace);
    // Hand simulation: p (depth 0); then x (depth 1, plaus 0.9) before y
    // (depth 1, plaus 0.5); then z (depth 2).
    REQUIRE(trace.size() >= 3);
    CHECK(trace[0].selected == "p");
    CHECK(trace[1].selected == "x");
    CHECK(trace[2].selected == "y");
    if (trace.size() > 3) CHECK(trace[3].selected == "z");
    CHECK(res.solved);
}

TEST_CASE("bibfs meets in the middle on a 2+2 chain") {
    // r* -> m1 -> m2 -> m3 -> p*: bottom covers two steps, top the rest.
    NetworkBuilder b;
    b.molecule("bb", 1, true).tmpl("t1", 1);
    b.molecule("rstar", 2, false).reaction("r0", {"bb"}, "rstar", "t1", 0.9);
    b.molecule("m1", 3, false).reaction("r1", {"rstar"}, "m1", "t1", 0.9);
    b.molecule("m2", 4, false).reaction("r2", {"m1"}, "m2", "t1", 0.9);
    b.molecule("m3", 5, false).reaction("r3", {"m2"}, "m3", "t1", 0.9);
    b.molecule("pstar", 6, false).reaction("r4", {"m3"}, "pstar", "t1", 0.9);
    auto net = b.build();
    ModelSuite models(net, {});
    auto index = buyable_index(net);
    SearchBudget budget;
    budget.max_expansions = 40;
    std::vector<TraceEvent> trace;
    auto res = bibfs_search(net, models, index, "pstar", "rstar", budget, 2,
                            CostMode::Unit, HeuristicSource::Zero, 0, &trace);
    REQUIRE(res.solved);
    CHECK(*res.iterations_to_solve <= 5);
    auto rep = validate_route(*res.route, "pstar", net.buyables(),
                              std::optional<std::string>("rstar"));
    CHECK(rep.valid);
    // lambda = 2 alternation shows in the trace sides.
    REQUIRE(trace.size() >= 3);
    CHECK(trace[0].side == 'T');
    CHECK(trace[1].side == 'T');
    CHECK(trace[2].side == 'B');
}

TEST_CASE("bibfs stitches forward reactions on a long chain") {
    // Seven steps from r* to p*: the bottom production of the level-4
    // intermediate meets the top graph before the top walks all the way down.
    NetworkBuilder b;
    b.molecule("bb", 1, true).tmpl("t1", 1);
    b.molecule("rstar", 2, false).reaction("r0", {"bb"}, "rstar", "t1", 0.9);
    std::string prev = "rstar";
    for (int i = 1; i <= 6; ++i) {
        std::string cur = "m" + std::to_string(i);
        b.molecule(cur, 2 + i, false);
        b.reaction("r" + std::to_string(i), {prev}, cur, "t1", 0.9);
        prev = cur;
    }
    b.molecule("pstar", 9, false).reaction("r7", {prev}, "pstar", "t1", 0.9);
    auto net = b.build();
    ModelSuite models(net, {});
    auto index = buyable_index(net);
    SearchBudget budget;
    budget.max_expansions = 40;
    budget.max_depth = 16;
    auto res = bibfs_search(net, models, index, "pstar", "rstar", budget, 2,
                            CostMode::Unit, HeuristicSource::Zero, 0);
    REQUIRE(res.solved);
    CHECK(res.forward_reactions > 0);
    CHECK(*res.iterations_to_solve < 10);
    auto rep = validate_route(*res.route, "pstar", net.buyables(),
                              std::optional<std::string>("rstar"));
    CHECK(rep.valid);
}

TEST_CASE("all baselines produce valid constrained routes when solved") {
    NetworkGenConfig cfg;
    cfg.layers = 5;
    cfg.molecules_per_layer = 10;
    cfg.bimolecular_fraction = 0.4;
    cfg.seed = 77;
    auto net = ReactionNetwork::generate(cfg);
    ModelConfig mc;
    mc.hide_prob = 0.15;
    mc.seed = 77;
    ModelSuite models(net, mc);
    auto index = buyable_index(net);
    std::string target;
    for (auto it = net.molecules().rbegin(); it != net.molecules().rend(); ++it)
        if (!it->buyable) { target = it->id; break; }
    std::string rstar = *net.buyables().begin();
    SearchBudget budget;
    budget.max_expansions = 60;
    budget.max_depth = 16;

    auto check = [&](const PlanResult& res) {
        if (!res.solved) return;
        auto rep = validate_route(*res.route, target, net.buyables(),
                                  std::optional<std::string>(rstar));
        CHECK(rep.valid);
    };
    check(random_search(net, models, target, rstar, budget, CostMode::Unit,
                        HeuristicSource::ExactTable, 3));
    check(bfs_search(net, models, target, rstar, budget, CostMode::Unit,
                     HeuristicSource::ExactTable, 3));
    check(bibfs_search(net, models, index, target, rstar, budget, 2,
                       CostMode::Unit, HeuristicSource::ExactTable, 3));
}

} // TEST_SUITE
