#include <doctest.h>

#include <cmath>

#include "bidesp/models.hpp"
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

// Chain with a bimolecular step: b0 -> m1, (m1, bb) -> m2, m2 -> m3.
ReactionNetwork forward_chain() {
    return NetworkBuilder()
        .molecule("b0", 1, true)
        .molecule("bb", 1, true)
        .molecule("bx", 1, true)
        .molecule("m1", 2, false)
        .molecule("m2", 3, false)
        .molecule("m3", 4, false)
        .molecule("side", 3, false)
        .tmpl("tu", 1)
        .tmpl("tb", 2)
        .reaction("r1", {"b0"}, "m1", "tu", 0.9)
        .reaction("r2", {"bb", "m1"}, "m2", "tb", 0.8)
        .reaction("r2x", {"bx", "m1"}, "side", "tb", 0.8)
        .reaction("r3", {"m2"}, "m3", "tu", 0.7)
        .build();
}

} // namespace

TEST_SUITE("models") {

TEST_CASE("retro model with hide_prob 0 equals truncated producers") {
    NetworkGenConfig cfg;
    cfg.layers = 4;
    cfg.molecules_per_layer = 8;
    cfg.max_producers_per_molecule = 3;
    cfg.seed = 5;
    auto net = ReactionNetwork::generate(cfg);
    ModelSuite models(net, {});
    for (const auto& m : net.molecules()) {
        auto got = models.retro_model(m.id, 2);
        const auto& want = net.producers_of(m.id);
        CHECK(got.size() == std::min<std::size_t>(2, want.size()));
        for (std::size_t i = 0; i < got.size(); ++i)
            CHECK(got[i].first->id == want[i]->id);
    }
    CHECK_THROWS_AS(models.retro_model("m?", 1), InputError);
    CHECK_THROWS_AS(models.retro_model("M000", 0), InputError);
}

TEST_CASE("hidden reactions are stable across calls and seeds change them") {
    NetworkGenConfig cfg;
    cfg.layers = 5;
    cfg.molecules_per_layer = 10;
    cfg.seed = 6;
    auto net = ReactionNetwork::generate(cfg);
    ModelConfig mc;
    mc.hide_prob = 0.5;
    mc.seed = 1;
    ModelSuite models(net, mc);
    for (const auto& m : net.molecules()) {
        auto a = models.retro_model(m.id, 50);
        auto b = models.retro_model(m.id, 50);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(a[i].first->id == b[i].first->id);
    }
}

TEST_CASE("visible fraction matches 1 - hide_prob within 3 sigma") {
    NetworkGenConfig cfg;
    cfg.layers = 6;
    cfg.molecules_per_layer = 12;
    cfg.max_producers_per_molecule = 3;
    cfg.seed = 8;
    auto net = ReactionNetwork::generate(cfg);
    const double hide = 0.8;
    int visible = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        ModelConfig mc;
        mc.hide_prob = hide;
        mc.seed = seed;
        ModelSuite models(net, mc);
        for (const auto& r : net.reactions()) {
            visible += models.visible(r) ? 1 : 0;
            ++total;
        }
    }
    double frac = static_cast<double>(visible) / total;
    double sigma = std::sqrt(hide * (1 - hide) / total);
    CHECK(std::abs(frac - (1 - hide)) <= 3 * sigma);
}

TEST_CASE("predict_distance implements the clipping semantics") {
    // Long chain: distances above d_max must collapse to exactly d_max + 1.
    NetworkBuilder b;
    b.molecule("m0", 1, true);
    b.tmpl("tu", 1);
    for (int i = 1; i <= 14; ++i) {
        b.molecule("m" + std::to_string(i), i + 1, false);
        b.reaction("r" + std::to_string(i), {"m" + std::to_string(i - 1)},
                   "m" + std::to_string(i), "tu", 1.0);
    }
    auto net = b.build();
    ModelConfig mc;
    mc.d_max = 9;
    ModelSuite models(net, mc);
    CHECK(models.exact_distance("m0", "m12") == 12.0);
    CHECK(models.predict_distance("m0", "m12") == 10.0);  // d_max + 1 exactly
    CHECK(models.predict_distance("m12", "m0") == 10.0);  // unreachable -> 10
    CHECK(models.predict_distance("m3", "m3") == 0.0);
    CHECK(models.predict_distance("m0", "m9") == 9.0);
    CHECK(models.predict_distance("m0", "m5") == 5.0);
}

TEST_CASE("noise is deterministic per pair and clamped to [0, d_max]") {
    auto net = forward_chain();
    ModelConfig mc;
    mc.noise_sigma = 1.5;
    mc.seed = 9;
    ModelSuite models(net, mc);
    double a = models.predict_distance("m1", "m3");
    double b = models.predict_distance("m1", "m3");
    CHECK(a == b);
    CHECK(a >= 0.0);
    CHECK(a <= 9.0);
    // Beyond-cap pairs stay exactly d_max + 1 even with noise.
    CHECK(models.predict_distance("m3", "m1") == 10.0);
}

TEST_CASE("noise 0 equals the exact table on all reachable pairs") {
    NetworkGenConfig cfg;
    cfg.layers = 5;
    cfg.molecules_per_layer = 10;
    cfg.seed = 12;
    auto net = ReactionNetwork::generate(cfg);
    ModelSuite models(net, {});
    auto vm = compute_vm(net, CostMode::Unit);
    for (const auto& m1 : net.molecules()) {
        for (const auto& m2 : net.molecules()) {
            double exact = compute_distance(net, m1.id, m2.id, CostMode::Unit);
            double pred = models.predict_distance(m1.id, m2.id);
            if (exact > 9)
                CHECK(pred == 10.0);
            else
                CHECK(pred == exact);
        }
    }
}

TEST_CASE("forward template model ranks the on-path template first") {
    auto net = forward_chain();
    ModelSuite models(net, {});
    // From m1 toward m3: r2 (template tb via m2) leads on-path; r2x reaches a
    // side product with no route to m3.
    auto ranked = models.forward_template_model("m1", "m3", 5);
    REQUIRE(!ranked.empty());
    CHECK(ranked[0] == "tb");
    // No consuming reactions: empty result, not an error.
    CHECK(models.forward_template_model("m3", "m1", 5).empty());
}

TEST_CASE("forward template scoring: equal plausibility, closer product wins") {
    auto net = NetworkBuilder()
                   .molecule("b", 1, true)
                   .molecule("near", 2, false)
                   .molecule("far0", 2, false)
                   .molecule("far1", 3, false)
                   .molecule("goal", 4, false)
                   .tmpl("t_near", 1)
                   .tmpl("t_far", 1)
                   .tmpl("tg", 1)
                   .reaction("rn", {"b"}, "near", "t_near", 0.5)
                   .reaction("rf", {"b"}, "far0", "t_far", 0.5)
                   .reaction("rg", {"near"}, "goal", "tg", 0.9)
                   .reaction("rf1", {"far0"}, "far1", "tg", 0.9)
                   .reaction("rf2", {"far1"}, "goal", "tg", 0.9)
                   .build();
    ModelSuite models(net, {});
    auto ranked = models.forward_template_model("b", "goal", 2);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0] == "t_near");  // D(near,goal)=1 beats D(far0,goal)=2
    CHECK(ranked[1] == "t_far");
}

TEST_CASE("apply_forward_template: match, none, and highest-plausibility tie") {
    auto net = NetworkBuilder()
                   .molecule("a", 2, false)
                   .molecule("b", 1, true)
                   .molecule("p1", 3, false)
                   .molecule("p2", 3, false)
                   .tmpl("tb", 2)
                   .tmpl("tu", 1)
                   .reaction("r1", {"a", "b"}, "p1", "tb", 0.6)
                   .reaction("r2", {"a", "b"}, "p2", "tb", 0.9)
                   .build();
    ModelSuite models(net, {});
    auto p = models.apply_forward_template("tb", "a", std::optional<std::string>("b"));
    REQUIRE(p.has_value());
    CHECK(*p == "p2");  // two matches: higher plausibility wins
    CHECK_FALSE(models.apply_forward_template("tb", "b",
                                              std::optional<std::string>("p1"))
                    .has_value());
    CHECK_THROWS_AS(models.apply_forward_template("tb", "a"), ContractViolation);
    CHECK_THROWS_AS(
        models.apply_forward_template("tu", "a", std::optional<std::string>("b")),
        ContractViolation);
}

TEST_CASE("building block model: compatibility filter and ranking") {
    auto net = forward_chain();
    ModelSuite models(net, {});
    auto index = buyable_index(net);
    SUBCASE("single compatible partner") {
        auto bbs = models.building_block_model("m1", "m3", "tb", 2, index);
        // Both bb (toward m3 via m2) and bx (toward side) are compatible;
        // distance ranking puts bb first.
        REQUIRE(!bbs.empty());
        CHECK(bbs[0] == "bb");
    }
    SUBCASE("k larger than the compatible set returns all, no padding") {
        auto bbs = models.building_block_model("m1", "m3", "tb", 10, index);
        CHECK(bbs.size() == 2);
    }
    SUBCASE("unimolecular template is a contract violation") {
        CHECK_THROWS_AS(models.building_block_model("m1", "m3", "tu", 2, index),
                        ContractViolation);
    }
    SUBCASE("no compatible partner returns empty") {
        auto bbs = models.building_block_model("m3", "m1", "tb", 2, index);
        CHECK(bbs.empty());
    }
}

TEST_CASE("heuristic vm: exact, noisy, and infinity handling") {
    auto net = forward_chain();
    ModelConfig mc;
    mc.noise_sigma = 0.7;
    mc.seed = 4;
    ModelSuite models(net, mc);
    auto vm = compute_vm(net, CostMode::NegLogPlausibility);
    for (const auto& m : net.molecules()) {
        CHECK(models.predict_vm(m.id, CostMode::NegLogPlausibility, false) ==
              vm.at(m.id));
        double noisy = models.predict_vm(m.id, CostMode::NegLogPlausibility, true);
        CHECK(noisy >= 0.0);
        CHECK(noisy ==
              models.predict_vm(m.id, CostMode::NegLogPlausibility, true));
    }
}

} // TEST_SUITE
