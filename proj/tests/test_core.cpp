#include <doctest.h>

#include <cmath>
#include <set>

#include "refpred/core.hpp"
#include "refpred/rng.hpp"

using namespace refpred;

namespace {

std::vector<InstanceId> ids(std::size_t n, const std::string& prefix = "i") {
    std::vector<InstanceId> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

bool disjoint_cover(const std::vector<std::string>& a, const std::vector<std::string>& b,
                    const std::vector<std::string>& c, std::size_t total) {
    std::set<std::string> all;
    all.insert(a.begin(), a.end());
    all.insert(b.begin(), b.end());
    all.insert(c.begin(), c.end());
    return all.size() == a.size() + b.size() + c.size() && all.size() == total;
}

}  // namespace

TEST_CASE("random split cuts 10 instances into 8/1/1") {
    SplitMode mode;
    mode.train_frac = 0.8;
    mode.val_frac = 0.1;
    const SplitPlan plan = make_split(ids(10), std::vector<std::string>(10, "d"), ids(4, "m"),
                                      mode, 7);
    CHECK(plan.train_instances.size() == 8);
    CHECK(plan.val_instances.size() == 1);
    CHECK(plan.test_instances.size() == 1);
    CHECK(disjoint_cover(plan.train_instances, plan.val_instances, plan.test_instances, 10));
    CHECK(disjoint_cover(plan.train_llms, plan.val_llms, plan.test_llms, 4));
}

TEST_CASE("ood split sends the named datasets to test") {
    std::vector<std::string> labels;
    for (int i = 0; i < 5; ++i) labels.push_back("A");
    for (int i = 0; i < 5; ++i) labels.push_back("B");
    SplitMode mode;
    mode.kind = SplitModeKind::ood_by_dataset;
    mode.test_datasets = {"B"};
    const SplitPlan plan = make_split(ids(10), labels, ids(4, "m"), mode, 3);
    CHECK(plan.test_instances.size() == 5);
    for (const auto& id : plan.test_instances) {
        const std::size_t idx = std::stoul(id.substr(1));
        CHECK(labels[idx] == "B");
    }
    CHECK(plan.train_instances.size() + plan.val_instances.size() == 5);

    SplitMode bad = mode;
    bad.test_datasets = {"C"};
    CHECK_THROWS_WITH_AS(make_split(ids(10), labels, ids(4, "m"), bad, 3),
                         doctest::Contains("unknown dataset 'C'"), std::invalid_argument);
    bad.test_datasets = {"A", "B"};
    CHECK_THROWS_AS(make_split(ids(10), labels, ids(4, "m"), bad, 3), std::invalid_argument);
}

TEST_CASE("make_split is a pure function of its arguments") {
    SplitMode mode;
    const auto a = make_split(ids(30), std::vector<std::string>(30, "d"), ids(10, "m"), mode, 42);
    const auto b = make_split(ids(30), std::vector<std::string>(30, "d"), ids(10, "m"), mode, 42);
    CHECK(a.train_instances == b.train_instances);
    CHECK(a.val_instances == b.val_instances);
    CHECK(a.test_instances == b.test_instances);
    CHECK(a.train_llms == b.train_llms);
    const auto c = make_split(ids(30), std::vector<std::string>(30, "d"), ids(10, "m"), mode, 43);
    CHECK(a.train_instances != c.train_instances);
}

TEST_CASE("split invariants hold across random inputs") {
    Rng rng(77);
    for (int t = 0; t < 25; ++t) {
        const std::size_t n = 12 + rng.below(60);
        const std::size_t m = 4 + rng.below(12);
        std::vector<std::string> labels;
        for (std::size_t i = 0; i < n; ++i)
            labels.push_back(rng.bernoulli(0.5) ? "A" : "B");
        SplitMode mode;
        const SplitPlan plan = make_split(ids(n), labels, ids(m, "m"), mode, rng.raw());
        CHECK(disjoint_cover(plan.train_instances, plan.val_instances, plan.test_instances, n));
        CHECK(disjoint_cover(plan.train_llms, plan.val_llms, plan.test_llms, m));
        CHECK(!plan.train_instances.empty());
        CHECK(!plan.val_instances.empty());
        CHECK(!plan.test_instances.empty());
    }
}

TEST_CASE("degenerate fractions are rejected") {
    SplitMode mode;
    // One instance cannot produce three non-empty splits.
    CHECK_THROWS_AS(make_split(ids(1), {"d"}, ids(4, "m"), mode, 1), std::invalid_argument);
    mode.train_frac = 0.6;
    mode.val_frac = 0.5;
    CHECK_THROWS_AS(make_split(ids(10), std::vector<std::string>(10, "d"), ids(4, "m"), mode, 1),
                    std::invalid_argument);
}

TEST_CASE("split plan serializes with the documented keys") {
    SplitMode mode;
    const SplitPlan plan =
        make_split(ids(12), std::vector<std::string>(12, "d"), ids(5, "m"), mode, 9);
    const nlohmann::json j = plan.to_json();
    for (const char* key : {"train_instances", "val_instances", "test_instances", "train_llms",
                            "val_llms", "test_llms", "seed", "mode"})
        CHECK(j.contains(key));
    const SplitPlan back = SplitPlan::from_json(j);
    CHECK(back.train_instances == plan.train_instances);
    CHECK(back.test_llms == plan.test_llms);
    CHECK(back.seed == plan.seed);
}

TEST_CASE("align reorders to the shared lexicographic order") {
    const SuccessMatrix matrix({"m1", "m2"}, {"b", "a"}, {1, 0, 0, 1});
    const FeatureStore store({"a", "b"}, Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}}),
                             {"d", "d"});
    const auto [am, as] = align(matrix, store);
    CHECK(am.instance_ids() == std::vector<InstanceId>{"a", "b"});
    CHECK(as.instance_ids() == std::vector<InstanceId>{"a", "b"});
    // Cell values follow their columns: m1 had (b=1, a=0).
    CHECK(am.at(0, 0) == 0);
    CHECK(am.at(0, 1) == 1);
    CHECK(am.at(1, 0) == 1);
    CHECK(am.at(1, 1) == 0);
    CHECK(as.vectors()(0, 0) == 1.0);

    // Idempotent: aligning the aligned pair changes nothing.
    const auto [am2, as2] = align(am, as);
    CHECK(am2.instance_ids() == am.instance_ids());
    CHECK(am2.values() == am.values());
    CHECK(as2.vectors() == as.vectors());
}

TEST_CASE("align reports missing ids by name") {
    const SuccessMatrix matrix({"m1"}, {"a", "c"}, {1, 0});
    const FeatureStore store({"a"}, Matrix::from_rows({{1.0}}), {"d"});
    CHECK_THROWS_WITH_AS(align(matrix, store), doctest::Contains("'c'"), std::invalid_argument);
}

TEST_CASE("success matrix validates its construction") {
    CHECK_THROWS_AS(SuccessMatrix({"m", "m"}, {"a"}, {1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(SuccessMatrix({"m"}, {"a", "a"}, {1, 0}), std::invalid_argument);
    CHECK_THROWS_AS(SuccessMatrix({"m"}, {"a"}, {2}), std::invalid_argument);
    CHECK_THROWS_AS(SuccessMatrix({"m"}, {"a"}, {1, 0}), std::invalid_argument);
    const SuccessMatrix m({"m1", "m2"}, {"a", "b", "c"}, {1, 0, 1, 0, 1, 1});
    CHECK(m.row_for("m2", {"c", "a"}) == std::vector<std::uint8_t>{1, 0});
    const SuccessMatrix sub = m.submatrix({"m2"}, {"b"});
    CHECK(sub.at(0, 0) == 1);
}

TEST_CASE("feature store validates dimensions and finiteness") {
    CHECK_THROWS_AS(FeatureStore({"a"}, Matrix::from_rows({{std::nan("")}}), {"d"}),
                    std::invalid_argument);
    CHECK_THROWS_AS(FeatureStore({"a", "a"}, Matrix(2, 1, 0.0), {"d", "d"}),
                    std::invalid_argument);
    const FeatureStore store({"a", "b"}, Matrix::from_rows({{1.0}, {2.0}}), {"x", "y"});
    const FeatureStore sub = store.subset({"b"});
    CHECK(sub.vectors()(0, 0) == 2.0);
    CHECK(sub.dataset_labels()[0] == "y");
}
