#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "gowid/error.hpp"
#include "gowid/table.hpp"

using namespace gowid;
namespace fs = std::filesystem;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = (fs::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << content;
    return path;
}

FeatureSchema flow_schema() {
    return FeatureSchema::from_json_text(R"({
        "label": "label",
        "exclude": ["ts"],
        "categorical": ["proto"],
        "numerical": ["bytes"]
    })");
}

InstanceTable tiny_table(size_t normal, size_t attack) {
    InstanceTable t;
    t.schema = flow_schema();
    for (size_t i = 0; i < normal + attack; ++i) {
        t.rows.push_back({Cell::make_token(i % 2 ? "tcp" : "udp"),
                          Cell::make_number(static_cast<double>(i))});
        t.labels.push_back(i < normal ? 0 : 1);
    }
    return t;
}

}  // namespace

TEST_CASE("schema json parsing and validation") {
    FeatureSchema s = flow_schema();
    CHECK(s.feature_count() == 2);
    CHECK(s.label_column == "label");
    CHECK(s.columns[0].kind == FeatureKind::categorical);
    CHECK(s.columns[1].kind == FeatureKind::numerical);

    // identifier-carrying columns must not be declared numerical
    CHECK_THROWS_AS(FeatureSchema::from_json_text(
                        R"({"label":"label","categorical":[],"numerical":["src_port"]})"),
                    Error);
    // the same column cannot be feature and excluded
    CHECK_THROWS_AS(FeatureSchema::from_json_text(
                        R"({"label":"l","exclude":["a"],"categorical":["a"],"numerical":[]})"),
                    Error);
    // label cannot also be a feature
    CHECK_THROWS_AS(FeatureSchema::from_json_text(
                        R"({"label":"a","categorical":["a"],"numerical":[]})"),
                    Error);
    CHECK_THROWS_AS(FeatureSchema::from_json_text(R"({"label":"l","bogus":[]})"), Error);
}

TEST_CASE("load_csv applies the schema") {
    const std::string path = write_temp("gowid_load.csv",
                                        "ts,proto,bytes,label\n"
                                        "1,tcp,100,0\n"
                                        "2,udp,200,1\n"
                                        "3,tcp,300,1\n"
                                        "4,udp,400,0\n");
    InstanceTable t = load_csv(path, flow_schema());
    CHECK(t.size() == 4);
    CHECK(t.schema.feature_count() == 2);  // ts dropped
    CHECK(t.labels == std::vector<uint8_t>{0, 1, 1, 0});
    CHECK(t.rows[0][0].token == "tcp");
    CHECK(t.rows[1][1].number == 200.0);
}

TEST_CASE("load_csv turns the sentinel and unparseable numerics into missing") {
    const std::string path = write_temp("gowid_missing.csv",
                                        "ts,proto,bytes,label\n"
                                        "1,tcp,-,0\n"
                                        "2,-,12,1\n"
                                        "3,udp,oops,0\n");
    InstanceTable t = load_csv(path, flow_schema());
    REQUIRE(t.size() == 3);
    CHECK(t.rows[0][1].is_missing());       // "-" numeric cell
    CHECK(t.rows[1][0].is_missing());       // "-" categorical cell
    CHECK(t.rows[2][1].is_missing());       // unparseable numeric cell
    CHECK_FALSE(t.rows[1][1].is_missing());
    CHECK(t.rows[1][1].number == 12.0);
}

TEST_CASE("load_csv error paths") {
    CHECK_THROWS_AS(load_csv("/nonexistent/gowid.csv", flow_schema()), Error);

    const std::string missing_col = write_temp("gowid_badhdr.csv", "ts,proto,label\n1,tcp,0\n");
    CHECK_THROWS_AS(load_csv(missing_col, flow_schema()), Error);

    const std::string unknown_col =
        write_temp("gowid_extrahdr.csv", "ts,proto,bytes,extra,label\n1,tcp,2,3,0\n");
    CHECK_THROWS_AS(load_csv(unknown_col, flow_schema()), Error);

    const std::string bad_label = write_temp("gowid_badlabel.csv",
                                             "ts,proto,bytes,label\n"
                                             "1,tcp,100,0\n"
                                             "2,udp,200,2\n");
    try {
        load_csv(bad_label, flow_schema());
        FAIL("expected a label error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }

    const std::string quoted = write_temp("gowid_quoted.csv",
                                          "ts,proto,bytes,label\n1,\"a,b\",100,0\n");
    CHECK_THROWS_AS(load_csv(quoted, flow_schema()), Error);

    const std::string ragged = write_temp("gowid_ragged.csv",
                                          "ts,proto,bytes,label\n1,tcp,100\n");
    CHECK_THROWS_AS(load_csv(ragged, flow_schema()), Error);
}

TEST_CASE("balance downsamples the majority class") {
    InstanceTable t = tiny_table(10, 4);
    InstanceTable b = balance(t, 99);
    CHECK(b.size() == 8);
    auto [normal, attack] = b.class_counts();
    CHECK(normal == 4);
    CHECK(attack == 4);

    // paper-sized class proportions: 6507/3493 -> 6986 rows
    InstanceTable big = tiny_table(6507, 3493);
    CHECK(balance(big, 5).size() == 6986);

    CHECK_THROWS_AS(balance(tiny_table(5, 0), 1), Error);
}

TEST_CASE("balance keeps an already balanced multiset intact") {
    InstanceTable t = tiny_table(5, 5);
    InstanceTable b = balance(t, 123);
    CHECK(b.size() == 10);
    std::multiset<double> before, after;
    for (const auto& row : t.rows) before.insert(row[1].number);
    for (const auto& row : b.rows) after.insert(row[1].number);
    CHECK(before == after);
}

TEST_CASE("balance is deterministic per seed") {
    InstanceTable t = tiny_table(20, 7);
    InstanceTable a = balance(t, 42), b = balance(t, 42), c = balance(t, 43);
    REQUIRE(a.size() == b.size());
    bool same = true, differs = false;
    for (size_t i = 0; i < a.size(); ++i) {
        same = same && a.rows[i][1].number == b.rows[i][1].number;
        if (i < c.size() && a.rows[i][1].number != c.rows[i][1].number) differs = true;
    }
    CHECK(same);
    CHECK(differs);
}

TEST_CASE("shuffle_split sizes and determinism") {
    InstanceTable t = tiny_table(30, 20);
    auto [train, test] = shuffle_split(t, 40, 10, 26);
    CHECK(train.size() == 40);
    CHECK(test.size() == 10);

    auto [train2, test2] = shuffle_split(t, 40, 10, 26);
    for (size_t i = 0; i < train.size(); ++i)
        CHECK(train.rows[i][1].number == train2.rows[i][1].number);
    for (size_t i = 0; i < test.size(); ++i)
        CHECK(test.rows[i][1].number == test2.rows[i][1].number);

    auto [all, none] = shuffle_split(t, t.size(), 0, 3);
    CHECK(all.size() == t.size());
    CHECK(none.size() == 0);

    CHECK_THROWS_AS(shuffle_split(t, 45, 10, 1), Error);
}

TEST_CASE("partition_agents deals near-equal disjoint blocks") {
    InstanceTable t = tiny_table(6, 4);
    auto agents = partition_agents(t, 3, 0.5, 7);
    REQUIRE(agents.size() == 3);
    std::vector<size_t> group_sizes;
    for (const auto& a : agents) group_sizes.push_back(a.train.size() + a.test.size());
    CHECK(group_sizes == std::vector<size_t>{4, 3, 3});

    // every original row lands in exactly one agent partition
    std::multiset<double> seen;
    for (const auto& a : agents) {
        for (const auto& row : a.train.rows) seen.insert(row[1].number);
        for (const auto& row : a.test.rows) seen.insert(row[1].number);
    }
    std::multiset<double> expected;
    for (const auto& row : t.rows) expected.insert(row[1].number);
    CHECK(seen == expected);

    auto single = partition_agents(t, 1, 0.8, 7);
    REQUIRE(single.size() == 1);
    CHECK(single[0].train.size() + single[0].test.size() == t.size());

    CHECK_THROWS_AS(partition_agents(t, 11, 0.5, 7), Error);
}

TEST_CASE("partition_agents split ratio and the minimum train count") {
    InstanceTable t = tiny_table(200, 150);
    const double fraction = 6.0 / 7.0;
    auto agents = partition_agents(t, 10, fraction, 11);
    CHECK(agents.size() == 10);
    CHECK(min_train_count(agents) == 30);
    for (const auto& a : agents) {
        CHECK(a.train.size() == 30);
        CHECK(a.test.size() == 5);
        CHECK(a.agent_id >= 0);
    }
}

TEST_CASE("table operations are pure functions of input and seed") {
    InstanceTable t = tiny_table(13, 9);
    auto a1 = partition_agents(t, 4, 0.75, 5);
    auto a2 = partition_agents(t, 4, 0.75, 5);
    for (size_t i = 0; i < a1.size(); ++i) {
        REQUIRE(a1[i].train.size() == a2[i].train.size());
        for (size_t r = 0; r < a1[i].train.size(); ++r)
            CHECK(a1[i].train.rows[r][1].number == a2[i].train.rows[r][1].number);
    }
}
