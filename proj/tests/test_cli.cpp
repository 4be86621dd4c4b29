#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli/cli.hpp"
#include "rkranks/rkranks.hpp"
#include "support.hpp"

using namespace rkranks;
using rkranks::testing::read_bytes;
using rkranks::testing::TempDir;

namespace {

struct Run {
    int status;
    std::string out;
    std::string err;
};

Run rk(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int status = cli::run(args, out, err);
    return {status, out.str(), err.str()};
}

std::size_t line_count(const std::string& s) { return std::size_t(std::count(s.begin(), s.end(), '\n')); }

void expect_failure(const Run& r, const std::string& needle) {
    CHECK(r.status != 0);
    CHECK(line_count(r.err) == 1);
    CHECK(r.err.find(needle) != std::string::npos);
}

// Small fixture: 300 users and 1000 items in d = 8.
struct Fixture {
    TempDir dir;
    std::string users = (dir / "u.rkv").string();
    std::string items = (dir / "i.rkv").string();
    std::string index = (dir / "x.rkt").string();

    Fixture() {
        REQUIRE(rk({"gen", "--role", "users", "--count", "300", "--dim", "8", "--seed", "1", "--out", users}).status == 0);
        REQUIRE(rk({"gen", "--role", "items", "--count", "1000", "--dim", "8", "--seed", "2", "--out", items}).status == 0);
        REQUIRE(rk({"build", "--users", users, "--items", items, "--tau", "50", "--omega", "10", "--samples", "20",
                    "--out", index, "--threads", "1"})
                    .status == 0);
    }
};

}  // namespace

TEST_CASE("gen") {
    TempDir dir;
    const auto path = (dir / "items.rkv").string();
    const auto r = rk({"gen", "--role", "items", "--count", "10000", "--dim", "32", "--seed", "1", "--out", path});
    REQUIRE(r.status == 0);
    const auto vs = load_vectors(path, VectorFormat::binary, Role::items);
    CHECK(vs.size() == 10000);
    CHECK(vs.dim() == 32);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["count"] == 10000);
    for (const char* key : {"min", "mean", "max", "stddev"}) CHECK(j["norms"].contains(key));
    CHECK(r.err.find("stddev") != std::string::npos);

    const auto again = (dir / "again.rkv").string();
    REQUIRE(rk({"gen", "--role", "items", "--count", "10000", "--dim", "32", "--seed", "1", "--out", again}).status == 0);
    CHECK(read_bytes(path) == read_bytes(again));

    const auto csv = (dir / "u.csv").string();
    REQUIRE(rk({"gen", "--role", "users", "--count", "5", "--dim", "2", "--format", "csv", "--out", csv}).status == 0);
    CHECK(load_vectors(csv, VectorFormat::csv, Role::users).size() == 5);

    expect_failure(rk({"gen", "--count", "0", "--dim", "3", "--out", path}), "count");
    expect_failure(rk({"gen", "--count", "3", "--dim", "3", "--out", (dir / "missing" / "x.rkv").string()}), "cannot write");
}

TEST_CASE("build") {
    Fixture f;
    const auto j = nlohmann::json::parse(
        rk({"build", "--users", f.users, "--items", f.items, "--tau", "500", "--omega", "10", "--samples", "20",
            "--out", f.index})
            .out);
    CHECK(j["tau"] == 500);
    CHECK(j["inner_products"] == 300 * 10 * 20 + 1000);
    CHECK(load_index(f.index).tau == 500);

    expect_failure(rk({"build", "--users", f.users, "--items", f.items, "--tau", "1", "--out", f.index}), "tau");
    expect_failure(rk({"build", "--users", f.users, "--items", f.items, "--omega", "10", "--samples", "101", "--out",
                       f.index}),
                   "samples");
    expect_failure(rk({"build", "--users", f.items, "--items", f.items, "--out", f.index}), "expected users");
}

TEST_CASE("query") {
    Fixture f;
    const auto r = rk({"query", "--index", f.index, "--users", f.users, "--items", f.items, "--k", "10", "--c", "2.0",
                       "--item-id", "42", "--verify"});
    REQUIRE(r.status == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["query_id"] == 42);
    CHECK(j["entries"].size() == 10);
    CHECK(j["verify"]["valid"].size() == 10);
    CHECK(j["stats"]["inner_products"] == 300);

    const auto inline_q = rk({"query", "--index", f.index, "--users", f.users, "--k", "3", "--vector",
                              "1,0,0,0,0,0,0,0.5"});
    REQUIRE(inline_q.status == 0);
    CHECK(nlohmann::json::parse(inline_q.out)["entries"].size() == 3);

    expect_failure(rk({"query", "--index", f.index, "--users", f.users, "--items", f.items, "--c", "0.5",
                       "--item-id", "1"}),
                   "--c");
    expect_failure(rk({"query", "--index", f.index, "--users", f.users, "--items", f.items, "--k", "301",
                       "--item-id", "1"}),
                   "n=300");
    expect_failure(rk({"query", "--index", f.index, "--users", f.users, "--items", f.items, "--item-id", "5000"}),
                   "5000");
    expect_failure(rk({"query", "--index", f.index, "--users", f.users}), "--item-id");
}

TEST_CASE("bench") {
    Fixture f;
    const auto json_a = (f.dir / "a.json").string();
    const auto csv_a = (f.dir / "a.csv").string();
    const auto json_b = (f.dir / "b.json").string();
    const auto csv_b = (f.dir / "b.csv").string();
    auto bench = [&](const std::string& json, const std::string& csv) {
        return rk({"bench", "--users", f.users, "--items", f.items, "--index", f.index, "--queries", "20", "--seed",
                   "3", "--k", "10,50,100", "--c", "1.5,2,4", "--json", json, "--csv", csv, "--threads", "1"});
    };
    REQUIRE(bench(json_a, csv_a).status == 0);
    REQUIRE(bench(json_b, csv_b).status == 0);

    auto strip = [](const std::string& path) {
        std::ifstream in(path);
        auto j = nlohmann::json::parse(in);
        j.erase("timing");
        for (auto& row : j["aggregates"]) row.erase("query_millis");
        for (auto& row : j["per_query"]) row.erase("query_millis");
        return j;
    };
    const auto a = strip(json_a);
    CHECK(a == strip(json_b));
    CHECK(a["aggregates"].size() == 9);
    CHECK(a["per_query"].size() == 180);
    for (const auto& row : a["per_query"]) CHECK(row["inner_products"] == 300);

    std::ifstream csv(csv_a);
    std::string header;
    std::getline(csv, header);
    CHECK(header.find("inner_products") != std::string::npos);

    // Without --index the tool builds from the flags.
    const auto built = rk({"bench", "--users", f.users, "--items", f.items, "--queries", "3", "--k", "5", "--c", "2",
                           "--threads", "1"});
    REQUIRE(built.status == 0);
    CHECK(nlohmann::json::parse(built.out)["aggregates"].size() == 1);

    expect_failure(rk({"bench", "--users", f.users, "--items", f.items, "--queries", "1001"}), "query count");
}

TEST_CASE("inspect") {
    Fixture f;
    const auto r = rk({"inspect", "--index", f.index});
    REQUIRE(r.status == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["n"] == 300);
    CHECK(j["m"] == 1000);
    CHECK(j["tau"] == 50);
    CHECK(j["bytes"] == serialized_index_size(300, 50));
    CHECK(j["build_stats"]["inner_products"] == 300 * 10 * 20 + 1000);
    CHECK(j["cells"]["min"] >= 1.0);
}

TEST_CASE("thread count from the environment") {
    Fixture f;
    ::setenv("RKRANKS_THREADS", "3", 1);
    auto a = rk({"build", "--users", f.users, "--items", f.items, "--out", (f.dir / "e.rkt").string()});
    CHECK(a.status == 0);
    auto x = load_index(f.dir / "e.rkt");
    ::setenv("RKRANKS_THREADS", "not-a-number", 1);
    expect_failure(rk({"build", "--users", f.users, "--items", f.items, "--out", (f.dir / "e.rkt").string()}),
                   "RKRANKS_THREADS");
    ::unsetenv("RKRANKS_THREADS");

    const auto one = rk({"build", "--users", f.users, "--items", f.items, "--threads", "1", "--out",
                         (f.dir / "one.rkt").string()});
    REQUIRE(one.status == 0);
    auto z = load_index(f.dir / "one.rkt");
    x.stats.build_millis = z.stats.build_millis = 0;
    CHECK(x == z);
}

TEST_CASE("usage errors") {
    CHECK(rk({}).status != 0);
    CHECK(rk({"frobnicate"}).status != 0);
    CHECK(rk({"--help"}).status == 0);
}
