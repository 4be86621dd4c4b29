#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include <json.hpp>

#include "rkranks/eval.hpp"
#include "rkranks/oracle.hpp"
#include "rkranks/query.hpp"
#include "support.hpp"

using namespace rkranks;
using namespace rkranks::testing;

namespace {

// One user, thresholds {2,3,4,5,6}, m = 20.
RankTableIndex figure_index() {
    RankTableIndex idx;
    idx.n = 1;
    idx.m = 20;
    idx.tau = 5;
    idx.params.tau = 5;
    idx.rows = {ThresholdRow{2.0f, 1.0f}};
    idx.cells = {20, 16, 13, 6, 2};
    return idx;
}

std::vector<std::uint64_t> sorted_exact_ranks(const QueryResult& r, const std::vector<std::uint64_t>& exact) {
    std::vector<std::uint64_t> out;
    for (const auto& e : r.entries) out.push_back(exact[e.user_row]);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("rank_bounds lookups") {
    const auto idx = figure_index();
    SUBCASE("bracketed product") {
        const auto b = rank_bounds(idx, 0, 4.4);
        CHECK(b.bracket == Bracket::in_range);
        CHECK(b.column == 2);
        CHECK(b.lower == 6.0);
        CHECK(b.upper == 13.0);
    }
    SUBCASE("above the grid") {
        const auto b = rank_bounds(idx, 0, 6.5);
        CHECK(b.bracket == Bracket::above_range);
        CHECK(b.lower == 1.0);
        CHECK(b.upper == 2.0);
    }
    SUBCASE("below the grid") {
        const auto b = rank_bounds(idx, 0, 1.0);
        CHECK(b.bracket == Bracket::below_range);
        CHECK(b.lower == 20.0);
        CHECK(b.upper == 21.0);
    }
    SUBCASE("grid endpoints stay in range") {
        CHECK(rank_bounds(idx, 0, 2.0).column == 0);
        CHECK(rank_bounds(idx, 0, 6.0).column == 3);
        CHECK(rank_bounds(idx, 0, 6.0).bracket == Bracket::in_range);
    }
    SUBCASE("flat row collapses to a single cell") {
        RankTableIndex flat = figure_index();
        flat.rows = {ThresholdRow{0.0f, 0.0f}};
        flat.cells = {3, 3, 3, 3, 3};
        const auto b = rank_bounds(flat, 0, 0.0);
        CHECK(b.lower == 3.0);
        CHECK(b.upper == 3.0);
        CHECK(interpolate_rank(b, flat.rows[0]) == 3.0);
    }
}

TEST_CASE("kth_smallest") {
    CHECK(kth_smallest({5, 1, 3}, 2) == 3);
    CHECK(kth_smallest({5, 1, 3}, 1) == 1);
    CHECK(kth_smallest({5, 1, 3}, 3) == 5);
    CHECK_THROWS_AS(kth_smallest({5, 1, 3}, 0), Error);
    CHECK_THROWS_AS(kth_smallest({5, 1, 3}, 4), Error);

    std::mt19937_64 rng(2);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> v(1 + rng() % 100);
        for (auto& x : v) x = double(rng() % 20);
        const std::size_t k = 1 + rng() % v.size();
        auto sorted = v;
        std::sort(sorted.begin(), sorted.end());
        CHECK(kth_smallest(v, k) == sorted[k - 1]);
    }
}

TEST_CASE("interpolate_rank") {
    const auto idx = figure_index();
    const ThresholdRow& row = idx.rows[0];
    RankBounds b{6.0, 13.0, Bracket::in_range, 2, 4.5};
    CHECK(interpolate_rank(b, row) == doctest::Approx(9.5));
    b.ip = 4.0;
    CHECK(interpolate_rank(b, row) == doctest::Approx(13.0));
    b.ip = 5.0;
    CHECK(interpolate_rank(b, row) == doctest::Approx(6.0));
    CHECK(interpolate_rank(rank_bounds(idx, 0, 9.0), row) == doctest::Approx(1.5));
    CHECK(interpolate_rank(rank_bounds(idx, 0, -9.0), row) == doctest::Approx(20.5));
}

TEST_CASE("bounds sandwich exact ranks on a full-sampling index") {
    const auto users = generate_synthetic(40, 4, 1, NormProfile::gaussian, Role::users);
    const auto items = generate_synthetic(120, 4, 2, NormProfile::gaussian);
    for (auto mode : {RangeMode::cauchy_schwarz, RangeMode::exact}) {
        const auto index = build_index(users, items, full_sampling_params(120, 16, mode), 1);
        std::size_t in_range = 0;
        for (std::size_t qi = 0; qi < items.size(); ++qi) {
            for (std::size_t i = 0; i < users.size(); ++i) {
                const double ip = inner_product(users.row(i), items.row(qi));
                const auto b = rank_bounds(index, i, ip);
                if (b.bracket != Bracket::in_range) continue;
                ++in_range;
                const double rank = double(exact_rank(items.row(qi), users.row(i), items));
                CHECK(b.lower <= rank);
                CHECK(rank <= b.upper);
            }
        }
        CHECK(in_range > 0);
    }
}

TEST_CASE("query with c >= m + 1 exits early and satisfies the definition") {
    const auto users = generate_synthetic(60, 5, 3, NormProfile::gaussian, Role::users);
    const auto items = generate_synthetic(80, 5, 4, NormProfile::gaussian);
    BuildParams p;
    p.tau = 20;
    p.omega = 4;
    p.samples = 5;
    const auto index = build_index(users, items, p, 1);
    for (std::size_t qi = 0; qi < 10; ++qi) {
        const auto q = items.row(qi);
        const auto r = query(index, users, q, 7, 81.0);
        CHECK(r.stats.early_exit);
        for (const auto& e : r.entries) CHECK(e.admitted_by == Admission::bound);
        const auto exact = exact_ranks_all(q, users, items);
        const auto truth = select_reverse_k_ranks(exact, users, 7).ranks();
        const auto ok = validate_c_approx(sorted_exact_ranks(r, exact), truth, 81.0);
        CHECK(std::all_of(ok.begin(), ok.end(), [](bool b) { return b; }));
    }
}

TEST_CASE("full-sampling index satisfies c = 1.5 positionally") {
    const auto users = generate_synthetic(50, 8, 5, NormProfile::gaussian, Role::users);
    const auto items = generate_synthetic(200, 8, 6, NormProfile::gaussian);
    const auto index = build_index(users, items, full_sampling_params(200, 100, RangeMode::exact), 1);
    for (std::size_t qi = 0; qi < 20; ++qi) {
        const auto q = items.row(qi * 7);
        const auto r = query(index, users, q, 5, 1.5);
        const auto exact = exact_ranks_all(q, users, items);
        const auto truth = exact_reverse_k_ranks(q, 5, users, items);
        const auto ok = validate_c_approx(sorted_exact_ranks(r, exact), truth, 1.5);
        CHECK(std::all_of(ok.begin(), ok.end(), [](bool b) { return b; }));
    }
}

TEST_CASE("query cost and shape do not depend on k or c") {
    const auto users = generate_synthetic(150, 6, 7, NormProfile::gaussian, Role::users);
    const auto items = generate_synthetic(400, 6, 8, NormProfile::gaussian);
    const auto index = build_index(users, items, BuildParams{}, 1);
    const auto q = items.row(3);
    for (std::size_t k : {1, 10, 50, 150}) {
        for (double c : {1.0, 1.5, 2.0, 4.0, 500.0}) {
            const auto r = query(index, users, q, k, c);
            CHECK(r.stats.inner_products == 150);
            CHECK(r.entries.size() == k);
            std::set<std::uint64_t> ids;
            for (std::size_t i = 0; i < r.entries.size(); ++i) {
                ids.insert(r.entries[i].user_id);
                if (i > 0) CHECK(r.entries[i - 1].estimated_rank <= r.entries[i].estimated_rank);
            }
            CHECK(ids.size() == k);
            CHECK(r.stats.users_admitted + r.stats.users_filtered + r.stats.users_interpolated <= 150);
        }
    }
}

TEST_CASE("bound-admitted users only grow with c") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 25; ++trial) {
        auto inst = random_instance(rng, 120, 300, 6);
        BuildParams p;
        p.tau = 2 + rng() % 50;
        p.omega = 1 + rng() % std::min<std::size_t>(5, inst.items.size());
        p.samples = 1 + rng() % (inst.items.size() / p.omega);
        p.seed = rng();
        const auto index = build_index(inst.users, inst.items, p, 1);
        const auto q = inst.items.row(rng() % inst.items.size());
        const std::size_t k = 1 + rng() % inst.users.size();
        std::set<std::uint64_t> previous;
        std::uint64_t previous_count = 0;
        for (double c : {1.0, 1.1, 1.5, 2.0, 3.0, 8.0, 1e6}) {
            const auto r = query(index, inst.users, q, k, c);
            std::set<std::uint64_t> bound;
            for (const auto& e : r.entries)
                if (e.admitted_by == Admission::bound) bound.insert(e.user_id);
            CHECK(std::includes(bound.begin(), bound.end(), previous.begin(), previous.end()));
            CHECK(r.stats.users_admitted >= previous_count);
            previous = std::move(bound);
            previous_count = r.stats.users_admitted;
        }
    }
}

TEST_CASE("query is deterministic and thread-count independent") {
    const auto users = generate_synthetic(300, 6, 9, NormProfile::uniform, Role::users);
    const auto items = generate_synthetic(500, 6, 10, NormProfile::uniform);
    const auto index = build_index(users, items, BuildParams{}, 1);
    for (std::size_t qi = 0; qi < 5; ++qi) {
        const auto a = query(index, users, items.row(qi), 20, 1.5, 1);
        CHECK(a == query(index, users, items.row(qi), 20, 1.5, 1));
        CHECK(a == query(index, users, items.row(qi), 20, 1.5, 3));
    }
}

TEST_CASE("exclusion is sound on a full-sampling index") {
    const auto users = generate_synthetic(120, 5, 11, NormProfile::gaussian, Role::users);
    const auto items = generate_synthetic(240, 5, 12, NormProfile::gaussian);
    const auto index = build_index(users, items, full_sampling_params(240, 30, RangeMode::cauchy_schwarz), 1);
    std::size_t filtered = 0;
    for (std::size_t qi = 0; qi < 30; ++qi) {
        const auto q = items.row(qi * 8);
        std::vector<Decision> decisions;
        const auto r = query_traced(index, users, q, 10, 1.2, decisions);
        const auto exact = exact_ranks_all(q, users, items);
        const auto kth = select_reverse_k_ranks(exact, users, 10).entries.back().exact_rank;
        for (std::size_t i = 0; i < users.size(); ++i) {
            if (decisions[i] != Decision::filtered) continue;
            ++filtered;
            CHECK(exact[i] > kth);
        }
        CHECK(r.stats.users_filtered == std::size_t(std::count(decisions.begin(), decisions.end(), Decision::filtered)));
    }
    CHECK(filtered > 0);
}

TEST_CASE("query errors") {
    const auto users = generate_synthetic(10, 3, 1, NormProfile::gaussian, Role::users);
    const auto items = generate_synthetic(20, 3, 2, NormProfile::gaussian);
    const auto index = build_index(users, items, BuildParams{10, 2, 5, 0, RangeMode::cauchy_schwarz}, 1);
    const auto q = items.row(0);
    CHECK_THROWS_WITH_AS(query(index, users, q, 11, 2.0), doctest::Contains("n=10"), Error);
    CHECK_THROWS_AS(query(index, users, q, 0, 2.0), Error);
    CHECK_THROWS_AS(query(index, users, q, 3, 0.5), Error);
    const std::vector<float> wrong{1, 2};
    CHECK_THROWS_AS(query(index, users, wrong, 3, 2.0), Error);
    const auto fewer = generate_synthetic(9, 3, 1, NormProfile::gaussian, Role::users);
    CHECK_THROWS_AS(query(index, fewer, q, 3, 2.0), Error);
}

TEST_CASE("query result json") {
    const auto users = generate_synthetic(30, 3, 1, NormProfile::gaussian, Role::users);
    const auto items = generate_synthetic(40, 3, 2, NormProfile::gaussian);
    const auto index = build_index(users, items, BuildParams{10, 2, 5, 0, RangeMode::cauchy_schwarz}, 1);
    const auto r = query(index, users, items.row(4), 6, 1.5);
    const auto j = nlohmann::json::parse(query_result_json(r, 4, 6, 1.5));
    CHECK(j["query_id"] == 4);
    CHECK(j["k"] == 6);
    CHECK(j["c"] == 1.5);
    REQUIRE(j["entries"].size() == 6);
    CHECK(j["entries"][0].contains("user_id"));
    CHECK(j["entries"][0].contains("est_rank"));
    const std::string adm = j["entries"][0]["admitted_by"];
    CHECK((adm == "bound" || adm == "interpolation"));
    CHECK(j["thresholds"]["r_down_k"] == r.r_down_k);
    CHECK(j["thresholds"]["r_up_k"] == r.r_up_k);
    CHECK(j["stats"]["inner_products"] == 30);
}
