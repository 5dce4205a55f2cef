#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "tripletrag/errors.hpp"
#include "tripletrag/retrieve.hpp"

#include "support.hpp"

using namespace tripletrag;

TEST_CASE("query propositions keep field order and demand one placeholder") {
    CHECK(query_proposition(Triplet::make("Silver Harbor", "is directed by", "?d")) ==
          "Silver Harbor is directed by");
    CHECK(query_proposition(Triplet::make("?film", "is directed by", "Mara Ellison")) ==
          "is directed by Mara Ellison");
    CHECK(query_proposition(Triplet::make("Mara Ellison", "?", "1901")) ==
          "Mara Ellison 1901");

    CHECK_THROWS_AS(query_proposition(Triplet::make("a", "b", "c")), ContractViolation);
    CHECK_THROWS_AS(query_proposition(Triplet::make("?x", "b", "?y")), ContractViolation);
}

TEST_CASE("search_topn matches a brute-force ranking on random indexes") {
    testsup::Rng rng(311);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t props = static_cast<std::size_t>(testsup::pick_int(rng, 1, 40));
        const std::size_t dim = static_cast<std::size_t>(testsup::pick_int(rng, 3, 12));
        auto index = testsup::random_index(rng, props, static_cast<std::size_t>(testsup::pick_int(rng, 1, 6)), dim);
        auto query = testsup::random_unit_vector(rng, dim);
        const std::size_t n = static_cast<std::size_t>(testsup::pick_int(rng, 1, static_cast<int>(props) + 3));

        auto got = search_topn(index, query, n);
        auto want = testsup::oracle_topn(index, query, n);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].prop_id == want[i].prop_id);
            CHECK(got[i].score == want[i].score);  // identical accumulation order
        }
    }
}

TEST_CASE("search_topn orders ties by ascending prop_id") {
    // Two identical rows: equal scores, ids break the tie.
    std::vector<Proposition> props;
    std::vector<float> rows;
    for (std::int64_t i = 0; i < 3; ++i) {
        props.push_back({i, Triplet::make("s" + std::to_string(i), "p", "o"),
                         "s" + std::to_string(i) + " p o", "c#0"});
    }
    rows.insert(rows.end(), {1.0f, 0.0f});
    rows.insert(rows.end(), {0.0f, 1.0f});
    rows.insert(rows.end(), {1.0f, 0.0f});
    IndexMeta meta;
    meta.embedding_dim = 2;
    meta.proposition_count = 3;
    meta.chunk_count = 1;
    meta.corpus_digest = "feedfeedfeedfeed";
    TripletIndex index(std::move(props), std::move(rows), {{"c#0", "d", "t", 0, 1}}, meta);

    auto top = search_topn(index, {1.0f, 0.0f}, 3);
    REQUIRE(top.size() == 3);
    CHECK(top[0].prop_id == 0);
    CHECK(top[1].prop_id == 2);
    CHECK(top[2].prop_id == 1);
}

TEST_CASE("pooling keeps the max score per proposition") {
    testsup::Rng rng(523);
    auto index = testsup::random_index(rng, 12, 4, 6);
    std::vector<EmbeddingVector> queries{testsup::random_unit_vector(rng, 6),
                                         testsup::random_unit_vector(rng, 6),
                                         testsup::random_unit_vector(rng, 6)};

    auto pool = pool_candidates(index, queries, index.size());
    REQUIRE(pool.size() == index.size());
    std::set<std::int64_t> seen;
    double prev = pool.front().score;
    for (const auto& sp : pool) {
        CHECK(seen.insert(sp.prop_id).second);
        CHECK(sp.score <= prev);
        prev = sp.score;

        double best = -2.0;
        for (const auto& q : queries) {
            double acc = 0.0;
            const float* row = index.row(sp.prop_id);
            for (std::size_t c = 0; c < index.dim(); ++c)
                acc += static_cast<double>(row[c]) * q[c];
            best = std::max(best, acc);
        }
        CHECK(sp.score == best);
    }
}

TEST_CASE("adding a query never evicts a pooled candidate") {
    testsup::Rng rng(524);
    for (int trial = 0; trial < 50; ++trial) {
        auto index = testsup::random_index(rng, static_cast<std::size_t>(testsup::pick_int(rng, 2, 20)), 3, 5);
        std::vector<EmbeddingVector> queries;
        const int nq = testsup::pick_int(rng, 1, 4);
        for (int i = 0; i < nq; ++i) queries.push_back(testsup::random_unit_vector(rng, 5));
        const std::size_t width = static_cast<std::size_t>(testsup::pick_int(rng, 1, 6));

        auto base = pool_candidates(index, queries, width);
        queries.push_back(testsup::random_unit_vector(rng, 5));
        auto grown = pool_candidates(index, queries, width);

        std::set<std::int64_t> grown_ids;
        for (const auto& sp : grown) grown_ids.insert(sp.prop_id);
        for (const auto& sp : base) CHECK(grown_ids.count(sp.prop_id) == 1);
    }
}

TEST_CASE("the walk stops exactly at k unique chunks") {
    // Nine props across three chunks; a query aligned with chunk order.
    testsup::Rng rng(525);
    auto index = testsup::random_index(rng, 9, 3, 8);
    auto query = testsup::random_unit_vector(rng, 8);

    RetrieveOptions options;
    options.k = 2;
    auto got = adaptive_retrieve_vectors(index, {query}, options);
    auto want = testsup::oracle_retrieve(index, {query}, 2);
    CHECK(got.propositions == want.propositions);
    CHECK(got.chunk_ids == want.chunk_ids);
    CHECK(got.exhausted == want.exhausted);
    CHECK(got.chunk_ids.size() == 2);
    CHECK_FALSE(got.exhausted);

    // Walk order is a prefix of the full ranking restricted to the
    // point where a third chunk would have entered.
    auto full = search_topn(index, query, index.size());
    for (std::size_t i = 0; i < got.propositions.size(); ++i)
        CHECK(got.propositions[i] == full[i]);
}

TEST_CASE("asking for more chunks than exist exhausts the pool") {
    testsup::Rng rng(526);
    auto index = testsup::random_index(rng, 7, 2, 4);
    RetrieveOptions options;
    options.k = 5;
    auto got = adaptive_retrieve_vectors(index, {testsup::random_unit_vector(rng, 4)}, options);
    CHECK(got.exhausted);
    CHECK(got.chunk_ids.size() == 2);
    CHECK(got.propositions.size() == 7);  // full ranking consumed
}

TEST_CASE("excluded chunks never surface") {
    testsup::Rng rng(527);
    auto index = testsup::random_index(rng, 20, 5, 6);
    std::set<std::string> excluded{index.chunks()[0].chunk_id, index.chunks()[3].chunk_id};

    RetrieveOptions options;
    options.k = 3;
    options.exclude_chunks = &excluded;
    auto query = testsup::random_unit_vector(rng, 6);
    auto got = adaptive_retrieve_vectors(index, {query}, options);
    auto want = testsup::oracle_retrieve(index, {query}, 3, &excluded);
    CHECK(got.propositions == want.propositions);
    CHECK(got.chunk_ids == want.chunk_ids);
    for (const auto& sp : got.propositions)
        CHECK(excluded.count(index.proposition(sp.prop_id).chunk_id) == 0);
    for (const auto& id : got.chunk_ids) CHECK(excluded.count(id) == 0);
}

TEST_CASE("narrow pools widen until they match a full scan") {
    // pool_width 1 forces doubling; the result must still equal the
    // oracle, which always ranks the entire index.
    testsup::Rng rng(528);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t props = static_cast<std::size_t>(testsup::pick_int(rng, 1, 30));
        auto index = testsup::random_index(
            rng, props, static_cast<std::size_t>(testsup::pick_int(rng, 1, 5)), 5);
        std::vector<EmbeddingVector> queries;
        const int nq = testsup::pick_int(rng, 1, 3);
        for (int i = 0; i < nq; ++i) queries.push_back(testsup::random_unit_vector(rng, 5));

        RetrieveOptions options;
        options.k = static_cast<std::size_t>(testsup::pick_int(rng, 1, 4));
        options.pool_width = 1;
        auto got = adaptive_retrieve_vectors(index, queries, options);
        auto want = testsup::oracle_retrieve(index, queries, options.k);
        CHECK(got.propositions == want.propositions);
        CHECK(got.chunk_ids == want.chunk_ids);
        CHECK(got.exhausted == want.exhausted);
    }
}

TEST_CASE("randomized retrieval agrees with the full-scan oracle") {
    CHECK_NOTHROW(testsup::run_retrieval_oracle_trials(1000, 903));
}

TEST_CASE("retrieval rejects degenerate arguments") {
    testsup::Rng rng(529);
    auto index = testsup::random_index(rng, 4, 2, 4);
    RetrieveOptions options;

    options.k = 0;
    CHECK_THROWS_AS(adaptive_retrieve_vectors(index, {testsup::random_unit_vector(rng, 4)}, options),
                    ContractViolation);

    options.k = 2;
    CHECK_THROWS_AS(adaptive_retrieve_vectors(index, {}, options), ContractViolation);

    EmbeddingVector wrong(3, 0.5f);
    CHECK_THROWS_AS(adaptive_retrieve_vectors(index, {wrong}, options), InputError);
}

TEST_CASE("triplet-level retrieval embeds query propositions") {
    auto fx = testsup::make_golden_fixture();
    Gateway gateway(fx.backend);

    RetrieveOptions options;
    options.k = 2;
    auto got = adaptive_retrieve(gateway, fx.index, fx.state0.searchable, options);

    std::vector<EmbeddingVector> queries;
    for (const auto& t : fx.state0.searchable)
        queries.push_back(gateway.embed(query_proposition(t)));
    auto want = testsup::oracle_retrieve(fx.index, queries, 2);
    CHECK(got.propositions == want.propositions);
    CHECK(got.chunk_ids == want.chunk_ids);
    CHECK(got.chunk_ids.size() == 2);
}
