#include "support.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

#include "tripletrag/jsonl.hpp"
#include "tripletrag/prompts.hpp"
#include "tripletrag/text.hpp"

namespace testsup {

using namespace tripletrag;

TempDir::TempDir() {
    static std::atomic<std::uint64_t> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    path_ = base / ("tripletrag-test-" + std::to_string(::getpid()) + "-" +
                    std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

int pick_int(Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double pick_real(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::vector<float> random_unit_vector(Rng& rng, std::size_t dim) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<float> v(dim);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (auto& x : v) {
            x = static_cast<float>(gauss(rng));
            norm += static_cast<double>(x) * x;
        }
    } while (norm == 0.0);
    const double inv = 1.0 / std::sqrt(norm);
    for (auto& x : v) x = static_cast<float>(x * inv);
    return v;
}

TripletIndex random_index(Rng& rng, std::size_t props, std::size_t chunks, std::size_t dim) {
    if (chunks == 0 || props == 0) throw std::runtime_error("random_index needs props and chunks");
    std::vector<Chunk> chunk_list;
    for (std::size_t i = 0; i < chunks; ++i) {
        Chunk c;
        c.chunk_id = "c" + std::to_string(i);
        c.doc_id = "d";
        c.text = "chunk " + std::to_string(i) + " text";
        chunk_list.push_back(std::move(c));
    }
    std::vector<Proposition> prop_list;
    std::vector<float> matrix;
    matrix.reserve(props * dim);
    for (std::size_t i = 0; i < props; ++i) {
        Proposition p;
        p.prop_id = static_cast<std::int64_t>(i);
        p.triplet = Triplet::make("entity" + std::to_string(i), "relates to",
                                  "value" + std::to_string(i));
        p.text = verbalize(p.triplet);
        p.chunk_id = chunk_list[i % chunks].chunk_id;
        prop_list.push_back(std::move(p));
        const auto row = random_unit_vector(rng, dim);
        matrix.insert(matrix.end(), row.begin(), row.end());
    }
    IndexMeta meta;
    meta.embedding_dim = dim;
    meta.corpus_digest = corpus_digest(chunk_list);
    return TripletIndex(std::move(prop_list), std::move(matrix), std::move(chunk_list), meta);
}

namespace {

// Mirrors the production accumulation order so scores are bit-identical.
double dot(const float* row, const EmbeddingVector& q) {
    double acc = 0.0;
    for (std::size_t c = 0; c < q.size(); ++c) acc += static_cast<double>(row[c]) * q[c];
    return acc;
}

bool ranks_before(const ScoredProp& a, const ScoredProp& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.prop_id < b.prop_id;
}

std::vector<ScoredProp> full_ranking(const TripletIndex& index,
                                     const std::vector<EmbeddingVector>& queries) {
    std::vector<ScoredProp> ranking;
    ranking.reserve(index.size());
    for (std::size_t r = 0; r < index.size(); ++r) {
        const auto id = static_cast<std::int64_t>(r);
        double best = dot(index.row(id), queries.front());
        for (std::size_t q = 1; q < queries.size(); ++q) {
            best = std::max(best, dot(index.row(id), queries[q]));
        }
        ranking.push_back({id, best});
    }
    std::sort(ranking.begin(), ranking.end(), ranks_before);
    return ranking;
}

}  // namespace

RetrievalResult oracle_retrieve(const TripletIndex& index,
                                const std::vector<EmbeddingVector>& queries, std::size_t k,
                                const std::set<std::string>* exclude) {
    RetrievalResult result;
    std::set<std::string> seen;
    for (const auto& cand : full_ranking(index, queries)) {
        if (result.chunk_ids.size() == k) break;
        const std::string& chunk_id = index.proposition(cand.prop_id).chunk_id;
        if (exclude && exclude->count(chunk_id)) continue;
        result.propositions.push_back(cand);
        if (seen.insert(chunk_id).second) result.chunk_ids.push_back(chunk_id);
    }
    result.exhausted = result.chunk_ids.size() < k;
    return result;
}

std::vector<ScoredProp> oracle_topn(const TripletIndex& index, const EmbeddingVector& query,
                                    std::size_t n) {
    auto ranking = full_ranking(index, {query});
    if (ranking.size() > n) ranking.resize(n);
    return ranking;
}

std::vector<Document> film_corpus() {
    return {
        {"film-silver-harbor", "Silver Harbor",
         "Silver Harbor is a 1949 drama film directed by Mara Ellison . It follows a harbor "
         "pilot guiding ships through a fog bound coastal town ."},
        {"film-northern-lights", "Northern Lights",
         "Northern Lights is a 1956 adventure film directed by Tomas Reiner . The story tracks "
         "a mountain expedition across a frozen plateau ."},
        {"directors", "Directors",
         "Mara Ellison was born in 1901 and made her directing debut in 1938 . Tomas Reiner "
         "was born in 1925 and first worked as a cinematographer ."},
    };
}

const char* const kFilmQuestion =
    "Which film was directed by the director born first, Silver Harbor or Northern Lights?";
const char* const kFilmAnswer = "Silver Harbor";

namespace {

const char* const kDecomposeResponse =
    "Reasoning: To answer this, I need to know the director of each film, and the birth year "
    "of each director to compare them.\n"
    "\n"
    "Triples:\n"
    "Silver Harbor | is directed by | ?directorA\n"
    "Northern Lights | is directed by | ?directorB\n"
    "?directorA | was born in | ?\n"
    "?directorB | was born in | ?\n";

const char* const kResolveRound1 =
    "Fully Resolved Clue 1:\n"
    "Subject: Silver Harbor\n"
    "Predicate: is directed by\n"
    "Object: Mara Ellison\n"
    "\n"
    "Fully Resolved Clue 2:\n"
    "Subject: Northern Lights\n"
    "Predicate: is directed by\n"
    "Object: Tomas Reiner\n"
    "\n"
    "Newly Searchable Clue 1:\n"
    "Subject: Mara Ellison\n"
    "Predicate: was born in\n"
    "Object: ?\n"
    "\n"
    "Newly Searchable Clue 2:\n"
    "Subject: Tomas Reiner\n"
    "Predicate: was born in\n"
    "Object: ?\n";

const char* const kResolveRound2 =
    "Fully Resolved Clue 1:\n"
    "Subject: Mara Ellison\n"
    "Predicate: was born in\n"
    "Object: 1901\n"
    "\n"
    "Fully Resolved Clue 2:\n"
    "Subject: Tomas Reiner\n"
    "Predicate: was born in\n"
    "Object: 1925\n";

const char* const kExtractSilverHarbor =
    "Triples:\n"
    "Silver Harbor | is a | 1949 drama film\n"
    "Silver Harbor | is directed by | Mara Ellison\n"
    "Silver Harbor | follows | a harbor pilot\n";

const char* const kExtractNorthernLights =
    "Triples:\n"
    "Northern Lights | is a | 1956 adventure film\n"
    "Northern Lights | is directed by | Tomas Reiner\n"
    "Northern Lights | tracks | a mountain expedition\n";

const char* const kExtractDirectors =
    "Triples:\n"
    "Mara Ellison | was born in | 1901\n"
    "Mara Ellison | made her directing debut in | 1938\n"
    "Tomas Reiner | was born in | 1925\n";

}  // namespace

GoldenFixture make_golden_fixture() {
    GoldenFixture fx;
    fx.corpus = film_corpus();
    fx.question = kFilmQuestion;
    fx.final_answer = kFilmAnswer;
    fx.config.k = 2;
    fx.config.max_rounds = 3;
    fx.backend = std::make_shared<MockBackend>(64, true);

    auto script = [&](TemplateId id, const Bindings& bindings, std::string response) {
        const long in = static_cast<long>(count_tokens(render_prompt(id, bindings)));
        const long out = static_cast<long>(count_tokens(response));
        fx.backend->add(id, bindings, response, in, out);
        fx.transcript_rows.push_back({{"template_id", template_name(id)},
                                      {"bindings_hash", bindings_fingerprint(bindings)},
                                      {"response", std::move(response)},
                                      {"input_tokens", in},
                                      {"output_tokens", out}});
    };

    BuildOptions build;
    std::vector<Chunk> chunks;
    for (const auto& doc : fx.corpus) {
        auto doc_chunks = chunk_document(doc, build.chunking);
        chunks.insert(chunks.end(), doc_chunks.begin(), doc_chunks.end());
    }
    if (chunks.size() != 3) throw std::runtime_error("film corpus must chunk 1:1");
    script(TemplateId::Extract, {{"passage", chunks[0].text}}, kExtractSilverHarbor);
    script(TemplateId::Extract, {{"passage", chunks[1].text}}, kExtractNorthernLights);
    script(TemplateId::Extract, {{"passage", chunks[2].text}}, kExtractDirectors);

    Gateway build_gateway(fx.backend);
    fx.index = build_index(build_gateway, fx.corpus, build);
    if (fx.index.size() != 9) throw std::runtime_error("film index must hold 9 propositions");

    // Author the online half by stepping the real loop; each retrieval
    // below is recomputed identically inside resolve_round.
    Gateway gateway(fx.backend);
    RetrieveOptions ropts;
    ropts.k = fx.config.k;
    ropts.pool_width = fx.config.pool_width;

    script(TemplateId::Decompose, {{"query", fx.question}}, kDecomposeResponse);
    fx.state0 = decompose(gateway, fx.question);

    auto r1 = adaptive_retrieve(gateway, fx.index, fx.state0.searchable, ropts);
    script(TemplateId::Resolve, make_resolve_bindings(fx.question, fx.state0, fx.index, r1),
           kResolveRound1);
    fx.state1 = resolve_round(gateway, fx.index, fx.question, fx.state0, fx.config);

    auto r2 = adaptive_retrieve(gateway, fx.index, fx.state1.searchable, ropts);
    script(TemplateId::Resolve, make_resolve_bindings(fx.question, fx.state1, fx.index, r2),
           kResolveRound2);
    fx.state2 = resolve_round(gateway, fx.index, fx.question, fx.state1, fx.config);
    if (!fx.state2.fully_resolved()) throw std::runtime_error("fixture must resolve in 2 rounds");

    script(TemplateId::Answer, make_answer_bindings(fx.question, fx.state2),
           std::string("Answer: ") + fx.final_answer);
    return fx;
}

void write_jsonl_file(const std::filesystem::path& path, const std::vector<nlohmann::json>& rows) {
    write_jsonl(path.string(), rows);
}

void write_film_corpus_jsonl(const std::filesystem::path& path) {
    std::vector<nlohmann::json> rows;
    for (const auto& doc : film_corpus()) {
        rows.push_back({{"doc_id", doc.doc_id}, {"title", doc.title}, {"text", doc.body}});
    }
    write_jsonl(path.string(), rows);
}

Triplet random_triplet(Rng& rng, double placeholder_rate) {
    static const char* const vocab[] = {"alice", "bob",  "paris", "rome",
                                        "wrote", "born", "lives", "1901"};
    static const char* const holes[] = {"?", "?a", "?b"};
    auto field = [&]() -> std::string {
        if (pick_real(rng, 0.0, 1.0) < placeholder_rate) return holes[pick_int(rng, 0, 2)];
        return vocab[pick_int(rng, 0, 7)];
    };
    return Triplet::make(field(), field(), field());
}

namespace {

void expect(bool ok, const char* invariant) {
    if (!ok) throw std::runtime_error(std::string("state update invariant violated: ") + invariant);
}

bool contains(const std::vector<Triplet>& v, const Triplet& t) {
    return std::find(v.begin(), v.end(), t) != v.end();
}

// Re-states the routing contract: classify locally, dedup, ignore labels.
void route_expected(const std::vector<Triplet>& labeled_resolved,
                    const std::vector<Triplet>& labeled_searchable,
                    std::vector<Triplet>& resolved, std::vector<Triplet>& searchable,
                    std::vector<Triplet>& fuzzy) {
    auto push_unique = [](std::vector<Triplet>& v, const Triplet& t) {
        if (!contains(v, t)) v.push_back(t);
    };
    auto route = [&](const Triplet& t) {
        switch (classify(t)) {
            case TripletClass::Resolved: push_unique(resolved, t); break;
            case TripletClass::Searchable: push_unique(searchable, t); break;
            case TripletClass::Fuzzy: push_unique(fuzzy, t); break;
        }
    };
    for (const auto& t : labeled_resolved) route(t);
    for (const auto& t : labeled_searchable) route(t);
}

}  // namespace

void run_state_update_trials(int sequences, std::uint64_t seed) {
    Rng rng(seed);
    for (int seq = 0; seq < sequences; ++seq) {
        std::vector<Triplet> initial;
        const int n0 = pick_int(rng, 1, 5);
        for (int i = 0; i < n0; ++i) initial.push_back(random_triplet(rng, 0.45));
        ResolutionState state = make_initial_state(initial);
        for (const auto& t : state.resolved) expect(classify(t) == TripletClass::Resolved, "initial routing");
        for (const auto& t : state.searchable) expect(classify(t) == TripletClass::Searchable, "initial routing");
        for (const auto& t : state.fuzzy) expect(classify(t) == TripletClass::Fuzzy, "initial routing");

        const int rounds = pick_int(rng, 1, 6);
        for (int round = 0; round < rounds; ++round) {
            std::vector<Triplet> labeled_resolved;
            std::vector<Triplet> labeled_searchable;
            // Labels are deliberately unreliable: either list may carry
            // triplets of any placeholder count.
            const int nr = pick_int(rng, 0, 4);
            const int ns = pick_int(rng, 0, 4);
            for (int i = 0; i < nr; ++i) labeled_resolved.push_back(random_triplet(rng, 0.35));
            for (int i = 0; i < ns; ++i) labeled_searchable.push_back(random_triplet(rng, 0.55));

            std::vector<Triplet> routed_resolved;
            std::vector<Triplet> routed_searchable;
            std::vector<Triplet> routed_fuzzy;
            route_expected(labeled_resolved, labeled_searchable, routed_resolved,
                           routed_searchable, routed_fuzzy);

            const ResolutionState prev = state;
            state = update_state(prev, labeled_resolved, labeled_searchable, RoundRecord{});

            expect(state.round == prev.round + 1, "round counter");
            expect(state.trace.size() == prev.trace.size() + 1, "trace growth");
            expect(state.trace.back().round_index == state.round, "trace round index");

            // Monotone resolved: previous entries stay, in order, up front.
            expect(state.resolved.size() >= prev.resolved.size(), "resolved monotone");
            expect(std::equal(prev.resolved.begin(), prev.resolved.end(), state.resolved.begin()),
                   "resolved prefix");
            std::vector<Triplet> expected_resolved = prev.resolved;
            for (const auto& t : routed_resolved) {
                if (!contains(expected_resolved, t)) expected_resolved.push_back(t);
            }
            expect(state.resolved == expected_resolved, "resolved additions");

            expect(state.searchable == routed_searchable, "searchable replacement");

            // Fuzzy pool: carryover plus new, minus anything some new
            // triplet derives from.
            std::vector<Triplet> pool = prev.fuzzy;
            for (const auto& t : routed_fuzzy) {
                if (!contains(pool, t)) pool.push_back(t);
            }
            std::vector<Triplet> progressed = routed_resolved;
            progressed.insert(progressed.end(), routed_searchable.begin(),
                              routed_searchable.end());
            std::vector<Triplet> expected_fuzzy;
            for (const auto& f : pool) {
                const bool derived = std::any_of(progressed.begin(), progressed.end(),
                                                 [&](const Triplet& n) { return derives_from(n, f); });
                if (!derived && !contains(expected_fuzzy, f)) expected_fuzzy.push_back(f);
            }
            expect(state.fuzzy == expected_fuzzy, "fuzzy removal by derivation");
        }
    }
}

void run_retrieval_oracle_trials(int instances, std::uint64_t seed) {
    Rng rng(seed);
    for (int trial = 0; trial < instances; ++trial) {
        const std::size_t props = static_cast<std::size_t>(pick_int(rng, 1, 50));
        const std::size_t chunks =
            static_cast<std::size_t>(pick_int(rng, 1, static_cast<int>(std::min<std::size_t>(props, 10))));
        const std::size_t dim = static_cast<std::size_t>(pick_int(rng, 4, 16));
        const auto index = random_index(rng, props, chunks, dim);

        std::vector<EmbeddingVector> queries;
        const int nq = pick_int(rng, 1, 4);
        for (int q = 0; q < nq; ++q) queries.push_back(random_unit_vector(rng, dim));

        RetrieveOptions options;
        options.k = static_cast<std::size_t>(pick_int(rng, 1, 5));
        switch (pick_int(rng, 0, 3)) {
            case 0: options.pool_width = 0; break;  // default 8k
            case 1: options.pool_width = 1; break;
            case 2: options.pool_width = static_cast<std::size_t>(pick_int(rng, 2, 6)); break;
            default: options.pool_width = props + 10; break;
        }
        std::set<std::string> exclude;
        if (pick_int(rng, 0, 3) == 0) {
            const int n_excl = pick_int(rng, 1, static_cast<int>(chunks));
            for (int i = 0; i < n_excl; ++i) {
                exclude.insert("c" + std::to_string(pick_int(rng, 0, static_cast<int>(chunks) - 1)));
            }
            options.exclude_chunks = &exclude;
        }

        const auto got = adaptive_retrieve_vectors(index, queries, options);
        const auto want =
            oracle_retrieve(index, queries, options.k, options.exclude_chunks);
        if (got.propositions != want.propositions || got.chunk_ids != want.chunk_ids ||
            got.exhausted != want.exhausted) {
            throw std::runtime_error("adaptive retrieval diverged from the full-scan oracle at trial " +
                                     std::to_string(trial));
        }
    }
}

void run_chunking_trials(int docs, std::size_t max_tokens, std::uint64_t seed) {
    Rng rng(seed);
    for (int trial = 0; trial < docs; ++trial) {
        const std::size_t n = static_cast<std::size_t>(
            pick_int(rng, 0, static_cast<int>(max_tokens)));
        std::vector<std::string> tokens;
        std::string body;
        for (std::size_t i = 0; i < n; ++i) {
            tokens.push_back("w" + std::to_string(pick_int(rng, 0, 99)));
            if (i > 0) body += pick_int(rng, 0, 3) == 0 ? "\n" : " ";
            if (pick_int(rng, 0, 7) == 0) body += "  ";
            body += tokens.back();
        }
        Document doc{"doc" + std::to_string(trial), "", body};

        ChunkOptions options;
        options.chunk_size = static_cast<std::size_t>(pick_int(rng, 1, 400));
        options.overlap = static_cast<std::size_t>(
            pick_int(rng, 0, static_cast<int>(options.chunk_size) - 1));
        options.prepend_title = false;
        const std::size_t stride = options.chunk_size - options.overlap;

        const auto chunks = chunk_document(doc, options);

        auto fail = [&](const char* what) {
            throw std::runtime_error("chunking contract violated (" + std::string(what) +
                                     ") at trial " + std::to_string(trial));
        };
        std::size_t expected_count = 0;
        for (std::size_t start = 0; start < n; start += stride) ++expected_count;
        if (chunks.size() != expected_count) fail("chunk count");

        std::vector<bool> covered(n, false);
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            const auto& c = chunks[i];
            if (c.token_begin != i * stride) fail("start offset");
            if (c.token_end != std::min(c.token_begin + options.chunk_size, n)) fail("end offset");
            if (c.chunk_id != doc.doc_id + "#" + std::to_string(i)) fail("chunk id");
            std::string expected_text;
            for (std::size_t tok = c.token_begin; tok < c.token_end; ++tok) {
                if (tok > c.token_begin) expected_text += ' ';
                expected_text += tokens[tok];
                covered[tok] = true;
            }
            if (c.text != expected_text) fail("chunk text");
        }
        for (std::size_t tok = 0; tok < n; ++tok) {
            if (!covered[tok]) fail("coverage");
        }
    }
}

}  // namespace testsup
