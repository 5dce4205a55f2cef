// Python surface over the C++ core: the pure scoring and parsing
// helpers, chunking, index construction and persistence, retrieval, and
// the full query loop. Rich results cross the boundary as plain python
// dicts built from the same JSON the CLI emits.

#include <memory>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"

#include "tripletrag/core.hpp"
#include "tripletrag/errors.hpp"
#include "tripletrag/eval.hpp"
#include "tripletrag/gateway.hpp"
#include "tripletrag/index.hpp"
#include "tripletrag/ingest.hpp"
#include "tripletrag/parsers.hpp"
#include "tripletrag/prompts.hpp"
#include "tripletrag/resolve.hpp"
#include "tripletrag/retrieve.hpp"
#include "tripletrag/text.hpp"

namespace py = pybind11;
using namespace tripletrag;

namespace {

py::object json_to_py(const nlohmann::json& j) {
    switch (j.type()) {
        case nlohmann::json::value_t::null:
            return py::none();
        case nlohmann::json::value_t::boolean:
            return py::bool_(j.get<bool>());
        case nlohmann::json::value_t::number_integer:
            return py::int_(j.get<std::int64_t>());
        case nlohmann::json::value_t::number_unsigned:
            return py::int_(j.get<std::uint64_t>());
        case nlohmann::json::value_t::number_float:
            return py::float_(j.get<double>());
        case nlohmann::json::value_t::string:
            return py::str(j.get<std::string>());
        case nlohmann::json::value_t::array: {
            py::list out;
            for (const auto& item : j) out.append(json_to_py(item));
            return out;
        }
        case nlohmann::json::value_t::object: {
            py::dict out;
            for (const auto& [key, value] : j.items()) out[py::str(key)] = json_to_py(value);
            return out;
        }
        default:
            return py::none();
    }
}

py::tuple triplet_to_tuple(const Triplet& t) {
    return py::make_tuple(t.subject, t.predicate, t.object);
}

const char* class_name(TripletClass c) {
    switch (c) {
        case TripletClass::Resolved: return "resolved";
        case TripletClass::Searchable: return "searchable";
        default: return "fuzzy";
    }
}

std::vector<Document> corpus_from_py(const std::vector<py::dict>& docs) {
    std::vector<Document> corpus;
    corpus.reserve(docs.size());
    for (const auto& d : docs) {
        Document doc;
        doc.doc_id = d["doc_id"].cast<std::string>();
        if (d.contains("title")) doc.title = d["title"].cast<std::string>();
        doc.body = d["text"].cast<std::string>();
        corpus.push_back(std::move(doc));
    }
    return corpus;
}

ResolveConfig make_config(std::size_t k, int max_rounds, bool dedup_rounds,
                          bool mechanical_substitution) {
    ResolveConfig config;
    config.k = k;
    config.max_rounds = max_rounds;
    config.dedup_rounds = dedup_rounds;
    config.mechanical_substitution = mechanical_substitution;
    return config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Triplet-driven retrieval-augmented question answering";

    py::register_exception<GatewayError>(m, "GatewayError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const InputError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const IndexFormatError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });

    m.def("count_tokens",
          [](const std::string& text) { return count_tokens(text); },
          py::arg("text"), "Whitespace token count.");

    m.def("normalize_answer",
          [](const std::string& text) { return normalize_answer(text); },
          py::arg("text"),
          "Lowercase, drop punctuation and articles, collapse whitespace.");

    m.def("exact_match",
          [](const std::string& pred, const std::vector<std::string>& golds) {
              return exact_match(pred, golds);
          },
          py::arg("prediction"), py::arg("golds"));

    m.def("f1",
          [](const std::string& pred, const std::vector<std::string>& golds) {
              return f1(pred, golds);
          },
          py::arg("prediction"), py::arg("golds"));

    m.def("classify",
          [](const std::string& s, const std::string& p, const std::string& o) {
              return std::string(class_name(classify(Triplet::make(s, p, o))));
          },
          py::arg("subject"), py::arg("predicate"), py::arg("object"),
          "Triplet class by placeholder count: resolved / searchable / fuzzy.");

    m.def("count_placeholders",
          [](const std::string& s, const std::string& p, const std::string& o) {
              return count_placeholders(Triplet::make(s, p, o));
          },
          py::arg("subject"), py::arg("predicate"), py::arg("object"));

    m.def("parse_decomposition",
          [](const std::string& text) {
              py::list out;
              for (const auto& t : parse_decomposition(text)) out.append(triplet_to_tuple(t));
              return out;
          },
          py::arg("text"),
          "Pipe-separated triple lines as (subject, predicate, object) tuples; "
          "raises RuntimeError when no line parses.");

    m.def("parse_resolution",
          [](const std::string& text) {
              const auto parsed = parse_resolution(text);
              py::list resolved;
              for (const auto& t : parsed.resolved) resolved.append(triplet_to_tuple(t));
              py::list searchable;
              for (const auto& t : parsed.searchable) searchable.append(triplet_to_tuple(t));
              py::dict out;
              out["resolved"] = resolved;
              out["searchable"] = searchable;
              out["skipped_blocks"] = parsed.skipped_blocks;
              return out;
          },
          py::arg("text"));

    m.def("chunk_document",
          [](const std::string& doc_id, const std::string& title, const std::string& text,
             std::size_t chunk_size, std::size_t overlap, bool prepend_title) {
              ChunkOptions options;
              options.chunk_size = chunk_size;
              options.overlap = overlap;
              options.prepend_title = prepend_title;
              Document doc{doc_id, title, text};
              py::list out;
              for (const auto& c : chunk_document(doc, options)) {
                  py::dict row;
                  row["chunk_id"] = c.chunk_id;
                  row["doc_id"] = c.doc_id;
                  row["text"] = c.text;
                  row["token_begin"] = c.token_begin;
                  row["token_end"] = c.token_end;
                  out.append(row);
              }
              return out;
          },
          py::arg("doc_id"), py::arg("title"), py::arg("text"), py::arg("chunk_size") = 1200,
          py::arg("overlap") = 100, py::arg("prepend_title") = true);

    py::class_<MockBackend, std::shared_ptr<MockBackend>>(m, "MockBackend",
        "Deterministic scripted backend: completions replay by template and "
        "binding fingerprint, embeddings hash tokens onto the unit sphere.")
        .def(py::init<std::size_t, bool>(), py::arg("embedding_dim") = 256,
             py::arg("strict") = true)
        .def("add",
             [](MockBackend& self, const std::string& template_id, const Bindings& bindings,
                const std::string& response, long input_tokens, long output_tokens) {
                 self.add(template_from_name(template_id), bindings, response, input_tokens,
                          output_tokens);
             },
             py::arg("template_id"), py::arg("bindings"), py::arg("response"),
             py::arg("input_tokens") = -1, py::arg("output_tokens") = -1)
        .def("add_fingerprint",
             [](MockBackend& self, const std::string& template_id, const std::string& hash,
                const std::string& response, long input_tokens, long output_tokens) {
                 self.add_fingerprint(template_from_name(template_id), hash, response,
                                      input_tokens, output_tokens);
             },
             py::arg("template_id"), py::arg("bindings_hash"), py::arg("response"),
             py::arg("input_tokens") = -1, py::arg("output_tokens") = -1)
        .def("load_transcript", &MockBackend::load_transcript, py::arg("path"));

    py::class_<TripletIndex>(m, "Index", "Immutable triplet vector index.")
        .def_static("load", &load_index, py::arg("directory"),
                    py::call_guard<py::gil_scoped_release>())
        .def("save",
             [](const TripletIndex& self, const std::string& dir) { save_index(self, dir); },
             py::arg("directory"), py::call_guard<py::gil_scoped_release>())
        .def("__len__", [](const TripletIndex& self) { return self.size(); })
        .def_property_readonly("dim", [](const TripletIndex& self) { return self.dim(); })
        .def("propositions",
             [](const TripletIndex& self) {
                 py::list out;
                 for (const auto& p : self.propositions()) {
                     py::dict row;
                     row["prop_id"] = p.prop_id;
                     row["triplet"] = triplet_to_tuple(p.triplet);
                     row["text"] = p.text;
                     row["chunk_id"] = p.chunk_id;
                     out.append(row);
                 }
                 return out;
             })
        .def("chunks",
             [](const TripletIndex& self) {
                 py::list out;
                 for (const auto& c : self.chunks()) {
                     py::dict row;
                     row["chunk_id"] = c.chunk_id;
                     row["doc_id"] = c.doc_id;
                     row["text"] = c.text;
                     out.append(row);
                 }
                 return out;
             });

    m.def("build_index",
          [](std::shared_ptr<MockBackend> backend, const std::vector<py::dict>& corpus,
             std::size_t chunk_size, std::size_t overlap, bool prepend_title, int workers,
             std::size_t embed_batch, const std::string& checkpoint_dir) {
              auto docs = corpus_from_py(corpus);
              BuildOptions options;
              options.chunking.chunk_size = chunk_size;
              options.chunking.overlap = overlap;
              options.chunking.prepend_title = prepend_title;
              options.workers = workers;
              options.embed_batch = embed_batch;
              options.checkpoint_dir = checkpoint_dir;
              py::gil_scoped_release release;
              Gateway gateway(backend);
              return build_index(gateway, docs, options);
          },
          py::arg("backend"), py::arg("corpus"), py::arg("chunk_size") = 1200,
          py::arg("overlap") = 100, py::arg("prepend_title") = true, py::arg("workers") = 4,
          py::arg("embed_batch") = 64, py::arg("checkpoint_dir") = "",
          "Chunk, extract triplets, embed, and assemble an index. Corpus rows "
          "are dicts with doc_id, optional title, and text.");

    m.def("search",
          [](std::shared_ptr<MockBackend> backend, const TripletIndex& index,
             const std::string& text, std::size_t n) {
              py::gil_scoped_release release;
              Gateway gateway(backend);
              const auto hits = search_topn(index, gateway.embed(text), n);
              std::vector<std::pair<std::int64_t, double>> out;
              out.reserve(hits.size());
              for (const auto& h : hits) out.emplace_back(h.prop_id, h.score);
              return out;
          },
          py::arg("backend"), py::arg("index"), py::arg("text"), py::arg("n") = 5,
          "Exact top-n propositions for an embedded query string.");

    m.def("run_query",
          [](std::shared_ptr<MockBackend> backend, const TripletIndex& index,
             const std::string& question, std::size_t k, int max_rounds, bool dedup_rounds,
             bool mechanical_substitution) {
              nlohmann::json result_json;
              {
                  py::gil_scoped_release release;
                  Gateway gateway(backend);
                  result_json = run_query(gateway, index, question,
                                          make_config(k, max_rounds, dedup_rounds,
                                                      mechanical_substitution))
                                    .to_json();
              }
              return json_to_py(result_json);
          },
          py::arg("backend"), py::arg("index"), py::arg("question"), py::arg("k") = 5,
          py::arg("max_rounds") = 3, py::arg("dedup_rounds") = false,
          py::arg("mechanical_substitution") = false,
          "Decompose, iterate retrieve-resolve rounds, answer. Returns the "
          "full result dict including the per-round trace.");

    m.def("evaluate",
          [](std::shared_ptr<MockBackend> backend, const TripletIndex& index,
             const std::vector<py::dict>& dataset, std::size_t k, int max_rounds, int workers) {
              std::vector<QAExample> examples;
              examples.reserve(dataset.size());
              for (const auto& d : dataset) {
                  QAExample e;
                  e.example_id = d["id"].cast<std::string>();
                  e.question = d["question"].cast<std::string>();
                  e.gold_answers = d["answers"].cast<std::vector<std::string>>();
                  examples.push_back(std::move(e));
              }
              nlohmann::json report_json;
              {
                  py::gil_scoped_release release;
                  auto factory = [&backend]() { return std::make_unique<Gateway>(backend); };
                  report_json =
                      run_eval(factory, index, examples, make_config(k, max_rounds, false, false),
                               workers)
                          .to_json();
              }
              return json_to_py(report_json);
          },
          py::arg("backend"), py::arg("index"), py::arg("dataset"), py::arg("k") = 5,
          py::arg("max_rounds") = 3, py::arg("workers") = 4,
          "Score a dataset of {id, question, answers} dicts; returns the "
          "report dict with rows, aggregates, and splits.");
}
