#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_set>

#include "queryforge/corpus.hpp"
#include "queryforge/synthetic.hpp"
#include "test_support.hpp"

using namespace qf;
using qftest::TempDir;

namespace {

std::vector<Document> make_docs(std::size_t n) {
    std::vector<Document> docs;
    for (std::size_t i = 0; i < n; ++i) {
        Document d;
        d.id = "doc-" + std::to_string(i);
        d.title = i % 3 == 0 ? "" : "Title " + std::to_string(i);
        d.text = "body text for document number " + std::to_string(i) +
                 (i % 5 == 0 ? " with \"quotes\" and\ttabs" : "");
        docs.push_back(std::move(d));
    }
    return docs;
}

void write_lines(const std::filesystem::path& p, const std::vector<std::string>& lines) {
    std::ofstream out(p, std::ios::binary);
    for (const auto& l : lines) out << l << "\n";
}

} // namespace

TEST_CASE("corpus jsonl round trip") {
    TempDir dir;
    const auto path = dir / "corpus.jsonl";
    write_lines(path, {
        R"({"_id": "a", "title": "Alpha", "text": "first doc"})",
        R"({"_id": "b", "title": "", "text": "second doc"})",
        "",
        R"({"_id": "c", "text": "no title at all"})",
    });
    auto docs = load_corpus(path);
    REQUIRE(docs.size() == 3);
    CHECK(docs[0].id == "a");
    CHECK(docs[0].title == "Alpha");
    CHECK(docs[1].title.empty());
    CHECK(docs[2].id == "c");
    CHECK(docs[2].text == "no title at all");
}

TEST_CASE("corpus parse errors carry file and line") {
    TempDir dir;
    const auto path = dir / "bad.jsonl";

    SUBCASE("invalid json") {
        write_lines(path, {R"({"_id": "a", "text": "ok"})", "{not json"});
        try {
            load_corpus(path);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find(":2:") != std::string::npos);
        }
    }
    SUBCASE("missing text field") {
        write_lines(path, {R"({"_id": "a"})"});
        CHECK_THROWS_AS(load_corpus(path), ParseError);
    }
    SUBCASE("non-string id") {
        write_lines(path, {R"({"_id": 7, "text": "ok"})"});
        CHECK_THROWS_AS(load_corpus(path), ParseError);
    }
    SUBCASE("empty text") {
        write_lines(path, {R"({"_id": "a", "text": "   "})"});
        CHECK_THROWS_AS(load_corpus(path), ParseError);
    }
    SUBCASE("duplicate id") {
        write_lines(path, {R"({"_id": "a", "text": "x"})", R"({"_id": "a", "text": "y"})"});
        CHECK_THROWS_AS(load_corpus(path), ValidationError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_corpus(dir / "nope.jsonl"), ValidationError);
    }
}

TEST_CASE("corpus save/load/save is byte identical at scale") {
    TempDir dir;
    auto docs = make_docs(5000);
    const auto a = dir / "a.jsonl";
    const auto b = dir / "b.jsonl";
    save_corpus(a, docs);
    auto reread = load_corpus(a);
    REQUIRE(reread.size() == docs.size());
    save_corpus(b, reread);
    CHECK(qftest::read_file(a) == qftest::read_file(b));
}

TEST_CASE("queries jsonl") {
    TempDir dir;
    const auto path = dir / "queries.jsonl";
    std::vector<QueryRecord> queries = {{"q1", "what is foo"}, {"q2", "define bar"}};
    save_queries(path, queries);
    auto reread = load_queries(path);
    REQUIRE(reread.size() == 2);
    CHECK(reread[0].id == "q1");
    CHECK(reread[1].text == "define bar");

    write_lines(path, {R"({"_id": "q1", "text": "x"})", R"({"_id": "q1", "text": "y"})"});
    CHECK_THROWS_AS(load_queries(path), ValidationError);
}

TEST_CASE("qrels tsv parsing") {
    TempDir dir;
    const auto path = dir / "qrels.tsv";

    SUBCASE("round trip preserves order and grades") {
        std::vector<QrelEntry> qrels = {{"q1", "d1", 2}, {"q1", "d2", 0}, {"q2", "d1", 1}};
        save_qrels(path, qrels);
        auto reread = load_qrels(path);
        REQUIRE(reread.size() == 3);
        CHECK(reread[0].grade == 2);
        CHECK(reread[1].grade == 0);
        CHECK(reread[2].query_id == "q2");
    }
    SUBCASE("missing header") {
        write_lines(path, {"q1\td1\t2"});
        CHECK_THROWS_AS(load_qrels(path), ParseError);
    }
    SUBCASE("wrong column count") {
        write_lines(path, {"query-id\tcorpus-id\tscore", "q1\td1"});
        CHECK_THROWS_AS(load_qrels(path), ParseError);
    }
    SUBCASE("non-integer grade names the line") {
        write_lines(path, {"query-id\tcorpus-id\tscore", "q1\td1\t2", "q2\td2\ttwo"});
        try {
            load_qrels(path);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find(":3:") != std::string::npos);
        }
    }
    SUBCASE("negative grade") {
        write_lines(path, {"query-id\tcorpus-id\tscore", "q1\td1\t-1"});
        CHECK_THROWS_AS(load_qrels(path), ValidationError);
    }
    SUBCASE("duplicate pair") {
        write_lines(path, {"query-id\tcorpus-id\tscore", "q1\td1\t2", "q1\td1\t1"});
        CHECK_THROWS_AS(load_qrels(path), ValidationError);
    }
}

TEST_CASE("sample_corpus") {
    auto docs = make_docs(50);

    SUBCASE("returns everything when the corpus already fits") {
        auto sampled = sample_corpus(docs, 100, 42);
        REQUIRE(sampled.size() == 50);
        for (std::size_t i = 0; i < 50; ++i) CHECK(sampled[i].id == docs[i].id);
    }
    SUBCASE("samples exactly max_docs unique documents") {
        auto sampled = sample_corpus(docs, 20, 42);
        REQUIRE(sampled.size() == 20);
        std::set<std::string> ids;
        for (const auto& d : sampled) ids.insert(d.id);
        CHECK(ids.size() == 20);
    }
    SUBCASE("deterministic per seed, different across seeds") {
        auto a = sample_corpus(docs, 20, 7);
        auto b = sample_corpus(docs, 20, 7);
        auto c = sample_corpus(docs, 20, 8);
        REQUIRE(a.size() == b.size());
        bool same = true, differs = false;
        for (std::size_t i = 0; i < a.size(); ++i) {
            same = same && a[i].id == b[i].id;
            differs = differs || a[i].id != c[i].id;
        }
        CHECK(same);
        CHECK(differs);
    }
    SUBCASE("200k to 100k keeps uniqueness") {
        std::vector<Document> big;
        big.reserve(200000);
        for (std::size_t i = 0; i < 200000; ++i)
            big.push_back({"d" + std::to_string(i), "", "t"});
        auto sampled = sample_corpus(big, 100000, 1);
        REQUIRE(sampled.size() == 100000);
        std::unordered_set<std::string> ids;
        for (const auto& d : sampled) ids.insert(d.id);
        CHECK(ids.size() == 100000);
    }
}

TEST_CASE("select_few_shot picks only max-grade pairs and quarantines docs") {
    auto docs = make_docs(12);
    std::vector<QueryRecord> queries;
    std::vector<QrelEntry> qrels;
    for (std::size_t i = 0; i < 10; ++i) {
        queries.push_back({"q" + std::to_string(i), "question " + std::to_string(i)});
        qrels.push_back({"q" + std::to_string(i), "doc-" + std::to_string(i),
                         i < 6 ? 2 : 1});
    }

    auto sel = select_few_shot(queries, qrels, docs, 4, 99);
    REQUIRE(sel.examples.size() == 4);
    for (const auto& ex : sel.examples) CHECK(ex.grade == 2);
    REQUIRE(sel.exemplar_doc_ids.size() == 4);
    CHECK(sel.generation_pool.size() == docs.size() - 4);
    std::set<std::string> pool_ids;
    for (const auto& d : sel.generation_pool) pool_ids.insert(d.id);
    for (const auto& id : sel.exemplar_doc_ids) CHECK(pool_ids.count(id) == 0);

    SUBCASE("deterministic per seed") {
        auto again = select_few_shot(queries, qrels, docs, 4, 99);
        CHECK(again.exemplar_doc_ids == sel.exemplar_doc_ids);
    }
    SUBCASE("pool preserves corpus order") {
        std::vector<std::string> expected;
        std::set<std::string> quarantined(sel.exemplar_doc_ids.begin(),
                                          sel.exemplar_doc_ids.end());
        for (const auto& d : docs)
            if (!quarantined.count(d.id)) expected.push_back(d.id);
        std::vector<std::string> actual;
        for (const auto& d : sel.generation_pool) actual.push_back(d.id);
        CHECK(actual == expected);
    }
    SUBCASE("too few max-grade pairs reports the count") {
        try {
            select_few_shot(queries, qrels, docs, 8, 1);
            FAIL("expected ValidationError");
        } catch (const ValidationError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("8") != std::string::npos);
            CHECK(msg.find("6") != std::string::npos);
        }
    }
    SUBCASE("no positive grades") {
        std::vector<QrelEntry> zeros = {{"q0", "doc-0", 0}};
        CHECK_THROWS_AS(select_few_shot(queries, zeros, docs, 1, 1), ValidationError);
    }
}

namespace {

std::vector<SyntheticPair> pairs_for_docs(std::size_t n_docs, int per_doc = 8) {
    std::vector<SyntheticPair> pairs;
    for (std::size_t d = 0; d < n_docs; ++d)
        for (int s = 0; s < per_doc; ++s)
            pairs.push_back({"doc-" + std::to_string(d), "query " + std::to_string(s),
                             "m", "default", s});
    return pairs;
}

} // namespace

TEST_CASE("split_eval is a document-level partition") {
    auto pairs = pairs_for_docs(10);

    auto split = split_eval(pairs, 0.1, 3);
    CHECK(split.eval_doc_ids.size() == 1); // round(0.1 * 10)
    CHECK(split.eval.size() == 8);
    CHECK(split.train.size() == 72);

    std::set<std::string> eval_docs(split.eval_doc_ids.begin(), split.eval_doc_ids.end());
    for (const auto& p : split.eval) CHECK(eval_docs.count(p.doc_id) == 1);
    for (const auto& p : split.train) CHECK(eval_docs.count(p.doc_id) == 0);

    SUBCASE("rounds the eval count") {
        CHECK(split_eval(pairs, 0.25, 3).eval_doc_ids.size() == 3); // round(2.5)
        CHECK(split_eval(pairs, 0.34, 3).eval_doc_ids.size() == 3);
    }
    SUBCASE("both sides stay non-empty at the extremes") {
        auto two = pairs_for_docs(2);
        auto s = split_eval(two, 0.9, 5);
        CHECK(s.eval_doc_ids.size() == 1);
        CHECK(!s.train.empty());
        auto t = split_eval(two, 0.01, 5);
        CHECK(t.eval_doc_ids.size() == 1);
    }
    SUBCASE("fewer than 2 documents is an error") {
        auto one = pairs_for_docs(1);
        CHECK_THROWS_AS(split_eval(one, 0.1, 5), ValidationError);
        CHECK_THROWS_AS(split_eval({}, 0.1, 5), ValidationError);
    }
    SUBCASE("bad fraction") {
        CHECK_THROWS_AS(split_eval(pairs, 0.0, 5), ValidationError);
        CHECK_THROWS_AS(split_eval(pairs, 1.0, 5), ValidationError);
    }
}

TEST_CASE("split_eval property: every seed yields an exact partition") {
    auto pairs = pairs_for_docs(17, 5);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto split = split_eval(pairs, 0.3, seed);
        CHECK(split.train.size() + split.eval.size() == pairs.size());
        std::set<std::string> eval_docs(split.eval_doc_ids.begin(), split.eval_doc_ids.end());
        CHECK(eval_docs.size() == split.eval_doc_ids.size());
        std::set<std::string> train_docs;
        for (const auto& p : split.train) train_docs.insert(p.doc_id);
        for (const auto& d : train_docs) CHECK(eval_docs.count(d) == 0);
        auto again = split_eval(pairs, 0.3, seed);
        CHECK(again.eval_doc_ids == split.eval_doc_ids);
    }
}
