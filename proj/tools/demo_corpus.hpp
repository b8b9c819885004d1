#pragma once

// Deterministic demo dataset builder, shared by the qf-fixture tool and the
// integration tests. Documents are bags of topic, document-unique, and
// shared filler words, so a word-sampling mock generator yields learnable
// (query, document) pairs.

#include <algorithm>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "queryforge/corpus.hpp"

namespace qf::demo {

struct DemoSpec {
    std::size_t n_docs = 200;
    std::size_t n_queries = 20;
    std::size_t n_topics = 20;
    std::uint64_t seed = 7;
};

struct DemoDataset {
    std::vector<Document> corpus;
    std::vector<QueryRecord> queries;
    std::vector<QrelEntry> qrels;
};

inline DemoDataset make_demo_dataset(const DemoSpec& spec) {
    std::mt19937_64 rng(spec.seed);
    const std::size_t topic_vocab = 30;
    const std::size_t filler_vocab = 100;

    auto topic_word = [&](std::size_t topic, std::size_t w) {
        std::ostringstream s;
        s << "topic" << topic << "term" << w;
        return s.str();
    };
    auto filler_word = [&](std::size_t w) {
        std::ostringstream s;
        s << "common" << w;
        return s.str();
    };
    auto unique_word = [&](std::size_t doc, std::size_t w) {
        std::ostringstream s;
        s << "doc" << doc << "only" << w;
        return s.str();
    };

    DemoDataset data;
    std::vector<std::vector<std::string>> doc_words(spec.n_docs);
    for (std::size_t i = 0; i < spec.n_docs; ++i) {
        const std::size_t topic = i % spec.n_topics;
        std::vector<std::string> words;
        for (std::size_t w = 0; w < 10; ++w)
            words.push_back(topic_word(topic, rng() % topic_vocab));
        for (std::size_t w = 0; w < 6; ++w) words.push_back(unique_word(i, w));
        for (std::size_t w = 0; w < 8; ++w)
            words.push_back(filler_word(rng() % filler_vocab));
        std::shuffle(words.begin(), words.end(), rng);
        doc_words[i] = words;

        Document doc;
        doc.id = "d" + std::to_string(i);
        doc.title = "Demo document " + std::to_string(i);
        std::ostringstream text;
        for (std::size_t w = 0; w < words.size(); ++w) {
            if (w) text << " ";
            text << words[w];
        }
        doc.text = text.str();
        data.corpus.push_back(std::move(doc));
    }

    for (std::size_t j = 0; j < spec.n_queries; ++j) {
        const std::size_t target = (j * spec.n_docs) / spec.n_queries;
        QueryRecord q;
        q.id = "q" + std::to_string(j);
        std::ostringstream text;
        for (std::size_t w = 0; w < 3; ++w) {
            if (w) text << " ";
            text << unique_word(target, w);
        }
        // A couple of on-topic (but not doc-unique) words for realism.
        text << " " << doc_words[target][rng() % doc_words[target].size()];
        q.text = text.str();
        data.queries.push_back(std::move(q));

        data.qrels.push_back({"q" + std::to_string(j), "d" + std::to_string(target),
                              j % 3 == 2 ? 1 : 2});
        // A same-topic neighbour as a lower-grade judgment.
        const std::size_t neighbour = (target + spec.n_topics) % spec.n_docs;
        if (neighbour != target)
            data.qrels.push_back({"q" + std::to_string(j), "d" + std::to_string(neighbour), 1});
    }
    return data;
}

} // namespace qf::demo
