#include "queryforge/generator.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

namespace qf {

namespace {

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw ValidationError("cannot write file: " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

} // namespace

GenerationManifest GenerationManifest::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open manifest: " + path.string());
    nlohmann::json obj;
    try {
        in >> obj;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": invalid manifest JSON: " + e.what());
    }
    GenerationManifest m;
    m.dataset_id = obj.value("dataset_id", "");
    m.generator_id = obj.value("generator_id", "");
    m.preset_name = obj.value("preset_name", "");
    for (const auto& id : obj.value("completed_doc_ids", nlohmann::json::array()))
        m.completed_doc_ids.insert(id.get<std::string>());
    if (obj.contains("failed_doc_ids"))
        for (auto& [id, err] : obj["failed_doc_ids"].items())
            m.failed_doc_ids[id] = err.get<std::string>();
    if (obj.contains("usage")) {
        m.usage.input_tokens = obj["usage"].value("input_tokens", 0LL);
        m.usage.output_tokens = obj["usage"].value("output_tokens", 0LL);
        m.usage.requests = obj["usage"].value("requests", 0LL);
    }
    for (const auto& id : m.completed_doc_ids)
        if (m.failed_doc_ids.count(id))
            throw ValidationError("manifest lists \"" + id + "\" as both completed and failed");
    return m;
}

void GenerationManifest::save_atomic(const std::filesystem::path& path) const {
    nlohmann::ordered_json obj;
    obj["dataset_id"] = dataset_id;
    obj["generator_id"] = generator_id;
    obj["preset_name"] = preset_name;
    obj["completed_doc_ids"] = completed_doc_ids;
    obj["failed_doc_ids"] = failed_doc_ids;
    obj["usage"] = {{"input_tokens", usage.input_tokens},
                    {"output_tokens", usage.output_tokens},
                    {"requests", usage.requests}};
    atomic_write(path, obj.dump(2) + "\n");
}

GenerationResult run_generation(const std::vector<Document>& pool,
                                const PromptTemplate& tmpl,
                                const std::vector<FewShotExample>& examples,
                                const SamplingPreset& preset,
                                ChatEndpoint& endpoint,
                                GenerationManifest manifest,
                                const GenerationOptions& options,
                                const std::filesystem::path& manifest_path,
                                const std::filesystem::path& partial_path) {
    if (options.concurrency_limit < 1)
        throw ValidationError("run_generation: concurrency_limit must be >= 1");

    // Recover pairs for already-completed documents; anything belonging to
    // a document that never made it into the manifest is regenerated.
    std::vector<SyntheticPair> pairs;
    if (std::filesystem::exists(partial_path)) {
        std::set<std::pair<std::string, int>> seen;
        for (auto& p : load_pairs(partial_path)) {
            if (!manifest.completed_doc_ids.count(p.doc_id)) continue;
            if (!seen.insert({p.doc_id, p.sequence_index}).second) continue;
            pairs.push_back(std::move(p));
        }
    }

    std::vector<const Document*> pending;
    for (const auto& d : pool) {
        if (manifest.completed_doc_ids.count(d.id)) continue;
        manifest.failed_doc_ids.erase(d.id); // failures are retried on resume
        pending.push_back(&d);
    }

    std::mutex state_mutex; // guards pairs, manifest, and both files
    std::ofstream partial_out;
    if (!pending.empty()) {
        if (partial_path.has_parent_path())
            std::filesystem::create_directories(partial_path.parent_path());
        partial_out.open(partial_path, std::ios::binary | std::ios::app);
        if (!partial_out)
            throw ValidationError("cannot append to partial pairs file: " +
                                  partial_path.string());
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr fatal;

    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= pending.size()) return;
            {
                std::scoped_lock lock(state_mutex);
                if (fatal) return;
            }
            const Document& doc = *pending[i];
            try {
                auto messages = build_chat(tmpl, examples, doc);
                TokenUsage usage;
                auto completions = generate_for_document(endpoint, manifest.generator_id,
                                                         messages, preset, options.retry,
                                                         &usage);
                std::vector<SyntheticPair> doc_pairs;
                for (int seq = 0; seq < static_cast<int>(completions.size()); ++seq) {
                    std::string q = clean_query_text(completions[seq]);
                    if (q.empty()) continue;
                    doc_pairs.push_back({doc.id, std::move(q), manifest.generator_id,
                                         preset.name, seq});
                }
                std::scoped_lock lock(state_mutex);
                for (const auto& p : doc_pairs) {
                    nlohmann::ordered_json obj;
                    obj["doc_id"] = p.doc_id;
                    obj["query"] = p.query_text;
                    obj["model"] = p.generator_id;
                    obj["preset"] = p.preset_name;
                    obj["seq"] = p.sequence_index;
                    partial_out << obj.dump() << "\n";
                    pairs.push_back(p);
                }
                partial_out.flush();
                manifest.completed_doc_ids.insert(doc.id);
                manifest.usage += usage;
                manifest.save_atomic(manifest_path);
            } catch (const EndpointError& e) {
                std::scoped_lock lock(state_mutex);
                if (e.retriable()) {
                    // Out of retries and still failing transport: the
                    // endpoint is gone, abort with the manifest intact.
                    if (!fatal) fatal = std::current_exception();
                } else {
                    manifest.failed_doc_ids[doc.id] = e.what();
                    manifest.save_atomic(manifest_path);
                }
            } catch (...) {
                std::scoped_lock lock(state_mutex);
                if (!fatal) fatal = std::current_exception();
            }
        }
    };

    const std::size_t n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(options.concurrency_limit),
                              std::max<std::size_t>(pending.size(), 1));
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (fatal) std::rethrow_exception(fatal);

    std::sort(pairs.begin(), pairs.end(), [](const SyntheticPair& a, const SyntheticPair& b) {
        return std::tie(a.doc_id, a.sequence_index) < std::tie(b.doc_id, b.sequence_index);
    });
    manifest.save_atomic(manifest_path);
    return {std::move(pairs), std::move(manifest)};
}

} // namespace qf
