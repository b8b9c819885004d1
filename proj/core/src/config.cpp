#include "queryforge/config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "queryforge/evaluator.hpp"
#include "queryforge/synthetic.hpp"

namespace qf {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

void require_field(const nlohmann::json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key))
        throw ValidationError("config: missing required field \"" + std::string(key) +
                              "\" in " + where);
}

} // namespace

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path.string());
    nlohmann::json obj;
    try {
        in >> obj;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": invalid config JSON: " + e.what());
    }
    const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

    PipelineConfig c;
    for (const char* key : {"dataset_id", "corpus_path", "queries_path", "qrels_path",
                            "template_path", "endpoint_url", "model", "output_dir", "seeds"})
        require_field(obj, key, path.string());

    c.dataset_id = obj["dataset_id"].get<std::string>();
    c.corpus_path = resolve(base, obj["corpus_path"].get<std::string>());
    c.queries_path = resolve(base, obj["queries_path"].get<std::string>());
    c.qrels_path = resolve(base, obj["qrels_path"].get<std::string>());
    c.split = obj.value("split", "dev");
    c.template_path = resolve(base, obj["template_path"].get<std::string>());
    c.preset_name = obj.value("preset", "default");
    c.endpoint_url = obj["endpoint_url"].get<std::string>();
    c.model = obj["model"].get<std::string>();
    c.max_docs = obj.value("max_docs", std::size_t(100000));
    c.few_shot_k = obj.value("few_shot_k", std::size_t(4));
    c.concurrency_limit = obj.value("concurrency_limit", 4);
    c.eval_gain = obj.value("eval_gain", "linear");
    c.output_dir = resolve(base, obj["output_dir"].get<std::string>());

    const auto& seeds = obj["seeds"];
    for (const char* key : {"sampling", "split", "training"})
        require_field(seeds, key, "seeds");
    c.seeds.sampling = seeds["sampling"].get<std::uint64_t>();
    c.seeds.split = seeds["split"].get<std::uint64_t>();
    c.seeds.training = seeds["training"].get<std::uint64_t>();

    if (obj.contains("train")) {
        const auto& t = obj["train"];
        c.train.backbone_id = t.value("backbone_id", c.train.backbone_id);
        c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
        c.train.small_corpus_batch = t.value("small_corpus_batch", c.train.small_corpus_batch);
        c.train.large_corpus_batch = t.value("large_corpus_batch", c.train.large_corpus_batch);
        c.train.corpus_size_threshold =
            t.value("corpus_size_threshold", c.train.corpus_size_threshold);
        c.train.max_epochs = t.value("max_epochs", c.train.max_epochs);
        c.train.patience = t.value("patience", c.train.patience);
        c.train.eval_fraction = t.value("eval_fraction", c.train.eval_fraction);
        c.train.similarity_temperature =
            t.value("similarity_temperature", c.train.similarity_temperature);
        c.train.micro_batch = t.value("micro_batch", c.train.micro_batch);
        c.train.weight_decay = t.value("weight_decay", c.train.weight_decay);
        c.train.warmup_fraction = t.value("warmup_fraction", c.train.warmup_fraction);
        c.train.cosine_similarity = t.value("cosine_similarity", c.train.cosine_similarity);
        if (t.contains("encoder")) {
            const auto& e = t["encoder"];
            c.train.encoder.vocab_size = e.value("vocab_size", c.train.encoder.vocab_size);
            c.train.encoder.dim = e.value("dim", c.train.encoder.dim);
            c.train.encoder.max_len = e.value("max_len", c.train.encoder.max_len);
        }
    }
    c.train.seed = c.seeds.training;

    if (obj.contains("analysis")) {
        const auto& a = obj["analysis"];
        for (const auto& ci : a.value("correlation_inputs", nlohmann::json::array())) {
            AnalysisConfig::CorrelationInput input;
            input.name = ci.at("name").get<std::string>();
            input.x = ci.at("x").get<std::vector<double>>();
            input.y = ci.at("y").get<std::vector<double>>();
            c.analysis.correlation_inputs.push_back(std::move(input));
        }
        if (a.contains("default_scores_path"))
            c.analysis.default_scores_path = resolve(base, a["default_scores_path"]);
        if (a.contains("creative_scores_path"))
            c.analysis.creative_scores_path = resolve(base, a["creative_scores_path"]);
        if (a.contains("judge_endpoint_url"))
            c.analysis.judge_endpoint_url = a["judge_endpoint_url"].get<std::string>();
        c.analysis.judge_model = a.value("judge_model", "");
        if (a.contains("rubric_path"))
            c.analysis.rubric_path = resolve(base, a["rubric_path"]);
        c.analysis.judge_max_pairs = a.value("judge_max_pairs", std::size_t(0));
    }
    return c;
}

void save_config(const std::filesystem::path& path, const PipelineConfig& c) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write config file: " + path.string());
    nlohmann::ordered_json obj;
    obj["dataset_id"] = c.dataset_id;
    obj["corpus_path"] = c.corpus_path.string();
    obj["queries_path"] = c.queries_path.string();
    obj["qrels_path"] = c.qrels_path.string();
    obj["split"] = c.split;
    obj["template_path"] = c.template_path.string();
    obj["preset"] = c.preset_name;
    obj["endpoint_url"] = c.endpoint_url;
    obj["model"] = c.model;
    obj["max_docs"] = c.max_docs;
    obj["few_shot_k"] = c.few_shot_k;
    obj["concurrency_limit"] = c.concurrency_limit;
    obj["eval_gain"] = c.eval_gain;
    obj["output_dir"] = c.output_dir.string();
    obj["seeds"] = {{"sampling", c.seeds.sampling},
                    {"split", c.seeds.split},
                    {"training", c.seeds.training}};
    obj["train"] = {{"backbone_id", c.train.backbone_id},
                    {"learning_rate", c.train.learning_rate},
                    {"small_corpus_batch", c.train.small_corpus_batch},
                    {"large_corpus_batch", c.train.large_corpus_batch},
                    {"corpus_size_threshold", c.train.corpus_size_threshold},
                    {"max_epochs", c.train.max_epochs},
                    {"patience", c.train.patience},
                    {"eval_fraction", c.train.eval_fraction},
                    {"similarity_temperature", c.train.similarity_temperature},
                    {"micro_batch", c.train.micro_batch},
                    {"weight_decay", c.train.weight_decay},
                    {"warmup_fraction", c.train.warmup_fraction},
                    {"cosine_similarity", c.train.cosine_similarity},
                    {"encoder",
                     {{"vocab_size", c.train.encoder.vocab_size},
                      {"dim", c.train.encoder.dim},
                      {"max_len", c.train.encoder.max_len}}}};
    out << obj.dump(2) << "\n";
}

void validate_config(const PipelineConfig& c) {
    for (const auto& [label, p] :
         std::initializer_list<std::pair<const char*, const std::filesystem::path*>>{
             {"corpus_path", &c.corpus_path},
             {"queries_path", &c.queries_path},
             {"qrels_path", &c.qrels_path},
             {"template_path", &c.template_path}}) {
        if (!std::filesystem::exists(*p))
            throw ValidationError(std::string("config: ") + label + " does not exist: " +
                                  p->string());
    }
    preset_by_name(c.preset_name); // throws on unknown preset
    gain_from_name(c.eval_gain);
    if (c.split != "dev" && c.split != "test")
        throw ValidationError("config: split must be \"dev\" or \"test\"");
    if (c.few_shot_k < 1 || c.few_shot_k > 8)
        throw ValidationError("config: few_shot_k must be in 1..8");
    if (c.max_docs < 1) throw ValidationError("config: max_docs must be >= 1");
    if (c.concurrency_limit < 1)
        throw ValidationError("config: concurrency_limit must be >= 1");
    if (c.endpoint_url.empty()) throw ValidationError("config: endpoint_url is empty");
    if (c.model.empty()) throw ValidationError("config: model is empty");
    if (c.output_dir.empty()) throw ValidationError("config: output_dir is empty");
    c.train.validate();
}

} // namespace qf
