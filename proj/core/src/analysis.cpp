#include "queryforge/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace qf {

VerbosityStat verbosity(const std::vector<SyntheticPair>& pairs,
                        const std::vector<Document>& corpus,
                        std::size_t queries_per_doc,
                        const std::string& dataset_id) {
    if (queries_per_doc == 0)
        throw ValidationError("verbosity: queries_per_doc must be positive");
    std::unordered_map<std::string, std::size_t> doc_words;
    for (const auto& d : corpus) doc_words.emplace(d.id, word_count(d.text));

    std::unordered_map<std::string, std::size_t> per_doc_count;
    double ratio_sum = 0.0;
    for (const auto& p : pairs) {
        auto it = doc_words.find(p.doc_id);
        if (it == doc_words.end())
            throw ValidationError("verbosity: pair references unknown document \"" +
                                  p.doc_id + "\"");
        const std::size_t q_words = word_count(p.query_text);
        if (q_words == 0)
            throw ValidationError("verbosity: zero-word query for document \"" + p.doc_id +
                                  "\" sequence " + std::to_string(p.sequence_index));
        ratio_sum += double(it->second) / double(q_words);
        ++per_doc_count[p.doc_id];
    }
    if (per_doc_count.empty()) throw ValidationError("verbosity: no pairs");
    for (const auto& [doc_id, count] : per_doc_count)
        if (count != queries_per_doc)
            throw ValidationError("verbosity: document \"" + doc_id + "\" has " +
                                  std::to_string(count) + " queries, expected " +
                                  std::to_string(queries_per_doc));

    VerbosityStat stat;
    stat.dataset_id = dataset_id;
    stat.num_documents = per_doc_count.size();
    stat.queries_per_doc = queries_per_doc;
    stat.r_bar = ratio_sum / (double(queries_per_doc) * double(stat.num_documents));
    return stat;
}

namespace {

/// Average ranks (1-based), ties get the mean of their rank range.
std::vector<double> average_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = 0.5 * double(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

/// Regularized incomplete beta I_x(a, b) via the standard continued
/// fraction (modified Lentz).
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

/// Two-sided p for Student's t with df degrees of freedom.
double t_two_sided_p(double t, double df) {
    return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

} // namespace

CorrelationResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size())
        throw ValidationError("spearman: input lengths differ");
    const std::size_t n = x.size();
    if (n < 3) throw ValidationError("spearman: need at least 3 observations");

    auto rx = average_ranks(x);
    auto ry = average_ranks(y);

    // Pearson over the rank vectors handles ties correctly.
    const double mean = (double(n) + 1.0) / 2.0;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = rx[i] - mean, dy = ry[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw ValidationError("spearman: correlation undefined for a constant sequence");

    CorrelationResult result;
    result.n = n;
    result.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double df = double(n) - 2.0;
    if (std::fabs(result.rho) >= 1.0) {
        result.p_value = 0.0;
    } else {
        const double t = result.rho * std::sqrt(df / (1.0 - result.rho * result.rho));
        result.p_value = t_two_sided_p(t, df);
    }
    return result;
}

std::map<GroupKey, double> standardize_by_group(const std::map<GroupKey, double>& values) {
    std::map<std::string, std::vector<const std::pair<const GroupKey, double>*>> groups;
    for (const auto& kv : values) groups[kv.first.first].push_back(&kv);

    std::map<GroupKey, double> out;
    for (const auto& [group_id, members] : groups) {
        if (members.size() < 2)
            throw ValidationError("standardize_by_group: group \"" + group_id +
                                  "\" has fewer than 2 runs");
        double mean = 0.0;
        for (const auto* kv : members) mean += kv->second;
        mean /= double(members.size());
        double var = 0.0;
        for (const auto* kv : members) {
            const double d = kv->second - mean;
            var += d * d;
        }
        var /= double(members.size()); // population variance
        if (var == 0.0)
            throw ValidationError("standardize_by_group: zero variance in group \"" +
                                  group_id + "\"");
        const double stdev = std::sqrt(var);
        for (const auto* kv : members) out[kv->first] = (kv->second - mean) / stdev;
    }
    return out;
}

int parse_judge_grade(const std::string& response) {
    for (std::size_t i = 0; i < response.size(); ++i) {
        const char c = response[i];
        if (c < '0' || c > '3') continue;
        const bool left_ok = i == 0 || (!std::isalnum(static_cast<unsigned char>(response[i - 1])) &&
                                        response[i - 1] != '.' && response[i - 1] != '-');
        // A trailing '.' only disqualifies when it starts a decimal ("3.5");
        // a sentence-final period ("Score: 3.") is fine.
        const bool decimal_tail =
            i + 1 < response.size() && response[i + 1] == '.' &&
            i + 2 < response.size() &&
            std::isdigit(static_cast<unsigned char>(response[i + 2]));
        const bool right_ok =
            i + 1 == response.size() ||
            (!std::isdigit(static_cast<unsigned char>(response[i + 1])) && !decimal_tail);
        if (left_ok && right_ok) return c - '0';
    }
    return -1;
}

JudgeSummary judge_queries(ChatEndpoint& endpoint, const std::string& judge_model,
                           const std::vector<SyntheticPair>& pairs,
                           const std::vector<Document>& corpus,
                           const PromptTemplate& rubric,
                           const RetryPolicy& retry) {
    std::unordered_map<std::string, const std::string*> doc_text;
    for (const auto& d : corpus) doc_text.emplace(d.id, &d.text);

    SamplingPreset judge_preset;
    judge_preset.name = "judge";
    judge_preset.temperature = 0.0;
    judge_preset.max_tokens = 16;
    judge_preset.num_return_sequences = 1;

    JudgeSummary summary;
    summary.total = pairs.size();
    double grade_sum = 0.0;
    for (const auto& p : pairs) {
        auto it = doc_text.find(p.doc_id);
        if (it == doc_text.end())
            throw ValidationError("judge_queries: pair references unknown document \"" +
                                  p.doc_id + "\"");
        std::vector<ChatMessage> messages;
        messages.push_back({Role::system, rubric.system_text});
        messages.push_back({Role::user, rubric.user_prefix + "Query: " + p.query_text +
                                            "\nDocument: " + *it->second});

        int grade = -1;
        for (int attempt = 0; attempt < 2 && grade < 0; ++attempt) {
            auto completions =
                generate_for_document(endpoint, judge_model, messages, judge_preset, retry);
            grade = parse_judge_grade(completions.front());
        }
        if (grade < 0) {
            ++summary.missing;
            continue;
        }
        summary.grades.push_back({p.doc_id, p.query_text, grade, judge_model});
        grade_sum += grade;
    }
    const std::size_t graded = summary.total - summary.missing;
    summary.coverage = summary.total == 0 ? 0.0 : double(graded) / double(summary.total);
    summary.low_coverage_warning = summary.coverage < 0.9;
    summary.mean_grade = graded == 0 ? 0.0 : grade_sum / double(graded);
    return summary;
}

DeltaReport delta_report(const std::map<RunKey, double>& default_scores,
                         const std::map<RunKey, double>& creative_scores) {
    if (default_scores.size() != creative_scores.size() ||
        !std::equal(default_scores.begin(), default_scores.end(), creative_scores.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; })) {
        std::ostringstream msg;
        msg << "delta_report: key sets differ;";
        for (const auto& [key, _] : default_scores)
            if (!creative_scores.count(key))
                msg << " missing creative (" << key.first << ", " << key.second << ")";
        for (const auto& [key, _] : creative_scores)
            if (!default_scores.count(key))
                msg << " missing default (" << key.first << ", " << key.second << ")";
        throw ValidationError(msg.str());
    }

    DeltaReport report;
    std::map<std::string, std::size_t> model_idx, dataset_idx;
    for (const auto& [key, _] : default_scores) {
        model_idx.emplace(key.first, 0);
        dataset_idx.emplace(key.second, 0);
    }
    for (auto& [model, idx] : model_idx) {
        idx = report.models.size();
        report.models.push_back(model);
    }
    for (auto& [dataset, idx] : dataset_idx) {
        idx = report.datasets.size();
        report.datasets.push_back(dataset);
    }
    report.deltas = Matrix(report.models.size(), report.datasets.size());
    for (auto& v : report.deltas.data) v = std::numeric_limits<double>::quiet_NaN();
    for (const auto& [key, d_score] : default_scores)
        report.deltas.at(model_idx[key.first], dataset_idx[key.second]) =
            d_score - creative_scores.at(key);
    return report;
}

std::string DeltaReport::to_csv() const {
    std::ostringstream out;
    out << "model";
    for (const auto& ds : datasets) out << "," << ds;
    out << "\n";
    for (std::size_t r = 0; r < models.size(); ++r) {
        out << models[r];
        for (std::size_t c = 0; c < datasets.size(); ++c) {
            out << ",";
            const double v = deltas.at(r, c);
            if (!std::isnan(v)) out << v;
        }
        out << "\n";
    }
    return out.str();
}

} // namespace qf
