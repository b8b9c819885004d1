#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "queryforge/corpus.hpp"
#include "queryforge/endpoint.hpp"
#include "queryforge/synthetic.hpp"

namespace qf {

/// Length-normalized query verbosity for one dataset:
/// r_bar = (1/(Q*|D|)) * sum_d sum_q |d|/|q|, word counts on both sides.
/// Smaller r_bar means more verbose queries.
struct VerbosityStat {
    std::string dataset_id;
    double r_bar = 0.0;
    std::size_t num_documents = 0;
    std::size_t queries_per_doc = 8;
};

VerbosityStat verbosity(const std::vector<SyntheticPair>& pairs,
                        const std::vector<Document>& corpus,
                        std::size_t queries_per_doc = 8,
                        const std::string& dataset_id = "");

struct CorrelationResult {
    double rho = 0.0;
    double p_value = 1.0; // two-sided, t approximation with n-2 dof
    std::size_t n = 0;
};

/// Tie-corrected (average-rank) Spearman correlation with two-sided
/// significance via t = rho * sqrt((n-2)/(1-rho^2)).
CorrelationResult spearman(const std::vector<double>& x, const std::vector<double>& y);

using GroupKey = std::pair<std::string, std::string>; // (group_id, run_id)

/// Per-group z-scores with population stdev; each group ends up zero-mean,
/// unit-stdev. Throws on groups with fewer than 2 runs or zero variance.
std::map<GroupKey, double> standardize_by_group(const std::map<GroupKey, double>& values);

struct JudgeGrade {
    std::string doc_id;
    std::string query_text;
    int grade = 0; // 0..3
    std::string judge_model;
};

struct JudgeSummary {
    std::vector<JudgeGrade> grades;
    std::size_t total = 0;
    std::size_t missing = 0; // unparseable after one retry
    double coverage = 0.0;
    bool low_coverage_warning = false; // coverage < 0.9
    double mean_grade = 0.0;           // over graded pairs
};

/// First standalone integer in {0,1,2,3} found in a judge response, or -1.
int parse_judge_grade(const std::string& response);

/// Scores each pair on the 0-3 relevance scale with an LLM judge.
JudgeSummary judge_queries(ChatEndpoint& endpoint, const std::string& judge_model,
                           const std::vector<SyntheticPair>& pairs,
                           const std::vector<Document>& corpus,
                           const PromptTemplate& rubric,
                           const RetryPolicy& retry = {});

using RunKey = std::pair<std::string, std::string>; // (model, dataset)

struct DeltaReport {
    std::vector<std::string> models;   // row labels, sorted
    std::vector<std::string> datasets; // column labels, sorted
    Matrix deltas;                     // default - creative

    std::string to_csv() const;
};

/// Per-cell NDCG difference (default preset minus creative preset).
DeltaReport delta_report(const std::map<RunKey, double>& default_scores,
                         const std::map<RunKey, double>& creative_scores);

} // namespace qf
