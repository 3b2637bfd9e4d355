#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "progclust/features.hpp"

namespace progclust {

/// A labeling-function vote for a patient pair.
enum class Vote : std::int8_t { kTogether = 0, kSeparate = 1, kAbstain = 2 };

char vote_symbol(Vote v);  // 'T', 'S' or 'U'

/// Votes of one labeling function per retained descriptive variable.
struct LabelMatrix {
    std::size_t rows = 0;
    std::vector<std::size_t> variables;      // canonical variable index of each function
    std::vector<std::vector<Vote>> columns;  // columns[f][row]
    std::vector<double> q1, q3;              // per-function thresholds
    std::vector<std::string> warnings;

    std::size_t functions() const { return columns.size(); }
};

/// T when value < Q1, S when value > Q3, else abstain; quartiles are type-7
/// over all pairs of the column.
LabelMatrix apply_labeling_functions(const PairTable& table);

/// Same rule on explicit columns (used for testing invariances).
LabelMatrix apply_labeling_functions(const std::vector<std::vector<double>>& columns);

/// Conditionally independent generative label model:
///   Y ~ Bernoulli(prior) with Y = T on success;
///   each function abstains w.p. 1 - propensity[j], otherwise emits Y w.p.
///   accuracy[j] and the opposite label otherwise.
struct LabelModel {
    double prior = 0.5;  // P(Y = T)
    std::vector<double> propensity;
    std::vector<double> accuracy;
    std::vector<double> log_likelihood;  // per EM iteration, starting at the initial point
    int iterations = 0;
    bool converged = false;
    bool flipped = false;  // label switching resolved so that mean accuracy >= 0.5
};

struct LabelModelOptions {
    int max_iterations = 100;
    double tolerance = 1e-6;
    double initial_accuracy = 0.7;
    double initial_prior = 0.5;
};

LabelModel fit_label_model(const LabelMatrix& lm, const LabelModelOptions& opts = {});

/// Full observed-data log-likelihood of `lm` under the given parameters.
double label_log_likelihood(const LabelMatrix& lm, double prior, const std::vector<double>& propensity,
                            const std::vector<double>& accuracy);

struct PairLabels {
    std::vector<Vote> label;
    std::vector<double> posterior;  // P(Y = T | votes)
};

/// Label T when the posterior exceeds 0.5, S below 0.5, U on an exact tie or
/// when every function abstained.
PairLabels infer_labels(const LabelModel& model, const LabelMatrix& lm);

struct WsdWeights {
    std::vector<std::size_t> variables;  // canonical indices of the weighted variables
    std::vector<double> weights;
    double intercept = 0.0;
    double c = 1.0;
    int passes = 0;
    double duality_gap = 0.0;
    double primal_objective = 0.0;
    bool converged = false;
    double training_accuracy = 0.0;
    std::size_t training_pairs = 0;
};

struct SvmOptions {
    double c = 1.0;
    double gap_tolerance = 1e-6;  // relative to max(1, primal objective)
    int max_passes = 100000;
};

/// Linear SVM (L2-regularized hinge loss) on the retained normalized
/// variables; S pairs are the positive class, T pairs negative, U pairs are
/// ignored. Solved by cyclic dual coordinate descent with a bias feature.
WsdWeights train_wsd(const PairTable& table, const PairLabels& labels, const SvmOptions& opts = {});

/// Same solver on an explicit design: rows of x (dimension d), labels +1/-1.
WsdWeights train_linear_svm(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                            const SvmOptions& opts = {});

}  // namespace progclust
