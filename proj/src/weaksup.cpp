#include "progclust/weaksup.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "progclust/error.hpp"
#include "progclust/numeric.hpp"

namespace progclust {

char vote_symbol(Vote v) {
    switch (v) {
        case Vote::kTogether: return 'T';
        case Vote::kSeparate: return 'S';
        case Vote::kAbstain: return 'U';
    }
    return '?';
}

namespace {

std::vector<Vote> quartile_votes(const std::vector<double>& col, double& q1, double& q3) {
    std::vector<double> sorted = col;
    std::sort(sorted.begin(), sorted.end());
    q1 = numeric::quantile_sorted(sorted, 0.25);
    q3 = numeric::quantile_sorted(sorted, 0.75);
    std::vector<Vote> votes(col.size());
    for (std::size_t i = 0; i < col.size(); ++i)
        votes[i] = col[i] < q1 ? Vote::kTogether : col[i] > q3 ? Vote::kSeparate : Vote::kAbstain;
    return votes;
}

}  // namespace

LabelMatrix apply_labeling_functions(const std::vector<std::vector<double>>& columns) {
    LabelMatrix lm;
    if (columns.empty()) return lm;
    lm.rows = columns.front().size();
    for (std::size_t f = 0; f < columns.size(); ++f) {
        if (columns[f].size() != lm.rows) throw InvalidArgument("apply_labeling_functions: ragged columns");
        if (lm.rows == 0) throw InvalidArgument("apply_labeling_functions: no pairs");
        double q1 = 0.0, q3 = 0.0;
        lm.columns.push_back(quartile_votes(columns[f], q1, q3));
        lm.q1.push_back(q1);
        lm.q3.push_back(q3);
        lm.variables.push_back(f);
        const auto [lo, hi] = std::minmax_element(columns[f].begin(), columns[f].end());
        if (*lo == *hi) lm.warnings.push_back("labeling function " + std::to_string(f) + " has a constant column; it always abstains");
    }
    return lm;
}

LabelMatrix apply_labeling_functions(const PairTable& table) {
    std::vector<std::vector<double>> cols;
    std::vector<std::size_t> vars;
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
        if (!table.retained[c]) continue;
        cols.push_back(table.columns[c]);
        vars.push_back(c);
    }
    LabelMatrix lm = apply_labeling_functions(cols);
    lm.variables = vars;
    for (auto& w : lm.warnings) {
        // rewrite positional names into variable names
        for (std::size_t f = 0; f < vars.size(); ++f) {
            const std::string pos = "labeling function " + std::to_string(f) + " ";
            if (w.rfind(pos, 0) == 0) {
                w = std::string("labeling function ") + kVariableNames[vars[f]] + " " + w.substr(pos.size());
                break;
            }
        }
    }
    return lm;
}

namespace {

// Distinct vote patterns with multiplicities, in a deterministic order.
struct Patterns {
    std::vector<std::vector<Vote>> votes;
    std::vector<double> count;
    std::vector<std::size_t> row_pattern;
};

Patterns compress(const LabelMatrix& lm) {
    Patterns p;
    std::map<std::vector<Vote>, std::size_t> index;
    p.row_pattern.resize(lm.rows);
    std::vector<Vote> key(lm.functions());
    for (std::size_t r = 0; r < lm.rows; ++r) {
        for (std::size_t f = 0; f < lm.functions(); ++f) key[f] = lm.columns[f][r];
        auto [it, inserted] = index.emplace(key, p.votes.size());
        if (inserted) {
            p.votes.push_back(key);
            p.count.push_back(0.0);
        }
        p.count[it->second] += 1.0;
        p.row_pattern[r] = it->second;
    }
    return p;
}

// Joint weights of (votes, Y = T) and (votes, Y = S), without propensity factors.
std::pair<double, double> branch_weights(const std::vector<Vote>& votes, double prior,
                                         const std::vector<double>& accuracy) {
    double wt = prior, ws = 1.0 - prior;
    for (std::size_t f = 0; f < votes.size(); ++f) {
        if (votes[f] == Vote::kAbstain) continue;
        const double a = accuracy[f];
        if (votes[f] == Vote::kTogether) {
            wt *= a;
            ws *= 1.0 - a;
        } else {
            wt *= 1.0 - a;
            ws *= a;
        }
    }
    return {wt, ws};
}

double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

double pattern_log_likelihood(const Patterns& pat, const std::vector<double>& nvote,
                              const std::vector<double>& nabst, double prior,
                              const std::vector<double>& propensity, const std::vector<double>& accuracy) {
    std::vector<double> terms;
    terms.reserve(pat.votes.size() + nvote.size());
    for (std::size_t k = 0; k < pat.votes.size(); ++k) {
        const auto [wt, ws] = branch_weights(pat.votes[k], prior, accuracy);
        terms.push_back(pat.count[k] * std::log(wt + ws));
    }
    for (std::size_t f = 0; f < nvote.size(); ++f)
        terms.push_back(xlogy(nvote[f], propensity[f]) + xlogy(nabst[f], 1.0 - propensity[f]));
    return numeric::pairwise_sum(terms);
}

void vote_counts(const Patterns& pat, std::size_t functions, std::vector<double>& nvote, std::vector<double>& nabst) {
    nvote.assign(functions, 0.0);
    nabst.assign(functions, 0.0);
    for (std::size_t k = 0; k < pat.votes.size(); ++k)
        for (std::size_t f = 0; f < functions; ++f)
            (pat.votes[k][f] == Vote::kAbstain ? nabst : nvote)[f] += pat.count[k];
}

}  // namespace

double label_log_likelihood(const LabelMatrix& lm, double prior, const std::vector<double>& propensity,
                            const std::vector<double>& accuracy) {
    const Patterns pat = compress(lm);
    std::vector<double> nvote, nabst;
    vote_counts(pat, lm.functions(), nvote, nabst);
    return pattern_log_likelihood(pat, nvote, nabst, prior, propensity, accuracy);
}

LabelModel fit_label_model(const LabelMatrix& lm, const LabelModelOptions& opts) {
    const std::size_t nf = lm.functions();
    if (nf == 0 || lm.rows == 0) throw ComputeError("fit_label_model: no signal (empty label matrix)");
    const Patterns pat = compress(lm);
    std::vector<double> nvote, nabst;
    vote_counts(pat, nf, nvote, nabst);
    if (std::all_of(nvote.begin(), nvote.end(), [](double v) { return v == 0.0; }))
        throw ComputeError("fit_label_model: no signal (every labeling function abstains on every pair)");

    constexpr double kFloor = 1e-12;
    const double total = static_cast<double>(lm.rows);
    LabelModel model;
    model.prior = opts.initial_prior;
    model.accuracy.assign(nf, opts.initial_accuracy);
    model.propensity.resize(nf);
    for (std::size_t f = 0; f < nf; ++f) model.propensity[f] = nvote[f] / total;

    model.log_likelihood.push_back(
        pattern_log_likelihood(pat, nvote, nabst, model.prior, model.propensity, model.accuracy));

    std::vector<double> q(pat.votes.size());
    std::vector<double> prior_terms(pat.votes.size());
    std::vector<std::vector<double>> acc_terms(nf, std::vector<double>(pat.votes.size()));
    for (int it = 0; it < opts.max_iterations; ++it) {
        // E-step: posterior P(Y = T | pattern).
        for (std::size_t k = 0; k < pat.votes.size(); ++k) {
            const auto [wt, ws] = branch_weights(pat.votes[k], model.prior, model.accuracy);
            q[k] = wt / (wt + ws);
        }
        // M-step.
        for (std::size_t k = 0; k < pat.votes.size(); ++k) {
            prior_terms[k] = pat.count[k] * q[k];
            for (std::size_t f = 0; f < nf; ++f) {
                const Vote v = pat.votes[k][f];
                acc_terms[f][k] = v == Vote::kTogether ? pat.count[k] * q[k]
                                  : v == Vote::kSeparate ? pat.count[k] * (1.0 - q[k])
                                                         : 0.0;
            }
        }
        double change = 0.0;
        const double prior = std::clamp(numeric::pairwise_sum(prior_terms) / total, kFloor, 1.0 - kFloor);
        change = std::max(change, std::abs(prior - model.prior));
        model.prior = prior;
        for (std::size_t f = 0; f < nf; ++f) {
            if (nvote[f] == 0.0) continue;
            const double a = std::clamp(numeric::pairwise_sum(acc_terms[f]) / nvote[f], kFloor, 1.0 - kFloor);
            change = std::max(change, std::abs(a - model.accuracy[f]));
            model.accuracy[f] = a;
        }
        model.iterations = it + 1;
        model.log_likelihood.push_back(
            pattern_log_likelihood(pat, nvote, nabst, model.prior, model.propensity, model.accuracy));
        if (change < opts.tolerance) {
            model.converged = true;
            break;
        }
    }

    double weighted = 0.0, votes = 0.0;
    for (std::size_t f = 0; f < nf; ++f) {
        weighted += nvote[f] * model.accuracy[f];
        votes += nvote[f];
    }
    if (weighted < 0.5 * votes) {
        for (double& a : model.accuracy) a = 1.0 - a;
        model.prior = 1.0 - model.prior;
        model.flipped = true;
    }
    return model;
}

PairLabels infer_labels(const LabelModel& model, const LabelMatrix& lm) {
    if (model.accuracy.size() != lm.functions()) throw InvalidArgument("infer_labels: model/matrix mismatch");
    PairLabels out;
    out.label.resize(lm.rows);
    out.posterior.resize(lm.rows);
    std::vector<Vote> votes(lm.functions());
    for (std::size_t r = 0; r < lm.rows; ++r) {
        bool any = false;
        for (std::size_t f = 0; f < lm.functions(); ++f) {
            votes[f] = lm.columns[f][r];
            any = any || votes[f] != Vote::kAbstain;
        }
        const auto [wt, ws] = branch_weights(votes, model.prior, model.accuracy);
        const double post = wt / (wt + ws);
        out.posterior[r] = post;
        out.label[r] = !any || post == 0.5 ? Vote::kAbstain : post > 0.5 ? Vote::kTogether : Vote::kSeparate;
    }
    return out;
}

WsdWeights train_linear_svm(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                            const SvmOptions& opts) {
    const std::size_t n = x.size();
    if (n == 0 || y.size() != n) throw InvalidArgument("train_linear_svm: empty or mismatched data");
    const std::size_t d = x.front().size();
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i].size() != d) throw InvalidArgument("train_linear_svm: ragged rows");
        if (y[i] != 1 && y[i] != -1) throw InvalidArgument("train_linear_svm: labels must be +1/-1");
        pos += y[i] == 1;
    }
    if (pos == 0 || pos == n) throw ComputeError("train_linear_svm: training labels contain a single class");

    const double c = opts.c;
    // w[d] is the bias weight on a constant feature of 1.
    std::vector<double> w(d + 1, 0.0), alpha(n, 0.0), qii(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 1.0;
        for (double v : x[i]) s += v * v;
        qii[i] = s;
    }
    auto margin = [&](std::size_t i) {
        double s = w[d];
        for (std::size_t k = 0; k < d; ++k) s += w[k] * x[i][k];
        return s;
    };

    WsdWeights out;
    out.c = c;
    std::vector<double> hinge(n);
    for (int pass = 1; pass <= opts.max_passes; ++pass) {
        for (std::size_t i = 0; i < n; ++i) {
            const double g = y[i] * margin(i) - 1.0;
            double pg = g;
            if (alpha[i] == 0.0) pg = std::min(g, 0.0);
            else if (alpha[i] == c) pg = std::max(g, 0.0);
            if (pg == 0.0) continue;
            const double old = alpha[i];
            alpha[i] = std::clamp(old - g / qii[i], 0.0, c);
            const double delta = (alpha[i] - old) * y[i];
            if (delta == 0.0) continue;
            for (std::size_t k = 0; k < d; ++k) w[k] += delta * x[i][k];
            w[d] += delta;
        }
        double wnorm = 0.0;
        for (double v : w) wnorm += v * v;
        for (std::size_t i = 0; i < n; ++i) hinge[i] = std::max(0.0, 1.0 - y[i] * margin(i));
        const double primal = 0.5 * wnorm + c * numeric::pairwise_sum(hinge);
        const double dual = numeric::pairwise_sum(alpha) - 0.5 * wnorm;
        out.passes = pass;
        out.primal_objective = primal;
        out.duality_gap = primal - dual;
        if (out.duality_gap < opts.gap_tolerance * std::max(1.0, primal)) {
            out.converged = true;
            break;
        }
    }

    out.weights.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(d));
    out.intercept = w[d];
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) correct += (margin(i) > 0.0 ? 1 : -1) == y[i];
    out.training_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    out.training_pairs = n;
    for (std::size_t k = 0; k < d; ++k) out.variables.push_back(k);
    return out;
}

WsdWeights train_wsd(const PairTable& table, const PairLabels& labels, const SvmOptions& opts) {
    if (labels.label.size() != table.rows()) throw InvalidArgument("train_wsd: labels/table size mismatch");
    std::vector<std::size_t> vars;
    for (std::size_t c = 0; c < kFeatureCount; ++c)
        if (table.retained[c]) vars.push_back(c);
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        if (labels.label[r] == Vote::kAbstain) continue;
        std::vector<double> row;
        row.reserve(vars.size());
        for (auto c : vars) row.push_back(table.columns[c][r]);
        x.push_back(std::move(row));
        y.push_back(labels.label[r] == Vote::kSeparate ? 1 : -1);
    }
    if (x.empty()) throw ComputeError("train_wsd: every pair is labeled U");
    WsdWeights out = train_linear_svm(x, y, opts);
    out.variables = vars;
    return out;
}

}  // namespace progclust
