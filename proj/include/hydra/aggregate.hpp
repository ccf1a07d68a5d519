#pragma once

#include <span>
#include <string>
#include <vector>

namespace hydra {

// Everything downstream of the base detectors combines evidence on the
// log-odds scale: per-member window reduction, per-slice member reduction,
// and the final per-sample reduction across slices.

// Posterior clipping applied by detectors and re-applied after aggregation,
// keeping logit() total on everything we emit.
inline constexpr double kPosteriorClip = 1e-6;

double logit(double q);    // log(q/(1-q)); throws DomainError outside (0,1)
double sigmoid(double l);  // numerically stable inverse of logit

inline double clip_posterior(double q) {
    if (q < kPosteriorClip) return kPosteriorClip;
    if (q > 1.0 - kPosteriorClip) return 1.0 - kPosteriorClip;
    return q;
}

enum class AggregationMethod {
    logit_mean, // sigmoid of the mean member logit — size-invariant
    logit_sum,  // sigmoid of the summed member logits — evidence accumulates
    prob_mean,  // arithmetic mean of member posteriors
    hard_vote,  // fraction of members voting malware (q >= 0.5)
};

const char* aggregation_name(AggregationMethod m);   // logit-mean/logit-sum/mean/preds
AggregationMethod parse_aggregation(const std::string& name); // throws ConfigError

// Prior of class 1 plus the additive constant of the exact Bayes combination
// of K conditionally independent models.
struct ClassPrior {
    double pi = 0.5;
    double b = 0.0;

    static ClassPrior for_models(double pi, int num_models);
};

// Member-level reduction within one slice. K = qs.size() >= 1; empty input
// throws DataError. Result is clipped back into [clip, 1-clip]: summed
// logits can saturate the sigmoid to an exact 0 or 1 in double precision.
double aggregate_slice(std::span<const double> qs, AggregationMethod method);

// Reduce one member's window posteriors within a slice: sigmoid of the mean
// window logit. A single window passes through untouched.
double reduce_windows(std::span<const double> window_qs);

// Reduce slice confidences c_t to the per-sample, per-sequence confidence:
// sigmoid(mean_t logit(c_t)) for the logit variants, mean_t c_t otherwise.
double reduce_slices(std::span<const double> slice_confidences, AggregationMethod method);

// Full chain for one sample under one sequence:
// posteriors[t][k][w] = member k's posterior on window w of slice t.
// Throws DataError on an empty slice ("insufficient windows") or no members.
double sequence_confidence(const std::vector<std::vector<std::vector<double>>>& posteriors,
                           AggregationMethod method);

// b + sum of logits — the faithful additive combination. Reference for
// tests; the pipeline's default path uses means so confidence does not grow
// with ensemble size.
double combined_log_odds(std::span<const double> logits, const ClassPrior& prior);

} // namespace hydra
