#include "hydra/aggregate.hpp"

#include "hydra/error.hpp"
#include "hydra/numeric.hpp"

#include <cmath>

namespace hydra {

double logit(double q) {
    if (!(q > 0.0 && q < 1.0))
        throw DomainError("logit requires q in (0,1), got " + format_double(q));
    return std::log(q / (1.0 - q));
}

double sigmoid(double l) {
    if (l >= 0.0) return 1.0 / (1.0 + std::exp(-l));
    const double e = std::exp(l);
    return e / (1.0 + e);
}

const char* aggregation_name(AggregationMethod m) {
    switch (m) {
        case AggregationMethod::logit_mean: return "logit-mean";
        case AggregationMethod::logit_sum: return "logit-sum";
        case AggregationMethod::prob_mean: return "mean";
        case AggregationMethod::hard_vote: return "preds";
    }
    throw DomainError("unknown aggregation method");
}

AggregationMethod parse_aggregation(const std::string& name) {
    if (name == "logit-mean") return AggregationMethod::logit_mean;
    if (name == "logit-sum") return AggregationMethod::logit_sum;
    if (name == "mean") return AggregationMethod::prob_mean;
    if (name == "preds") return AggregationMethod::hard_vote;
    throw ConfigError("unknown aggregation method '" + name +
                      "' (expected logit-mean, logit-sum, mean, or preds)");
}

ClassPrior ClassPrior::for_models(double pi, int num_models) {
    if (!(pi > 0.0 && pi < 1.0)) throw DomainError("class prior must lie in (0,1)");
    if (num_models < 1) throw DomainError("need at least one model");
    ClassPrior prior;
    prior.pi = pi;
    prior.b = -static_cast<double>(num_models - 1) * pi / (1.0 - pi);
    return prior;
}

static std::vector<double> logits_of(std::span<const double> qs) {
    std::vector<double> ls;
    ls.reserve(qs.size());
    for (double q : qs) ls.push_back(logit(q));
    return ls;
}

double aggregate_slice(std::span<const double> qs, AggregationMethod method) {
    if (qs.empty()) throw DataError("aggregate_slice: no member posteriors");
    if (qs.size() == 1) {
        logit(qs[0]); // range check
        return method == AggregationMethod::hard_vote ? (qs[0] >= 0.5 ? 1.0 - kPosteriorClip : kPosteriorClip)
                                                      : qs[0];
    }
    switch (method) {
        case AggregationMethod::logit_mean:
            return clip_posterior(sigmoid(mean(logits_of(qs))));
        case AggregationMethod::logit_sum: {
            const auto ls = logits_of(qs);
            return clip_posterior(sigmoid(pairwise_sum(ls)));
        }
        case AggregationMethod::prob_mean: {
            for (double q : qs) logit(q); // range check
            return clip_posterior(mean(qs));
        }
        case AggregationMethod::hard_vote: {
            double votes = 0.0;
            for (double q : qs) {
                logit(q); // range check
                if (q >= 0.5) votes += 1.0;
            }
            return clip_posterior(votes / static_cast<double>(qs.size()));
        }
    }
    throw DomainError("unknown aggregation method");
}

double reduce_windows(std::span<const double> window_qs) {
    if (window_qs.empty()) throw DataError("reduce_windows: slice has no windows");
    if (window_qs.size() == 1) {
        logit(window_qs[0]); // range check
        return window_qs[0];
    }
    return clip_posterior(sigmoid(mean(logits_of(window_qs))));
}

double reduce_slices(std::span<const double> slice_confidences, AggregationMethod method) {
    if (slice_confidences.empty()) throw DataError("reduce_slices: no slice confidences");
    const bool logit_scale =
        method == AggregationMethod::logit_mean || method == AggregationMethod::logit_sum;
    if (slice_confidences.size() == 1) {
        logit(slice_confidences[0]); // range check
        return slice_confidences[0];
    }
    if (logit_scale) return clip_posterior(sigmoid(mean(logits_of(slice_confidences))));
    for (double c : slice_confidences) logit(c); // range check
    return clip_posterior(mean(slice_confidences));
}

double sequence_confidence(const std::vector<std::vector<std::vector<double>>>& posteriors,
                           AggregationMethod method) {
    if (posteriors.empty()) throw DataError("sequence_confidence: no slices");
    std::vector<double> slice_conf;
    slice_conf.reserve(posteriors.size());
    for (std::size_t t = 0; t < posteriors.size(); ++t) {
        const auto& members = posteriors[t];
        if (members.empty())
            throw DataError("sequence_confidence: slice " + std::to_string(t) + " has no members");
        std::vector<double> member_q;
        member_q.reserve(members.size());
        for (const auto& window_qs : members) {
            if (window_qs.empty())
                throw DataError("sequence_confidence: slice " + std::to_string(t) +
                                " has a member with no windows");
            member_q.push_back(reduce_windows(window_qs));
        }
        slice_conf.push_back(aggregate_slice(member_q, method));
    }
    return reduce_slices(slice_conf, method);
}

double combined_log_odds(std::span<const double> logits, const ClassPrior& prior) {
    for (double l : logits)
        if (!std::isfinite(l)) throw DomainError("combined_log_odds: non-finite logit");
    return prior.b + pairwise_sum(logits);
}

} // namespace hydra
