#pragma once

#include "hydra/aggregate.hpp"
#include "hydra/sequences.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace hydra {

enum class ObjectiveKind { logistic, mse };
enum class PenaltyKind { none, l2 };

const char* objective_name(ObjectiveKind k); // logistic / mse
ObjectiveKind parse_objective(const std::string& name);

struct ObjectiveSpec {
    ObjectiveKind kind = ObjectiveKind::logistic;
    double lambda = 0.0;
    PenaltyKind penalty = PenaltyKind::none;
};

struct SolverOptions {
    int max_iters = 50000;
    double tol = 1e-7;    // relative duality-gap target
    int multi_starts = 8; // extra random starts, used by the non-concave mse objective
    std::uint64_t seed = 0;
    bool use_projected_gradient = false; // fallback algorithm
};

struct SolverReport {
    std::string algorithm;
    int iterations = 0;
    double gap = 0.0; // final Frank-Wolfe duality gap
    bool converged = false;
    std::string warning; // iteration cap / stall note, empty otherwise
};

// A point on the probability simplex over sequence ids, plus how we got it.
struct ScheduleWeights {
    std::vector<std::uint64_t> sequence_ids; // column order of the matrix solved
    std::vector<double> x;                   // x_s >= 0, sums to exactly 1
    double objective_value = 0.0;            // F(x) recomputed at the returned x
    SolverReport report;
};

// F(x): logistic log-likelihood of labels under score x.p_i, or negative
// squared error of sigmoid(x.p_i), each minus lambda * penalty. Overflow-safe
// for any finite scores.
double objective_value(std::span<const double> x, const SequenceConfidenceMatrix& P,
                       const ObjectiveSpec& spec);
void objective_gradient(std::span<const double> x, const SequenceConfidenceMatrix& P,
                        const ObjectiveSpec& spec, std::span<double> grad);

// Maximizes F over the simplex. Default algorithm is pairwise Frank-Wolfe
// with exact line search; the duality gap max_s g_s - <g,x> certifies
// optimality for the concave logistic objective. The mse objective is
// non-concave, so it restarts from multi_starts points and reports the best
// local optimum. Deterministic given identical inputs and options.
ScheduleWeights solve_schedule(const SequenceConfidenceMatrix& P, const ObjectiveSpec& spec,
                               const SolverOptions& opt);

// E_{s~x}[m(s)] — plain dot product with the deterministic reduction order.
double expected_metric(std::span<const double> x, std::span<const double> metric_values);

// Inverse-CDF draw over positions of x; and the deterministic alternative.
std::size_t sample_sequence(std::span<const double> x, std::mt19937_64& g);
std::size_t argmax_sequence(std::span<const double> x); // ties -> lowest position

// Schedule persistence: metadata header, then one row per sequence
// (sequence id, '|'-joined slot unit ids, weight), descending weight.
struct ScheduleEntry {
    std::uint64_t sequence_id = 0;
    std::vector<int> slot_unit_ids;
    double weight = 0.0;
};

struct ScheduleFile {
    std::string objective;
    std::string aggregation;
    int sequence_length = 0;
    int num_units = 0;
    double objective_value = 0.0;
    std::vector<ScheduleEntry> entries;
};

ScheduleFile make_schedule_file(const ScheduleWeights& w,
                                const std::vector<DetectorSequence>& sequences,
                                const std::vector<DetectorUnit>& units, const ObjectiveSpec& spec,
                                AggregationMethod method);
std::string serialize_schedule_csv(const ScheduleFile& f);
ScheduleFile parse_schedule_csv(const std::string& text);
void save_schedule_csv(const ScheduleFile& f, const std::string& path);
ScheduleFile load_schedule_csv(const std::string& path);

} // namespace hydra
