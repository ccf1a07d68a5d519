#include "hydra/scheduler.hpp"

#include "hydra/config.hpp"
#include "hydra/error.hpp"
#include "hydra/numeric.hpp"
#include "hydra/rng.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace hydra {

const char* objective_name(ObjectiveKind k) {
    switch (k) {
        case ObjectiveKind::logistic: return "logistic";
        case ObjectiveKind::mse: return "mse";
    }
    throw DomainError("unknown objective kind");
}

ObjectiveKind parse_objective(const std::string& name) {
    if (name == "logistic") return ObjectiveKind::logistic;
    if (name == "mse") return ObjectiveKind::mse;
    throw ConfigError("unknown objective '" + name + "' (expected logistic or mse)");
}

static double log1p_exp(double z) {
    return z > 30.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

namespace {

// Scratch-carrying evaluation of F, its gradient, and line searches. One
// instance per solve; everything is sequential and reduction order is fixed
// (pairwise sums), so results do not depend on scheduling.
struct Workspace {
    const SequenceConfidenceMatrix& P;
    ObjectiveSpec spec;
    std::size_t n, S;
    std::vector<double> row_terms;  // n scratch
    std::vector<double> col_terms;  // S scratch
    std::vector<double> weights;    // per-sample dF/dz
    std::vector<double> delta;      // line-search direction in score space
    std::vector<double> ztmp;
    std::vector<double> zeval;

    Workspace(const SequenceConfidenceMatrix& p, const ObjectiveSpec& sp)
        : P(p), spec(sp), n(p.num_samples()), S(p.num_sequences()), row_terms(n), col_terms(S),
          weights(n), delta(n), ztmp(n), zeval(n) {}

    double at(std::size_t i, std::size_t s) const { return P.values[i * S + s]; }

    bool penalized() const { return spec.lambda != 0.0 && spec.penalty == PenaltyKind::l2; }

    void scores(std::span<const double> x, std::vector<double>& z) {
        z.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t s = 0; s < S; ++s) col_terms[s] = x[s] * at(i, s);
            z[i] = pairwise_sum(col_terms);
        }
    }

    // data part of F (no penalty)
    double data_value(std::span<const double> z) {
        for (std::size_t i = 0; i < n; ++i) {
            const double zi = z[i];
            if (spec.kind == ObjectiveKind::logistic) {
                row_terms[i] = P.labels[i] * zi - log1p_exp(zi);
            } else {
                const double d = sigmoid(zi) - P.labels[i];
                row_terms[i] = -d * d;
            }
        }
        return pairwise_sum(row_terms);
    }

    double penalty(std::span<const double> x) {
        if (!penalized()) return 0.0;
        for (std::size_t s = 0; s < S; ++s) col_terms[s] = x[s] * x[s];
        return spec.lambda * pairwise_sum(col_terms);
    }

    double value(std::span<const double> z, std::span<const double> x) {
        return data_value(z) - penalty(x);
    }

    double score_weight(double zi, int yi) const {
        const double s = sigmoid(zi);
        if (spec.kind == ObjectiveKind::logistic) return yi - s;
        return -2.0 * (s - yi) * s * (1.0 - s);
    }

    void gradient(std::span<const double> z, std::span<const double> x, std::vector<double>& g) {
        g.resize(S);
        for (std::size_t i = 0; i < n; ++i) weights[i] = score_weight(z[i], P.labels[i]);
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t i = 0; i < n; ++i) row_terms[i] = weights[i] * at(i, s);
            g[s] = pairwise_sum(row_terms);
            if (penalized()) g[s] -= 2.0 * spec.lambda * x[s];
        }
    }

    // Maximize psi(gamma) = data_value(z + gamma*delta) - pen_delta(gamma)
    // over [0, gamma_max]. pen_deriv is d(pen_delta)/dgamma. The logistic
    // objective is concave along any line, so bisection on psi' is exact;
    // mse uses a grid plus ternary refinement and never returns a
    // psi-decreasing step.
    double line_search(double gamma_max, const std::function<double(double)>& pen_delta,
                       const std::function<double(double)>& pen_deriv) {
        if (!(gamma_max > 0.0)) return 0.0;
        auto dpsi = [&](double gamma) {
            for (std::size_t i = 0; i < n; ++i)
                row_terms[i] = score_weight(ztmp[i] + gamma * delta[i], P.labels[i]) * delta[i];
            return pairwise_sum(row_terms) - pen_deriv(gamma);
        };
        auto psi = [&](double gamma) {
            for (std::size_t i = 0; i < n; ++i) zeval[i] = ztmp[i] + gamma * delta[i];
            return data_value(zeval) - pen_delta(gamma);
        };
        if (spec.kind == ObjectiveKind::logistic) {
            if (dpsi(0.0) <= 0.0) return 0.0;
            if (dpsi(gamma_max) >= 0.0) return gamma_max;
            double lo = 0.0, hi = gamma_max;
            for (int it = 0; it < 64; ++it) {
                const double mid = 0.5 * (lo + hi);
                (dpsi(mid) > 0.0 ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        }
        // mse: coarse grid, refine around the best point
        const int grid = 32;
        double best_gamma = 0.0, best_val = psi(0.0);
        for (int i = 1; i <= grid; ++i) {
            const double gamma = gamma_max * i / grid;
            const double v = psi(gamma);
            if (v > best_val) {
                best_val = v;
                best_gamma = gamma;
            }
        }
        double lo = std::max(0.0, best_gamma - gamma_max / grid);
        double hi = std::min(gamma_max, best_gamma + gamma_max / grid);
        for (int it = 0; it < 80; ++it) {
            const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
            if (psi(m1) < psi(m2))
                lo = m1;
            else
                hi = m2;
        }
        const double refined = 0.5 * (lo + hi);
        if (psi(refined) > best_val) return refined;
        return best_gamma;
    }
};

struct RunResult {
    std::vector<double> x;
    double value = 0.0;
    SolverReport report;
};

RunResult run_pairwise_frank_wolfe(Workspace& ws, const SolverOptions& opt,
                                   std::vector<double> x) {
    RunResult res;
    res.report.algorithm = "pairwise-frank-wolfe";
    std::vector<double> z, g;
    ws.scores(x, z);
    int moves_since_refresh = 0;

    for (int iter = 1; iter <= opt.max_iters; ++iter) {
        res.report.iterations = iter;
        ws.gradient(z, x, g);

        std::size_t j = 0;
        for (std::size_t s = 1; s < ws.S; ++s)
            if (g[s] > g[j]) j = s; // ties keep the lowest sequence id
        for (std::size_t s = 0; s < ws.S; ++s) ws.col_terms[s] = g[s] * x[s];
        const double dot_gx = pairwise_sum(ws.col_terms);
        const double F = ws.value(z, x);
        const double gap = g[j] - dot_gx;
        res.report.gap = gap;
        if (gap <= opt.tol * (1.0 + std::abs(F))) {
            res.report.converged = true;
            break;
        }

        bool moved = false;
        // pairwise step: shift mass from the worst supported vertex to the best
        std::size_t k = ws.S;
        for (std::size_t s = 0; s < ws.S; ++s)
            if (x[s] > 0.0 && (k == ws.S || g[s] < g[k])) k = s;
        if (k < ws.S && k != j && g[j] > g[k]) {
            for (std::size_t i = 0; i < ws.n; ++i) {
                ws.delta[i] = ws.at(i, j) - ws.at(i, k);
                ws.ztmp[i] = z[i];
            }
            const double xj = x[j], xk = x[k], lambda = ws.spec.lambda;
            const bool pen = ws.penalized();
            auto pen_delta = [=](double gamma) {
                if (!pen) return 0.0;
                return lambda *
                       ((xj + gamma) * (xj + gamma) + (xk - gamma) * (xk - gamma) - xj * xj - xk * xk);
            };
            auto pen_deriv = [=](double gamma) {
                return pen ? 2.0 * lambda * (xj - xk + 2.0 * gamma) : 0.0;
            };
            const double gamma = ws.line_search(xk, pen_delta, pen_deriv);
            if (gamma > 0.0) {
                x[j] += gamma;
                x[k] = gamma >= xk ? 0.0 : xk - gamma;
                for (std::size_t i = 0; i < ws.n; ++i) z[i] += gamma * ws.delta[i];
                moved = true;
            }
        }
        if (!moved) {
            // classic step toward the best vertex
            for (std::size_t i = 0; i < ws.n; ++i) {
                ws.delta[i] = ws.at(i, j) - z[i];
                ws.ztmp[i] = z[i];
            }
            double xnorm2 = 0.0;
            if (ws.penalized()) {
                for (std::size_t s = 0; s < ws.S; ++s) ws.col_terms[s] = x[s] * x[s];
                xnorm2 = pairwise_sum(ws.col_terms);
            }
            const double xj = x[j], lambda = ws.spec.lambda;
            const bool pen = ws.penalized();
            auto pen_delta = [=](double gamma) {
                if (!pen) return 0.0;
                const double nrm = (1.0 - gamma) * (1.0 - gamma) * xnorm2 +
                                   2.0 * gamma * (1.0 - gamma) * xj + gamma * gamma;
                return lambda * (nrm - xnorm2);
            };
            auto pen_deriv = [=](double gamma) {
                if (!pen) return 0.0;
                return lambda * (-2.0 * (1.0 - gamma) * xnorm2 + 2.0 * (1.0 - 2.0 * gamma) * xj +
                                 2.0 * gamma);
            };
            const double gamma = ws.line_search(1.0, pen_delta, pen_deriv);
            if (gamma > 0.0) {
                for (std::size_t s = 0; s < ws.S; ++s) x[s] *= 1.0 - gamma;
                x[j] += gamma;
                for (std::size_t i = 0; i < ws.n; ++i) z[i] += gamma * ws.delta[i];
                moved = true;
            }
        }
        if (!moved) {
            res.report.warning = "line search stalled before reaching the gap target";
            break;
        }
        if (++moves_since_refresh >= 512) { // kill incremental-score drift
            ws.scores(x, z);
            moves_since_refresh = 0;
        }
    }
    if (!res.report.converged && res.report.warning.empty() &&
        res.report.iterations >= opt.max_iters)
        res.report.warning = "iteration cap reached before the duality-gap target";

    ws.scores(x, z);
    res.value = ws.value(z, x);
    res.x = std::move(x);
    return res;
}

std::vector<double> project_to_simplex(std::vector<double> v) {
    std::vector<double> u = v;
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0, tau = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cum += u[k];
        const double t = (cum - 1.0) / static_cast<double>(k + 1);
        if (u[k] - t > 0.0) tau = t;
    }
    for (auto& s : v) s = std::max(s - tau, 0.0);
    return v;
}

RunResult run_projected_gradient(Workspace& ws, const SolverOptions& opt, std::vector<double> x) {
    RunResult res;
    res.report.algorithm = "projected-gradient";
    std::vector<double> z, g, zt;
    ws.scores(x, z);

    for (int iter = 1; iter <= opt.max_iters; ++iter) {
        res.report.iterations = iter;
        ws.gradient(z, x, g);
        std::size_t j = 0;
        for (std::size_t s = 1; s < ws.S; ++s)
            if (g[s] > g[j]) j = s;
        for (std::size_t s = 0; s < ws.S; ++s) ws.col_terms[s] = g[s] * x[s];
        const double F = ws.value(z, x);
        const double gap = g[j] - pairwise_sum(ws.col_terms);
        res.report.gap = gap;
        if (gap <= opt.tol * (1.0 + std::abs(F))) {
            res.report.converged = true;
            break;
        }
        bool accepted = false;
        std::vector<double> xt(ws.S);
        for (double eta = 1.0; eta >= 1e-18; eta /= 2.0) {
            for (std::size_t s = 0; s < ws.S; ++s) xt[s] = x[s] + eta * g[s];
            xt = project_to_simplex(std::move(xt));
            ws.scores(xt, zt);
            if (ws.value(zt, xt) > F) {
                x = xt;
                z = zt;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            res.report.warning = "line search stalled before reaching the gap target";
            break;
        }
    }
    if (!res.report.converged && res.report.warning.empty() &&
        res.report.iterations >= opt.max_iters)
        res.report.warning = "iteration cap reached before the duality-gap target";

    ws.scores(x, z);
    res.value = ws.value(z, x);
    res.x = std::move(x);
    return res;
}

} // namespace

double objective_value(std::span<const double> x, const SequenceConfidenceMatrix& P,
                       const ObjectiveSpec& spec) {
    if (x.size() != P.num_sequences())
        throw DataError("objective: weight vector length " + std::to_string(x.size()) +
                        " does not match " + std::to_string(P.num_sequences()) + " sequences");
    Workspace ws(P, spec);
    std::vector<double> z;
    ws.scores(x, z);
    return ws.value(z, x);
}

void objective_gradient(std::span<const double> x, const SequenceConfidenceMatrix& P,
                        const ObjectiveSpec& spec, std::span<double> grad) {
    if (x.size() != P.num_sequences() || grad.size() != P.num_sequences())
        throw DataError("gradient: size mismatch with the confidence matrix");
    Workspace ws(P, spec);
    std::vector<double> z, g;
    ws.scores(x, z);
    ws.gradient(z, x, g);
    std::copy(g.begin(), g.end(), grad.begin());
}

ScheduleWeights solve_schedule(const SequenceConfidenceMatrix& P, const ObjectiveSpec& spec,
                               const SolverOptions& opt) {
    const std::size_t n = P.num_samples(), S = P.num_sequences();
    if (n == 0 || S == 0) throw DataError("solver: empty confidence matrix");
    if (P.values.size() != n * S) throw DataError("solver: malformed confidence matrix");
    for (double v : P.values)
        if (!std::isfinite(v)) throw DataError("solver: non-finite confidence matrix entry");
    const auto positives = std::count(P.labels.begin(), P.labels.end(), 1);
    if (positives == 0 || static_cast<std::size_t>(positives) == n)
        throw DataError("solver: sequence-training labels are single-class");
    if (!(spec.lambda >= 0.0)) throw ConfigError("solver: lambda must be non-negative");
    if (opt.max_iters < 1 || !(opt.tol > 0.0))
        throw ConfigError("solver: max_iters must be positive and tol > 0");

    std::vector<std::vector<double>> starts;
    starts.emplace_back(S, 1.0 / static_cast<double>(S));
    if (spec.kind == ObjectiveKind::mse) {
        for (int k = 1; k < std::max(1, opt.multi_starts); ++k) {
            auto g = rng::make_stream(opt.seed, "solver.start", static_cast<std::uint64_t>(k));
            std::vector<double> x(S);
            double total = 0.0;
            for (auto& v : x) {
                v = -std::log(1.0 - rng::uniform01(g)); // Exp(1) → uniform on the simplex
                total += v;
            }
            for (auto& v : x) v /= total;
            starts.push_back(std::move(x));
        }
    }

    Workspace ws(P, spec);
    RunResult best;
    bool have_best = false;
    for (auto& start : starts) {
        RunResult r = opt.use_projected_gradient ? run_projected_gradient(ws, opt, std::move(start))
                                                 : run_pairwise_frank_wolfe(ws, opt, std::move(start));
        if (!have_best || r.value > best.value) {
            best = std::move(r);
            have_best = true;
        }
    }

    // exact renormalization: non-negative, and pairwise_sum(x) == 1.0
    for (auto& v : best.x) v = std::max(v, 0.0);
    double total = pairwise_sum(best.x);
    if (!(total > 0.0)) throw SolverError("solver returned a zero weight vector");
    for (auto& v : best.x) v /= total;
    for (int attempt = 0; attempt < 4; ++attempt) {
        const double residual = 1.0 - pairwise_sum(best.x);
        if (residual == 0.0) break;
        std::size_t top = 0;
        for (std::size_t s = 1; s < S; ++s)
            if (best.x[s] > best.x[top]) top = s;
        best.x[top] += residual;
    }

    ScheduleWeights w;
    w.sequence_ids = P.sequence_ids;
    w.x = std::move(best.x);
    w.objective_value = objective_value(w.x, P, spec);
    w.report = std::move(best.report);
    return w;
}

double expected_metric(std::span<const double> x, std::span<const double> metric_values) {
    if (x.size() != metric_values.size())
        throw DataError("expected_metric: weights and metric values differ in length");
    std::vector<double> terms(x.size());
    for (std::size_t s = 0; s < x.size(); ++s) terms[s] = x[s] * metric_values[s];
    return pairwise_sum(terms);
}

std::size_t sample_sequence(std::span<const double> x, std::mt19937_64& g) {
    if (x.empty()) throw DomainError("cannot sample from an empty schedule");
    const double u = rng::uniform01(g);
    double cum = 0.0;
    for (std::size_t s = 0; s < x.size(); ++s) {
        cum += x[s];
        if (u < cum) return s;
    }
    for (std::size_t s = x.size(); s-- > 0;)
        if (x[s] > 0.0) return s;
    return x.size() - 1;
}

std::size_t argmax_sequence(std::span<const double> x) {
    if (x.empty()) throw DomainError("cannot pick from an empty schedule");
    std::size_t best = 0;
    for (std::size_t s = 1; s < x.size(); ++s)
        if (x[s] > x[best]) best = s;
    return best;
}

// ---- persistence ------------------------------------------------------------

ScheduleFile make_schedule_file(const ScheduleWeights& w,
                                const std::vector<DetectorSequence>& sequences,
                                const std::vector<DetectorUnit>& units, const ObjectiveSpec& spec,
                                AggregationMethod method) {
    if (w.x.size() != w.sequence_ids.size() || w.x.size() != sequences.size())
        throw DataError("schedule file: weights and sequences differ in length");
    ScheduleFile f;
    f.objective = objective_name(spec.kind);
    f.aggregation = aggregation_name(method);
    f.num_units = static_cast<int>(units.size());
    f.sequence_length = sequences.empty() ? 0 : static_cast<int>(sequences[0].slots.size());
    f.objective_value = w.objective_value;
    f.entries.reserve(w.x.size());
    for (std::size_t s = 0; s < w.x.size(); ++s) {
        if (sequences[s].id != w.sequence_ids[s])
            throw DataError("schedule file: sequence order disagrees with the weight vector");
        ScheduleEntry e;
        e.sequence_id = w.sequence_ids[s];
        e.weight = w.x[s];
        for (int slot : sequences[s].slots) {
            if (slot < 0 || slot >= static_cast<int>(units.size()))
                throw DataError("schedule file: sequence slot outside the unit roster");
            e.slot_unit_ids.push_back(units[static_cast<std::size_t>(slot)].id);
        }
        f.entries.push_back(std::move(e));
    }
    std::stable_sort(f.entries.begin(), f.entries.end(), [](const auto& a, const auto& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        return a.sequence_id < b.sequence_id;
    });
    return f;
}

std::string serialize_schedule_csv(const ScheduleFile& f) {
    std::string out = "hydra-schedule,1," + f.objective + ',' + f.aggregation + ',' +
                      std::to_string(f.sequence_length) + ',' + std::to_string(f.num_units) + ',' +
                      format_double(f.objective_value) + '\n';
    out += "sequence_id,slots,weight\n";
    for (const auto& e : f.entries) {
        out += std::to_string(e.sequence_id) + ',';
        for (std::size_t t = 0; t < e.slot_unit_ids.size(); ++t) {
            if (t > 0) out += '|';
            out += std::to_string(e.slot_unit_ids[t]);
        }
        out += ',' + format_double(e.weight) + '\n';
    }
    return out;
}

static double parse_double_field(const std::string& s, int lineno, const char* what) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw ParseError("schedule file line " + std::to_string(lineno) + ": bad " + what + " '" +
                         s + "'");
    return v;
}

ScheduleFile parse_schedule_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("schedule file: missing header");
    auto hdr = split_csv(line);
    if (hdr.size() != 7 || hdr[0] != "hydra-schedule")
        throw ParseError("schedule file: bad header");
    if (hdr[1] != "1") throw ParseError("schedule file: unsupported version '" + hdr[1] + "'");
    ScheduleFile f;
    f.objective = hdr[2];
    f.aggregation = hdr[3];
    f.sequence_length = static_cast<int>(std::strtol(hdr[4].c_str(), nullptr, 10));
    f.num_units = static_cast<int>(std::strtol(hdr[5].c_str(), nullptr, 10));
    f.objective_value = parse_double_field(hdr[6], 1, "objective value");
    if (f.sequence_length < 1 || f.num_units < 1)
        throw ParseError("schedule file: bad dimensions in header");

    if (!std::getline(in, line) || trim(line) != "sequence_id,slots,weight")
        throw ParseError("schedule file: missing column header");

    int lineno = 2;
    double total = 0.0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() && in.eof()) break;
        const auto fields = split_csv(line);
        if (fields.size() != 3)
            throw ParseError("schedule file line " + std::to_string(lineno) + ": expected 3 fields");
        ScheduleEntry e;
        errno = 0;
        char* end = nullptr;
        e.sequence_id = std::strtoull(fields[0].c_str(), &end, 10);
        if (errno != 0 || end == fields[0].c_str() || *end != '\0')
            throw ParseError("schedule file line " + std::to_string(lineno) + ": bad sequence id");
        std::string tok;
        std::istringstream slots(fields[1]);
        while (std::getline(slots, tok, '|')) {
            errno = 0;
            const long v = std::strtol(tok.c_str(), &end, 10);
            if (errno != 0 || end == tok.c_str() || *end != '\0')
                throw ParseError("schedule file line " + std::to_string(lineno) + ": bad slot id");
            e.slot_unit_ids.push_back(static_cast<int>(v));
        }
        if (static_cast<int>(e.slot_unit_ids.size()) != f.sequence_length)
            throw ParseError("schedule file line " + std::to_string(lineno) +
                             ": slot count disagrees with the header");
        e.weight = parse_double_field(fields[2], lineno, "weight");
        if (!(e.weight >= 0.0))
            throw ParseError("schedule file line " + std::to_string(lineno) + ": negative weight");
        total += e.weight;
        f.entries.push_back(std::move(e));
    }
    if (f.entries.empty()) throw ParseError("schedule file has no entries");
    if (std::abs(total - 1.0) > 1e-9)
        throw ParseError("schedule file: weights sum to " + format_double(total) + ", expected 1");
    return f;
}

void save_schedule_csv(const ScheduleFile& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << serialize_schedule_csv(f);
    if (!out) throw DataError("failed writing '" + path + "'");
}

ScheduleFile load_schedule_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open schedule file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_schedule_csv(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

} // namespace hydra
