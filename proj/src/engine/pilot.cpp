#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>

#include "linetherm/engine.hpp"
#include "linetherm/errors.hpp"
#include "parallel.hpp"

namespace linetherm::engine {

namespace {

constexpr double level_ratio = 0.1353352832366127;  // e^-2
constexpr int provisional_retrials = 7;             // round(e^2)

// Weight of a path segment above x: 1 / prod_{i <= j+1} n_i, j = #{intermediate T^i < x}.
double weight_at(const ThresholdLadder& l, double x) {
    double prod = 1.0;
    for (std::size_t i = 0; i < l.levels(); ++i) {
        prod *= l.retrials[i];
        if (i + 1 >= l.levels() || !(l.thresholds[i] < x)) break;
    }
    return 1.0 / prod;
}

/// Exceedance profile with O(log n) queries: #(start < x <= end) = #(start < x) - #(end < x).
class Profile {
public:
    Profile(const std::vector<PeakRecord>& peaks, const ThresholdLadder& ladder, std::int64_t trials)
        : ladder_(&ladder), trials_(static_cast<double>(trials)) {
        for (const PeakRecord& r : peaks) {
            starts_.push_back(r.start);
            ends_.push_back(r.end);
        }
        std::sort(starts_.begin(), starts_.end());
        std::sort(ends_.begin(), ends_.end());
    }

    std::int64_t support(double x) const {
        const auto below_start = std::lower_bound(starts_.begin(), starts_.end(), x) - starts_.begin();
        const auto below_end = std::lower_bound(ends_.begin(), ends_.end(), x) - ends_.begin();
        return below_start - below_end;
    }

    double operator()(double x) const {
        return weight_at(*ladder_, x) * static_cast<double>(support(x)) / trials_;
    }

    /// Sorted distinct end values strictly inside (lo, hi).
    std::vector<double> candidates(double lo, double hi) const {
        std::vector<double> out;
        for (double e : ends_) {
            if (e > lo && e < hi && (out.empty() || e > out.back())) out.push_back(e);
        }
        return out;
    }

    double max_end() const { return ends_.empty() ? -std::numeric_limits<double>::infinity() : ends_.back(); }

private:
    const ThresholdLadder* ladder_;
    double trials_;
    std::vector<double> starts_, ends_;
};

ThresholdLadder provisional(std::size_t line, double floor, const std::vector<double>& inter, double target) {
    ThresholdLadder l;
    l.line = line;
    l.floor = floor;
    l.thresholds = inter;
    l.thresholds.push_back(target);
    l.retrials.assign(l.thresholds.size(), provisional_retrials);
    l.retrials.front() = 1;
    return l;
}

struct Stage {
    std::vector<PeakRecord> peaks;
    std::int64_t trials = 0;
};

Stage run_stage(const Model& model, const ThresholdLadder& ladder, const PilotOptions& opt, std::uint64_t seed) {
    const int workers = std::max(1, opt.threads);
    std::vector<std::unique_ptr<TrialRunner>> runners;
    for (int w = 0; w < workers; ++w) runners.push_back(std::make_unique<TrialRunner>(model, ladder, opt.mode));
    std::vector<std::vector<PeakRecord>> per_trial(static_cast<std::size_t>(opt.trials));
    std::vector<unsigned char> aborted(static_cast<std::size_t>(opt.trials), 0);
    detail::parallel_for(workers, 0, opt.trials, [&](int w, std::int64_t k) {
        const auto i = static_cast<std::size_t>(k);
        aborted[i] = runners[static_cast<std::size_t>(w)]->run(seed, k, &per_trial[i]).aborted ? 1 : 0;
    });
    Stage s;
    for (std::size_t i = 0; i < per_trial.size(); ++i) {
        if (aborted[i]) continue;
        ++s.trials;
        s.peaks.insert(s.peaks.end(), per_trial[i].begin(), per_trial[i].end());
    }
    return s;
}

// Smallest candidate above `lo` whose profile value has dropped to `goal`.
std::optional<double> quantile(const Profile& prof, const std::vector<double>& cands, double lo, double goal) {
    for (double x : cands) {
        if (x > lo && prof(x) <= goal) return x;
    }
    return std::nullopt;
}

}  // namespace

double exceedance_from_peaks(std::span<const PeakRecord> peaks, const ThresholdLadder& ladder,
                             std::int64_t trials, double x) {
    if (trials <= 0) return 0.0;
    std::int64_t n = 0;
    for (const PeakRecord& r : peaks) n += (r.start < x && x <= r.end) ? 1 : 0;
    return weight_at(ladder, x) * static_cast<double>(n) / static_cast<double>(trials);
}

std::vector<int> retrials_for(std::span<const double> p) {
    std::vector<int> n(p.size(), 1);
    for (std::size_t k = 1; k < p.size(); ++k) {
        const double next = k + 1 < p.size() ? p[k + 1] : 1.0;
        const double ideal = std::sqrt(1.0 / (p[k] * next));
        n[k] = std::max(2, static_cast<int>(std::lround(ideal)));
    }
    return n;
}

ThresholdLadder pilot_run(const Model& model, std::size_t line, double target, const PilotOptions& opt) {
    if (opt.trials < 100) throw std::invalid_argument("pilot needs at least 100 trials");
    model.validate();

    TrialRunner probe(model, ThresholdLadder::crude(line, target), opt.mode);
    const double x0 = probe.initial_value();
    if (!(x0 < target)) throw LadderMismatch("initial monitored value already reaches the target");

    std::vector<double> inter;
    ThresholdLadder ladder;
    Stage stage;
    for (int k = 0; k < std::max(1, opt.max_stages); ++k) {
        ladder = provisional(line, x0, inter, target);
        stage = run_stage(model, ladder, opt, opt.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(k));
        const Profile prof(stage.peaks, ladder, stage.trials);
        if (k == 0 && !(prof.max_end() > x0 + opt.margin)) {
            throw InsufficientSignal("no pilot trajectory rose more than " + std::to_string(opt.margin) +
                                     " above the initial value");
        }
        if (prof.support(target) >= opt.min_count) break;

        const double base = inter.empty() ? x0 : inter.back();
        const double p_base = inter.empty() ? 1.0 : prof(base);
        const std::vector<double> cands = prof.candidates(base, target);
        std::optional<double> next = quantile(prof, cands, base, p_base * level_ratio);
        if (next && prof.support(*next) < opt.min_count) next.reset();
        if (!next) {
            // fall back to the highest point that still has enough records beyond it
            for (auto it = cands.rbegin(); it != cands.rend(); ++it) {
                if (prof.support(*it) >= opt.min_count) {
                    next = *it;
                    break;
                }
            }
        }
        if (!next) break;
        inter.push_back(*next);
    }

    const Profile prof(stage.peaks, ladder, stage.trials);
    double gamma = prof(target);
    if (!(gamma > 0.0)) {
        const double top = inter.empty() ? x0 : inter.back();
        gamma = (inter.empty() ? 1.0 : prof(top)) * level_ratio * level_ratio;
        gamma = std::max(gamma, 1e-300);
    }
    const int m = gamma >= 1.0 ? 1 : std::max(1, static_cast<int>(std::ceil(std::log(1.0 / gamma) / 2.0)));

    ThresholdLadder out;
    out.line = line;
    out.floor = x0;
    const double per_level = std::pow(gamma, 1.0 / m);
    const std::vector<double> cands = prof.candidates(x0, target);
    double lo = x0;
    for (int i = 1; i < m; ++i) {
        std::optional<double> x = quantile(prof, cands, lo, std::pow(per_level, i));
        if (!x) break;
        out.thresholds.push_back(*x);
        lo = *x;
        // An atom in the profile can overshoot several goals at once; skip
        // them rather than stacking thresholds a hair apart.
        while (i + 1 < m && prof(*x) <= std::pow(per_level, i + 1)) ++i;
    }
    out.thresholds.push_back(target);

    double prev = 1.0;
    for (double x : out.thresholds) {
        const double px = x == target ? gamma : prof(x);
        out.level_probabilities.push_back(std::clamp(prev > 0.0 ? px / prev : 1.0, 1e-12, 1.0));
        prev = px;
    }
    out.retrials = retrials_for(out.level_probabilities);
    out.validate();
    return out;
}

std::vector<EstimationResult> steady_state_exceedance_estimate(const Model& model, std::size_t line,
                                                               std::span<const double> thresholds,
                                                               const EstimatorOptions& options,
                                                               const PilotOptions& pilot) {
    EstimatorOptions est = options;
    est.mode = MonitorMode::steady_state_current;
    PilotOptions pil = pilot;
    pil.mode = MonitorMode::steady_state_current;
    std::vector<EstimationResult> out;
    for (double t : thresholds) {
        ThresholdLadder ladder;
        try {
            ladder = pilot_run(model, line, t, pil);
        } catch (const LadderMismatch&) {
            ladder = ThresholdLadder::crude(line, t);
        } catch (const InsufficientSignal&) {
            ladder = ThresholdLadder::crude(line, t);
        }
        out.push_back(restart_estimate(model, ladder, est));
    }
    return out;
}

}  // namespace linetherm::engine
