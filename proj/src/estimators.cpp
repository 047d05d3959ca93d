#include "etz/estimators.hpp"

#include "etz/error.hpp"
#include "etz/rng.hpp"

#include <cmath>
#include <string>

namespace etz {
namespace {

struct MeanSe {
    double mean;
    double se;
};

// Two-pass mean and standard error of the mean.
template <class Get>
MeanSe mean_se(std::size_t n, Get get) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += get(i);
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = get(i) - mean;
        ss += d * d;
    }
    const double var = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

void check_direction(int direction) {
    if (direction != 1 && direction != -1) {
        throw Error(ErrorCode::invalid_argument, "direction must be +1 or -1");
    }
}

void check_offset(double c) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
        throw Error(ErrorCode::invalid_argument, "c offset must be finite and >= 0");
    }
}

const LineFit& need(const std::optional<LineFit>& line, const char* name) {
    if (!line) {
        throw Error(ErrorCode::invalid_argument, std::string("model '") + name + "' is not fitted");
    }
    return *line;
}

struct EvalPoint {
    double c;
    int direction;
};

}  // namespace

OutcomeModelParams OutcomeModelParams::parallel_model(double intercept, double effect_rx,
                                                      double effect_c, double slope,
                                                      double residual_var) {
    OutcomeModelParams p{intercept, effect_rx, effect_c, slope, slope, residual_var, true};
    p.validate();
    return p;
}

OutcomeModelParams OutcomeModelParams::targeted_model(double intercept, double effect_rx,
                                                      double effect_c, double slope_rx,
                                                      double slope_c, double residual_var) {
    OutcomeModelParams p{intercept, effect_rx, effect_c, slope_rx, slope_c, residual_var, false};
    p.validate();
    return p;
}

void OutcomeModelParams::validate() const {
    for (double v : {intercept, effect_rx, effect_c, slope_rx, slope_c, residual_var}) {
        if (!std::isfinite(v)) throw Error(ErrorCode::non_finite, "model parameter not finite");
    }
    if (residual_var < 0.0) throw Error(ErrorCode::invalid_argument, "residual_var must be >= 0");
    if (parallel && slope_rx != slope_c) {
        throw Error(ErrorCode::invalid_argument, "parallel model requires slope_rx == slope_c");
    }
}

double attenuation_factor(double var_z, double var_e_biomarker) {
    if (!std::isfinite(var_z) || !std::isfinite(var_e_biomarker) || var_z < 0.0 ||
        var_e_biomarker < 0.0) {
        throw Error(ErrorCode::invalid_argument, "variances must be finite and >= 0");
    }
    if (var_z + var_e_biomarker <= 0.0) {
        throw Error(ErrorCode::invalid_argument, "var_z and var_e_biomarker are both zero");
    }
    return var_z / (var_z + var_e_biomarker);
}

LineFit fit_arm_regression(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw Error(ErrorCode::invalid_argument, "predictor and outcome lengths differ");
    }
    if (x.size() < 3) throw Error(ErrorCode::invalid_argument, "regression needs >= 3 pairs");
    kernels::PairAccumulator acc;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
            throw Error(ErrorCode::non_finite, "regression input not finite");
        }
        acc.push(x[i], y[i]);
    }
    if (!(acc.sxx > 0.0)) {
        throw Error(ErrorCode::degenerate_predictor, "predictor has zero variance");
    }
    const double slope = acc.sxy / acc.sxx;
    return {acc.mean_y - slope * acc.mean_x, slope};
}

LineFit attenuated_line(const LineFit& true_line, double mean_z, double lambda) noexcept {
    const double slope = lambda * true_line.slope;
    return {true_line.predict(mean_z) - slope * mean_z, slope};
}

double population_efficacy(const OutcomeModelParams& model, double mean_z) noexcept {
    return model.true_line_rx().predict(mean_z) - model.true_line_c().predict(mean_z);
}

double control_side_bias(const OutcomeModelParams& model, double lambda, double c,
                         int direction) {
    check_direction(direction);
    check_offset(c);
    return direction * c * (model.slope_rx - lambda * model.slope_c);
}

double equipoise_bias(const OutcomeModelParams& model, double lambda, double c, int direction) {
    check_direction(direction);
    check_offset(c);
    return direction * (c / 2.0) *
           ((model.slope_rx - lambda * model.slope_c) + (lambda * model.slope_rx - model.slope_c));
}

double control_side_estimate(const FittedModels& models, double eval_point) {
    return need(models.rx_true, "rx_true").predict(eval_point) -
           need(models.c_on_b, "c_on_b").predict(eval_point);
}

double equipoise_estimate(const FittedModels& models, double eval_point) {
    const double rx_side = need(models.rx_true, "rx_true").predict(eval_point) -
                           need(models.c_on_b, "c_on_b").predict(eval_point);
    const double c_side = need(models.rx_on_b, "rx_on_b").predict(eval_point) -
                          need(models.c_true, "c_true").predict(eval_point);
    return 0.5 * (rx_side + c_side);
}

BiasStudy mc_bias_study(const SimConfig& cfg, const OutcomeModelParams& model,
                        const std::vector<double>& c_grid, std::size_t replicates,
                        Execution exec) {
    cfg.validate();
    model.validate();
    if (replicates < 100) throw Error(ErrorCode::invalid_argument, "replicates must be >= 100");
    if (cfg.n_subjects % 2 != 0) {
        throw Error(ErrorCode::unequal_arms,
                    "the equipoise average assumes equal arms; n_subjects must be even");
    }
    if (cfg.n_subjects < 6) {
        throw Error(ErrorCode::invalid_argument, "n_subjects must be >= 6 (3 per arm)");
    }
    if (c_grid.empty()) throw Error(ErrorCode::invalid_argument, "c grid is empty");

    std::vector<EvalPoint> points;
    for (const double c : c_grid) {
        check_offset(c);
        points.push_back({c, +1});
        if (c > 0.0) points.push_back({c, -1});
    }

    BiasStudy study;
    study.lambda = attenuation_factor(cfg.var_z, cfg.var_e_biomarker);
    study.population_efficacy = population_efficacy(model, cfg.alpha_z);

    const std::size_t half = cfg.n_subjects / 2;
    const double sd_z = std::sqrt(cfg.var_z);
    const double sd_b = std::sqrt(cfg.var_e_biomarker);
    const double sd_res = std::sqrt(model.residual_var);
    const LineFit rx_line = model.true_line_rx();
    const LineFit c_line = model.true_line_c();

    study.replicates = kernels::map_indexed(
        replicates,
        [&](std::size_t r) {
            std::vector<double> rx_z(half), rx_b(half), rx_y(half);
            std::vector<double> c_z(half), c_b(half), c_y(half);
            for (std::size_t i = 0; i < cfg.n_subjects; ++i) {
                rng::SplitMix64 gen(cfg.seed, rng::Domain::bias_study, r, i);
                const double z = cfg.alpha_z + sd_z * rng::standard_normal(gen);
                const double b = z + sd_b * rng::standard_normal(gen);
                const double eps = sd_res * rng::standard_normal(gen);
                // Subjects are exchangeable draws, so a fixed half split is a
                // balanced random allocation.
                if (i < half) {
                    rx_z[i] = z;
                    rx_b[i] = b;
                    rx_y[i] = rx_line.predict(z) + eps;
                } else {
                    c_z[i - half] = z;
                    c_b[i - half] = b;
                    c_y[i - half] = c_line.predict(z) + eps;
                }
            }
            FittedModels fits;
            fits.rx_true = fit_arm_regression(rx_z, rx_y);
            fits.c_true = fit_arm_regression(c_z, c_y);
            fits.rx_on_b = fit_arm_regression(rx_b, rx_y);
            fits.c_on_b = fit_arm_regression(c_b, c_y);

            ReplicateEstimate est;
            est.replicate = r;
            est.slope_rx_on_z = fits.rx_true->slope;
            est.slope_c_on_z = fits.c_true->slope;
            est.slope_rx_on_b = fits.rx_on_b->slope;
            est.slope_c_on_b = fits.c_on_b->slope;
            for (const auto& p : points) {
                const double x = cfg.alpha_z + p.direction * p.c;
                est.control_side_bias.push_back(control_side_estimate(fits, x) -
                                                study.population_efficacy);
                est.equipoise_bias.push_back(equipoise_estimate(fits, x) -
                                             study.population_efficacy);
            }
            return est;
        },
        exec);

    const auto& reps = study.replicates;
    const auto slope_c = mean_se(replicates, [&](std::size_t r) { return reps[r].slope_c_on_b; });
    const auto slope_rx = mean_se(replicates, [&](std::size_t r) { return reps[r].slope_rx_on_b; });
    study.mean_slope_c_on_b = slope_c.mean;
    study.mean_slope_c_on_b_se = slope_c.se;
    study.mean_slope_rx_on_b = slope_rx.mean;
    study.mean_slope_rx_on_b_se = slope_rx.se;

    for (std::size_t k = 0; k < points.size(); ++k) {
        const auto& p = points[k];
        BiasReport rep;
        rep.c_offset = p.c;
        rep.direction = p.direction;
        rep.eval_point = cfg.alpha_z + p.direction * p.c;
        rep.lambda = study.lambda;
        rep.bias_control_side = control_side_bias(model, study.lambda, p.c, p.direction);
        rep.bias_equipoise = equipoise_bias(model, study.lambda, p.c, p.direction);
        const auto cs = mean_se(replicates, [&](std::size_t r) { return reps[r].control_side_bias[k]; });
        const auto eq = mean_se(replicates, [&](std::size_t r) { return reps[r].equipoise_bias[k]; });
        rep.mc_control_side = cs.mean;
        rep.mc_control_side_se = cs.se;
        rep.mc_equipoise = eq.mean;
        rep.mc_equipoise_se = eq.se;
        study.reports.push_back(rep);
    }
    return study;
}

}  // namespace etz
