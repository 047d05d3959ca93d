#pragma once

// Counterfactual efficacy estimators built on per-arm outcome models, and the
// bias that attenuation causes when a noisy biomarker score B = Z + E^B
// stands in for the intercept Z.
//
// True model, arm a in {Rx, C}:  Ym^a = intercept + effect_a + slope_a Z + eps
// (parallel model: slope_Rx = slope_C). Regressing on B instead of Z shrinks
// the slope by lambda = Var(Z) / (Var(Z) + Var(E^B)); the fitted line still
// passes through the point (E[Z], E[Ym^a]).
//
// Efficacy is evaluated at x = E[Z] +/- c. "Bias" is the estimate minus the
// population efficacy E[Ym^Rx] - E[Ym^C]:
//   control-side  +/- c (slope_Rx - lambda slope_C)
//   equipoise     +/- (c/2) [(slope_Rx - lambda slope_C) + (lambda slope_Rx - slope_C)]

#include "etz/kernels.hpp"
#include "etz/simulation.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace etz {

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;

    double predict(double x) const noexcept { return intercept + slope * x; }
};

struct OutcomeModelParams {
    double intercept = 0.0;
    double effect_rx = -2.0;
    double effect_c = 0.0;
    double slope_rx = 1.2;
    double slope_c = 0.6;
    double residual_var = 81.587;
    bool parallel = false;

    static OutcomeModelParams parallel_model(double intercept, double effect_rx, double effect_c,
                                             double slope, double residual_var);
    static OutcomeModelParams targeted_model(double intercept, double effect_rx, double effect_c,
                                             double slope_rx, double slope_c,
                                             double residual_var);

    /// Throws invalid_argument on non-finite values, residual_var < 0, or a
    /// parallel model with unequal slopes.
    void validate() const;

    LineFit true_line_rx() const noexcept { return {intercept + effect_rx, slope_rx}; }
    LineFit true_line_c() const noexcept { return {intercept + effect_c, slope_c}; }
};

/// Var(Z) / (Var(Z) + Var(E^B)).
double attenuation_factor(double var_z, double var_e_biomarker);

/// Ordinary least squares of y on x. Needs >= 3 pairs and nonzero
/// predictor variance (degenerate_predictor otherwise).
LineFit fit_arm_regression(std::span<const double> x, std::span<const double> y);

/// Population line obtained by regressing on B: slope lambda * slope, same
/// value as `true_line` at mean_z.
LineFit attenuated_line(const LineFit& true_line, double mean_z, double lambda) noexcept;

/// E[Ym^Rx] - E[Ym^C] = effect_rx - effect_c + (slope_rx - slope_c) mean_z.
double population_efficacy(const OutcomeModelParams& model, double mean_z) noexcept;

/// direction is +1 for E[Z] + c and -1 for E[Z] - c.
double control_side_bias(const OutcomeModelParams& model, double lambda, double c,
                         int direction = +1);
double equipoise_bias(const OutcomeModelParams& model, double lambda, double c,
                      int direction = +1);

/// Lines available to the estimators. The *_true lines come from the model
/// or from regression on Z (simulation only); the *_on_b lines are fitted on B.
struct FittedModels {
    std::optional<LineFit> rx_true;
    std::optional<LineFit> c_true;
    std::optional<LineFit> rx_on_b;
    std::optional<LineFit> c_on_b;
};

/// Factual Rx prediction minus the counterfactual C prediction from the
/// B-fitted control model, at eval_point. Needs rx_true and c_on_b.
double control_side_estimate(const FittedModels& models, double eval_point);

/// Average of the Rx-side and C-side factual-minus-counterfactual contrasts at
/// eval_point. Needs all four lines.
double equipoise_estimate(const FittedModels& models, double eval_point);

struct BiasReport {
    double c_offset = 0.0;
    int direction = +1;
    double eval_point = 0.0;
    double lambda = 1.0;
    double bias_control_side = 0.0;
    double bias_equipoise = 0.0;
    double mc_control_side = 0.0;
    double mc_control_side_se = 0.0;
    double mc_equipoise = 0.0;
    double mc_equipoise_se = 0.0;
};

struct ReplicateEstimate {
    std::uint64_t replicate = 0;
    double slope_rx_on_z = 0.0;
    double slope_c_on_z = 0.0;
    double slope_rx_on_b = 0.0;
    double slope_c_on_b = 0.0;
    /// Estimates minus population efficacy, one entry per BiasReport.
    std::vector<double> control_side_bias;
    std::vector<double> equipoise_bias;
};

struct BiasStudy {
    double lambda = 1.0;
    double population_efficacy = 0.0;
    std::vector<BiasReport> reports;
    std::vector<ReplicateEstimate> replicates;
    double mean_slope_c_on_b = 0.0;
    double mean_slope_c_on_b_se = 0.0;
    double mean_slope_rx_on_b = 0.0;
    double mean_slope_rx_on_b_se = 0.0;

    /// mean_slope_c_on_b / lambda, a diagnostic only; nothing is corrected.
    double deattenuated_slope_c() const noexcept { return mean_slope_c_on_b / lambda; }
};

/// Monte-Carlo bias study. Each replicate draws cfg.n_subjects subjects
/// (Z ~ N(alpha_z, var_z), B = Z + N(0, var_e_biomarker), outcomes from
/// `model`), puts the first half on Rx and the second on C, fits all four
/// lines and evaluates both estimators at alpha_z +/- c for every c in
/// c_grid (only + for c = 0). Requires replicates >= 100 and an even
/// n_subjects >= 6; odd n is rejected with unequal_arms. Replicates run in
/// parallel and are merged in replicate order.
BiasStudy mc_bias_study(const SimConfig& cfg, const OutcomeModelParams& model,
                        const std::vector<double>& c_grid, std::size_t replicates,
                        Execution exec = Execution::parallel);

}  // namespace etz
