#pragma once

#include "mixscale/types.hpp"

namespace mixscale {

// Draws use freshly constructed std distributions so that the engine state
// alone determines every future draw (checkpoints store only the engine).
double draw_uniform(double lo, double hi, Rng& rng);
double draw_std_normal(Rng& rng);
double draw_exponential(double rate, Rng& rng);
/// Shape/rate parameterisation (mean shape / rate).
double draw_gamma(double shape, double rate, Rng& rng);
/// IGa(shape, scale) with mean scale / (shape - 1).
double draw_inverse_gamma(double shape, double scale, Rng& rng);
double draw_beta(double s0, double s1, Rng& rng);
/// Index drawn with probability proportional to exp(logw[k] - max).
std::size_t draw_log_categorical(const Vector& logw, Rng& rng, double* normaliser_check = nullptr);

double log_gamma_density(double x, double shape, double rate);
double log_inverse_gamma_density(double x, double shape, double scale);
double log_beta_density(double x, double s0, double s1);

double normal_cdf(double x);
/// Upper tail 1 - Phi(x) without cancellation.
double normal_sf(double x);
double normal_quantile(double p);

}  // namespace mixscale
