#pragma once

#include "mixscale/schema.hpp"
#include "mixscale/types.hpp"

#include <optional>
#include <span>

namespace mixscale {

struct MixtureState;
struct CovarianceState;

/// Transform g_j of a continuous observation. Throws InputError when the
/// log argument is nonpositive or the shift has not been resolved.
double transform_continuous(double y, const TransformSpec& spec);

/// 0-based level k such that cut[k] < z <= cut[k+1].
int decode_ordinal(double z, std::span<const double> cutoffs);

/// L-1 if every entry is negative, else the position of the maximum (ties
/// resolved towards the lowest index).
int decode_nominal(std::span<const double> block);

/// Interval (lower, upper]. Open upper bounds are expressed with
/// std::nextafter(bound, -inf) by the callers.
struct TruncationRegion {
  double lower;
  double upper;
};

/// Draw from N(mean, var) restricted to `region`. Inverse-CDF in the body of
/// the distribution; exponential or uniform rejection once the region lies
/// more than three standard deviations into a tail. A region of numerically
/// zero mass is handled by returning a point just inside the nearest bound
/// and emitting a warning.
double sample_truncated_normal(double mean, double var, TruncationRegion region, Rng& rng);

/// Latent matrix z (n x q) in canonical latent layout.
struct LatentState {
  Matrix z;
};

/// Deterministic constraint-satisfying start: continuous coordinates take
/// the transformed value, ordinal ones the midpoint of their interval (or
/// the finite bound -/+ 1), nominal blocks +1 in the observed slot and -1
/// elsewhere.
LatentState initialize_latents(const Dataset& ds, const Schema& schema);

/// Full conditional (h): redraws every ordinal and nominal latent coordinate
/// of every record from its truncated Gaussian conditional. Continuous
/// coordinates are left untouched. Scan order within a record: ordinal
/// coordinates, then nominal blocks, each in schema order.
void resample_latents(LatentState& latents, const Dataset& ds, const Schema& schema,
                      const MixtureState& mixture, const CovarianceState& cov,
                      std::span<const double> probabilities, double kappa, Rng& rng);

/// Region A_il for slot `slot` of a nominal block whose observed category is
/// `category` (0-based; L-1 is the reference category).
TruncationRegion nominal_region(std::span<const double> block, int category, int slot);

/// First record whose latents no longer decode to the observed values.
std::optional<std::size_t> find_decode_violation(const LatentState& latents, const Dataset& ds,
                                                 const Schema& schema);

}  // namespace mixscale
