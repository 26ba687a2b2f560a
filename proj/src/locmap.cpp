#include "misoloc/locmap.hpp"

#include <cmath>
#include <stdexcept>

namespace misoloc {

int identify_los(const ThetaVector& theta, bool* tie) {
  if (theta.n_paths() < 1)
    throw std::invalid_argument("identify_los: empty theta");
  int best = 0;
  bool tied = false;
  for (int k = 1; k < theta.n_paths(); ++k) {
    if (theta.delay(k) < theta.delay(best)) {
      best = k;
      tied = false;
    } else if (theta.delay(k) == theta.delay(best)) {
      tied = true;
    }
  }
  if (tie) *tie = tied;
  return best;
}

Vec2 localize(double aod_rad, double delay_s) {
  if (!(delay_s > 0.0))
    throw std::invalid_argument("localize: delay must be > 0");
  const double range = kSpeedOfLight * delay_s;
  return {range * std::cos(aod_rad), range * std::sin(aod_rad)};
}

MappedScatterer map_scatterer(const Vec2& ms_position, double aod_rad,
                              double delay_s) {
  MappedScatterer out;
  const double total = kSpeedOfLight * delay_s;  // ellipse string length
  const double ms_range = ms_position.norm();
  const Vec2 ray(std::cos(aod_rad), std::sin(aod_rad));
  const double along = ray.dot(ms_position);

  if (total >= ms_range * (1.0 + 1e-9)) {
    // Regular intersection; the denominator is strictly positive here
    // because ray.dot(ms) <= |ms| < total.
    const double bs_leg =
        0.5 * (total * total - ms_range * ms_range) / (total - along);
    out.position = bs_leg * ray;
    out.valid = true;
    return out;
  }
  // Degenerate ellipse: the string length equals the BS-MS distance and the
  // ray points at the MS, collapsing the ellipse onto the segment. The
  // intersection limit is the far endpoint.
  if (std::abs(total - ms_range) <= 1e-9 * std::max(ms_range, 1.0) &&
      along >= ms_range * (1.0 - 1e-9)) {
    out.position = 0.5 * (total + ms_range) * ray;
    out.valid = true;
    return out;
  }
  return out;  // no intersection: invalid
}

double position_cost(const Vec2& position, const CMatX& observations,
                     const TxSignalSet& tx) {
  const double range = position.norm();
  if (!(range > 0.0))
    throw std::invalid_argument("position_cost: position at the BS origin");
  const double aod = std::atan2(position.y(), position.x());
  return nll(ThetaVector::single(aod, range / kSpeedOfLight), observations,
             tx);
}

Vec2 equivalent_to_scatterer(const Vec2& equivalent_position,
                             const Vec2& ms_position) {
  const double scale = std::max(equivalent_position.norm(), 1.0);
  // zero-length mismatch: the equivalent position already is the scatterer
  if ((equivalent_position - ms_position).norm() <= 1e-12 * scale)
    return equivalent_position;
  const double denom = equivalent_position.squaredNorm() -
                       ms_position.dot(equivalent_position);
  if (std::abs(denom) <
      1e-12 * std::max(equivalent_position.squaredNorm(), 1.0))
    throw std::invalid_argument(
        "equivalent_to_scatterer: degenerate geometry (MS projects onto the "
        "equivalent position)");
  const double lambda =
      0.5 * (equivalent_position - ms_position).squaredNorm() / denom;
  return (1.0 - lambda) * equivalent_position;
}

LocalizationResult localize_and_map(const ThetaVector& theta) {
  LocalizationResult out;
  out.los_index = identify_los(theta, &out.los_tie);
  out.ms_position =
      localize(theta.aod(out.los_index), theta.delay(out.los_index));
  for (int k = 0; k < theta.n_paths(); ++k) {
    if (k == out.los_index) continue;
    out.scatterers.push_back(
        map_scatterer(out.ms_position, theta.aod(k), theta.delay(k)));
  }
  return out;
}

}  // namespace misoloc
