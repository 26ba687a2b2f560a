#ifndef MISOLOC_LOCMAP_HPP
#define MISOLOC_LOCMAP_HPP

#include <vector>

#include "misoloc/estimator.hpp"
#include "misoloc/types.hpp"

namespace misoloc {

// All positions here are BS-centred; callers translate to the world frame
// at the scenario boundary.

// Index of the LOS pair: the one with the smallest delay. Exact ties pick
// the first pair and set *tie.
int identify_los(const ThetaVector& theta, bool* tie = nullptr);

// MS position from the LOS parameters: range c*delay along the AOD ray.
Vec2 localize(double aod_rad, double delay_s);

struct MappedScatterer {
  Vec2 position = Vec2::Zero();
  bool valid = false;
};

// Scatterer position from an NLOS pair and the MS estimate: the
// intersection of the AOD ray with the BS/MS ellipse of string length
// c*delay. Implemented with (cos, sin) directly so any quadrant works.
// Delays that cannot close the ellipse yield an invalid flag.
MappedScatterer map_scatterer(const Vec2& ms_position, double aod_rad,
                              double delay_s);

// Single-path cost in the position domain: identical (same code path) to
// the channel-domain cost at aod = atan2(s), delay = |s|/c.
double position_cost(const Vec2& position, const CMatX& observations,
                     const TxSignalSet& tx);

// Maps the "equivalent" position that the single-path model attributes to
// an NLOS path (range c*tau_k along the AOD ray) back to the scatterer: the
// point on the BS ray equidistant from the equivalent position and the MS.
Vec2 equivalent_to_scatterer(const Vec2& equivalent_position,
                             const Vec2& ms_position);

struct LocalizationResult {
  Vec2 ms_position = Vec2::Zero();
  int los_index = 0;
  bool los_tie = false;
  // One entry per non-LOS pair, in theta order with the LOS pair skipped.
  std::vector<MappedScatterer> scatterers;
};

LocalizationResult localize_and_map(const ThetaVector& theta);

}  // namespace misoloc

#endif
