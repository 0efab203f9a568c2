#pragma once

#include <cmath>

#include "pars/error.hpp"
#include "pars/recipe.hpp"

namespace pars::gates {

struct GateConfig {
  double eps_mae = 1.0;  // percentage points
  double range_lo = 0.0;
  double range_hi = 100.0;
};

struct GateVerdict {
  bool pass = false;
  bool range_ok = false;
  bool mae_ok = false;
  bool envelope_ok = false;
  double abs_error = 0.0;
};

inline void validate(const GateConfig& cfg) {
  if (!(cfg.eps_mae >= 0.0) || !(cfg.range_lo < cfg.range_hi)) {
    throw Error(ErrorCode::ConfigError, "gate config requires eps_mae >= 0 and range_lo < range_hi");
  }
}

// Range, near-truth tolerance and physics envelope. All bounds inclusive.
inline GateVerdict check(double prediction, double ground_truth, const recipe::Envelope& envelope,
                         const GateConfig& cfg) {
  if (!std::isfinite(prediction) || !std::isfinite(ground_truth)) {
    throw Error(ErrorCode::NonFiniteInput, "gate check requires finite prediction and ground truth");
  }
  GateVerdict v;
  v.abs_error = std::fabs(prediction - ground_truth);
  v.range_ok = prediction >= cfg.range_lo && prediction <= cfg.range_hi;
  v.mae_ok = v.abs_error <= cfg.eps_mae;
  v.envelope_ok = prediction <= envelope.value_percent;
  v.pass = v.range_ok && v.mae_ok && v.envelope_ok;
  return v;
}

// Student-side violation predicate: outside the range or above the envelope.
inline bool violates(double prediction, double envelope_percent, const GateConfig& cfg = {}) {
  return prediction < cfg.range_lo || prediction > cfg.range_hi || prediction > envelope_percent;
}

}  // namespace pars::gates
