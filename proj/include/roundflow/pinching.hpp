#pragma once

#include <string>

namespace roundflow {

enum class PinchingVerdict { StrictlyQuarterPinched, NotPinched, Indeterminate };

inline const char* to_string(PinchingVerdict v) {
  switch (v) {
    case PinchingVerdict::StrictlyQuarterPinched:
      return "StrictlyQuarterPinched";
    case PinchingVerdict::NotPinched:
      return "NotPinched";
    default:
      return "Indeterminate";
  }
}

struct PinchingReport {
  double k_min = 0.0;
  double k_max = 0.0;
  double ratio = 0.0;
  PinchingVerdict verdict = PinchingVerdict::Indeterminate;
  int sampling_planes = 0;
};

}  // namespace roundflow
