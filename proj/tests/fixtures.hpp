#pragma once

#include "wf/config.hpp"
#include "wf/engines.hpp"
#include "wf/pricing.hpp"

namespace fixture {

// The worked-example engine parameters.
inline const wf::EngineParams kTable3{0.1053, 0.0, 0.8646, 4.6305, 0.5, 0.7571};

// Result of calibrating the toy deal to Senior 100 / Mezzanine 30 / Junior 5
// (5 000 exact-mode paths, seed 42).
inline const wf::EngineParams kCalibrated{0.3068302857338317, 0.0, 0.6312786193014724,
                                          3.0092019575490463, 0.7623390708661165, 0.7973701325638249};

inline wf::PricingSetup toy_setup() { return wf::toy_config().pricing_setup(); }

inline wf::EngineParams degenerate(double w = 1.0) { return {0.0, 0.0, 0.0, 2.0, 0.0, w}; }

}  // namespace fixture
