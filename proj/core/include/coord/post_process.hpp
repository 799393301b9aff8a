#pragma once

#include "coord/simulator.hpp"
#include "coord/topology.hpp"

namespace coord::agent {

// Turns a raw masked action into a valid scheduling tensor. Per source row
// (function i, node j < |V|): entries below `threshold` are zeroed, the
// survivors are renormalized to sum 1; if renormalization pushes a value
// back under the threshold the smallest offender is dropped and the row is
// renormalized again (so the output never carries a nonzero entry below the
// threshold). A row left without survivors becomes one-hot at the raw
// argmax, ties broken toward the lowest destination id. Rows with j >= |V|
// stay all-zero.
sim::SchedulingTensor post_process(const sim::ActionTensor& raw,
                                   const topo::ActionMask& mask, double threshold);

}  // namespace coord::agent
