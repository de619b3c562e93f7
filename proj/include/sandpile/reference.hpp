#pragma once

// Serial single-toppling stabilizers. They exist to check the batch FIFO
// kernel: by abelianness every legal schedule reaches the same stable
// configuration with the same odometer.

#include "sandpile/btw.hpp"
#include "sandpile/cbtw.hpp"
#include "sandpile/rng.hpp"

namespace sandpile::reference {

enum class Schedule { fifo, lifo, random };

/// One legal toppling at a time, in the order the schedule picks unstable
/// sites. `rng` is required for Schedule::random.
Stabilized btw_stabilize(const Lattice& lat, IntConfig xi, Schedule schedule, Rng* rng = nullptr);

/// Same, applying cbtw_topple to the decomposed configuration.
CbtwStabilized cbtw_stabilize(const Lattice& lat, CbtwConfig eta, Schedule schedule,
                              Rng* rng = nullptr);

}  // namespace sandpile::reference
