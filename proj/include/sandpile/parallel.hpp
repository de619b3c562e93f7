#pragma once

namespace sandpile {

/// Selects between the OpenMP kernel and its serial reference.
/// Both produce identical results; the serial path exists for testing.
enum class Execution { serial, parallel };

}  // namespace sandpile
