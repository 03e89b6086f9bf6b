#pragma once

namespace picurve {

/// Thread count for an OpenMP region: `requested` when positive, otherwise
/// the OpenMP default (1 when built without OpenMP).
int resolve_threads(int requested);

}  // namespace picurve
