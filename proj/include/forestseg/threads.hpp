#pragma once

namespace forestseg {

inline constexpr const char* kVersion = "0.1.0";

/// Applies the thread-count policy: explicit value > 0 wins, else the
/// FORESTSEG_THREADS environment variable, else all available cores.
/// Returns the count in effect.
int configure_threads(int requested);

}  // namespace forestseg
