#pragma once

namespace skloc {

inline constexpr const char* kCodeVersion = "0.1.0";

// Version stamped into persisted artifacts (run records, sample files).
// Readers reject any other value explicitly rather than guessing.
inline constexpr int kSchemaVersion = 1;

}  // namespace skloc
