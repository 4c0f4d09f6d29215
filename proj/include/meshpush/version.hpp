#pragma once

namespace meshpush {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace meshpush
