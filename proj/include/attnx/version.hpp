#pragma once

namespace attnx {
inline constexpr const char* kVersion = "0.1.0";
}
