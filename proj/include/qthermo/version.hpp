#pragma once

namespace qthermo {

inline constexpr const char* library_version = "1.0.0";

}
