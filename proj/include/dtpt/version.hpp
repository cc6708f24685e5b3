#pragma once

namespace dtpt {

inline constexpr const char* version = "1.0.0";

}
