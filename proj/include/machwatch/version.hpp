#ifndef MACHWATCH_VERSION_HPP
#define MACHWATCH_VERSION_HPP

namespace machwatch {
inline constexpr const char* kVersion = "0.1.0";
}

#endif  // MACHWATCH_VERSION_HPP
