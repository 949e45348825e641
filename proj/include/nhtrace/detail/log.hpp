#pragma once

#include <iostream>
#include <string>

namespace nhtrace::detail {

inline void warn(const std::string& message) {
    std::cerr << "[nhtrace] warning: " << message << "\n";
}

}  // namespace nhtrace::detail
