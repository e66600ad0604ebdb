#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace qkdsim {

// Key material is a sequence of 0/1 bytes. Kept unpacked: sessions compare
// and XOR bitwise far more often than they store bulk keys.
using Bits = std::vector<std::uint8_t>;

inline std::string bits_to_string(const Bits& bits) {
    std::string out;
    out.reserve(bits.size());
    for (auto b : bits) out.push_back(b ? '1' : '0');
    return out;
}

inline Bits bits_from_string(const std::string& text) {
    Bits out;
    out.reserve(text.size());
    for (char c : text) out.push_back(c == '1' ? 1 : 0);
    return out;
}

}  // namespace qkdsim
