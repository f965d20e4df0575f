#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mlfed/error.hpp"

namespace mlfed {

// Binary provider-selection vector. Never all-zero when executed.
using Action = std::vector<int>;

inline int selected_count(const Action& a) {
    int n = 0;
    for (const int bit : a) n += bit != 0 ? 1 : 0;
    return n;
}

inline void validate_action(const Action& a, int n_providers) {
    if (static_cast<int>(a.size()) != n_providers) {
        throw Error("BadAction", "action length != provider count");
    }
    int ones = 0;
    for (const int bit : a) {
        if (bit != 0 && bit != 1) throw Error("BadAction", "action must be binary");
        ones += bit;
    }
    if (ones == 0) throw Error("AllZeroAction", "at least one provider must be selected");
}

inline Action action_from_mask(std::uint32_t mask, int n) {
    Action a(n, 0);
    for (int i = 0; i < n; ++i) a[i] = (mask >> i) & 1u;
    return a;
}

inline std::uint32_t action_to_mask(const Action& a) {
    std::uint32_t mask = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i]) mask |= 1u << i;
    }
    return mask;
}

inline std::string action_to_string(const Action& a) {
    std::string s;
    for (const int bit : a) s += bit ? '1' : '0';
    return s;
}

}  // namespace mlfed
