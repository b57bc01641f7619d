#pragma once

#include <cstdint>
#include <vector>

namespace dlr {

// Mixed-radix counter over per-variable cardinalities. Enumeration order is
// last-variable-fastest, which every table in the library treats as row-major.
class StateIterator {
public:
    explicit StateIterator(std::vector<int> radices)
        : radices_(std::move(radices)), state_(radices_.size(), 0) {
        done_ = false;
        for (int r : radices_)
            if (r <= 0) done_ = true;
    }

    bool done() const { return done_; }
    const std::vector<int>& state() const { return state_; }

    void advance() {
        for (int k = static_cast<int>(state_.size()) - 1; k >= 0; --k) {
            if (++state_[k] < radices_[k]) return;
            state_[k] = 0;
        }
        done_ = true;
    }

private:
    std::vector<int> radices_;
    std::vector<int> state_;
    bool done_;
};

inline std::uint64_t state_space_size(const std::vector<int>& radices) {
    std::uint64_t n = 1;
    for (int r : radices) n *= static_cast<std::uint64_t>(r);
    return n;
}

// Row-major linear index of `state` under `radices`.
inline std::uint64_t state_index(const std::vector<int>& radices, const std::vector<int>& state) {
    std::uint64_t idx = 0;
    for (std::size_t k = 0; k < radices.size(); ++k)
        idx = idx * static_cast<std::uint64_t>(radices[k]) + static_cast<std::uint64_t>(state[k]);
    return idx;
}

}  // namespace dlr
