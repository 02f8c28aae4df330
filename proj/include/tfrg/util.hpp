#pragma once

#include <algorithm>
#include <cstdint>
#include <cstddef>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace tfrg {

// Dense bitset over flat site indices.
class DenseBitset {
public:
    DenseBitset() = default;
    explicit DenseBitset(std::uint64_t nbits)
        : nbits_(nbits), words_((nbits + 63) / 64, 0) {}

    std::uint64_t size() const { return nbits_; }

    bool get(std::uint64_t i) const {
        return (words_[i >> 6] >> (i & 63)) & 1u;
    }
    void set(std::uint64_t i) { words_[i >> 6] |= (std::uint64_t{1} << (i & 63)); }
    void clear(std::uint64_t i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }

    // Sets bit i, returns true if it was previously unset.
    bool test_and_set(std::uint64_t i) {
        std::uint64_t& w = words_[i >> 6];
        std::uint64_t m = std::uint64_t{1} << (i & 63);
        bool fresh = (w & m) == 0;
        w |= m;
        return fresh;
    }

    std::uint64_t popcount() const {
        std::uint64_t c = 0;
        for (std::uint64_t w : words_) c += static_cast<std::uint64_t>(__builtin_popcountll(w));
        return c;
    }

    void reset() { std::fill(words_.begin(), words_.end(), 0); }

    bool operator==(const DenseBitset& o) const {
        return nbits_ == o.nbits_ && words_ == o.words_;
    }

    const std::vector<std::uint64_t>& words() const { return words_; }

private:
    std::uint64_t nbits_ = 0;
    std::vector<std::uint64_t> words_;
};

// FNV-1a, used for config hashing and provenance stamps.
inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

// Deterministic replica fan-out: replica i is processed by worker (i % workers),
// results land in a pre-sized slot vector, so the outcome is identical for any
// worker count.
template <typename Fn>
void parallel_replicas(std::size_t count, unsigned workers, Fn&& fn) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    unsigned w = std::min<std::size_t>(workers, count);
    std::vector<std::thread> pool;
    pool.reserve(w);
    std::exception_ptr err;
    std::mutex err_mu;
    for (unsigned t = 0; t < w; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < count; i += w) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

inline unsigned default_workers() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : n;
}

}  // namespace tfrg
