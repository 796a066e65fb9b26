#pragma once

/**
 * @file hash.hpp
 * @brief FNV-1a content hashes for MDPs and dictionaries (cache keys).
 */

#include <bit>
#include <cstdint>
#include <cstdio>
#include <string>

#include "dictionary.hpp"
#include "mdp.hpp"

namespace mpadp {

class Fnv1a {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= c[i];
            h_ *= 1099511628211ULL;
        }
    }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    std::uint64_t value() const noexcept { return h_; }

private:
    std::uint64_t h_ = 14695981039346656037ULL;
};

inline std::uint64_t hash_mdp(const DeterministicMdp& M) {
    Fnv1a h;
    h.u64(M.state_count());
    h.f64(M.gamma());
    for (std::size_t s = 0; s < M.state_count(); ++s) {
        for (const auto& tr : M.out_edges(static_cast<StateId>(s))) {
            h.u64(s);
            h.u64(tr.target);
            h.f64(tr.reward);
        }
    }
    return h.value();
}

/// Hash of the tabulated atoms, so equal functions hash equally whatever their variant.
inline std::uint64_t hash_dictionary(const Dictionary& D) {
    Fnv1a h;
    h.u64(D.state_count());
    h.u64(D.size());
    for (std::size_t i = 0; i < D.size(); ++i) {
        const auto sup = D.support(i);
        h.u64(sup.size());
        for (const auto& e : sup) {
            h.u64(e.state);
            h.f64(e.value);
        }
    }
    return h.value();
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace mpadp
