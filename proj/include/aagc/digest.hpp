#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace aagc {

// FNV-1a 64-bit fingerprint; used for config digests and manifest artifact
// fingerprints (reproducibility bookkeeping, not security).
inline std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::string hex_digest(std::uint64_t value);

// FNV-1a over a file's bytes; throws IoError when unreadable.
std::uint64_t file_digest(const std::string& path);

}  // namespace aagc
