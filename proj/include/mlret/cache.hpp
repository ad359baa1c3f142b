#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace mlret::cache {

// Hex-encoded SHA-256, used for all cache keys.
std::string sha256_hex(std::string_view data);

// One file per key under a flat directory; filenames are the SHA-256 of the
// key, so keys may contain arbitrary bytes. Writes go to a temp file in the
// same directory followed by an atomic rename, so concurrent writers of the
// same key are last-writer-wins and readers never see partial content.
class DiskCache {
public:
    // Creates dir (and parents) if missing.
    explicit DiskCache(std::string dir);

    std::optional<std::string> get(std::string_view key) const;
    void put(std::string_view key, std::string_view value) const;

    std::uint64_t hits() const { return hits_.load(); }
    std::uint64_t misses() const { return misses_.load(); }

    const std::string& dir() const { return dir_; }

private:
    std::string path_for(std::string_view key) const;

    std::string dir_;
    mutable std::atomic<std::uint64_t> hits_{0};
    mutable std::atomic<std::uint64_t> misses_{0};
};

}  // namespace mlret::cache
