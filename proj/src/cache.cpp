#include "mlret/cache.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "mlret/errors.hpp"

namespace mlret::cache {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr))
        throw error("SHA-256 computation failed");

    static const char hex[] = "0123456789abcdef";
    std::string out(len * 2, '\0');
    for (unsigned int i = 0; i < len; ++i) {
        out[2 * i] = hex[digest[i] >> 4];
        out[2 * i + 1] = hex[digest[i] & 0x0F];
    }
    return out;
}

DiskCache::DiskCache(std::string dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw data_error("cannot create cache directory " + dir_ + ": " + ec.message());
}

std::string DiskCache::path_for(std::string_view key) const {
    // Keys may contain separators or other path-hostile bytes; the digest
    // keeps every entry a flat, fixed-shape filename inside dir_.
    return dir_ + '/' + sha256_hex(key);
}

std::optional<std::string> DiskCache::get(std::string_view key) const {
    std::ifstream in(path_for(key), std::ios::binary);
    if (!in) {
        ++misses_;
        return std::nullopt;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    ++hits_;
    return std::move(buf).str();
}

void DiskCache::put(std::string_view key, std::string_view value) const {
    const std::string final_path = path_for(key);
    std::ostringstream tmp_name;
    tmp_name << final_path << ".tmp." << std::this_thread::get_id();
    const std::string tmp_path = tmp_name.str();

    {
        std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
        if (!out) throw data_error("cannot write cache entry: " + tmp_path);
        out.write(value.data(), static_cast<std::streamsize>(value.size()));
        if (!out) throw data_error("error writing cache entry: " + tmp_path);
    }
    std::error_code ec;
    fs::rename(tmp_path, final_path, ec);
    if (ec) {
        fs::remove(tmp_path, ec);
        throw data_error("cannot finalize cache entry " + final_path + ": " + ec.message());
    }
}

}  // namespace mlret::cache
