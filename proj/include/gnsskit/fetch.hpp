#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

#include "httplib.h"

namespace gnsskit {

struct NotAvailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NetworkError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CalendarDay {
    int year = 2020;
    int month = 1;
    int day = 1;

    int day_of_year() const {
        static const int cum[12] = {0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334};
        int d = cum[month - 1] + day;
        const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
        if (leap && month > 2) ++d;
        return d;
    }
};

namespace detail {

inline std::string gzip_decompress(const std::string& in) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 32) != Z_OK)  // gzip or zlib
        throw std::runtime_error("inflateInit2 failed");
    std::string out;
    std::vector<char> buf(1 << 16);
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
    zs.avail_in = static_cast<uInt>(in.size());
    int ret = Z_OK;
    do {
        zs.next_out = reinterpret_cast<Bytef*>(buf.data());
        zs.avail_out = static_cast<uInt>(buf.size());
        ret = inflate(&zs, Z_NO_FLUSH);
        if (ret != Z_OK && ret != Z_STREAM_END) {
            inflateEnd(&zs);
            throw std::runtime_error("gzip decompression failed");
        }
        out.append(buf.data(), buf.size() - zs.avail_out);
    } while (ret != Z_STREAM_END && zs.avail_in > 0);
    inflateEnd(&zs);
    return out;
}

// Unix compress(1) LZW, as used for legacy ".Z" archives.
inline std::string lzw_decompress(const std::string& in) {
    if (in.size() < 3 || static_cast<unsigned char>(in[0]) != 0x1f ||
        static_cast<unsigned char>(in[1]) != 0x9d)
        throw std::runtime_error(".Z: bad magic");
    const int max_bits = in[2] & 0x1f;
    const bool block_mode = (in[2] & 0x80) != 0;
    if (max_bits < 9 || max_bits > 16) throw std::runtime_error(".Z: bad max bits");

    std::vector<std::pair<int, unsigned char>> dict;  // (prefix, suffix)
    dict.reserve(1 << max_bits);
    const int clear_code = block_mode ? 256 : -1;
    auto reset_dict = [&] {
        dict.clear();
        for (int i = 0; i < 256; ++i) dict.emplace_back(-1, static_cast<unsigned char>(i));
        if (block_mode) dict.emplace_back(-1, 0);  // clear code placeholder
    };
    reset_dict();

    std::string out;
    int bits = 9;
    size_t bit_pos = 24;  // past header
    int prev = -1;
    std::string prev_str;
    auto total_bits = in.size() * 8;

    auto expand = [&](int code) {
        std::string s;
        while (code >= 0) {
            s.push_back(static_cast<char>(dict[code].second));
            code = dict[code].first;
        }
        std::reverse(s.begin(), s.end());
        return s;
    };

    while (bit_pos + bits <= total_bits) {
        // little-endian bit packing
        int code = 0;
        for (int b = 0; b < bits; ++b) {
            const size_t p = bit_pos + b;
            if (in[p / 8] & (1 << (p % 8))) code |= (1 << b);
        }
        bit_pos += bits;

        if (block_mode && code == clear_code) {
            // compress(1) pads to a codeword-group boundary on clear
            const size_t group = static_cast<size_t>(bits) * 8;
            const size_t consumed = bit_pos - 24;
            if (consumed % group != 0) bit_pos += group - consumed % group;
            reset_dict();
            bits = 9;
            prev = -1;
            prev_str.clear();
            continue;
        }
        std::string entry;
        if (code < static_cast<int>(dict.size())) {
            entry = expand(code);
        } else if (code == static_cast<int>(dict.size()) && prev >= 0) {
            entry = prev_str + prev_str[0];
        } else {
            throw std::runtime_error(".Z: invalid code");
        }
        out += entry;
        if (prev >= 0 && static_cast<int>(dict.size()) < (1 << max_bits))
            dict.emplace_back(prev, static_cast<unsigned char>(entry[0]));
        prev = code;
        prev_str = entry;
        if (static_cast<int>(dict.size()) >= (1 << bits) && bits < max_bits) ++bits;
    }
    return out;
}

inline bool looks_gzip(const std::string& s) {
    return s.size() >= 2 && static_cast<unsigned char>(s[0]) == 0x1f &&
           static_cast<unsigned char>(s[1]) == 0x8b;
}
inline bool looks_lzw(const std::string& s) {
    return s.size() >= 2 && static_cast<unsigned char>(s[0]) == 0x1f &&
           static_cast<unsigned char>(s[1]) == 0x9d;
}

// in-flight download registry so concurrent fetches of one file deduplicate
class InFlight {
public:
    static InFlight& instance() {
        static InFlight g;
        return g;
    }
    void acquire(const std::string& key) {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return !busy_.count(key); });
        busy_.insert(key);
    }
    void release(const std::string& key) {
        {
            std::lock_guard lock(mutex_);
            busy_.erase(key);
        }
        cv_.notify_all();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::set<std::string> busy_;
};

}  // namespace detail

struct FetchConfig {
    std::string base_url = "http://localhost:0";  // must be configured
    std::string cache_dir = "eph_cache";
    std::string filename_pattern = "brdc%03d0.%02dn";  // broadcast nav daily file
    int timeout_s = 20;
};

// Fetch (or reuse from cache) the broadcast navigation file for a day.
// Cache layout {cache_dir}/{yyyy}/{ddd}/{filename}; downloads land under a
// temporary name and are renamed into place only when complete, so partial
// files are never visible at the final path. Cache hits do no network I/O.
// Remote variants "<name>", "<name>.gz" and "<name>.Z" are tried in order
// and decompressed transparently.
inline std::filesystem::path fetch_ephemeris(const CalendarDay& day, const FetchConfig& cfg) {
    char name[64];
    std::snprintf(name, sizeof(name), cfg.filename_pattern.c_str(), day.day_of_year(),
                  day.year % 100);
    char subdir[32];
    std::snprintf(subdir, sizeof(subdir), "%04d/%03d", day.year, day.day_of_year());
    const std::filesystem::path dir = std::filesystem::path(cfg.cache_dir) / subdir;
    const std::filesystem::path final_path = dir / name;

    if (std::filesystem::exists(final_path)) return final_path;

    detail::InFlight::instance().acquire(final_path.string());
    struct Release {
        std::string key;
        ~Release() { detail::InFlight::instance().release(key); }
    } release{final_path.string()};

    if (std::filesystem::exists(final_path)) return final_path;  // raced with another fetch

    httplib::Client client(cfg.base_url);
    client.set_connection_timeout(cfg.timeout_s);
    client.set_read_timeout(cfg.timeout_s);

    const std::string remote_base = "/" + std::string(subdir) + "/" + name;
    bool saw_404 = false;
    std::string transport_error;
    for (const std::string suffix : {"", ".gz", ".Z"}) {
        auto res = client.Get(remote_base + suffix);
        if (!res) {
            transport_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status == 404) {
            saw_404 = true;
            continue;
        }
        if (res->status != 200) {
            transport_error = "HTTP status " + std::to_string(res->status);
            continue;
        }
        std::string body = res->body;
        if (detail::looks_gzip(body))
            body = detail::gzip_decompress(body);
        else if (detail::looks_lzw(body))
            body = detail::lzw_decompress(body);

        std::filesystem::create_directories(dir);
        const std::filesystem::path tmp =
            final_path.string() + ".part" + std::to_string(::getpid());
        {
            std::ofstream os(tmp, std::ios::binary);
            os.write(body.data(), static_cast<std::streamsize>(body.size()));
            if (!os) {
                std::filesystem::remove(tmp);
                throw NetworkError("fetch_ephemeris: write failed");
            }
        }
        std::filesystem::rename(tmp, final_path);
        return final_path;
    }
    if (!transport_error.empty() && !saw_404)
        throw NetworkError("fetch_ephemeris: " + transport_error);
    if (saw_404) throw NotAvailable("fetch_ephemeris: remote has no file for this day");
    throw NetworkError("fetch_ephemeris: " + transport_error);
}

}  // namespace gnsskit
