#ifndef ICFRINGE_FSIO_HPP
#define ICFRINGE_FSIO_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "icfringe/errors.hpp"

namespace icfringe {
namespace detail {

// Round-trip exact formatting for metadata values.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Shorter fixed formatting for CSV cells.
inline std::string format_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// Write via a temporary and rename, so readers never observe partial files.
inline void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot open for writing: " + tmp.string());
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!os) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed for " + path.string() + ": " + ec.message());
}

} // namespace detail
} // namespace icfringe

#endif
