#include "pslab/pfm.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "pslab/errors.hpp"

namespace pslab::data {

namespace {

std::uint32_t byteswap32(std::uint32_t v) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

bool host_is_little_endian() {
    return std::endian::native == std::endian::little;
}

[[noreturn]] void fail(const std::string& path, std::size_t offset, const std::string& what) {
    throw IoError("pfm: " + path + ": byte " + std::to_string(offset) + ": " + what);
}

// One whitespace-delimited header token; PFM headers are ASCII separated by
// single whitespace characters (commonly '\n').
std::string read_token(const std::vector<char>& buf, std::size_t& pos, const std::string& path) {
    while (pos < buf.size() && std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
    if (pos >= buf.size()) fail(path, pos, "unexpected end of header");
    std::string tok;
    while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos])))
        tok.push_back(buf[pos++]);
    return tok;
}

}  // namespace

diff::Array read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("pfm: cannot open " + path);
    std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::size_t pos = 0;
    const std::string magic = read_token(buf, pos, path);
    if (magic == "PF") fail(path, 0, "color PFM not supported, expected grayscale 'Pf'");
    if (magic != "Pf") fail(path, 0, "bad magic '" + magic + "', expected 'Pf'");

    const std::string ws = read_token(buf, pos, path);
    const std::string hs = read_token(buf, pos, path);
    int w = 0, h = 0;
    try {
        w = std::stoi(ws);
        h = std::stoi(hs);
    } catch (const std::exception&) {
        fail(path, pos, "bad dimensions '" + ws + " " + hs + "'");
    }
    if (w <= 0 || h <= 0) fail(path, pos, "non-positive dimensions");

    const std::size_t scale_at = pos;
    const std::string ss = read_token(buf, pos, path);
    double scale = 0.0;
    try {
        scale = std::stod(ss);
    } catch (const std::exception&) {
        fail(path, scale_at, "bad scale '" + ss + "'");
    }
    if (scale == 0.0) fail(path, scale_at, "zero scale");
    const bool file_little = scale < 0.0;

    if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos])))
        fail(path, pos, "missing whitespace after scale");
    ++pos;

    const std::size_t need = static_cast<std::size_t>(w) * h * 4;
    if (buf.size() - pos < need)
        fail(path, buf.size(),
             "truncated pixel data, need " + std::to_string(need) + " bytes, have " +
                 std::to_string(buf.size() - pos));

    diff::Array out(h, w, 1);
    const bool swap = file_little != host_is_little_endian();
    // Rows are stored bottom-up.
    for (int row = 0; row < h; ++row) {
        const int y = h - 1 - row;
        for (int x = 0; x < w; ++x) {
            std::uint32_t bits;
            std::memcpy(&bits, buf.data() + pos, 4);
            if (swap) bits = byteswap32(bits);
            float f;
            std::memcpy(&f, &bits, 4);
            if (!std::isfinite(f)) fail(path, pos, "non-finite sample");
            out.at(y, x) = static_cast<double>(f);
            pos += 4;
        }
    }
    return out;
}

void write_pfm(const std::string& path, const diff::Array& a) {
    if (a.channels() != 1)
        throw ValidationError("write_pfm: single-channel data required, got " + a.shape_str());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("pfm: cannot write " + path);
    out << "Pf\n" << a.width() << " " << a.height() << "\n";
    out << (host_is_little_endian() ? "-1.0" : "1.0") << "\n";
    for (int row = a.height() - 1; row >= 0; --row) {
        for (int x = 0; x < a.width(); ++x) {
            const float f = static_cast<float>(a.at(row, x));
            out.write(reinterpret_cast<const char*>(&f), 4);
        }
    }
    if (!out) throw IoError("pfm: write failed for " + path);
}

}  // namespace pslab::data
