#include "mimic/image.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

namespace mimic {

namespace {

[[noreturn]] void reject(const std::filesystem::path& path, std::size_t offset, const std::string& why) {
    throw std::runtime_error("ppm: " + path.string() + " at byte " + std::to_string(offset) + ": " + why);
}

// Parses a decimal token, skipping leading whitespace and '#' comment lines.
long read_header_int(const std::string& buf, std::size_t& pos, const std::filesystem::path& path) {
    while (pos < buf.size()) {
        if (std::isspace(static_cast<unsigned char>(buf[pos]))) {
            ++pos;
        } else if (buf[pos] == '#') {
            while (pos < buf.size() && buf[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    if (pos >= buf.size() || !std::isdigit(static_cast<unsigned char>(buf[pos])))
        reject(path, pos, "expected decimal header field");
    long v = 0;
    while (pos < buf.size() && std::isdigit(static_cast<unsigned char>(buf[pos]))) {
        v = v * 10 + (buf[pos] - '0');
        if (v > 1 << 20) reject(path, pos, "header field out of range");
        ++pos;
    }
    return v;
}

} // namespace

ImageU8 read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("ppm: cannot open " + path.string());
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::size_t pos = 0;
    if (buf.size() < 2 || buf[0] != 'P' || buf[1] != '6') reject(path, 0, "missing P6 magic");
    pos = 2;
    const long w = read_header_int(buf, pos, path);
    const long h = read_header_int(buf, pos, path);
    const long maxval = read_header_int(buf, pos, path);
    if (maxval != 255) reject(path, pos, "unsupported maxval " + std::to_string(maxval));
    if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos])))
        reject(path, pos, "expected whitespace after maxval");
    ++pos; // single whitespace byte separates header from payload

    ImageU8 img(static_cast<int>(h), static_cast<int>(w));
    if (buf.size() - pos < img.size())
        reject(path, buf.size(), "truncated payload, need " + std::to_string(img.size()) +
               " bytes, have " + std::to_string(buf.size() - pos));
    for (std::size_t i = 0; i < img.size(); ++i)
        img.pixels[i] = static_cast<std::uint8_t>(buf[pos + i]);
    return img;
}

void write_ppm(const ImageU8& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("ppm: cannot write " + path.string());
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<long>(img.size()));
    if (!out) throw std::runtime_error("ppm: short write to " + path.string());
}

} // namespace mimic
