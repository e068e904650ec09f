#include "mimic/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace mimic {

namespace {

constexpr char kMagic[4] = {'M', 'I', 'M', 'W'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f64(std::string& out, double d) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    std::filesystem::path path;

    [[noreturn]] void reject(const std::string& why) const {
        throw std::runtime_error("checkpoint: " + path.string() + " at byte " +
                                 std::to_string(pos) + ": " + why);
    }
    std::uint32_t u32() {
        if (buf.size() - pos < 4) reject("truncated u32");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + static_cast<std::size_t>(i)])) << (8 * i);
        pos += 4;
        return v;
    }
    double f64() {
        if (buf.size() - pos < 8) reject("truncated f64");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + static_cast<std::size_t>(i)])) << (8 * i);
        pos += 8;
        return std::bit_cast<double>(v);
    }
};

} // namespace

void save_tensors(const std::filesystem::path& path, std::span<const Tensor> tensors) {
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const Tensor& t : tensors) {
        put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
        for (int d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
        for (double v : t.data) put_f64(out, v);
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot write " + path.string());
    f.write(out.data(), static_cast<long>(out.size()));
    if (!f) throw std::runtime_error("checkpoint: short write to " + path.string());
}

std::vector<Tensor> load_tensors(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path.string());
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Reader r{buf, 0, path};
    if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) r.reject("bad magic");
    r.pos = 4;
    const std::uint32_t version = r.u32();
    if (version != kVersion) r.reject("unsupported version " + std::to_string(version));
    const std::uint32_t count = r.u32();
    std::vector<Tensor> tensors;
    tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t rank = r.u32();
        if (rank == 0 || rank > 8) r.reject("bad rank " + std::to_string(rank));
        std::vector<int> shape(rank);
        for (auto& d : shape) {
            const std::uint32_t v = r.u32();
            if (v == 0 || v > (1u << 24)) r.reject("bad dim " + std::to_string(v));
            d = static_cast<int>(v);
        }
        Tensor t(std::move(shape));
        for (double& v : t.data) v = r.f64();
        tensors.push_back(std::move(t));
    }
    if (r.pos != buf.size()) r.reject("trailing bytes");
    return tensors;
}

} // namespace mimic
