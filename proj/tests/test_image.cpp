#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mimic/image.hpp"
#include "mimic/rng.hpp"

using namespace mimic;

namespace {

// Independent arctanh: bisect tanh(y) = x over y.
double atanh_bisect(double x) {
    double lo = -20.0, hi = 20.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (std::tanh(mid) < x ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::filesystem::path tmp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

} // namespace

TEST_CASE("scale_to_unit endpoints and midpoint") {
    ImageU8 img(1, 3);
    img.pixels = {0, 255, 128};
    const Tensor t = scale_to_unit(img);
    CHECK(t.data[0] == -1.0);
    CHECK(t.data[1] == 1.0);
    CHECK(t.data[2] == doctest::Approx(0.003922).epsilon(1e-3)); // 2*(128/255) - 1
}

TEST_CASE("unscale_from_tanh endpoints and rounding rule") {
    Tensor t({3}, {-1.0, 0.0, 1.0});
    t.shape = {1, 1, 3};
    const ImageU8 img = unscale_from_tanh(t);
    CHECK(img.pixels[0] == 0);
    CHECK(img.pixels[1] == 128); // 127.5 rounds half away from zero
    CHECK(img.pixels[2] == 255);

    Tensor bad({1, 1, 3}, {0.0, 0.0, 1.5});
    CHECK_THROWS(unscale_from_tanh(bad));
}

TEST_CASE("scale/unscale round trip over all 256 byte values") {
    ImageU8 img(1, 256 / 3 + 1); // 258 bytes, covers 0..255 plus wrap
    for (std::size_t i = 0; i < img.size(); ++i)
        img.pixels[i] = static_cast<std::uint8_t>(i % 256);
    CHECK(unscale_from_tanh(scale_to_unit(img)) == img);
}

TEST_CASE("quantize_bytes clamps and rounds half away from zero") {
    Tensor t({1, 2, 3}, {-4.0, 0.49, 0.5, 254.5, 270.0, 100.0});
    const ImageU8 img = quantize_bytes(t);
    CHECK(img.pixels == std::vector<std::uint8_t>{0, 0, 1, 255, 255, 100});
}

TEST_CASE("atanh_safe matches a bisection oracle") {
    CHECK(atanh_safe(0.0) == 0.0);
    CHECK(atanh_safe(0.9999) == doctest::Approx(4.951719).epsilon(1e-6));
    CHECK(atanh_safe(0.9999) == doctest::Approx(atanh_bisect(0.9999)).epsilon(1e-9));
    CHECK_THROWS(atanh_safe(1.0));
    CHECK_THROWS(atanh_safe(-1.0));
    CHECK_THROWS(atanh_safe(1.5));
}

TEST_CASE("tanh(atanh_safe(x)) round trip within 1e-12") {
    Rng rng(77);
    for (int i = 0; i < 100; ++i) {
        const double x = rng.uniform(-0.9999, 0.9999);
        CHECK(std::fabs(std::tanh(atanh_safe(x)) - x) < 1e-12);
    }
}

TEST_CASE("clip_linf projects into the ball and the byte range") {
    const std::vector<double> center{100.0};
    CHECK(clip_linf(std::vector<double>{150.0}, center, 10.0)[0] == 110.0);
    CHECK(clip_linf(std::vector<double>{150.0}, center, 0.0)[0] == 100.0);
    CHECK(clip_linf(std::vector<double>{105.0}, center, 10.0)[0] == 105.0); // inside: unchanged
    // Ball reaching outside [0,255] still clamps to the byte range.
    CHECK(clip_linf(std::vector<double>{-50.0}, std::vector<double>{3.0}, 10.0)[0] == 0.0);
    CHECK(clip_linf(std::vector<double>{400.0}, std::vector<double>{250.0}, 10.0)[0] == 255.0);
}

TEST_CASE("ppm golden bytes for a 1x1 red pixel") {
    ImageU8 img(1, 1);
    img.pixels = {255, 0, 0};
    const auto path = tmp_file("mimic_test_red.ppm");
    write_ppm(img, path);
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(bytes == std::string("P6\n1 1\n255\n") + '\xff' + '\x00' + '\x00');
    std::filesystem::remove(path);
}

TEST_CASE("ppm round trip on a random 32x32 image") {
    Rng rng(5);
    ImageU8 img(32, 32);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
    const auto path = tmp_file("mimic_test_rt.ppm");
    write_ppm(img, path);
    CHECK(read_ppm(path) == img);
    std::filesystem::remove(path);
}

TEST_CASE("ppm rejects malformed files") {
    const auto path = tmp_file("mimic_test_bad.ppm");

    SUBCASE("maxval 65535") {
        std::ofstream(path, std::ios::binary) << "P6\n1 1\n65535\n" << std::string(6, '\0');
        CHECK_THROWS(read_ppm(path));
    }
    SUBCASE("missing magic") {
        std::ofstream(path, std::ios::binary) << "P5\n1 1\n255\n" << std::string(3, '\0');
        CHECK_THROWS(read_ppm(path));
    }
    SUBCASE("truncated payload") {
        std::ofstream(path, std::ios::binary) << "P6\n2 2\n255\n" << std::string(5, '\0');
        CHECK_THROWS(read_ppm(path));
    }
    std::filesystem::remove(path);
}
