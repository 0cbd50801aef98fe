#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "pslab/dataset.hpp"
#include "pslab/errors.hpp"
#include "pslab/pfm.hpp"
#include "pslab/png_io.hpp"
#include "pslab/rng.hpp"
#include "pslab/types.hpp"

using namespace pslab;
using diff::Array;
namespace fs = std::filesystem;

namespace {

// Fresh directory under the system temp root, removed on destruction.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        Rng rng(std::random_device{}(), 0, 1);
        path = fs::temp_directory_path() /
               (tag + "_" + std::to_string(rng.below(1u << 30)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
    std::string operator/(const std::string& f) const { return (path / f).string(); }
};

Array random_image_array(int h, int w, int c, Rng& rng) {
    Array a(h, w, c);
    for (double& v : a.vec()) v = rng.uniform();
    return a;
}

double bilinear_x(const data::Image& im, double x, int y, int c) {
    int x0 = static_cast<int>(std::floor(x));
    const double f = x - x0;
    int x1 = std::clamp(x0 + 1, 0, im.width() - 1);
    x0 = std::clamp(x0, 0, im.width() - 1);
    return (1.0 - f) * im.at(y, x0, c) + f * im.at(y, x1, c);
}

bool same_values(const Array& a, const Array& b) {
    return a.same_shape(b) && a.vec() == b.vec();
}

std::string error_text(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

void write_raw(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// 16-bit grayscale PNG straight through libpng, which write_png never emits.
void write_png16(const std::string& path, int w, int h) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    REQUIRE(f != nullptr);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    REQUIRE(setjmp(png_jmpbuf(png)) == 0);
    png_init_io(png, f);
    png_set_IHDR(png, info, w, h, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(static_cast<std::size_t>(w) * 2, 0x40);
    for (int y = 0; y < h; ++y) png_write_row(png, row.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
}

}  // namespace

TEST_CASE("scene config validation") {
    data::SceneConfig ok;
    CHECK_NOTHROW(ok.validate());

    data::SceneConfig c = ok;
    c.width = 7;
    CHECK_THROWS_AS(c.validate(), ValidationError);

    c = ok;
    c.height = 7;
    CHECK_THROWS_AS(c.validate(), ValidationError);

    c = ok;  // width 96: anything above 24 px of disparity is rejected
    c.max_disparity = 25;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.max_disparity = 24;
    CHECK_NOTHROW(c.validate());
    c.max_disparity = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);

    c = ok;
    c.num_foreground_layers = -1;
    CHECK_THROWS_AS(c.validate(), ValidationError);

    c = ok;
    c.texture_octaves = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.texture_octaves = 9;
    CHECK_THROWS_AS(c.validate(), ValidationError);

    c = ok;
    c.texture_contrast = 0.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.texture_contrast = 1.5;
    CHECK_THROWS_AS(c.validate(), ValidationError);

    c = ok;
    c.channels = 2;
    CHECK_THROWS_AS(c.validate(), ValidationError);

    c = ok;
    c.constant_background_disparity = -0.5;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.constant_background_disparity = c.max_disparity + 1.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.constant_background_disparity = 3.0;
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("domain type constructors enforce their invariants") {
    CHECK_THROWS_AS(data::Image(Array(4, 4, 2, 0.5)), ValidationError);
    CHECK_THROWS_AS(data::Image(Array(4, 4, 1, 1.5)), ValidationError);
    CHECK_THROWS_AS(data::Image(Array(4, 4, 1, -0.1)), ValidationError);
    CHECK_NOTHROW(data::Image(Array(4, 4, 3, 1.0)));

    CHECK_THROWS_AS(data::DisparityField(Array(4, 4, 1, -1.0)), ValidationError);
    CHECK_THROWS_AS(data::DisparityField(Array(4, 4, 1, 4.0)), ValidationError);
    CHECK_NOTHROW(data::DisparityField(Array(4, 4, 1, 3.5)));
    CHECK_THROWS_AS(data::DisparityField(Array(4, 4, 3, 0.0)), ValidationError);

    CHECK_THROWS_AS(data::OcclusionMask(Array(4, 4, 1, 0.5)), ValidationError);
    CHECK_NOTHROW(data::OcclusionMask(Array(4, 4, 1, 1.0)));

    data::OcclusionMask m(Array::from_data(1, 4, 1, {1, 0, 1, 1}));
    CHECK(m.count_visible() == 3);
}

TEST_CASE("generated scenes stay inside their contracts") {
    for (int channels : {1, 3}) {
        for (std::uint64_t seed : {0ull, 5ull, 11ull}) {
            data::SceneConfig cfg;
            cfg.width = 64;
            cfg.height = 40;
            cfg.max_disparity = 12;
            cfg.channels = channels;
            cfg.seed = seed;
            const data::SceneSample s = data::generate_scene(cfg);

            CHECK(s.left.width() == cfg.width);
            CHECK(s.left.height() == cfg.height);
            CHECK(s.left.channels() == channels);
            CHECK(s.right.width() == cfg.width);
            CHECK(s.disp_left.width() == cfg.width);
            CHECK(s.occ_right.height() == cfg.height);

            for (double v : s.left.array().vec()) {
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
            }
            double dmin = 1e9, dmax = -1e9;
            for (double v : s.disp_left.array().vec()) {
                dmin = std::min(dmin, v);
                dmax = std::max(dmax, v);
            }
            CHECK(dmin >= 0.0);
            CHECK(dmax <= cfg.max_disparity);
            for (double v : s.occ_left.array().vec()) CHECK((v == 0.0 || v == 1.0));
        }
    }
}

TEST_CASE("scene generation is deterministic in the seed") {
    data::SceneConfig cfg;
    cfg.seed = 7;
    const data::SceneSample a = data::generate_scene(cfg);
    const data::SceneSample b = data::generate_scene(cfg);
    CHECK(same_values(a.left.array(), b.left.array()));
    CHECK(same_values(a.right.array(), b.right.array()));
    CHECK(same_values(a.disp_left.array(), b.disp_left.array()));
    CHECK(same_values(a.occ_right.array(), b.occ_right.array()));

    cfg.seed = 8;
    const data::SceneSample c = data::generate_scene(cfg);
    CHECK_FALSE(same_values(a.left.array(), c.left.array()));
}

TEST_CASE("integer scenes: every visible pixel equals its match exactly") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        data::SceneConfig cfg;
        cfg.seed = seed;
        cfg.integer_disparities = true;
        const data::SceneSample s = data::generate_scene(cfg);

        long checked = 0;
        for (int y = 0; y < cfg.height; ++y)
            for (int x = 0; x < cfg.width; ++x) {
                if (s.occ_left.at(y, x) == 1.0) {
                    const double d = s.disp_left.at(y, x);
                    CHECK(d == std::floor(d));
                    const int xr = x - static_cast<int>(d);
                    REQUIRE(xr >= 0);
                    for (int c = 0; c < cfg.channels; ++c)
                        CHECK(s.left.at(y, x, c) == s.right.at(y, xr, c));
                    ++checked;
                }
                if (s.occ_right.at(y, x) == 1.0) {
                    const double d = s.disp_right.at(y, x);
                    const int xl = x + static_cast<int>(d);
                    REQUIRE(xl < cfg.width);
                    for (int c = 0; c < cfg.channels; ++c)
                        CHECK(s.right.at(y, x, c) == s.left.at(y, xl, c));
                }
            }
        CHECK(checked > cfg.width * cfg.height / 2);
    }
}

TEST_CASE("subpixel scenes: photometric consistency holds in the mean") {
    double sum = 0.0;
    long n = 0, over = 0;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        data::SceneConfig cfg;
        cfg.seed = seed;
        const data::SceneSample s = data::generate_scene(cfg);
        for (int y = 0; y < cfg.height; ++y)
            for (int x = 0; x < cfg.width; ++x) {
                if (s.occ_left.at(y, x) != 1.0) continue;
                const double d = s.disp_left.at(y, x);
                const double e = std::fabs(s.left.at(y, x) - bilinear_x(s.right, x - d, y, 0));
                sum += e;
                ++n;
                if (e >= 2.0 / 255.0) ++over;
            }
    }
    REQUIRE(n > 0);
    // Mean error is far below the bound; isolated boundary pixels where the
    // interpolation straddles a foreground edge may exceed it.
    CHECK(sum / static_cast<double>(n) < 2.0 / 255.0);
    CHECK(static_cast<double>(over) / static_cast<double>(n) < 0.03);
}

TEST_CASE("flat zero-disparity scene: identical views, nothing occluded") {
    data::SceneConfig cfg;
    cfg.num_foreground_layers = 0;
    cfg.constant_background_disparity = 0.0;
    cfg.seed = 3;
    const data::SceneSample s = data::generate_scene(cfg);
    CHECK(same_values(s.left.array(), s.right.array()));
    for (double v : s.disp_left.array().vec()) CHECK(v == 0.0);
    CHECK(s.occ_left.count_visible() == static_cast<std::size_t>(cfg.width) * cfg.height);
    CHECK(s.occ_right.count_visible() == static_cast<std::size_t>(cfg.width) * cfg.height);
}

TEST_CASE("flat shifted scene: occlusion is exactly the canvas-exit band") {
    const int delta = 5;
    data::SceneConfig cfg;
    cfg.num_foreground_layers = 0;
    cfg.constant_background_disparity = delta;
    cfg.seed = 4;
    const data::SceneSample s = data::generate_scene(cfg);

    for (int y = 0; y < cfg.height; ++y)
        for (int x = 0; x < cfg.width; ++x) {
            CHECK(s.disp_left.at(y, x) == delta);
            CHECK(s.occ_left.at(y, x) == (x < delta ? 0.0 : 1.0));
            CHECK(s.occ_right.at(y, x) == (x >= cfg.width - delta ? 0.0 : 1.0));
            if (x >= delta) CHECK(s.left.at(y, x) == s.right.at(y, x - delta));
        }
}

TEST_CASE("single occluder: bands sit on opposite sides of the shape per view") {
    // Constant integer background plus one foreground shape. Visibility then
    // reduces to set arithmetic: a background pixel is hidden exactly when the
    // shape, shifted by the disparity difference, covers it.
    const double bg = 4.0;
    int scenes_with_shape = 0;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        data::SceneConfig cfg;
        cfg.num_foreground_layers = 1;
        cfg.integer_disparities = true;
        cfg.constant_background_disparity = bg;
        cfg.seed = seed;
        const data::SceneSample s = data::generate_scene(cfg);

        double df = 0.0;
        for (int y = 0; y < cfg.height; ++y)
            for (int x = 0; x < cfg.width; ++x) df = std::max(df, s.disp_left.at(y, x));
        if (df == bg) continue;  // placement failed, scene is background only
        ++scenes_with_shape;
        const int shift = static_cast<int>(df - bg);
        REQUIRE(shift >= 1);

        for (int y = 0; y < cfg.height; ++y) {
            int fg_min = cfg.width, fg_max = -1;
            for (int x = 0; x < cfg.width; ++x)
                if (s.disp_left.at(y, x) == df) {
                    fg_min = std::min(fg_min, x);
                    fg_max = std::max(fg_max, x);
                }
            for (int x = 0; x < cfg.width; ++x) {
                const bool fg = s.disp_left.at(y, x) == df;
                bool expect_visible;
                if (fg) {
                    expect_visible = x >= static_cast<int>(df);
                } else {
                    const bool exits = x < static_cast<int>(bg);
                    const bool hidden =
                        x + shift < cfg.width && s.disp_left.at(y, x + shift) == df;
                    expect_visible = !exits && !hidden;
                }
                INFO("seed ", seed, " y ", y, " x ", x);
                CHECK(s.occ_left.at(y, x) == (expect_visible ? 1.0 : 0.0));
                // Hidden background pixels hug the shape's left flank.
                if (!fg && s.occ_left.at(y, x) == 0.0 && x >= static_cast<int>(bg) &&
                    fg_max >= 0) {
                    CHECK(x < fg_min);
                    CHECK(x >= fg_min - shift);
                }
            }

            // Right view: same shape, band on the other side.
            fg_min = cfg.width, fg_max = -1;
            for (int x = 0; x < cfg.width; ++x)
                if (s.disp_right.at(y, x) == df) {
                    fg_min = std::min(fg_min, x);
                    fg_max = std::max(fg_max, x);
                }
            for (int x = 0; x < cfg.width; ++x) {
                const bool fg = s.disp_right.at(y, x) == df;
                bool expect_visible;
                if (fg) {
                    expect_visible = x + static_cast<int>(df) < cfg.width;
                } else {
                    const bool exits = x + static_cast<int>(bg) >= cfg.width;
                    const bool hidden = x - shift >= 0 && s.disp_right.at(y, x - shift) == df;
                    expect_visible = !exits && !hidden;
                }
                INFO("seed ", seed, " y ", y, " x ", x, " (right view)");
                CHECK(s.occ_right.at(y, x) == (expect_visible ? 1.0 : 0.0));
                if (!fg && s.occ_right.at(y, x) == 0.0 &&
                    x + static_cast<int>(bg) < cfg.width && fg_max >= 0) {
                    CHECK(x > fg_max);
                    CHECK(x <= fg_max + shift);
                }
            }
        }
    }
    CHECK(scenes_with_shape >= 4);
}

TEST_CASE("pfm round trip restores float32 values exactly") {
    Rng rng(21, 0, 2);
    Array a(6, 5, 1);
    for (double& v : a.vec())
        v = static_cast<double>(static_cast<float>(rng.uniform(-40.0, 40.0)));

    TempDir td("pslab_pfm");
    const std::string path = td / "field.pfm";
    data::write_pfm(path, a);
    const Array back = data::read_pfm(path);
    CHECK(same_values(a, back));

    // Values that need more than float32 precision land on the nearest float.
    Array fine(1, 2, 1);
    fine.at(0, 0) = 0.1;
    fine.at(0, 1) = 1.0 / 3.0;
    data::write_pfm(path, fine);
    const Array fineback = data::read_pfm(path);
    CHECK(fineback.at(0, 0) == static_cast<double>(0.1f));
    CHECK(fineback.at(0, 1) == static_cast<double>(static_cast<float>(1.0 / 3.0)));

    CHECK_THROWS_AS(data::write_pfm(td / "bad.pfm", Array(2, 2, 3, 0.0)), ValidationError);
}

TEST_CASE("pfm reader handles both endiannesses and bottom-up rows") {
    TempDir td("pslab_pfm_raw");

    const auto le_bytes = [](float f) {
        char b[4];
        std::memcpy(b, &f, 4);
        return std::string(b, 4);
    };
    const auto be_bytes = [&](float f) {
        std::string s = le_bytes(f);
        std::reverse(s.begin(), s.end());
        return s;
    };

    // 3 wide, 2 high; file rows run bottom-up: 0,1,2 is the bottom image row.
    std::string little = "Pf\n3 2\n-1.0\n";
    for (float f : {0.f, 1.f, 2.f, 3.f, 4.f, 5.f}) little += le_bytes(f);
    write_raw(td / "little.pfm", little);
    const Array l = data::read_pfm(td / "little.pfm");
    CHECK(l.width() == 3);
    CHECK(l.height() == 2);
    CHECK(l.at(1, 0) == 0.0);
    CHECK(l.at(1, 2) == 2.0);
    CHECK(l.at(0, 0) == 3.0);
    CHECK(l.at(0, 2) == 5.0);

    std::string big = "Pf\n3 2\n1.0\n";
    for (float f : {0.f, 1.f, 2.f, 3.f, 4.f, 5.f}) big += be_bytes(f);
    write_raw(td / "big.pfm", big);
    CHECK(same_values(l, data::read_pfm(td / "big.pfm")));
}

TEST_CASE("pfm reader rejects malformed input with a byte offset") {
    TempDir td("pslab_pfm_bad");

    write_raw(td / "magic.pfm", "PF\n3 2\n-1.0\n");
    CHECK_THROWS_AS(data::read_pfm(td / "magic.pfm"), IoError);
    const std::string color_msg =
        error_text([&] { data::read_pfm(td / "magic.pfm"); });
    CHECK(color_msg.find("color") != std::string::npos);

    write_raw(td / "junk.pfm", "hello world");
    CHECK_THROWS_AS(data::read_pfm(td / "junk.pfm"), IoError);

    std::string trunc = "Pf\n3 2\n-1.0\n";
    trunc += std::string(10, '\0');
    write_raw(td / "trunc.pfm", trunc);
    const std::string msg = error_text([&] { data::read_pfm(td / "trunc.pfm"); });
    CHECK(msg.find("byte") != std::string::npos);
    CHECK(msg.find("truncated") != std::string::npos);

    write_raw(td / "dims.pfm", "Pf\n3 x\n-1.0\n");
    CHECK_THROWS_AS(data::read_pfm(td / "dims.pfm"), IoError);
    write_raw(td / "scale.pfm", "Pf\n3 2\n0.0\n");
    CHECK_THROWS_AS(data::read_pfm(td / "scale.pfm"), IoError);
    CHECK_THROWS_AS(data::read_pfm(td / "absent.pfm"), IoError);
}

TEST_CASE("png round trip quantizes to 8 bits, rounding half up") {
    TempDir td("pslab_png");

    Array half(3, 4, 1, 0.5);
    data::write_png(td / "half.png", half);
    const Array halfback = data::read_png(td / "half.png");
    CHECK(halfback.height() == 3);
    CHECK(halfback.width() == 4);
    CHECK(halfback.channels() == 1);
    for (double v : halfback.vec()) CHECK(v == 128.0 / 255.0);

    // Exactly representable levels survive untouched; everything else moves
    // by at most half a level.
    Array ramp(1, 32, 1);
    for (int x = 0; x < 32; ++x) ramp.at(0, x) = (x * 8) / 255.0;
    data::write_png(td / "ramp.png", ramp);
    CHECK(same_values(ramp, data::read_png(td / "ramp.png")));

    Rng rng(5, 0, 3);
    const Array rgb = random_image_array(5, 7, 3, rng);
    data::write_png(td / "rgb.png", rgb);
    const Array rgbback = data::read_png(td / "rgb.png");
    CHECK(rgbback.channels() == 3);
    for (std::size_t i = 0; i < rgb.vec().size(); ++i)
        CHECK(std::fabs(rgb.vec()[i] - rgbback.vec()[i]) <= 1.0 / 255.0);

    CHECK_THROWS_AS(data::write_png(td / "bad.png", Array(2, 2, 1, 1.5)), ValidationError);
    CHECK_THROWS_AS(data::write_png(td / "bad.png", Array(2, 2, 2, 0.5)), ValidationError);
}

TEST_CASE("png reader rejects unsupported files") {
    TempDir td("pslab_png_bad");

    write_png16(td / "deep.png", 4, 3);
    const std::string msg = error_text([&] { data::read_png(td / "deep.png"); });
    CHECK(msg.find("bit depth") != std::string::npos);

    write_raw(td / "text.png", "not a png at all");
    CHECK_THROWS_AS(data::read_png(td / "text.png"), IoError);
    CHECK_THROWS_AS(data::read_png(td / "missing.png"), IoError);
}

TEST_CASE("dataset write/load round trip") {
    data::SceneConfig cfg;
    cfg.width = 48;
    cfg.height = 32;
    cfg.max_disparity = 8;
    cfg.num_foreground_layers = 2;
    const data::Dataset ds = data::generate_dataset(cfg, 3, 42);
    CHECK(ds.samples.size() == 3);
    CHECK(ds.seeds.size() == 3);
    CHECK(ds.seeds[0] != ds.seeds[1]);

    TempDir td("pslab_ds");
    const std::string dir = td / "set";
    data::write_dataset(dir, ds, false);
    const data::Dataset back = data::load_dataset(dir);

    CHECK(back.width == ds.width);
    CHECK(back.height == ds.height);
    CHECK(back.max_disparity == ds.max_disparity);
    CHECK(back.channels == ds.channels);
    CHECK(back.seeds == ds.seeds);
    REQUIRE(back.samples.size() == ds.samples.size());

    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const data::SceneSample& a = ds.samples[i];
        const data::SceneSample& b = back.samples[i];
        // Images pass through 8-bit PNG, disparities through float32 PFM,
        // masks are bit-exact.
        for (std::size_t j = 0; j < a.left.array().vec().size(); ++j)
            CHECK(std::fabs(a.left.array().vec()[j] - b.left.array().vec()[j]) <= 1.0 / 255.0);
        for (std::size_t j = 0; j < a.disp_left.array().vec().size(); ++j)
            CHECK(b.disp_left.array().vec()[j] ==
                  static_cast<double>(static_cast<float>(a.disp_left.array().vec()[j])));
        CHECK(same_values(a.occ_left.array(), b.occ_left.array()));
        CHECK(same_values(a.occ_right.array(), b.occ_right.array()));
    }

    // A used directory needs the explicit overwrite flag.
    CHECK_THROWS_AS(data::write_dataset(dir, ds, false), IoError);
    CHECK_NOTHROW(data::write_dataset(dir, ds, true));
}

TEST_CASE("dataset generation mixes per-sample seeds deterministically") {
    data::SceneConfig cfg;
    cfg.width = 32;
    cfg.height = 16;
    cfg.max_disparity = 6;
    const data::Dataset a = data::generate_dataset(cfg, 2, 9);
    const data::Dataset b = data::generate_dataset(cfg, 2, 9);
    CHECK(a.seeds == b.seeds);
    CHECK(same_values(a.samples[0].left.array(), b.samples[0].left.array()));
    CHECK(same_values(a.samples[1].disp_right.array(), b.samples[1].disp_right.array()));

    const data::Dataset c = data::generate_dataset(cfg, 2, 10);
    CHECK_FALSE(same_values(a.samples[0].left.array(), c.samples[0].left.array()));
    CHECK_FALSE(same_values(a.samples[0].left.array(), a.samples[1].left.array()));

    CHECK_THROWS_AS(data::generate_dataset(cfg, 0, 1), ValidationError);
}

TEST_CASE("stereo directory loading") {
    TempDir td("pslab_pairs");
    CHECK(data::load_stereo_dir(td.str()).empty());

    Rng rng(13, 0, 4);
    const Array bl = random_image_array(6, 9, 1, rng);
    const Array br = random_image_array(6, 9, 1, rng);
    const Array al = random_image_array(4, 8, 3, rng);
    const Array ar = random_image_array(4, 8, 3, rng);
    data::write_png(td / "beta_L.png", bl);
    data::write_png(td / "beta_R.png", br);
    data::write_png(td / "alpha_L.png", al);
    data::write_png(td / "alpha_R.png", ar);

    const auto pairs = data::load_stereo_dir(td.str());
    REQUIRE(pairs.size() == 2);
    // Lexicographic order: alpha before beta.
    CHECK(pairs[0].left.width() == 8);
    CHECK(pairs[0].left.channels() == 3);
    CHECK(pairs[1].left.width() == 9);
    for (std::size_t j = 0; j < al.vec().size(); ++j)
        CHECK(std::fabs(pairs[0].left.array().vec()[j] - al.vec()[j]) <= 1.0 / 255.0);

    data::write_png(td / "gamma_L.png", bl);
    const std::string msg = error_text([&] { data::load_stereo_dir(td.str()); });
    CHECK(msg.find("gamma_R.png") != std::string::npos);
    fs::remove(td / "gamma_L.png");

    data::write_png(td / "delta_L.png", bl);
    data::write_png(td / "delta_R.png", al);
    const std::string mismatch = error_text([&] { data::load_stereo_dir(td.str()); });
    CHECK(mismatch.find("size mismatch") != std::string::npos);
    CHECK(mismatch.find("delta_L.png") != std::string::npos);
    CHECK(mismatch.find("delta_R.png") != std::string::npos);
    fs::remove(td / "delta_L.png");
    fs::remove(td / "delta_R.png");

    write_raw(td / "eps_L.png", "garbage");
    write_raw(td / "eps_R.png", "garbage");
    CHECK_THROWS_AS(data::load_stereo_dir(td.str()), IoError);

    CHECK_THROWS_AS(data::load_stereo_dir(td / "nope"), IoError);
}

TEST_CASE("hflip mirrors all three field types") {
    Rng rng(17, 0, 5);
    const data::Image im(random_image_array(4, 6, 3, rng));
    const data::Image f = data::hflip(im);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 6; ++x)
            for (int c = 0; c < 3; ++c) CHECK(f.at(y, x, c) == im.at(y, 5 - x, c));
    CHECK(same_values(data::hflip(f).array(), im.array()));

    Array d(3, 5, 1);
    for (double& v : d.vec()) v = rng.uniform(0.0, 4.0);
    const data::DisparityField df(d);
    const data::DisparityField dff = data::hflip(df);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 5; ++x) CHECK(dff.at(y, x) == df.at(y, 4 - x));

    Array m(2, 4, 1);
    m.at(0, 1) = 1.0;
    m.at(1, 3) = 1.0;
    const data::OcclusionMask om(m);
    const data::OcclusionMask omf = data::hflip(om);
    CHECK(omf.at(0, 2) == 1.0);
    CHECK(omf.at(1, 0) == 1.0);
    CHECK(omf.count_visible() == om.count_visible());
}
