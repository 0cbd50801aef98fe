#include "pslab/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "pslab/errors.hpp"
#include "pslab/pfm.hpp"
#include "pslab/png_io.hpp"
#include "pslab/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pslab::data {

namespace {

std::string sample_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d", index);
    return buf;
}

diff::Array mask_to_array(const diff::Array& png) {
    diff::Array m(png.height(), png.width(), 1);
    for (int y = 0; y < png.height(); ++y)
        for (int x = 0; x < png.width(); ++x)
            m.at(y, x) = png.at(y, x) >= 0.5 ? 1.0 : 0.0;
    return m;
}

diff::Array mask_to_png(const diff::Array& m) {
    diff::Array png(m.height(), m.width(), 1);
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) png.at(y, x) = m.at(y, x) == 1.0 ? 1.0 : 0.0;
    return png;
}

}  // namespace

std::vector<StereoPair> load_stereo_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("stereo dir: " + dir + " is not a directory");
    std::map<std::string, std::pair<bool, bool>> names;  // stem -> (has L, has R)
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const std::string fn = e.path().filename().string();
        if (fn.size() < 7 || fn.substr(fn.size() - 4) != ".png") continue;
        const std::string tag = fn.substr(fn.size() - 6, 2);
        const std::string stem = fn.substr(0, fn.size() - 6);
        if (tag == "_L")
            names[stem].first = true;
        else if (tag == "_R")
            names[stem].second = true;
    }
    std::vector<StereoPair> pairs;
    for (const auto& [stem, have] : names) {
        if (!have.first)
            throw IoError("stereo dir: " + dir + ": found " + stem + "_R.png but no " + stem +
                          "_L.png");
        if (!have.second)
            throw IoError("stereo dir: " + dir + ": found " + stem + "_L.png but no " + stem +
                          "_R.png");
        const std::string lp = dir + "/" + stem + "_L.png";
        const std::string rp = dir + "/" + stem + "_R.png";
        Image l(read_png(lp));
        Image r(read_png(rp));
        if (l.width() != r.width() || l.height() != r.height() ||
            l.channels() != r.channels())
            throw IoError("stereo dir: size mismatch between " + lp + " and " + rp);
        pairs.push_back({std::move(l), std::move(r)});
    }
    return pairs;
}

Dataset generate_dataset(const SceneConfig& base, int count, std::uint64_t seed) {
    if (count < 1) throw ValidationError("generate_dataset: count must be >= 1");
    base.validate();
    Dataset ds;
    ds.width = base.width;
    ds.height = base.height;
    ds.max_disparity = base.max_disparity;
    ds.channels = base.channels;
    for (int i = 0; i < count; ++i) {
        SceneConfig cfg = base;
        cfg.seed = mix64(mix64(seed) ^ static_cast<std::uint64_t>(i));
        ds.seeds.push_back(cfg.seed);
        ds.samples.push_back(generate_scene(cfg));
    }
    return ds;
}

void write_dataset(const std::string& dir, const Dataset& ds, bool force) {
    if (fs::exists(dir) && !fs::is_empty(dir) && !force)
        throw IoError("dataset: " + dir + " exists and is not empty (use force to overwrite)");
    const char* sub[] = {"left", "right", "disp_left", "disp_right", "occ_left", "occ_right"};
    for (const char* s : sub) fs::create_directories(fs::path(dir) / s);

    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const SceneSample& s = ds.samples[i];
        const std::string n = sample_name(static_cast<int>(i));
        write_png(dir + "/left/" + n + ".png", s.left.array());
        write_png(dir + "/right/" + n + ".png", s.right.array());
        write_pfm(dir + "/disp_left/" + n + ".pfm", s.disp_left.array());
        write_pfm(dir + "/disp_right/" + n + ".pfm", s.disp_right.array());
        write_png(dir + "/occ_left/" + n + ".png", mask_to_png(s.occ_left.array()));
        write_png(dir + "/occ_right/" + n + ".png", mask_to_png(s.occ_right.array()));
    }

    json manifest;
    manifest["width"] = ds.width;
    manifest["height"] = ds.height;
    manifest["max_disparity"] = ds.max_disparity;
    manifest["channels"] = ds.channels;
    manifest["count"] = ds.samples.size();
    manifest["seeds"] = ds.seeds;
    std::ofstream out(dir + "/manifest.json");
    if (!out) throw IoError("dataset: cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

Dataset load_dataset(const std::string& dir) {
    std::ifstream in(dir + "/manifest.json");
    if (!in) throw IoError("dataset: missing manifest.json in " + dir);
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw IoError("dataset: bad manifest.json in " + dir + ": " + e.what());
    }
    Dataset ds;
    try {
        ds.width = manifest.at("width").get<int>();
        ds.height = manifest.at("height").get<int>();
        ds.max_disparity = manifest.at("max_disparity").get<int>();
        ds.channels = manifest.value("channels", 1);
        ds.seeds = manifest.value("seeds", std::vector<std::uint64_t>{});
        const int count = manifest.at("count").get<int>();
        for (int i = 0; i < count; ++i) {
            const std::string n = sample_name(i);
            SceneSample s;
            s.left = Image(read_png(dir + "/left/" + n + ".png"));
            s.right = Image(read_png(dir + "/right/" + n + ".png"));
            s.disp_left = DisparityField(read_pfm(dir + "/disp_left/" + n + ".pfm"));
            s.disp_right = DisparityField(read_pfm(dir + "/disp_right/" + n + ".pfm"));
            s.occ_left = OcclusionMask(mask_to_array(read_png(dir + "/occ_left/" + n + ".png")));
            s.occ_right =
                OcclusionMask(mask_to_array(read_png(dir + "/occ_right/" + n + ".png")));
            if (s.left.width() != ds.width || s.left.height() != ds.height)
                throw IoError("dataset: sample " + n + " size differs from manifest");
            ds.samples.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw IoError("dataset: manifest fields missing in " + dir + ": " + e.what());
    }
    return ds;
}

}  // namespace pslab::data
