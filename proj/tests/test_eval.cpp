#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "pslab/ablation.hpp"
#include "pslab/array.hpp"
#include "pslab/errors.hpp"
#include "pslab/eval.hpp"
#include "pslab/rng.hpp"
#include "pslab/scene.hpp"
#include "pslab/trainer.hpp"

using namespace pslab;
using diff::Array;

namespace {

template <typename E>
std::string error_text(const std::function<void()>& f) {
    try {
        f();
    } catch (const E& e) {
        return e.what();
    }
    return "";
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        Rng rng(std::hash<std::string>{}("eval") ^
                std::chrono::steady_clock::now().time_since_epoch().count());
        path = std::filesystem::temp_directory_path() /
               ("pslab_eval_" + std::to_string(rng.next_u64()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

data::DisparityField field(int h, int w, const std::vector<double>& v) {
    Array a(h, w, 1);
    a.vec() = v;
    return data::DisparityField(a);
}

data::OcclusionMask mask(int h, int w, const std::vector<double>& v) {
    Array a(h, w, 1);
    a.vec() = v;
    return data::OcclusionMask(a);
}

data::DisparityField random_field(int h, int w, double lo, double hi, std::uint64_t seed) {
    Array a(h, w, 1);
    Rng rng(seed);
    for (double& v : a.vec()) v = rng.uniform(lo, hi);
    return data::DisparityField(a);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

data::Dataset tiny_dataset(int count, std::uint64_t seed) {
    data::SceneConfig sc;
    sc.width = 32;
    sc.height = 20;
    sc.max_disparity = 6;
    sc.num_foreground_layers = 2;
    return data::generate_dataset(sc, count, seed);
}

}  // namespace

TEST_CASE("outlier rules match their definitions on hand values") {
    // err 4 is an outlier at gt 10 (4 > 3 and 4 > 0.5) but not at gt 100
    // (4 > 3 yet 4 < 5), and err 3 is never one (not strictly above 3).
    const int w = 128;  // wide enough to hold disparity 104 legally
    std::vector<double> gv(w, 0.0), pv(w, 0.0), mv(w, 1.0);
    gv[5] = 10.0;
    pv[5] = 14.0;  // outlier
    gv[9] = 100.0;
    pv[9] = 104.0;  // inlier by the 5 percent rule
    gv[12] = 10.0;
    pv[12] = 13.0;  // inlier, not strictly above 3
    mv[20] = 0.0;   // one occluded pixel with zero error
    auto gt = field(1, w, gv);
    auto pred = field(1, w, pv);
    auto occ = mask(1, w, mv);

    CHECK(eval::d1(pred, gt, occ, eval::Region::ALL) == 100.0 * (1.0 / 128.0));
    CHECK(eval::d1(pred, gt, occ, eval::Region::NOC) ==
          doctest::Approx(100.0 / 127.0).epsilon(1e-12));
    CHECK(eval::d1(pred, gt, occ, eval::Region::OCC) == 0.0);

    CHECK(eval::epe(pred, gt, occ, eval::Region::ALL) == 11.0 / 128.0);
    CHECK(eval::epe(pred, gt, occ, eval::Region::OCC) == 0.0);

    CHECK(eval::bad_n(pred, gt, occ, eval::Region::ALL, 3.0) == 100.0 * (2.0 / 128.0));
    CHECK(eval::bad_n(pred, gt, occ, eval::Region::ALL, 2.0) == 100.0 * (3.0 / 128.0));
}

TEST_CASE("identical predictions score zero everywhere") {
    data::SceneConfig sc;
    sc.width = 48;
    sc.height = 32;
    sc.max_disparity = 8;
    sc.seed = 7;
    data::SceneSample s = data::generate_scene(sc);
    eval::MetricReport r = eval::evaluate_sample(s.disp_left, s.disp_left, s.occ_left);
    CHECK(r.epe_all == 0.0);
    CHECK(r.epe_noc == 0.0);
    CHECK(r.epe_occ == 0.0);
    CHECK(r.d1_all == 0.0);
    CHECK(r.bad3_all == 0.0);
    CHECK(r.n_all == std::size_t(48 * 32));
    CHECK(r.n_noc + r.n_occ == r.n_all);
    CHECK(r.n_occ > 0);  // the scene actually has occlusions
}

TEST_CASE("a uniform one-pixel offset gives epe exactly one") {
    data::SceneConfig sc;
    sc.width = 40;
    sc.height = 24;
    sc.max_disparity = 8;
    sc.seed = 8;
    sc.integer_disparities = true;  // keeps v + 1.0 exact for every pixel
    data::SceneSample s = data::generate_scene(sc);
    Array shifted = s.disp_left.array();
    for (double& v : shifted.vec()) v += 1.0;
    data::DisparityField pred(shifted);

    for (auto region : {eval::Region::ALL, eval::Region::NOC, eval::Region::OCC}) {
        CHECK(eval::epe(pred, s.disp_left, s.occ_left, region) == 1.0);
        CHECK(eval::d1(pred, s.disp_left, s.occ_left, region) == 0.0);
        CHECK(eval::bad_n(pred, s.disp_left, s.occ_left, region, 0.5) == 100.0);
        CHECK(eval::bad_n(pred, s.disp_left, s.occ_left, region, 1.0) == 0.0);
    }
}

TEST_CASE("bad_n is monotone in the threshold and validates it") {
    auto pred = random_field(9, 13, 0.0, 10.0, 31);
    auto gt = random_field(9, 13, 0.0, 10.0, 32);
    auto occ = mask(9, 13, std::vector<double>(9 * 13, 1.0));
    double prev = 100.0;
    for (double n : {0.0, 0.5, 1.0, 2.0, 3.0, 5.0}) {
        const double b = eval::bad_n(pred, gt, occ, eval::Region::ALL, n);
        CHECK(b <= prev);
        prev = b;
    }
    CHECK(error_text<ValidationError>([&] {
              eval::bad_n(pred, gt, occ, eval::Region::ALL, -1.0);
          }).find("non-negative") != std::string::npos);
}

TEST_CASE("region sums partition the full image") {
    data::SceneConfig sc;
    sc.width = 56;
    sc.height = 36;
    sc.max_disparity = 10;
    sc.seed = 9;
    data::SceneSample s = data::generate_scene(sc);
    auto pred = random_field(36, 56, 0.0, 10.0, 33);

    eval::MetricReport r = eval::evaluate_sample(pred, s.disp_left, s.occ_left);
    REQUIRE(r.n_occ > 0);
    const double whole = r.epe_all * double(r.n_all);
    const double parts = r.epe_noc * double(r.n_noc) + r.epe_occ * double(r.n_occ);
    CHECK(whole == doctest::Approx(parts).epsilon(1e-12));
    const double d1_whole = r.d1_all * double(r.n_all);
    const double d1_parts = r.d1_noc * double(r.n_noc) + r.d1_occ * double(r.n_occ);
    CHECK(d1_whole == doctest::Approx(d1_parts).epsilon(1e-12));
}

TEST_CASE("empty regions error for metrics but zero-fill in reports") {
    auto pred = field(2, 2, {1.0, 0.5, 1.5, 0.0});
    auto gt = field(2, 2, {1.0, 0.5, 1.5, 1.0});
    auto all_visible = mask(2, 2, {1, 1, 1, 1});

    CHECK(error_text<ValidationError>([&] {
              eval::epe(pred, gt, all_visible, eval::Region::OCC);
          }).find("region holds no pixels") != std::string::npos);
    CHECK(error_text<ValidationError>([&] {
              eval::d1(pred, gt, all_visible, eval::Region::OCC);
          }).find("region holds no pixels") != std::string::npos);
    CHECK(error_text<ValidationError>([&] {
              eval::bad_n(pred, gt, all_visible, eval::Region::OCC, 1.0);
          }).find("region holds no pixels") != std::string::npos);

    eval::MetricReport r = eval::evaluate_sample(pred, gt, all_visible);
    CHECK(r.n_occ == 0);
    CHECK(r.epe_occ == 0.0);
    CHECK(r.d1_occ == 0.0);
    CHECK(r.epe_all == 0.25);
}

TEST_CASE("metric inputs must share dimensions") {
    auto pred = field(2, 2, {1, 1, 0, 1});
    auto gt = field(2, 3, {1, 2, 0, 1, 2, 0});
    auto occ = mask(2, 2, {1, 1, 1, 1});
    CHECK(error_text<ValidationError>([&] {
              eval::epe(pred, gt, occ, eval::Region::ALL);
          }).find("dimensions differ") != std::string::npos);
    auto gt2 = field(2, 2, {1, 1, 1, 0});
    auto occ2 = mask(3, 2, {1, 1, 1, 1, 1, 1});
    CHECK(error_text<ValidationError>([&] {
              eval::d1(pred, gt2, occ2, eval::Region::ALL);
          }).find("dimensions differ") != std::string::npos);
}

TEST_CASE("metrics agree with a plain-loop reference") {
    const int h = 9, w = 13;
    auto pred = random_field(h, w, 0.0, 12.0, 41);
    auto gt = random_field(h, w, 0.0, 12.0, 42);
    Array m(h, w, 1);
    Rng rng(43);
    for (double& v : m.vec()) v = rng.bernoulli(0.7) ? 1.0 : 0.0;
    data::OcclusionMask occ(m);

    for (auto region : {eval::Region::ALL, eval::Region::NOC, eval::Region::OCC}) {
        double sum = 0.0;
        long n = 0, d1_out = 0, bad2 = 0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const bool vis = occ.at(y, x) == 1.0;
                if (region == eval::Region::NOC && !vis) continue;
                if (region == eval::Region::OCC && vis) continue;
                const double err = std::abs(pred.at(y, x) - gt.at(y, x));
                sum += err;
                ++n;
                if (err > 3.0 && err > 0.05 * gt.at(y, x)) ++d1_out;
                if (err > 2.0) ++bad2;
            }
        REQUIRE(n > 0);
        CHECK(eval::epe(pred, gt, occ, region) == sum / double(n));
        CHECK(eval::d1(pred, gt, occ, region) == 100.0 * double(d1_out) / double(n));
        CHECK(eval::bad_n(pred, gt, occ, region, 2.0) == 100.0 * double(bad2) / double(n));
    }
}

TEST_CASE("sample reports repeat the standalone metrics") {
    auto pred = random_field(12, 16, 0.0, 8.0, 51);
    auto gt = random_field(12, 16, 0.0, 8.0, 52);
    Array m(12, 16, 1, 1.0);
    for (int x = 0; x < 16; ++x) m.at(3, x) = 0.0;
    data::OcclusionMask occ(m);

    // The report computes percentages as (100 * k) / n while the standalone
    // metrics compute 100 * (k / n); equal counts, one ulp of slack.
    eval::MetricReport r = eval::evaluate_sample(pred, gt, occ);
    CHECK(r.epe_all == eval::epe(pred, gt, occ, eval::Region::ALL));
    CHECK(r.epe_noc == eval::epe(pred, gt, occ, eval::Region::NOC));
    CHECK(r.epe_occ == eval::epe(pred, gt, occ, eval::Region::OCC));
    CHECK(r.d1_all ==
          doctest::Approx(eval::d1(pred, gt, occ, eval::Region::ALL)).epsilon(1e-14));
    CHECK(r.d1_occ ==
          doctest::Approx(eval::d1(pred, gt, occ, eval::Region::OCC)).epsilon(1e-14));
    CHECK(r.bad3_all ==
          doctest::Approx(eval::bad_n(pred, gt, occ, eval::Region::ALL, 3.0)).epsilon(1e-14));
    CHECK(r.bad3_noc ==
          doctest::Approx(eval::bad_n(pred, gt, occ, eval::Region::NOC, 3.0)).epsilon(1e-14));
    CHECK(r.n_all == std::size_t(12 * 16));
}

TEST_CASE("dataset evaluation pools pixels rather than averaging scenes") {
    data::Dataset ds = tiny_dataset(3, 61);
    // A fresh direct estimator predicts a constant d_max / 2 for every
    // sample, which makes the pooled result reproducible by hand.
    matcher::Estimator est(matcher::Mode::DIRECT, 9, 1, 0, {});
    eval::MetricReport pooled = eval::evaluate_dataset(est, ds);

    data::DisparityField flat(Array(20, 32, 1, 4.5));
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : ds.samples) {
        eval::MetricReport r = eval::evaluate_sample(flat, s.disp_left, s.occ_left);
        sum += r.epe_all * double(r.n_all);
        n += r.n_all;
    }
    CHECK(pooled.n_all == n);
    CHECK(pooled.epe_all == doctest::Approx(sum / double(n)).epsilon(1e-12));

    data::Dataset empty;
    CHECK(error_text<ValidationError>([&] { eval::evaluate_dataset(est, empty); })
              .find("empty dataset") != std::string::npos);
}

TEST_CASE("row parsing accepts letters with or without commas") {
    auto rows = eval::parse_rows("a,c,h");
    CHECK(rows == std::vector<char>{'a', 'c', 'h'});
    CHECK(eval::parse_rows("ach") == rows);
    CHECK(eval::parse_rows("a, c, h") == rows);
    CHECK(error_text<ValidationError>([] { eval::parse_rows("a,a"); })
              .find("duplicate row") != std::string::npos);
    CHECK(error_text<ValidationError>([] { eval::parse_rows(""); })
              .find("no rows") != std::string::npos);
    CHECK(error_text<ValidationError>([] { eval::parse_rows("z"); })
              .find("unknown strategy letter") != std::string::npos);
}

TEST_CASE("medians handle odd, even and missing data") {
    CHECK(eval::median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(eval::median({4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK(eval::median({5.0}) == 5.0);
    CHECK(error_text<ValidationError>([] { eval::median({}); }).find("empty") !=
          std::string::npos);
}

TEST_CASE("the ablation runner trains, scores and reruns identically") {
    TempDir tmp;
    data::Dataset train_ds = tiny_dataset(2, 71);
    data::Dataset heldout = tiny_dataset(2, 72);

    trainer::TrainConfig base;
    base.mode = matcher::Mode::DIRECT;
    base.d_max = 6;
    base.iterations = 20;
    base.batch_size = 1;

    const std::vector<char> rows{'a', 'b'};
    const std::vector<std::uint64_t> seeds{0, 1};
    eval::AblationTable t =
        eval::run_ablation(train_ds, heldout, rows, seeds, base, (tmp.path / "r1").string());

    REQUIRE(t.runs.size() == 4);
    for (const auto& r : t.runs) {
        INFO("row ", r.row, " seed ", r.seed, " error: ", r.error);
        CHECK(r.ok);
        CHECK(r.iterations == 20);
        CHECK(r.mid_eval.iter == 10);  // eval_every defaults to half the budget
        CHECK(r.final_eval.iter == 20);
        CHECK(r.final_eval.epe_all > 0.0);
    }
    CHECK(t.runs[0].row == 'a');
    CHECK(t.runs[0].seed == 0);
    CHECK(t.runs[1].seed == 1);
    CHECK(t.runs[2].row == 'b');
    CHECK(std::filesystem::exists(tmp.path / "r1" / "a_s0" / "train_log.csv"));
    CHECK(std::filesystem::exists(tmp.path / "r1" / "b_s1" / "eval_log.csv"));

    // median helpers over the completed runs
    CHECK(eval::row_runs(t, 'a').size() == 2);
    const double med = eval::row_median(t, 'a', &trainer::EvalPoint::d1_all);
    const double lo = std::min(t.runs[0].final_eval.d1_all, t.runs[1].final_eval.d1_all);
    const double hi = std::max(t.runs[0].final_eval.d1_all, t.runs[1].final_eval.d1_all);
    CHECK(med == doctest::Approx((lo + hi) / 2.0).epsilon(1e-15));

    // identical inputs give identical tables and byte-identical CSVs
    eval::AblationTable t2 =
        eval::run_ablation(train_ds, heldout, rows, seeds, base, "");
    for (std::size_t i = 0; i < t.runs.size(); ++i) {
        CHECK(t.runs[i].final_eval.epe_all == t2.runs[i].final_eval.epe_all);
        CHECK(t.runs[i].final_eval.d1_all == t2.runs[i].final_eval.d1_all);
        CHECK(t.runs[i].mid_eval.d1_all == t2.runs[i].mid_eval.d1_all);
    }
    eval::write_ablation_csv(t, (tmp.path / "t1.csv").string());
    eval::write_ablation_csv(t2, (tmp.path / "t2.csv").string());
    CHECK(slurp((tmp.path / "t1.csv").string()) == slurp((tmp.path / "t2.csv").string()));

    eval::write_ablation_timing(t, (tmp.path / "w.csv").string());
    std::string timing = slurp((tmp.path / "w.csv").string());
    CHECK(timing.rfind("row,seed,wall_seconds\n", 0) == 0);

    const std::string table = eval::format_ablation_table(t);
    CHECK(table.find("(a)") != std::string::npos);
    CHECK(table.find("baseline+occ") != std::string::npos);
}

TEST_CASE("a failing strategy row is captured without aborting the table") {
    data::Dataset train_ds = tiny_dataset(2, 73);
    data::Dataset heldout = tiny_dataset(2, 74);

    trainer::TrainConfig base;
    base.mode = matcher::Mode::DIRECT;  // row h needs crops, so it must fail
    base.d_max = 6;
    base.iterations = 10;
    base.batch_size = 1;

    eval::AblationTable t =
        eval::run_ablation(train_ds, heldout, {'a', 'h'}, {0}, base, "");
    REQUIRE(t.runs.size() == 2);
    CHECK(t.runs[0].ok);
    CHECK_FALSE(t.runs[1].ok);
    CHECK(t.runs[1].error.find("wider generation") != std::string::npos);

    CHECK(error_text<ValidationError>([&] {
              eval::row_median(t, 'h', &trainer::EvalPoint::d1_all);
          }).find("no completed runs") != std::string::npos);

    const std::string table = eval::format_ablation_table(t);
    CHECK(table.find("failed") != std::string::npos);

    CHECK(error_text<ValidationError>([&] {
              eval::run_ablation(train_ds, heldout, {}, {0}, base, "");
          }).find("no strategy rows") != std::string::npos);
    CHECK(error_text<ValidationError>([&] {
              eval::run_ablation(train_ds, heldout, {'a'}, {}, base, "");
          }).find("no seeds") != std::string::npos);
    data::Dataset empty;
    CHECK(error_text<ValidationError>([&] {
              eval::run_ablation(train_ds, empty, {'a'}, {0}, base, "");
          }).find("held-out dataset is empty") != std::string::npos);
}
