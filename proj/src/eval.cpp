#include "pslab/eval.hpp"

#include <cmath>
#include <string>

#include "pslab/errors.hpp"

namespace pslab::eval {

using data::DisparityField;
using data::OcclusionMask;

namespace {

struct RegionSums {
    double abs_err = 0;
    std::size_t outliers_d1 = 0;
    std::size_t outliers_bad3 = 0;
    std::size_t count = 0;
};

bool in_region(double occ_value, Region r) {
    switch (r) {
        case Region::ALL: return true;
        case Region::NOC: return occ_value == 1.0;
        case Region::OCC: return occ_value == 0.0;
    }
    return false;
}

void check_dims(const DisparityField& pred, const DisparityField& gt,
                const OcclusionMask& occ) {
    if (pred.height() != gt.height() || pred.width() != gt.width() ||
        occ.height() != gt.height() || occ.width() != gt.width())
        throw ValidationError("metrics: pred/gt/mask dimensions differ");
}

template <typename Fn>
double region_fraction(const DisparityField& pred, const DisparityField& gt,
                       const OcclusionMask& occ, Region region, const char* what, Fn accum) {
    check_dims(pred, gt, occ);
    double sum = 0;
    std::size_t count = 0;
    for (int y = 0; y < gt.height(); ++y)
        for (int x = 0; x < gt.width(); ++x) {
            if (!in_region(occ.at(y, x), region)) continue;
            sum += accum(std::abs(pred.at(y, x) - gt.at(y, x)), gt.at(y, x));
            ++count;
        }
    if (count == 0) throw ValidationError(std::string(what) + ": region holds no pixels");
    return sum / static_cast<double>(count);
}

bool d1_outlier(double err, double gt) {
    return err > 3.0 && err > 0.05 * gt;
}

}  // namespace

double epe(const DisparityField& pred, const DisparityField& gt, const OcclusionMask& occ,
           Region region) {
    return region_fraction(pred, gt, occ, region, "epe",
                           [](double err, double) { return err; });
}

double d1(const DisparityField& pred, const DisparityField& gt, const OcclusionMask& occ,
          Region region) {
    return 100.0 * region_fraction(pred, gt, occ, region, "d1", [](double err, double g) {
        return d1_outlier(err, g) ? 1.0 : 0.0;
    });
}

double bad_n(const DisparityField& pred, const DisparityField& gt, const OcclusionMask& occ,
             Region region, double n) {
    if (n < 0) throw ValidationError("bad_n: threshold must be non-negative");
    return 100.0 * region_fraction(pred, gt, occ, region, "bad_n", [n](double err, double) {
        return err > n ? 1.0 : 0.0;
    });
}

namespace {

void accumulate(RegionSums& s, double err, double gt) {
    s.abs_err += err;
    if (d1_outlier(err, gt)) ++s.outliers_d1;
    if (err > 3.0) ++s.outliers_bad3;
    ++s.count;
}

MetricReport report_from(const RegionSums& all, const RegionSums& noc, const RegionSums& occ) {
    auto mean = [](double sum, std::size_t n) { return n ? sum / n : 0.0; };
    auto pct = [](std::size_t k, std::size_t n) { return n ? 100.0 * k / n : 0.0; };
    MetricReport r;
    r.epe_all = mean(all.abs_err, all.count);
    r.epe_noc = mean(noc.abs_err, noc.count);
    r.epe_occ = mean(occ.abs_err, occ.count);
    r.d1_all = pct(all.outliers_d1, all.count);
    r.d1_noc = pct(noc.outliers_d1, noc.count);
    r.d1_occ = pct(occ.outliers_d1, occ.count);
    r.bad3_all = pct(all.outliers_bad3, all.count);
    r.bad3_noc = pct(noc.outliers_bad3, noc.count);
    r.n_all = all.count;
    r.n_noc = noc.count;
    r.n_occ = occ.count;
    return r;
}

void accumulate_sample(const DisparityField& pred, const DisparityField& gt,
                       const OcclusionMask& occ, RegionSums& all, RegionSums& noc,
                       RegionSums& occluded) {
    check_dims(pred, gt, occ);
    for (int y = 0; y < gt.height(); ++y)
        for (int x = 0; x < gt.width(); ++x) {
            const double err = std::abs(pred.at(y, x) - gt.at(y, x));
            accumulate(all, err, gt.at(y, x));
            if (occ.at(y, x) == 1.0)
                accumulate(noc, err, gt.at(y, x));
            else
                accumulate(occluded, err, gt.at(y, x));
        }
}

}  // namespace

MetricReport evaluate_sample(const DisparityField& pred, const DisparityField& gt,
                             const OcclusionMask& occ) {
    RegionSums all, noc, occluded;
    accumulate_sample(pred, gt, occ, all, noc, occluded);
    return report_from(all, noc, occluded);
}

MetricReport evaluate_dataset(matcher::Estimator& est, const data::Dataset& ds) {
    if (ds.samples.empty()) throw ValidationError("evaluate_dataset: empty dataset");
    RegionSums all, noc, occluded;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const data::SceneSample& s = ds.samples[i];
        diff::Value d = est.estimate(s.left.array(), s.right.array(),
                                     "eval" + std::to_string(i));
        accumulate_sample(DisparityField(d.value()), s.disp_left, s.occ_left, all, noc,
                          occluded);
    }
    return report_from(all, noc, occluded);
}

}  // namespace pslab::eval
