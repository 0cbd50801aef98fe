#include "pslab/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "pslab/errors.hpp"
#include "pslab/eval.hpp"
#include "pslab/render.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pslab::trainer {

using data::DisparityField;
using data::Image;
using data::OcclusionMask;
using data::SceneSample;
using diff::Array;
using diff::Value;
using loss::Branch;
using loss::LossBreakdown;

namespace {

// RNG stream ids. Each purpose owns a stream keyed by (seed, iter, stream,
// item), so adding or removing draws in one path never shifts another.
constexpr std::uint64_t kBranchStream = 1;
constexpr std::uint64_t kSampleStream = 2;
constexpr std::uint64_t kRealStream = 3;
constexpr std::uint64_t kPseudoLeftStream = 4;
constexpr std::uint64_t kPseudoRightStream = 5;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

Strategy strategy_from_letter(char letter) {
    switch (letter) {
        case 'a': return {StrategyKind::BASELINE, false, false};
        case 'b': return {StrategyKind::BASELINE, true, false};
        case 'c': return {StrategyKind::PS, false, false};
        case 'd': return {StrategyKind::FPS, false, false};
        case 'e': return {StrategyKind::PS, true, false};
        case 'f': return {StrategyKind::FPS, true, false};
        case 'g': return {StrategyKind::PS, true, true};
        case 'h': return {StrategyKind::FPS, true, true};
        default:
            throw ValidationError(std::string("unknown strategy letter '") + letter +
                                  "', valid rows are a b c d e f g h");
    }
}

char strategy_letter(const Strategy& s) {
    for (char c : {'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h'}) {
        Strategy t = strategy_from_letter(c);
        if (t.kind == s.kind && t.occ_mask == s.occ_mask && t.wider_gen == s.wider_gen)
            return c;
    }
    return '-';
}

std::string strategy_name(const Strategy& s) {
    std::string n = s.kind == StrategyKind::BASELINE ? "baseline"
                    : s.kind == StrategyKind::PS     ? "ps"
                                                     : "fps";
    if (s.occ_mask) n += "+occ";
    if (s.wider_gen) n += "+wider";
    return n;
}

Strategy strategy_from_string(const std::string& str) {
    if (str.size() == 1) return strategy_from_letter(str[0]);
    Strategy s;
    std::size_t pos = 0;
    bool first = true;
    while (pos <= str.size()) {
        std::size_t next = str.find('+', pos);
        if (next == std::string::npos) next = str.size();
        const std::string tok = str.substr(pos, next - pos);
        if (first) {
            if (tok == "baseline")
                s.kind = StrategyKind::BASELINE;
            else if (tok == "ps")
                s.kind = StrategyKind::PS;
            else if (tok == "fps")
                s.kind = StrategyKind::FPS;
            else
                throw ValidationError("unknown strategy '" + str +
                                      "': expected a letter a..h or "
                                      "baseline|ps|fps with optional +occ / +wider");
            first = false;
        } else if (tok == "occ") {
            s.occ_mask = true;
        } else if (tok == "wider") {
            s.wider_gen = true;
        } else {
            throw ValidationError("unknown strategy flag '" + tok + "' in '" + str + "'");
        }
        pos = next + 1;
    }
    return s;
}

void TrainConfig::validate(int image_width, int image_height) const {
    loss.validate();
    if (iterations < 0) throw ValidationError("train config: iterations must be >= 0");
    if (batch_size < 1) throw ValidationError("train config: batch size must be >= 1");
    if (d_max < 1) throw ValidationError("train config: d_max must be >= 1");
    if (learning_rate <= 0.0) throw ValidationError("train config: learning rate must be > 0");
    if (adam_beta1 < 0.0 || adam_beta1 >= 1.0 || adam_beta2 < 0.0 || adam_beta2 >= 1.0)
        throw ValidationError("train config: Adam betas must lie in [0, 1)");
    if (adam_eps <= 0.0) throw ValidationError("train config: Adam epsilon must be > 0");
    if (brightness_range < 0.0)
        throw ValidationError("train config: brightness range must be >= 0");
    if (contrast_min <= 0.0 || contrast_max < contrast_min)
        throw ValidationError("train config: need 0 < contrast_min <= contrast_max");
    if (checkpoint_every < 0 || eval_every < 0)
        throw ValidationError("train config: periodic intervals must be >= 0");
    if (mode == matcher::Mode::DIRECT) {
        if (strategy.wider_gen)
            throw ValidationError(
                "train config: the direct estimator works on full frames and cannot "
                "use wider generation");
        if (image_width <= d_max)
            throw ValidationError("train config: image width must exceed d_max");
        return;
    }
    if (crop_height < 1 || crop_height > image_height)
        throw ValidationError("train config: crop height " + std::to_string(crop_height) +
                              " does not fit image height " + std::to_string(image_height));
    if (crop_width <= d_max)
        throw ValidationError("train config: crop width must exceed d_max");
    const int wide = crop_width + (strategy.wider_gen ? d_max : 0);
    if (wide > image_width)
        throw ValidationError("train config: crop width " + std::to_string(crop_width) +
                              (strategy.wider_gen ? " plus wider margin " + std::to_string(d_max)
                                                  : std::string()) +
                              " does not fit image width " + std::to_string(image_width));
}

AugmentResult augment(const Image& left, const Image& right, Rng& rng, const TrainConfig& cfg) {
    if (left.width() != right.width() || left.height() != right.height() ||
        left.channels() != right.channels())
        throw ValidationError("augment: views differ in shape");
    if (cfg.crop_width > left.width() || cfg.crop_height > left.height())
        throw ValidationError("augment: crop " + std::to_string(cfg.crop_width) + "x" +
                              std::to_string(cfg.crop_height) + " larger than image " +
                              std::to_string(left.width()) + "x" +
                              std::to_string(left.height()));
    AugmentResult r;
    r.x0 = rng.range_int(0, left.width() - cfg.crop_width);
    r.y0 = rng.range_int(0, left.height() - cfg.crop_height);
    r.brightness = rng.uniform(-cfg.brightness_range, cfg.brightness_range);
    r.contrast = rng.uniform(cfg.contrast_min, cfg.contrast_max);

    auto apply = [&](const Image& im) {
        Array a = diff::crop(im.array(), r.y0, r.x0, cfg.crop_height, cfg.crop_width);
        for (double& v : a.vec())
            v = std::clamp((v - 0.5) * r.contrast + 0.5 + r.brightness, 0.0, 1.0);
        return Image(std::move(a));
    };
    r.left = apply(left);
    r.right = apply(right);
    return r;
}

namespace {

struct ItemOutcome {
    LossBreakdown bd;
    bool skipped = false;
    Value total;
};

OcclusionMask ones_mask(int h, int w) {
    return OcclusionMask(Array(h, w, 1, 1.0));
}

std::size_t live_pixels(const OcclusionMask& occ, const Array& validity) {
    std::size_t n = 0;
    for (int y = 0; y < occ.height(); ++y)
        for (int x = 0; x < occ.width(); ++x)
            if (occ.at(y, x) == 1.0 && validity.at(y, x) != 0.0) ++n;
    return n;
}

Array combined_mask(const OcclusionMask& occ, const Array& validity) {
    Array m(occ.height(), occ.width(), 1);
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) m.at(y, x) = occ.at(y, x) * validity.at(y, x);
    return m;
}

void fill_debug(StepDebug* dbg, Branch branch, const OcclusionMask& occ, const Array& validity,
                const Image& feedback_ref, const Array& warp_source, const Value& disp, int x0,
                int y0) {
    if (!dbg) return;
    dbg->branch = branch;
    dbg->flipped_space = branch == Branch::RIGHT;
    dbg->skipped = false;
    dbg->loss_mask = combined_mask(occ, validity);
    dbg->feedback_ref = feedback_ref.array();
    dbg->warp_source = warp_source;
    dbg->disparity = disp.value();
    dbg->x0 = x0;
    dbg->y0 = y0;
}

ItemOutcome skipped_outcome(StepDebug* dbg, Branch branch) {
    if (dbg) {
        dbg->branch = branch;
        dbg->flipped_space = branch == Branch::RIGHT;
        dbg->skipped = true;
    }
    ItemOutcome oc;
    oc.bd.branch_taken = branch;
    oc.skipped = true;
    return oc;
}

// Network and feedback both see the real pair; augmentation touches only the
// network inputs.
ItemOutcome real_branch_item(const SceneSample& s, const std::string& lkey, TrainState& st,
                             const TrainConfig& cfg, long iter, int item, StepDebug* dbg) {
    Rng rng(cfg.seed, iter, kRealStream, item);
    Image fb_left, fb_right, in_left, in_right;
    int x0 = 0, y0 = 0;
    if (cfg.mode == matcher::Mode::DIRECT) {
        fb_left = in_left = s.left;
        fb_right = in_right = s.right;
    } else {
        AugmentResult ar = augment(s.left, s.right, rng, cfg);
        x0 = ar.x0;
        y0 = ar.y0;
        fb_left = Image(diff::crop(s.left.array(), y0, x0, cfg.crop_height, cfg.crop_width));
        fb_right = Image(diff::crop(s.right.array(), y0, x0, cfg.crop_height, cfg.crop_width));
        in_left = std::move(ar.left);
        in_right = std::move(ar.right);
    }

    Value d = st.est.estimate(in_left.array(), in_right.array(), lkey);
    OcclusionMask occ = cfg.strategy.occ_mask
                            ? render::occlusion_mask(DisparityField(d.value()), fb_left.width())
                            : ones_mask(fb_left.height(), fb_left.width());
    loss::Warped wr = loss::backward_warp(Value::constant(fb_right.array()), d, -1);
    if (live_pixels(occ, wr.validity) == 0) return skipped_outcome(dbg, Branch::REAL);

    Value lp = loss::photometric_loss(fb_left, wr.image, occ, wr.validity, cfg.loss);
    Value ls = loss::smoothness_loss(d, fb_left, cfg.loss);
    const double lambda = loss::lambda_at(iter, cfg.loss);
    Value total = loss::total_loss(lp, ls, lambda);

    fill_debug(dbg, Branch::REAL, occ, wr.validity, fb_left, fb_right.array(), d, x0, y0);
    return {{lp.item(), ls.item(), lambda, total.item(), Branch::REAL}, false, total};
}

// One pseudo branch, expressed in branch space: `ref` plays the left view and
// `other` the right. The RIGHT branch passes horizontally flipped views here,
// which puts its generation occlusion on the correct side of occluders.
ItemOutcome pseudo_branch_item(const Image& ref, const Image& other, Branch branch,
                               const std::string& lkey, TrainState& st, const TrainConfig& cfg,
                               long iter, int item, StepDebug* dbg) {
    Rng rng(cfg.seed, iter,
            branch == Branch::LEFT ? kPseudoLeftStream : kPseudoRightStream, item);
    const bool direct = cfg.mode == matcher::Mode::DIRECT;
    const int crop_w = direct ? ref.width() : cfg.crop_width;
    const int crop_h = direct ? ref.height() : cfg.crop_height;
    const int wide_w = crop_w + (cfg.strategy.wider_gen ? cfg.d_max : 0);
    int x0 = 0, y0 = 0;
    if (!direct) {
        x0 = rng.range_int(0, ref.width() - wide_w);
        y0 = rng.range_int(0, ref.height() - crop_h);
    }
    Image ref_wide(diff::crop(ref.array(), y0, x0, crop_h, wide_w));
    Array other_wide = diff::crop(other.array(), y0, x0, crop_h, wide_w);

    // Generation pass: estimate on the real pair, used by value only. The
    // scatter consumes plain numbers, so no gradient reaches this estimate.
    Value gen = st.est.estimate(ref_wide.array(), other_wide, lkey);
    DisparityField gen_disp(gen.value());

    render::PseudoPair pp;
    if (cfg.strategy.wider_gen) {
        pp = render::generate_pseudo_pair(ref_wide, gen_disp, crop_w);
    } else {
        render::RenderResult rr = render::forward_render(ref_wide, gen_disp, crop_w);
        pp.pseudo = render::fill_holes(rr);
        pp.ref = ref_wide;
        pp.occ = std::move(rr.occ);
    }

    OcclusionMask occ =
        cfg.strategy.occ_mask ? std::move(pp.occ) : ones_mask(crop_h, crop_w);
    Image in_ref = pp.ref, in_pseudo = pp.pseudo;
    if (!direct) {
        AugmentResult ar = augment(pp.ref, pp.pseudo, rng, cfg);
        in_ref = std::move(ar.left);
        in_pseudo = std::move(ar.right);
    }

    Value d = st.est.estimate(in_ref.array(), in_pseudo.array(), lkey);
    Array other_crop = diff::crop(other.array(), y0, x0, crop_h, crop_w);
    const Array& warp_src = cfg.loss.feedback_pseudo ? pp.pseudo.array() : other_crop;
    loss::Warped wr = loss::backward_warp(Value::constant(warp_src), d, -1);
    if (live_pixels(occ, wr.validity) == 0) return skipped_outcome(dbg, branch);

    Value lp = loss::photometric_loss(pp.ref, wr.image, occ, wr.validity, cfg.loss);
    Value ls = loss::smoothness_loss(d, pp.ref, cfg.loss);
    const double lambda = loss::lambda_at(iter, cfg.loss);
    Value total = loss::total_loss(lp, ls, lambda);

    fill_debug(dbg, branch, occ, wr.validity, pp.ref, warp_src, d, x0, y0);
    return {{lp.item(), ls.item(), lambda, total.item(), branch}, false, total};
}

Branch pick_branch(const TrainConfig& cfg, long iter, int item) {
    switch (cfg.strategy.kind) {
        case StrategyKind::BASELINE: return Branch::REAL;
        case StrategyKind::PS:
            return Rng(cfg.seed, iter, kBranchStream, item)
                           .bernoulli(cfg.loss.branch_probability)
                       ? Branch::REAL
                       : Branch::RIGHT;
        case StrategyKind::FPS:
            return Rng(cfg.seed, iter, kBranchStream, item)
                           .bernoulli(cfg.loss.branch_probability)
                       ? Branch::LEFT
                       : Branch::RIGHT;
    }
    throw ValidationError("train config: bad strategy kind");
}

ItemOutcome run_item(const SceneSample& s, const std::string& lkey, TrainState& st,
                     const TrainConfig& cfg, long iter, int item, StepDebug* dbg) {
    const Branch branch = pick_branch(cfg, iter, item);
    switch (branch) {
        case Branch::REAL:
            return real_branch_item(s, lkey, st, cfg, iter, item, dbg);
        case Branch::LEFT:
            return pseudo_branch_item(s.left, s.right, Branch::LEFT, lkey, st, cfg, iter, item,
                                      dbg);
        case Branch::RIGHT:
            return pseudo_branch_item(data::hflip(s.right), data::hflip(s.left), Branch::RIGHT,
                                      lkey + "F", st, cfg, iter, item, dbg);
    }
    throw ValidationError("train step: bad branch");
}

double cosine_lr(const TrainConfig& cfg, long iter) {
    const double total = std::max(cfg.iterations, 1);
    const double t = std::min(static_cast<double>(iter), total) / total;
    return cfg.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

void ensure_adam(TrainState& st) {
    auto& params = st.est.params();
    while (st.adam_m.size() < params.size()) {
        const Array& v = params[st.adam_m.size()].value.value();
        st.adam_m.emplace_back(v.height(), v.width(), v.channels(), 0.0);
        st.adam_v.emplace_back(v.height(), v.width(), v.channels(), 0.0);
    }
}

void adam_apply(TrainState& st, const TrainConfig& cfg, int live_items) {
    ensure_adam(st);
    st.adam_t += 1;
    const double lr = cosine_lr(cfg, st.iter);
    const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(st.adam_t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(st.adam_t));
    const double inv = 1.0 / live_items;

    auto& params = st.est.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
        diff::Node& n = *params[i].value.node();
        const bool has_grad = n.grad_allocated;
        double* value = n.value.data();
        const double* grad = has_grad ? n.grad.data() : nullptr;
        double* m = st.adam_m[i].data();
        double* v = st.adam_v[i].data();
        const std::size_t count = n.value.size();
        for (std::size_t j = 0; j < count; ++j) {
            const double g = has_grad ? grad[j] * inv : 0.0;
            m[j] = b1 * m[j] + (1.0 - b1) * g;
            v[j] = b2 * v[j] + (1.0 - b2) * g * g;
            value[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + cfg.adam_eps);
        }
        n.value.check_finite("adam update of " + params[i].name);
    }
    st.est.zero_grads();
}

}  // namespace

TrainState make_state(const TrainConfig& cfg, int channels) {
    return TrainState(matcher::Estimator(cfg.mode, cfg.d_max, channels, cfg.seed, cfg.net));
}

LossBreakdown train_step(const SceneSample& sample, TrainState& state, const TrainConfig& cfg,
                         StepDebug* debug) {
    cfg.validate(sample.left.width(), sample.left.height());
    try {
        ItemOutcome oc = run_item(sample, "s0", state, cfg, state.iter, 0, debug);
        if (oc.skipped) {
            state.skipped += 1;
            state.est.zero_grads();
        } else {
            oc.total.backward();
            adam_apply(state, cfg, 1);
            state.loss_history.push_back(oc.bd.total);
        }
        state.iter += 1;
        return oc.bd;
    } catch (const NonFiniteError& e) {
        throw DivergenceError("iteration " + std::to_string(state.iter) + ": " + e.what());
    }
}

namespace {

void write_eval_point(TrainState& st, const data::Dataset& heldout, std::ofstream* csv) {
    eval::MetricReport r = eval::evaluate_dataset(st.est, heldout);
    EvalPoint p{st.iter, r.epe_all, r.epe_noc, r.epe_occ,
                r.d1_all, r.d1_noc, r.d1_occ, r.bad3_all};
    st.eval_history.push_back(p);
    if (csv && csv->is_open())
        *csv << p.iter << ',' << fmt(p.epe_all) << ',' << fmt(p.epe_noc) << ','
             << fmt(p.epe_occ) << ',' << fmt(p.d1_all) << ',' << fmt(p.d1_noc) << ','
             << fmt(p.d1_occ) << ',' << fmt(p.bad3_all) << '\n';
}

std::string ckpt_name(long iter) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "ckpt_%06ld.json", iter);
    return buf;
}

}  // namespace

void train_continue(const data::Dataset& ds, const TrainConfig& cfg, TrainState& state,
                    const std::string& out_dir, const data::Dataset* heldout) {
    if (ds.samples.empty()) throw ValidationError("train: dataset is empty");
    cfg.validate(ds.width, ds.height);
    if (cfg.eval_every > 0 && !heldout)
        throw ValidationError("train: eval_every set but no held-out dataset given");

    std::ofstream log, timing, eval_csv;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        const bool resuming = state.iter > 0;
        const auto flags = resuming ? std::ios::app : std::ios::out;
        log.open(out_dir + "/train_log.csv", flags);
        timing.open(out_dir + "/timing.csv", flags);
        if (!log || !timing) throw IoError("train: cannot write logs in " + out_dir);
        if (!resuming) {
            log << "iter,item,sample,branch,skipped,lp,ls,lambda,lr,total\n";
            timing << "iter,wall_ms\n";
        }
        if (heldout) {
            eval_csv.open(out_dir + "/eval_log.csv", flags);
            if (!eval_csv) throw IoError("train: cannot write eval log in " + out_dir);
            if (!resuming)
                eval_csv << "iter,epe_all,epe_noc,epe_occ,d1_all,d1_noc,d1_occ,bad3_all\n";
        }
    }

    const std::size_t n = ds.samples.size();
    for (long iter = state.iter; iter < cfg.iterations; ++iter) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            int live = 0;
            double total_sum = 0.0;
            const double lr = cosine_lr(cfg, iter);
            for (int item = 0; item < cfg.batch_size; ++item) {
                const std::size_t idx = Rng(cfg.seed, iter, kSampleStream, item).below(n);
                ItemOutcome oc = run_item(ds.samples[idx], "s" + std::to_string(idx), state,
                                          cfg, iter, item, nullptr);
                if (oc.skipped) {
                    state.skipped += 1;
                } else {
                    oc.total.backward();
                    ++live;
                    total_sum += oc.bd.total;
                }
                if (log.is_open())
                    log << iter << ',' << item << ',' << idx << ','
                        << loss::branch_name(oc.bd.branch_taken) << ',' << (oc.skipped ? 1 : 0)
                        << ',' << fmt(oc.bd.lp) << ',' << fmt(oc.bd.ls) << ','
                        << fmt(oc.bd.lambda) << ',' << fmt(lr) << ',' << fmt(oc.bd.total)
                        << '\n';
            }
            if (live > 0)
                adam_apply(state, cfg, live);
            else
                state.est.zero_grads();
            state.iter = iter + 1;
            if (live > 0) state.loss_history.push_back(total_sum / live);
        } catch (const NonFiniteError& e) {
            throw DivergenceError("iteration " + std::to_string(iter) + ": " + e.what());
        }

        if (cfg.checkpoint_every > 0 && state.iter % cfg.checkpoint_every == 0 &&
            !out_dir.empty() && state.iter < cfg.iterations)
            save_state(state, out_dir + "/" + ckpt_name(state.iter));
        if (cfg.eval_every > 0 && state.iter % cfg.eval_every == 0 &&
            state.iter < cfg.iterations)
            write_eval_point(state, *heldout, &eval_csv);

        if (timing.is_open()) {
            const auto t1 = std::chrono::steady_clock::now();
            const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.3f", ms);
            timing << iter << ',' << buf << '\n';
        }
    }

    if (heldout &&
        (state.eval_history.empty() || state.eval_history.back().iter != state.iter))
        write_eval_point(state, *heldout, &eval_csv);
    if (!out_dir.empty()) save_state(state, out_dir + "/ckpt_final.json");
}

TrainState train(const data::Dataset& ds, const TrainConfig& cfg, const std::string& out_dir,
                 const data::Dataset* heldout) {
    if (ds.samples.empty()) throw ValidationError("train: dataset is empty");
    TrainState state = make_state(cfg, ds.channels);
    train_continue(ds, cfg, state, out_dir, heldout);
    return state;
}

void save_state(const TrainState& state, const std::string& path) {
    json j;
    j["format"] = 1;
    j["iter"] = state.iter;
    j["adam_t"] = state.adam_t;
    j["skipped"] = state.skipped;
    j["loss_history"] = state.loss_history;
    json evals = json::array();
    for (const EvalPoint& p : state.eval_history)
        evals.push_back({{"iter", p.iter},
                         {"epe_all", p.epe_all},
                         {"epe_noc", p.epe_noc},
                         {"epe_occ", p.epe_occ},
                         {"d1_all", p.d1_all},
                         {"d1_noc", p.d1_noc},
                         {"d1_occ", p.d1_occ},
                         {"bad3_all", p.bad3_all}});
    j["eval_history"] = std::move(evals);
    j["estimator"] = json::parse(state.est.serialize());
    auto dump_moments = [](const std::vector<Array>& ms) {
        json arr = json::array();
        for (const Array& a : ms)
            arr.push_back({{"h", a.height()}, {"w", a.width()}, {"c", a.channels()},
                           {"data", a.vec()}});
        return arr;
    };
    j["adam_m"] = dump_moments(state.adam_m);
    j["adam_v"] = dump_moments(state.adam_v);

    std::ofstream out(path);
    if (!out) throw IoError("checkpoint: cannot open " + path + " for writing");
    out << j.dump(1) << "\n";
    if (!out) throw IoError("checkpoint: write failed for " + path);
}

TrainState load_state(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("checkpoint: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("checkpoint: bad JSON in " + path + ": " + e.what());
    }
    try {
        if (j.at("format").get<int>() != 1)
            throw IoError("checkpoint: unsupported format version in " + path);
        TrainState st(matcher::Estimator::deserialize(j.at("estimator").dump(1), path));
        st.iter = j.at("iter").get<long>();
        st.adam_t = j.at("adam_t").get<long>();
        st.skipped = j.at("skipped").get<long>();
        st.loss_history = j.at("loss_history").get<std::vector<double>>();
        for (const json& p : j.at("eval_history")) {
            EvalPoint e;
            e.iter = p.at("iter").get<long>();
            e.epe_all = p.at("epe_all").get<double>();
            e.epe_noc = p.at("epe_noc").get<double>();
            e.epe_occ = p.at("epe_occ").get<double>();
            e.d1_all = p.at("d1_all").get<double>();
            e.d1_noc = p.at("d1_noc").get<double>();
            e.d1_occ = p.at("d1_occ").get<double>();
            e.bad3_all = p.at("bad3_all").get<double>();
            st.eval_history.push_back(e);
        }
        auto load_moments = [&](const char* key) {
            std::vector<Array> ms;
            for (const json& p : j.at(key))
                ms.push_back(Array::from_data(p.at("h").get<int>(), p.at("w").get<int>(),
                                              p.at("c").get<int>(),
                                              p.at("data").get<std::vector<double>>()));
            return ms;
        };
        st.adam_m = load_moments("adam_m");
        st.adam_v = load_moments("adam_v");
        if (st.adam_m.size() != st.adam_v.size() ||
            st.adam_m.size() > st.est.params().size())
            throw IoError("checkpoint: moment count mismatch in " + path);
        return st;
    } catch (const json::exception& e) {
        throw IoError("checkpoint: missing fields in " + path + ": " + e.what());
    }
}

}  // namespace pslab::trainer
