#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pslab/ablation.hpp"
#include "pslab/dataset.hpp"
#include "pslab/errors.hpp"
#include "pslab/eval.hpp"
#include "pslab/pfm.hpp"
#include "pslab/png_io.hpp"
#include "pslab/render.hpp"
#include "pslab/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pslab;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Config plumbing. A config file is `key = value` lines with '#' comments;
// the same keys appear in every run manifest, so a manifest rerun never needs
// the original file.

long to_long(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long r = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': expected an integer, got '" + v + "'");
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': expected a number, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "on") return true;
    if (v == "0" || v == "false" || v == "off") return false;
    throw ValidationError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

const char* kConfigKeys =
    "mode features agg_channels tau d_max iterations batch_size crop_width crop_height "
    "learning_rate adam_beta1 adam_beta2 adam_eps brightness_range contrast_min "
    "contrast_max checkpoint_every eval_every alpha branch_probability lambda_start "
    "lambda_end lambda_ramp_iters ssim_c1 ssim_c2 feedback_pseudo detach_normalization_mean";

void apply_config_key(trainer::TrainConfig& c, const std::string& k, const std::string& v) {
    if (k == "mode")
        c.mode = matcher::mode_from_string(v);
    else if (k == "features")
        c.net.features = static_cast<int>(to_long(k, v));
    else if (k == "agg_channels")
        c.net.agg_channels = static_cast<int>(to_long(k, v));
    else if (k == "tau")
        c.net.tau = to_double(k, v);
    else if (k == "d_max")
        c.d_max = static_cast<int>(to_long(k, v));
    else if (k == "iterations")
        c.iterations = static_cast<int>(to_long(k, v));
    else if (k == "batch_size")
        c.batch_size = static_cast<int>(to_long(k, v));
    else if (k == "crop_width")
        c.crop_width = static_cast<int>(to_long(k, v));
    else if (k == "crop_height")
        c.crop_height = static_cast<int>(to_long(k, v));
    else if (k == "learning_rate")
        c.learning_rate = to_double(k, v);
    else if (k == "adam_beta1")
        c.adam_beta1 = to_double(k, v);
    else if (k == "adam_beta2")
        c.adam_beta2 = to_double(k, v);
    else if (k == "adam_eps")
        c.adam_eps = to_double(k, v);
    else if (k == "brightness_range")
        c.brightness_range = to_double(k, v);
    else if (k == "contrast_min")
        c.contrast_min = to_double(k, v);
    else if (k == "contrast_max")
        c.contrast_max = to_double(k, v);
    else if (k == "checkpoint_every")
        c.checkpoint_every = static_cast<int>(to_long(k, v));
    else if (k == "eval_every")
        c.eval_every = static_cast<int>(to_long(k, v));
    else if (k == "alpha")
        c.loss.alpha = to_double(k, v);
    else if (k == "branch_probability")
        c.loss.branch_probability = to_double(k, v);
    else if (k == "lambda_start")
        c.loss.lambda_start = to_double(k, v);
    else if (k == "lambda_end")
        c.loss.lambda_end = to_double(k, v);
    else if (k == "lambda_ramp_iters")
        c.loss.lambda_ramp_iters = static_cast<int>(to_long(k, v));
    else if (k == "ssim_c1")
        c.loss.ssim_c1 = to_double(k, v);
    else if (k == "ssim_c2")
        c.loss.ssim_c2 = to_double(k, v);
    else if (k == "feedback_pseudo")
        c.loss.feedback_pseudo = to_bool(k, v);
    else if (k == "detach_normalization_mean")
        c.loss.detach_normalization_mean = to_bool(k, v);
    else
        throw ValidationError("unknown config key '" + k + "'; valid keys: " + kConfigKeys);
}

std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

void load_config_file(trainer::TrainConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = strip(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config: " + path + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
        apply_config_key(cfg, strip(line.substr(0, eq)), strip(line.substr(eq + 1)));
    }
}

json cfg_to_json(const trainer::TrainConfig& c) {
    return {{"mode", matcher::mode_name(c.mode)},
            {"features", c.net.features},
            {"agg_channels", c.net.agg_channels},
            {"tau", c.net.tau},
            {"d_max", c.d_max},
            {"iterations", c.iterations},
            {"batch_size", c.batch_size},
            {"crop_width", c.crop_width},
            {"crop_height", c.crop_height},
            {"learning_rate", c.learning_rate},
            {"adam_beta1", c.adam_beta1},
            {"adam_beta2", c.adam_beta2},
            {"adam_eps", c.adam_eps},
            {"brightness_range", c.brightness_range},
            {"contrast_min", c.contrast_min},
            {"contrast_max", c.contrast_max},
            {"checkpoint_every", c.checkpoint_every},
            {"eval_every", c.eval_every},
            {"alpha", c.loss.alpha},
            {"branch_probability", c.loss.branch_probability},
            {"lambda_start", c.loss.lambda_start},
            {"lambda_end", c.loss.lambda_end},
            {"lambda_ramp_iters", c.loss.lambda_ramp_iters},
            {"ssim_c1", c.loss.ssim_c1},
            {"ssim_c2", c.loss.ssim_c2},
            {"feedback_pseudo", c.loss.feedback_pseudo},
            {"detach_normalization_mean", c.loss.detach_normalization_mean}};
}

trainer::TrainConfig cfg_from_json(const json& j) {
    trainer::TrainConfig c;
    for (const auto& [k, v] : j.items())
        apply_config_key(c, k, v.is_string() ? v.get<std::string>() : v.dump());
    return c;
}

// ---------------------------------------------------------------------------
// Run manifests. Written into the output directory before any heavy work;
// `pslab rerun <manifest> --out DIR` replays the stored options.

void write_run_manifest(const std::string& out_dir, const std::string& subcommand,
                        const json& options, int threads) {
    fs::create_directories(out_dir);
    json j;
    j["tool"] = "pslab";
    j["version"] = kVersion;
    j["subcommand"] = subcommand;
    j["threads"] = threads;
    j["options"] = options;
    const std::string path = out_dir + "/run_manifest.json";
    std::ofstream f(path);
    if (!f) throw IoError("manifest: cannot write " + path);
    f << j.dump(1) << "\n";
    if (!f) throw IoError("manifest: write failed for " + path);
}

// ---------------------------------------------------------------------------
// gen

struct GenOpts {
    std::string out;
    int count = 10;
    int width = 96, height = 64, dmax = 16;
    int layers = 3, channels = 1;
    std::uint64_t seed = 0;
    bool force = false;
};

json gen_to_json(const GenOpts& o) {
    return {{"out", o.out},         {"count", o.count},   {"width", o.width},
            {"height", o.height},   {"dmax", o.dmax},     {"layers", o.layers},
            {"channels", o.channels}, {"seed", o.seed},   {"force", o.force}};
}

GenOpts gen_from_json(const json& j) {
    GenOpts o;
    o.out = j.at("out").get<std::string>();
    o.count = j.at("count").get<int>();
    o.width = j.at("width").get<int>();
    o.height = j.at("height").get<int>();
    o.dmax = j.at("dmax").get<int>();
    o.layers = j.at("layers").get<int>();
    o.channels = j.at("channels").get<int>();
    o.seed = j.at("seed").get<std::uint64_t>();
    o.force = j.at("force").get<bool>();
    return o;
}

void cmd_gen(const GenOpts& o, int threads) {
    data::SceneConfig base;
    base.width = o.width;
    base.height = o.height;
    base.max_disparity = o.dmax;
    base.num_foreground_layers = o.layers;
    base.channels = o.channels;
    base.validate();
    if (o.count < 1) throw ValidationError("gen: count must be >= 1");
    if (fs::exists(o.out) && !fs::is_empty(o.out) && !o.force)
        throw IoError("gen: output directory " + o.out +
                      " exists and is not empty (use --force to overwrite)");
    write_run_manifest(o.out, "gen", gen_to_json(o), threads);
    data::Dataset ds = data::generate_dataset(base, o.count, o.seed);
    data::write_dataset(o.out, ds, true);
    std::cout << "wrote " << o.count << " scenes (" << o.width << "x" << o.height
              << ", d_max " << o.dmax << ") to " << o.out << "\n";
}

// ---------------------------------------------------------------------------
// render

struct RenderOpts {
    std::string left, disp, out;
    int crop_width = 0;  // 0 = full input width
};

json render_to_json(const RenderOpts& o) {
    return {{"left", o.left}, {"disp", o.disp}, {"out", o.out}, {"crop_width", o.crop_width}};
}

RenderOpts render_from_json(const json& j) {
    RenderOpts o;
    o.left = j.at("left").get<std::string>();
    o.disp = j.at("disp").get<std::string>();
    o.out = j.at("out").get<std::string>();
    o.crop_width = j.at("crop_width").get<int>();
    return o;
}

void cmd_render(const RenderOpts& o, int threads) {
    data::Image left(data::read_png(o.left));
    data::DisparityField disp(data::read_pfm(o.disp));
    if (disp.height() != left.height() || disp.width() != left.width())
        throw ValidationError("render: image is " + std::to_string(left.width()) + "x" +
                              std::to_string(left.height()) + " but disparity is " +
                              std::to_string(disp.width()) + "x" +
                              std::to_string(disp.height()));
    const int crop_w = o.crop_width > 0 ? o.crop_width : left.width();
    write_run_manifest(o.out, "render", render_to_json(o), threads);

    render::PseudoPair pp = render::generate_pseudo_pair(left, disp, crop_w);
    render::RenderResult rr = render::forward_render(left, disp, left.width());
    diff::Array holes(left.height(), crop_w, 1);
    for (int y = 0; y < holes.height(); ++y)
        for (int x = 0; x < holes.width(); ++x) holes.at(y, x) = 1.0 - rr.hole_mask.at(y, x);

    data::write_png(o.out + "/pseudo.png", pp.pseudo.array());
    data::write_png(o.out + "/occlusion.png", pp.occ.array());
    data::write_png(o.out + "/holes.png", holes);
    std::cout << "rendered " << crop_w << "x" << left.height() << " pseudo view to " << o.out
              << "\n";
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
    std::string data, heldout, out, config_file, resume;
    std::string strategy = "a";
    std::uint64_t seed = 0;
    long iterations = -1;  // -1 = keep config value
    trainer::TrainConfig cfg;
};

void resolve_train_cfg(TrainOpts& o) {
    if (!o.config_file.empty()) load_config_file(o.cfg, o.config_file);
    o.cfg.strategy = trainer::strategy_from_string(o.strategy);
    o.cfg.seed = o.seed;
    if (o.iterations >= 0) o.cfg.iterations = static_cast<int>(o.iterations);
}

json train_to_json(const TrainOpts& o) {
    return {{"data", o.data},
            {"heldout", o.heldout},
            {"out", o.out},
            {"resume", o.resume},
            {"strategy", std::string(1, trainer::strategy_letter(o.cfg.strategy))},
            {"seed", o.seed},
            {"config", cfg_to_json(o.cfg)}};
}

TrainOpts train_from_json(const json& j) {
    TrainOpts o;
    o.data = j.at("data").get<std::string>();
    o.heldout = j.at("heldout").get<std::string>();
    o.out = j.at("out").get<std::string>();
    o.resume = j.at("resume").get<std::string>();
    o.strategy = j.at("strategy").get<std::string>();
    o.seed = j.at("seed").get<std::uint64_t>();
    o.cfg = cfg_from_json(j.at("config"));
    o.cfg.strategy = trainer::strategy_from_string(o.strategy);
    o.cfg.seed = o.seed;
    return o;
}

void cmd_train(const TrainOpts& o, int threads) {
    data::Dataset ds = data::load_dataset(o.data);
    data::Dataset heldout;
    if (!o.heldout.empty()) heldout = data::load_dataset(o.heldout);
    if (o.cfg.eval_every > 0 && o.heldout.empty())
        throw ValidationError("train: eval_every requires --heldout");
    o.cfg.validate(ds.width, ds.height);
    write_run_manifest(o.out, "train", train_to_json(o), threads);

    trainer::TrainState state =
        o.resume.empty() ? trainer::make_state(o.cfg, ds.channels)
                         : trainer::load_state(o.resume);
    if (!o.resume.empty()) {
        if (state.est.mode() != o.cfg.mode || state.est.d_max() != o.cfg.d_max ||
            state.est.channels() != ds.channels)
            throw ValidationError("train: checkpoint " + o.resume +
                                  " does not match the config (mode/d_max/channels)");
    }
    trainer::train_continue(ds, o.cfg, state, o.out,
                            o.heldout.empty() ? nullptr : &heldout);
    std::cout << "trained strategy " << trainer::strategy_letter(o.cfg.strategy) << " ("
              << trainer::strategy_name(o.cfg.strategy) << ") to iteration " << state.iter
              << "; final checkpoint " << o.out << "/ckpt_final.json\n";
    if (!state.eval_history.empty()) {
        const trainer::EvalPoint& p = state.eval_history.back();
        std::cout << "held-out: epe_all " << p.epe_all << "  d1_all " << p.d1_all << "%\n";
    }
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
    std::string ckpt, data, heldout, out;
    bool dump_png = false;
};

json eval_to_json(const EvalOpts& o) {
    return {{"ckpt", o.ckpt},
            {"data", o.data},
            {"heldout", o.heldout},
            {"out", o.out},
            {"dump_png", o.dump_png}};
}

EvalOpts eval_from_json(const json& j) {
    EvalOpts o;
    o.ckpt = j.at("ckpt").get<std::string>();
    o.data = j.at("data").get<std::string>();
    o.heldout = j.at("heldout").get<std::string>();
    o.out = j.at("out").get<std::string>();
    o.dump_png = j.at("dump_png").get<bool>();
    return o;
}

void write_report_row(std::ofstream& out, const std::string& label,
                      const eval::MetricReport& r) {
    out << label << ',' << fmt(r.epe_all) << ',' << fmt(r.epe_noc) << ',' << fmt(r.epe_occ)
        << ',' << fmt(r.d1_all) << ',' << fmt(r.d1_noc) << ',' << fmt(r.d1_occ) << ','
        << fmt(r.bad3_all) << ',' << fmt(r.bad3_noc) << ',' << r.n_all << ',' << r.n_noc
        << ',' << r.n_occ << '\n';
}

diff::Array normalized(const diff::Array& a) {
    diff::Array out(a.height(), a.width(), 1);
    const double hi = a.max_value();
    if (hi <= 0.0) return out;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) out.at(y, x) = a.at(y, x) / hi;
    return out;
}

void dump_sample_pngs(matcher::Estimator& est, const data::Dataset& ds,
                      const std::string& dir) {
    fs::create_directories(dir);
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const data::SceneSample& s = ds.samples[i];
        diff::Value pred = est.estimate(s.left.array(), s.right.array(),
                                        "eval" + std::to_string(i));
        diff::Array err(pred.height(), pred.width(), 1);
        for (int y = 0; y < err.height(); ++y)
            for (int x = 0; x < err.width(); ++x)
                err.at(y, x) = std::abs(pred.value().at(y, x) - s.disp_left.at(y, x));
        char name[32];
        std::snprintf(name, sizeof(name), "%06zu", i);
        data::write_png(dir + "/" + name + "_pred.png", normalized(pred.value()));
        data::write_png(dir + "/" + name + "_err.png", normalized(err));
        data::write_png(dir + "/" + name + "_occ.png", s.occ_left.array());
    }
}

void cmd_eval(const EvalOpts& o, int threads) {
    trainer::TrainState state = trainer::load_state(o.ckpt);
    data::Dataset ds = data::load_dataset(o.data);
    write_run_manifest(o.out, "eval", eval_to_json(o), threads);

    std::ofstream csv(o.out + "/metrics.csv");
    if (!csv) throw IoError("eval: cannot write " + o.out + "/metrics.csv");
    csv << "label,epe_all,epe_noc,epe_occ,d1_all,d1_noc,d1_occ,bad3_all,bad3_noc,"
           "n_all,n_noc,n_occ\n";
    eval::MetricReport r = eval::evaluate_dataset(state.est, ds);
    write_report_row(csv, "data", r);
    std::cout << "data:    epe_all " << r.epe_all << "  d1_all " << r.d1_all << "%\n";
    if (!o.heldout.empty()) {
        data::Dataset hd = data::load_dataset(o.heldout);
        eval::MetricReport rh = eval::evaluate_dataset(state.est, hd);
        write_report_row(csv, "heldout", rh);
        std::cout << "heldout: epe_all " << rh.epe_all << "  d1_all " << rh.d1_all << "%\n";
    }
    if (o.dump_png) dump_sample_pngs(state.est, ds, o.out + "/png");
    std::cout << "report written to " << o.out << "/metrics.csv\n";
}

// ---------------------------------------------------------------------------
// ablate

struct AblateOpts {
    std::string data, heldout, out, config_file;
    std::string rows = "a,b,c,d,e,f,g,h";
    std::string seeds = "0";
    long iterations = -1;
    trainer::TrainConfig cfg;
};

void resolve_ablate_cfg(AblateOpts& o) {
    if (!o.config_file.empty()) load_config_file(o.cfg, o.config_file);
    if (o.iterations >= 0) o.cfg.iterations = static_cast<int>(o.iterations);
}

json ablate_to_json(const AblateOpts& o) {
    return {{"data", o.data},
            {"heldout", o.heldout},
            {"out", o.out},
            {"rows", o.rows},
            {"seeds", o.seeds},
            {"config", cfg_to_json(o.cfg)}};
}

AblateOpts ablate_from_json(const json& j) {
    AblateOpts o;
    o.data = j.at("data").get<std::string>();
    o.heldout = j.at("heldout").get<std::string>();
    o.out = j.at("out").get<std::string>();
    o.rows = j.at("rows").get<std::string>();
    o.seeds = j.at("seeds").get<std::string>();
    o.cfg = cfg_from_json(j.at("config"));
    return o;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = strip(tok);
        if (tok.empty()) continue;
        try {
            seeds.push_back(std::stoull(tok));
        } catch (const std::exception&) {
            throw ValidationError("ablate: bad seed '" + tok + "'");
        }
    }
    if (seeds.empty()) throw ValidationError("ablate: no seeds given");
    return seeds;
}

void cmd_ablate(const AblateOpts& o, int threads) {
    const std::vector<char> rows = eval::parse_rows(o.rows);
    const std::vector<std::uint64_t> seeds = parse_seeds(o.seeds);
    data::Dataset ds = data::load_dataset(o.data);
    data::Dataset heldout = data::load_dataset(o.heldout);
    write_run_manifest(o.out, "ablate", ablate_to_json(o), threads);

    eval::AblationTable table = eval::run_ablation(ds, heldout, rows, seeds, o.cfg, o.out);
    eval::write_ablation_csv(table, o.out + "/ablation.csv");
    eval::write_ablation_timing(table, o.out + "/timing.csv");
    const std::string text = eval::format_ablation_table(table);
    std::ofstream txt(o.out + "/ablation.txt");
    if (!txt) throw IoError("ablate: cannot write " + o.out + "/ablation.txt");
    txt << text;
    std::cout << text << "table written to " << o.out << "/ablation.csv\n";
}

// ---------------------------------------------------------------------------
// rerun

void dispatch(const std::string& sub, const json& options, int threads,
              const std::string& out_override) {
    if (sub == "gen") {
        GenOpts o = gen_from_json(options);
        if (!out_override.empty()) o.out = out_override;
        cmd_gen(o, threads);
    } else if (sub == "render") {
        RenderOpts o = render_from_json(options);
        if (!out_override.empty()) o.out = out_override;
        cmd_render(o, threads);
    } else if (sub == "train") {
        TrainOpts o = train_from_json(options);
        if (!out_override.empty()) o.out = out_override;
        cmd_train(o, threads);
    } else if (sub == "eval") {
        EvalOpts o = eval_from_json(options);
        if (!out_override.empty()) o.out = out_override;
        cmd_eval(o, threads);
    } else if (sub == "ablate") {
        AblateOpts o = ablate_from_json(options);
        if (!out_override.empty()) o.out = out_override;
        cmd_ablate(o, threads);
    } else {
        throw ValidationError("rerun: unknown subcommand '" + sub + "' in manifest");
    }
}

void cmd_rerun(const std::string& manifest_path, int threads,
               const std::string& out_override) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("rerun: cannot open " + manifest_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("rerun: bad JSON in " + manifest_path + ": " + e.what());
    }
    try {
        dispatch(j.at("subcommand").get<std::string>(), j.at("options"), threads,
                 out_override);
    } catch (const json::exception& e) {
        throw IoError("rerun: manifest " + manifest_path + " missing fields: " + e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pseudo-stereo training laboratory"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "worker cap (runs are single-threaded today)")
        ->envname("PSLAB_THREADS");

    GenOpts gen;
    CLI::App* g = app.add_subcommand("gen", "generate a synthetic stereo dataset");
    g->add_option("--out", gen.out, "output directory")->required();
    g->add_option("--count", gen.count, "number of scenes");
    g->add_option("--width", gen.width, "image width");
    g->add_option("--height", gen.height, "image height");
    g->add_option("--dmax", gen.dmax, "maximum disparity");
    g->add_option("--layers", gen.layers, "foreground layers per scene");
    g->add_option("--channels", gen.channels, "1 = grayscale, 3 = rgb");
    g->add_option("--seed", gen.seed, "dataset seed");
    g->add_flag("--force", gen.force, "overwrite a non-empty output directory");

    RenderOpts render;
    CLI::App* r = app.add_subcommand("render", "render a pseudo view from image + disparity");
    r->add_option("--left", render.left, "reference image (png)")->required();
    r->add_option("--disp", render.disp, "disparity field (pfm)")->required();
    r->add_option("--crop-width", render.crop_width, "output width (default: full width)");
    r->add_option("--out", render.out, "output directory")->required();

    TrainOpts train;
    CLI::App* t = app.add_subcommand("train", "train a disparity estimator");
    t->add_option("--data", train.data, "training dataset directory")->required();
    t->add_option("--heldout", train.heldout, "held-out dataset for periodic evaluation");
    t->add_option("--strategy", train.strategy, "row letter a..h or name like fps+occ+wider")
        ->required();
    t->add_option("--config", train.config_file, "config file (key = value lines)");
    t->add_option("--seed", train.seed, "run seed");
    t->add_option("--iterations", train.iterations, "override config iterations");
    t->add_option("--resume", train.resume, "checkpoint to continue from");
    t->add_option("--out", train.out, "output directory")->required();

    EvalOpts eval_o;
    CLI::App* e = app.add_subcommand("eval", "evaluate a checkpoint on datasets");
    e->add_option("--ckpt", eval_o.ckpt, "checkpoint file")->required();
    e->add_option("--data", eval_o.data, "dataset directory")->required();
    e->add_option("--heldout", eval_o.heldout, "second dataset, reported separately");
    e->add_flag("--dump-png", eval_o.dump_png, "write prediction/error/occlusion images");
    e->add_option("--out", eval_o.out, "output directory")->required();

    AblateOpts ablate;
    CLI::App* a = app.add_subcommand("ablate", "train and score a grid of strategy rows");
    a->add_option("--data", ablate.data, "training dataset directory")->required();
    a->add_option("--heldout", ablate.heldout, "held-out dataset directory")->required();
    a->add_option("--rows", ablate.rows, "comma-separated row letters, e.g. a,c,e,h");
    a->add_option("--seeds", ablate.seeds, "comma-separated seeds, e.g. 0,1,2");
    a->add_option("--config", ablate.config_file, "config file (key = value lines)");
    a->add_option("--iterations", ablate.iterations, "override config iterations");
    a->add_option("--out", ablate.out, "output directory")->required();

    std::string rerun_manifest, rerun_out;
    CLI::App* rr = app.add_subcommand("rerun", "replay a run from its manifest");
    rr->add_option("manifest", rerun_manifest, "run_manifest.json of a previous run")
        ->required();
    rr->add_option("--out", rerun_out, "redirect outputs to this directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (threads < 1) throw ValidationError("--threads must be >= 1");
        if (g->parsed()) {
            cmd_gen(gen, threads);
        } else if (r->parsed()) {
            cmd_render(render, threads);
        } else if (t->parsed()) {
            resolve_train_cfg(train);
            cmd_train(train, threads);
        } else if (e->parsed()) {
            cmd_eval(eval_o, threads);
        } else if (a->parsed()) {
            resolve_ablate_cfg(ablate);
            cmd_ablate(ablate, threads);
        } else if (rr->parsed()) {
            cmd_rerun(rerun_manifest, threads, rerun_out);
        }
        return 0;
    } catch (const DivergenceError& err) {
        std::cerr << "error: training diverged: " << err.what() << "\n";
        return 4;
    } catch (const IoError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 3;
    } catch (const ValidationError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    }
}
