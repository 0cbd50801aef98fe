#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pslab/dataset.hpp"
#include "pslab/loss.hpp"
#include "pslab/matcher.hpp"
#include "pslab/rng.hpp"
#include "pslab/types.hpp"

namespace pslab::trainer {

enum class StrategyKind { BASELINE, PS, FPS };

// One ablation row: the base strategy plus the occlusion-mask and
// wider-generation switches. Letters (a)-(h) follow the ablation table.
struct Strategy {
    StrategyKind kind = StrategyKind::BASELINE;
    bool occ_mask = false;
    bool wider_gen = false;
};

Strategy strategy_from_letter(char letter);
Strategy strategy_from_string(const std::string& s);  // letter or name
char strategy_letter(const Strategy& s);
std::string strategy_name(const Strategy& s);

struct TrainConfig {
    Strategy strategy;
    matcher::Mode mode = matcher::Mode::TINYNET;
    matcher::TinyNetConfig net;
    int d_max = 16;
    int iterations = 5000;
    int batch_size = 2;
    int crop_width = 48;
    int crop_height = 32;
    double learning_rate = 2e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    double brightness_range = 0.2;  // offset drawn in [-range, range]
    double contrast_min = 0.8;      // scale drawn in [contrast_min, contrast_max]
    double contrast_max = 1.2;
    int checkpoint_every = 0;  // 0 = final checkpoint only
    int eval_every = 0;        // 0 = no periodic held-out evaluation
    loss::LossConfig loss;

    void validate(int image_width, int image_height) const;
};

// Crop window plus photometric jitter, drawn once per pair and applied to
// both views. Feedback images never pass through here.
struct AugmentResult {
    data::Image left;
    data::Image right;
    int x0 = 0, y0 = 0;
    double brightness = 0.0;
    double contrast = 1.0;
};
AugmentResult augment(const data::Image& left, const data::Image& right, Rng& rng,
                      const TrainConfig& cfg);

struct EvalPoint {
    long iter = 0;
    double epe_all = 0, epe_noc = 0, epe_occ = 0;
    double d1_all = 0, d1_noc = 0, d1_occ = 0;
    double bad3_all = 0;
};

struct TrainState {
    matcher::Estimator est;
    std::vector<diff::Array> adam_m, adam_v;
    long adam_t = 0;
    long iter = 0;
    long skipped = 0;                  // items dropped for degenerate masks
    std::vector<double> loss_history;  // mean total loss per iteration
    std::vector<EvalPoint> eval_history;

    explicit TrainState(matcher::Estimator e) : est(std::move(e)) {}
};

TrainState make_state(const TrainConfig& cfg, int channels);

void save_state(const TrainState& state, const std::string& path);
TrainState load_state(const std::string& path);

// Instrumentation of a single step, for tests that inspect which pixels the
// loss saw and which images fed it. All arrays live in branch space (the
// RIGHT branch works on horizontally flipped views).
struct StepDebug {
    loss::Branch branch = loss::Branch::REAL;
    bool flipped_space = false;
    bool skipped = false;
    diff::Array loss_mask;     // occ AND warp validity
    diff::Array feedback_ref;  // photometric target
    diff::Array warp_source;   // image sampled by the backward warp
    diff::Array disparity;     // predicted field
    int x0 = 0, y0 = 0;        // window into the branch-space frame
};

// One single-sample iteration: draw a branch, build the loss, run backward,
// apply one Adam update. Returns the loss breakdown (zeros when the sample
// was skipped for a degenerate mask).
loss::LossBreakdown train_step(const data::SceneSample& sample, TrainState& state,
                               const TrainConfig& cfg, StepDebug* debug = nullptr);

// Full loop over a dataset with batching, CSV logs, checkpoints and optional
// periodic held-out evaluation. `out_dir` empty keeps everything in memory.
TrainState train(const data::Dataset& ds, const TrainConfig& cfg, const std::string& out_dir,
                 const data::Dataset* heldout = nullptr);

// Continue a loaded state up to cfg.iterations (used by checkpoint resume).
void train_continue(const data::Dataset& ds, const TrainConfig& cfg, TrainState& state,
                    const std::string& out_dir, const data::Dataset* heldout = nullptr);

}  // namespace pslab::trainer
