#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pslab/dataset.hpp"
#include "pslab/trainer.hpp"

namespace pslab::eval {

// One (strategy row, seed) training run evaluated on held-out scenes at half
// and at full iteration budget. A failed run keeps its error text and leaves
// the metrics zeroed.
struct AblationRun {
    char row = '-';
    std::string strategy;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    long iterations = 0;
    long skipped = 0;
    trainer::EvalPoint mid_eval;
    trainer::EvalPoint final_eval;
    double wall_seconds = 0.0;
};

struct AblationTable {
    std::vector<char> rows;
    std::vector<std::uint64_t> seeds;
    std::vector<AblationRun> runs;  // rows-major: all seeds of rows[0] first
};

// Train every (row, seed) combination on `train_ds`, score on `heldout`.
// `base` supplies everything except strategy and seed; its eval_every is
// forced to half the budget unless already set, so every run records the
// mid-training probe. Per-run artifacts land in out_dir/<row>_s<seed>/ when
// out_dir is non-empty. A row that throws is captured, not fatal.
AblationTable run_ablation(const data::Dataset& train_ds, const data::Dataset& heldout,
                           const std::vector<char>& rows,
                           const std::vector<std::uint64_t>& seeds,
                           trainer::TrainConfig base, const std::string& out_dir);

// Deterministic per-run results, one line per run. Wall time deliberately
// goes to write_ablation_timing instead so reruns byte-compare.
void write_ablation_csv(const AblationTable& t, const std::string& path);
void write_ablation_timing(const AblationTable& t, const std::string& path);

// Median over the seeds of one row that finished; empty vector if none did.
std::vector<const AblationRun*> row_runs(const AblationTable& t, char row);
double median(std::vector<double> v);
double row_median(const AblationTable& t, char row, double trainer::EvalPoint::*metric);

// Human-readable summary: per-row medians over completed seeds.
std::string format_ablation_table(const AblationTable& t);

std::vector<char> parse_rows(const std::string& csv_letters);

}  // namespace pslab::eval
