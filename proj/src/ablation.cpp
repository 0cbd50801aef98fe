#include "pslab/ablation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pslab/errors.hpp"

namespace pslab::eval {

using trainer::EvalPoint;
using trainer::TrainConfig;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string csv_safe(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '"') c = ';';
    return s;
}

// The eval point nearest to half the budget; eval_history is never empty for
// a finished run because train() always appends a final evaluation.
EvalPoint pick_mid(const std::vector<EvalPoint>& hist, long iterations) {
    EvalPoint best = hist.front();
    for (const EvalPoint& p : hist)
        if (std::llabs(p.iter - iterations / 2) < std::llabs(best.iter - iterations / 2))
            best = p;
    return best;
}

}  // namespace

std::vector<char> parse_rows(const std::string& csv_letters) {
    std::vector<char> rows;
    for (std::size_t i = 0; i < csv_letters.size(); ++i) {
        const char c = csv_letters[i];
        if (c == ',' || c == ' ') continue;
        trainer::strategy_from_letter(c);  // validates
        if (std::find(rows.begin(), rows.end(), c) != rows.end())
            throw ValidationError(std::string("ablation rows: duplicate row '") + c + "'");
        rows.push_back(c);
    }
    if (rows.empty()) throw ValidationError("ablation rows: no rows given");
    return rows;
}

AblationTable run_ablation(const data::Dataset& train_ds, const data::Dataset& heldout,
                           const std::vector<char>& rows,
                           const std::vector<std::uint64_t>& seeds, TrainConfig base,
                           const std::string& out_dir) {
    if (rows.empty()) throw ValidationError("ablation: no strategy rows");
    if (seeds.empty()) throw ValidationError("ablation: no seeds");
    if (heldout.samples.empty()) throw ValidationError("ablation: held-out dataset is empty");
    if (base.eval_every <= 0) base.eval_every = std::max(1, base.iterations / 2);

    AblationTable table;
    table.rows = rows;
    table.seeds = seeds;
    for (char row : rows) {
        for (std::uint64_t seed : seeds) {
            AblationRun run;
            run.row = row;
            run.seed = seed;
            run.iterations = base.iterations;
            TrainConfig cfg = base;
            cfg.strategy = trainer::strategy_from_letter(row);
            cfg.seed = seed;
            run.strategy = trainer::strategy_name(cfg.strategy);
            std::string run_dir;
            if (!out_dir.empty())
                run_dir = out_dir + "/" + row + "_s" + std::to_string(seed);
            const auto t0 = std::chrono::steady_clock::now();
            try {
                trainer::TrainState st = trainer::train(train_ds, cfg, run_dir, &heldout);
                run.skipped = st.skipped;
                run.mid_eval = pick_mid(st.eval_history, cfg.iterations);
                run.final_eval = st.eval_history.back();
                run.ok = true;
            } catch (const std::exception& e) {
                run.error = e.what();
            }
            const auto t1 = std::chrono::steady_clock::now();
            run.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
            table.runs.push_back(std::move(run));
        }
    }
    return table;
}

void write_ablation_csv(const AblationTable& t, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("ablation: cannot write " + path);
    out << "row,strategy,seed,iters,epe_all,epe_noc,epe_occ,d1_all,d1_noc,d1_occ,"
           "bad3_all,d1_all_mid,skipped,status,error\n";
    for (const AblationRun& r : t.runs) {
        const EvalPoint& f = r.final_eval;
        out << r.row << ',' << r.strategy << ',' << r.seed << ',' << r.iterations << ','
            << fmt(f.epe_all) << ',' << fmt(f.epe_noc) << ',' << fmt(f.epe_occ) << ','
            << fmt(f.d1_all) << ',' << fmt(f.d1_noc) << ',' << fmt(f.d1_occ) << ','
            << fmt(f.bad3_all) << ',' << fmt(r.mid_eval.d1_all) << ',' << r.skipped << ','
            << (r.ok ? "ok" : "failed") << ',' << csv_safe(r.error) << '\n';
    }
    if (!out) throw IoError("ablation: write failed for " + path);
}

void write_ablation_timing(const AblationTable& t, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("ablation: cannot write " + path);
    out << "row,seed,wall_seconds\n";
    for (const AblationRun& r : t.runs)
        out << r.row << ',' << r.seed << ',' << fmt_short(r.wall_seconds) << '\n';
}

std::vector<const AblationRun*> row_runs(const AblationTable& t, char row) {
    std::vector<const AblationRun*> out;
    for (const AblationRun& r : t.runs)
        if (r.row == row && r.ok) out.push_back(&r);
    return out;
}

double median(std::vector<double> v) {
    if (v.empty()) throw ValidationError("median of an empty set");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double row_median(const AblationTable& t, char row, double EvalPoint::*metric) {
    std::vector<double> vals;
    for (const AblationRun* r : row_runs(t, row)) vals.push_back(r->final_eval.*metric);
    if (vals.empty())
        throw ValidationError(std::string("ablation row '") + row + "': no completed runs");
    return median(std::move(vals));
}

std::string format_ablation_table(const AblationTable& t) {
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-4s %-18s %-5s %9s %9s %9s %8s %8s %8s %9s\n", "row",
                  "strategy", "ok", "epe_all", "epe_noc", "epe_occ", "d1_all", "d1_noc",
                  "d1_occ", "d1_mid");
    os << buf;
    for (char row : t.rows) {
        auto runs = row_runs(t, row);
        std::string strategy, ok_col;
        for (const AblationRun& r : t.runs)
            if (r.row == row) strategy = r.strategy;
        ok_col = std::to_string(runs.size()) + "/" +
                 std::to_string(std::count_if(t.runs.begin(), t.runs.end(),
                                              [&](const AblationRun& r) { return r.row == row; }));
        if (runs.empty()) {
            std::snprintf(buf, sizeof(buf), "(%c)  %-18s %-5s %9s\n", row, strategy.c_str(),
                          ok_col.c_str(), "-");
            os << buf;
            continue;
        }
        auto med = [&](double EvalPoint::*m, bool mid) {
            std::vector<double> vals;
            for (const AblationRun* r : runs)
                vals.push_back(mid ? r->mid_eval.*m : r->final_eval.*m);
            return median(std::move(vals));
        };
        std::snprintf(buf, sizeof(buf),
                      "(%c)  %-18s %-5s %9.3f %9.3f %9.3f %8.3f %8.3f %8.3f %9.3f\n", row,
                      strategy.c_str(), ok_col.c_str(), med(&EvalPoint::epe_all, false),
                      med(&EvalPoint::epe_noc, false), med(&EvalPoint::epe_occ, false),
                      med(&EvalPoint::d1_all, false), med(&EvalPoint::d1_noc, false),
                      med(&EvalPoint::d1_occ, false), med(&EvalPoint::d1_all, true));
        os << buf;
    }
    for (const AblationRun& r : t.runs)
        if (!r.ok)
            os << "(" << r.row << ") seed " << r.seed << " failed: " << r.error << "\n";
    return os.str();
}

}  // namespace pslab::eval
