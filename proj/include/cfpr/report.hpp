#pragma once

#include <string>
#include <vector>

#include "cfpr/cascade.hpp"
#include "cfpr/froc.hpp"

namespace cfpr {

/// Formats with 6 significant digits; every floating-point number in a
/// report goes through this.
std::string fmt6(double x);

/// The double that fmt6's text parses back to. Report probabilities are
/// rounded this way before any evaluation so that re-evaluating an
/// emitted table reproduces the summary byte for byte.
double round6(double x);

/// One row of the emitted probability table.
struct TableRow {
    int candidate_id = -1;
    std::string scan_id;
    int label = 0;
    double probability = 0.0;
};

std::vector<TableRow> probability_table(const CascadeResult& result,
                                        const std::vector<Candidate>& candidates);

/// Parses a candidates.csv written by emit_report. Errors carry row
/// numbers.
std::vector<TableRow> parse_probability_table(const std::string& text);

std::vector<ScoredCandidate> scored_of(const std::vector<TableRow>& rows);

/// Writes the full run report into dir: resolved-config.json,
/// folds.csv, stages.csv, final.csv, models/, logs/, candidates.csv,
/// froc.csv, histograms.csv, reduction.csv, summary.txt, summary.json.
/// Deterministic: equal inputs give byte-identical trees.
void emit_report(const CascadeResult& result, const std::vector<Candidate>& candidates,
                 int n_scans, const std::string& config_json, const std::string& dir);

/// Re-evaluation of a stored table: candidates.csv (as parsed),
/// froc.csv, histograms.csv, summary.txt, summary.json. The summary
/// matches the originating run's byte for byte.
void emit_eval_report(const std::vector<TableRow>& rows, int n_scans, const std::string& dir);

}  // namespace cfpr
