#include "cfpr/report.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cfpr/error.hpp"
#include "cfpr/model_io.hpp"

namespace cfpr {

std::string fmt6(double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

double round6(double x) {
    std::string s = fmt6(x);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw Error("round6: cannot reparse " + s);
    return v;
}

std::vector<TableRow> probability_table(const CascadeResult& result,
                                        const std::vector<Candidate>& candidates) {
    if (result.final_prob.size() != candidates.size())
        throw Error("probability_table: result does not cover the candidate list");
    std::vector<TableRow> rows;
    rows.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        TableRow r;
        r.candidate_id = static_cast<int>(i);
        r.scan_id = candidates[i].scan_id;
        r.label = candidates[i].label;
        r.probability = round6(result.final_prob[i]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<TableRow> parse_probability_table(const std::string& text) {
    std::vector<TableRow> rows;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    bool saw_header = false;
    const std::string header = "candidate_id,seriesuid,label,probability";
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != header)
                throw Error("probability table row 1: expected header '" + header + "', got '" +
                            line + "'");
            saw_header = true;
            continue;
        }
        std::vector<std::string> cols;
        std::string cur;
        for (char ch : line) {
            if (ch == ',') {
                cols.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
        cols.push_back(cur);
        if (cols.size() != 4)
            throw Error("probability table row " + std::to_string(lineno) +
                        ": expected 4 columns, got " + std::to_string(cols.size()));
        TableRow r;
        auto parse_int = [&](const std::string& tok, const char* what) {
            int v = 0;
            auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc() || p != tok.data() + tok.size())
                throw Error("probability table row " + std::to_string(lineno) + ": bad " + what +
                            " '" + tok + "'");
            return v;
        };
        r.candidate_id = parse_int(cols[0], "candidate_id");
        r.scan_id = cols[1];
        if (r.scan_id.empty())
            throw Error("probability table row " + std::to_string(lineno) + ": empty seriesuid");
        r.label = parse_int(cols[2], "label");
        if (r.label != 0 && r.label != 1)
            throw Error("probability table row " + std::to_string(lineno) +
                        ": label must be 0 or 1, got " + cols[2]);
        double p = 0.0;
        auto [ptr, ec] = std::from_chars(cols[3].data(), cols[3].data() + cols[3].size(), p);
        if (ec != std::errc() || ptr != cols[3].data() + cols[3].size())
            throw Error("probability table row " + std::to_string(lineno) + ": bad probability '" +
                        cols[3] + "'");
        if (p < 0.0 || p > 1.0)
            throw Error("probability table row " + std::to_string(lineno) +
                        ": probability out of [0,1]: " + cols[3]);
        r.probability = p;
        rows.push_back(std::move(r));
    }
    if (!saw_header) throw Error("probability table is empty, expected header line");
    if (rows.empty()) throw Error("probability table has no data rows");
    return rows;
}

std::vector<ScoredCandidate> scored_of(const std::vector<TableRow>& rows) {
    std::vector<ScoredCandidate> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back({r.scan_id, r.label, r.probability});
    return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw Error("write failed for " + path.string());
}

std::string table_csv(const std::vector<TableRow>& rows) {
    std::ostringstream os;
    os << "candidate_id,seriesuid,label,probability\n";
    for (const auto& r : rows)
        os << r.candidate_id << "," << r.scan_id << "," << r.label << "," << fmt6(r.probability)
           << "\n";
    return os.str();
}

std::string froc_csv(const FrocCurve& curve) {
    std::ostringstream os;
    os << "fp_per_scan,sensitivity\n";
    for (const auto& p : curve.points)
        os << fmt6(p.fp_per_scan) << "," << fmt6(p.sensitivity) << "\n";
    return os.str();
}

void append_histogram(std::ostringstream& os, const std::string& stage_name, const Histogram& h) {
    for (int b = 0; b < h.bins; ++b) {
        auto u = static_cast<std::size_t>(b);
        os << stage_name << "," << fmt6(static_cast<double>(b) / h.bins) << ","
           << fmt6(static_cast<double>(b + 1) / h.bins) << "," << h.class0[u] << "," << h.class1[u]
           << "\n";
    }
}

struct SummaryStats {
    int n_scans = 0;
    long long n_candidates = 0, n_nodules = 0, n_nonnodules = 0, n_zero_probability = 0;
    double s4 = 0.0, s8 = 0.0, avg = 0.0;
};

SummaryStats summarize(const std::vector<TableRow>& rows, int n_scans, const FrocCurve& curve) {
    SummaryStats s;
    s.n_scans = n_scans;
    for (const auto& r : rows) {
        ++s.n_candidates;
        (r.label == 1 ? s.n_nodules : s.n_nonnodules)++;
        if (r.probability == 0.0) ++s.n_zero_probability;
    }
    s.s4 = sensitivity_at(curve, 4.0);
    s.s8 = sensitivity_at(curve, 8.0);
    s.avg = (s.s4 + s.s8) / 2.0;
    return s;
}

std::string summary_txt(const SummaryStats& s) {
    std::ostringstream os;
    os << "n_scans=" << s.n_scans << "\n";
    os << "n_candidates=" << s.n_candidates << "\n";
    os << "n_nodules=" << s.n_nodules << "\n";
    os << "n_nonnodules=" << s.n_nonnodules << "\n";
    os << "n_zero_probability=" << s.n_zero_probability << "\n";
    os << "sensitivity_at_4=" << fmt6(s.s4) << "\n";
    os << "sensitivity_at_8=" << fmt6(s.s8) << "\n";
    os << "average_sensitivity=" << fmt6(s.avg) << "\n";
    return os.str();
}

std::string summary_json(const SummaryStats& s) {
    // hand-built so the float text matches summary.txt exactly
    std::ostringstream os;
    os << "{\n";
    os << "  \"n_scans\": " << s.n_scans << ",\n";
    os << "  \"n_candidates\": " << s.n_candidates << ",\n";
    os << "  \"n_nodules\": " << s.n_nodules << ",\n";
    os << "  \"n_nonnodules\": " << s.n_nonnodules << ",\n";
    os << "  \"n_zero_probability\": " << s.n_zero_probability << ",\n";
    os << "  \"sensitivity_at_4\": " << fmt6(s.s4) << ",\n";
    os << "  \"sensitivity_at_8\": " << fmt6(s.s8) << ",\n";
    os << "  \"average_sensitivity\": " << fmt6(s.avg) << "\n";
    os << "}\n";
    return os.str();
}

}  // namespace

void emit_report(const CascadeResult& result, const std::vector<Candidate>& candidates,
                 int n_scans, const std::string& config_json, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "models");
    fs::create_directories(fs::path(dir) / "logs");

    write_file(fs::path(dir) / "resolved-config.json", config_json);

    {
        std::ostringstream os;
        os << "candidate_id,fold\n";
        for (std::size_t i = 0; i < result.folds.fold_of.size(); ++i)
            os << i << "," << result.folds.fold_of[i] << "\n";
        write_file(fs::path(dir) / "folds.csv", os.str());
    }

    {
        std::ostringstream os;
        os << "stage,fold,sigma,threshold,input_nodules,input_nonnodules,rejected_nodules,"
              "rejected_nonnodules,selected_epoch,criterion_value\n";
        for (const auto& stage : result.stages)
            for (const auto& f : stage.folds)
                os << stage.stage << "," << f.fold << "," << fmt6(f.sigma) << ","
                   << fmt6(f.threshold) << "," << f.input_nodules << "," << f.input_nonnodules
                   << "," << f.rejected_nodules << "," << f.rejected_nonnodules << ","
                   << f.model.meta.selected_epoch << "," << fmt6(f.model.meta.criterion_value)
                   << "\n";
        write_file(fs::path(dir) / "stages.csv", os.str());
    }

    {
        std::ostringstream os;
        os << "fold,selected_epoch,criterion_value\n";
        for (const auto& f : result.final_stage.folds)
            os << f.fold << "," << f.model.meta.selected_epoch << ","
               << fmt6(f.model.meta.criterion_value) << "\n";
        write_file(fs::path(dir) / "final.csv", os.str());
    }

    char name[96];
    for (const auto& stage : result.stages)
        for (const auto& f : stage.folds) {
            std::snprintf(name, sizeof name, "stage%d_fold%d", stage.stage, f.fold);
            save_model(f.model, (fs::path(dir) / "models" / (std::string(name) + ".bin")).string());
            write_file(fs::path(dir) / "logs" / (std::string(name) + ".log"),
                       format_training_log(f.log));
        }
    for (const auto& f : result.final_stage.folds) {
        std::snprintf(name, sizeof name, "final_fold%d", f.fold);
        save_model(f.model, (fs::path(dir) / "models" / (std::string(name) + ".bin")).string());
        write_file(fs::path(dir) / "logs" / (std::string(name) + ".log"),
                   format_training_log(f.log));
    }

    auto rows = probability_table(result, candidates);
    write_file(fs::path(dir) / "candidates.csv", table_csv(rows));

    auto scored = scored_of(rows);
    FrocCurve curve = froc(scored, n_scans);
    write_file(fs::path(dir) / "froc.csv", froc_csv(curve));

    {
        std::ostringstream os;
        os << "stage,bin_lo,bin_hi,class0,class1\n";
        for (const auto& stage : result.stages) {
            std::vector<ScoredCandidate> stage_scored;
            for (const auto& [id, p] : stage.scored)
                stage_scored.push_back({candidates[static_cast<std::size_t>(id)].scan_id,
                                        candidates[static_cast<std::size_t>(id)].label, p});
            append_histogram(os, std::to_string(stage.stage), histogram(stage_scored));
        }
        append_histogram(os, "final", histogram(scored));
        write_file(fs::path(dir) / "histograms.csv", os.str());
    }

    {
        std::ostringstream os;
        os << "stage,nodule_fraction,nonnodule_fraction\n";
        for (const auto& p : reduction_series(result, candidates))
            os << p.stage << "," << fmt6(p.nodule_fraction) << "," << fmt6(p.nonnodule_fraction)
               << "\n";
        write_file(fs::path(dir) / "reduction.csv", os.str());
    }

    SummaryStats stats = summarize(rows, n_scans, curve);
    write_file(fs::path(dir) / "summary.txt", summary_txt(stats));
    write_file(fs::path(dir) / "summary.json", summary_json(stats));
}

void emit_eval_report(const std::vector<TableRow>& rows, int n_scans, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_file(fs::path(dir) / "candidates.csv", table_csv(rows));
    auto scored = scored_of(rows);
    FrocCurve curve = froc(scored, n_scans);
    write_file(fs::path(dir) / "froc.csv", froc_csv(curve));
    {
        std::ostringstream os;
        os << "stage,bin_lo,bin_hi,class0,class1\n";
        append_histogram(os, "final", histogram(scored));
        write_file(fs::path(dir) / "histograms.csv", os.str());
    }
    SummaryStats stats = summarize(rows, n_scans, curve);
    write_file(fs::path(dir) / "summary.txt", summary_txt(stats));
    write_file(fs::path(dir) / "summary.json", summary_json(stats));
}

}  // namespace cfpr
