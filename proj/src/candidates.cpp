#include "cfpr/candidates.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cfpr/error.hpp"

namespace cfpr {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_coord(const std::string& tok, std::size_t row, const char* what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw Error("candidates row " + std::to_string(row) + ": bad " + what + " value '" + tok + "'");
    return v;
}

}  // namespace

std::vector<Candidate> parse_candidates(const std::string& text) {
    std::vector<Candidate> out;
    std::istringstream is(text);
    std::string line;
    std::size_t row = 0;
    bool saw_header = false;
    while (std::getline(is, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != kCandidatesHeader)
                throw Error("candidates row 1: expected header '" + std::string(kCandidatesHeader) +
                            "', got '" + line + "'");
            saw_header = true;
            continue;
        }
        auto cols = split_csv(line);
        if (cols.size() != 5)
            throw Error("candidates row " + std::to_string(row) + ": expected 5 columns, got " +
                        std::to_string(cols.size()));
        Candidate c;
        c.scan_id = cols[0];
        if (c.scan_id.empty())
            throw Error("candidates row " + std::to_string(row) + ": empty seriesuid");
        c.world[0] = parse_coord(cols[1], row, "coordX");
        c.world[1] = parse_coord(cols[2], row, "coordY");
        c.world[2] = parse_coord(cols[3], row, "coordZ");
        if (cols[4] == "0")
            c.label = 0;
        else if (cols[4] == "1")
            c.label = 1;
        else
            throw Error("candidates row " + std::to_string(row) + ": class must be 0 or 1, got '" +
                        cols[4] + "'");
        out.push_back(std::move(c));
    }
    if (!saw_header) throw Error("candidates file is empty, expected header line");
    return out;
}

std::string format_candidates(const std::vector<Candidate>& candidates) {
    std::ostringstream os;
    os << kCandidatesHeader << "\n";
    char buf[128];
    for (const auto& c : candidates) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", c.world[0], c.world[1], c.world[2]);
        os << c.scan_id << "," << buf << "," << c.label << "\n";
    }
    return os.str();
}

std::vector<Candidate> read_candidates_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open candidates file " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_candidates(ss.str());
}

void write_candidates_file(const std::vector<Candidate>& candidates, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write candidates file " + path);
    f << format_candidates(candidates);
}

}  // namespace cfpr
