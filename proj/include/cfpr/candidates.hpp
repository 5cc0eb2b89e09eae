#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace cfpr {

/// One lesion candidate. voxel_center is filled in once the owning
/// volume geometry is known; probability once a model has scored it.
struct Candidate {
    std::string scan_id;
    std::array<double, 3> world{};
    std::array<int, 3> voxel{};
    int label = 0;  // 0 non-nodule, 1 nodule
    std::optional<double> probability;
};

inline const char* kCandidatesHeader = "seriesuid,coordX,coordY,coordZ,class";

/// Parses a candidates CSV (header then data rows). Errors carry the
/// 1-based row number. probability is left unset.
std::vector<Candidate> parse_candidates(const std::string& text);

std::string format_candidates(const std::vector<Candidate>& candidates);

std::vector<Candidate> read_candidates_file(const std::string& path);

void write_candidates_file(const std::vector<Candidate>& candidates, const std::string& path);

}  // namespace cfpr
