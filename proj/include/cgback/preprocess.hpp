#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cgback/structure.hpp"

namespace cgback {

struct PreprocessPolicy {
    size_t frame_cap = 500;
    std::uint64_t seed = 0;
};

struct PreprocessLog {
    size_t hydrogens_removed = 0;
    size_t atoms_pruned = 0;
    size_t frames_in = 0;
    size_t frames_kept = 0;
    size_t terminal_residues = 0;
    std::vector<std::string> lines;

    std::string text() const;
};

// Cleaning pipeline applied to a parsed ensemble:
//   - hydrogens removed,
//   - atoms absent from the residue template pruned,
//   - first and last residue of every chain flagged terminal,
//   - frames subsampled with a seeded generator when over the cap.
// Chains shorter than three residues cannot anchor a backbone and are
// rejected. Idempotent: a second pass changes nothing.
Ensemble preprocess(const Ensemble& in, const PreprocessPolicy& policy, PreprocessLog* log = nullptr);

} // namespace cgback
