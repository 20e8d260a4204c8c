#pragma once

#include <span>
#include <string>
#include <vector>

#include "cgback/structure.hpp"

namespace cgback {

// Geometric radius of gyration (unit atom weights), Angstrom.
double radius_of_gyration(std::span<const Vec3> points);

struct CompactnessRow {
    std::string entry;
    std::string chain;
    int length = 0;     // residues
    double rg_mean = 0; // mean over frames
};

struct NamedEnsemble {
    std::string name;
    const Ensemble* ensemble = nullptr;
};

// One row per chain per entry: chain length and mean Rg over frames.
std::vector<CompactnessRow> compactness_stats(const std::vector<NamedEnsemble>& entries);

// CSV with header "entry,chain,length,rg_mean".
std::string compactness_csv(const std::vector<CompactnessRow>& rows);

} // namespace cgback
