#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cgback/sites.hpp"
#include "cgback/structure.hpp"
#include "cgback/templates.hpp"

namespace cgback {

// Covalent bond graph over (flat residue, atom name) nodes.
struct BondGraph {
    std::vector<GraphNode> nodes; // sorted
    std::vector<GraphEdge> edges; // sorted, smaller node first

    bool same_nodes(const BondGraph& o) const { return nodes == o.nodes; }
};

// Bonds inferred from coordinates: edge wherever the distance is below
// the covalent-radius sum plus tol. Nodes are the placed atoms of
// non-terminal residues.
BondGraph infer_bond_graph(const Structure& s, double tol = 0.4);

// Reference graph of the structure's sequence, restricted to the same
// node universe as infer_bond_graph.
BondGraph reference_bond_graph(const Structure& s);

// Edge symmetric difference normalized by the reference edge count.
double ged_ratio(const BondGraph& gen, const BondGraph& truth);

// Percentage of nonbonded pairs under 5 A that fall under 1.2 A.
// Returns 0 when no pair is within the 5 A shell.
double clash_ratio_pct(const Structure& s, double clash_dist = 1.2, double shell = 5.0);

// Root mean squared deviation over matched non-terminal atoms, without
// superposition (the shared CA trace already fixes the frame).
double rmsd(const Structure& truth, const Structure& generated);

struct InteractionScores {
    double atom_score = 0; // close heteroatom pairs, hinge at 4.0 A
    double pi_score = 0;   // aromatic ring-center pairs, hinge at 6.0 A
};

// Interacting pairs are identified on the true frame (heteroatom pairs
// under 3.3 A, ring centers under 5.5 A) and scored by how far the
// generated frame stretches them.
InteractionScores interaction_scores(const Structure& truth, const Structure& generated);

struct Histogram {
    double bin_width = 0.1;
    double max_distance = 5.0;
    std::vector<std::uint64_t> counts;

    std::string to_csv() const; // header bin_lo,bin_hi,count
    std::uint64_t band_count(double lo, double hi) const;
};

// Nonbonded pair-distance histogram pooled over the given frames.
Histogram distance_histogram(std::span<const Structure> frames, double bin_width = 0.1,
                             double max_distance = 5.0);

struct PairQuery {
    std::string chain_a;
    int seq_a = 0;
    std::string atom_a;
    std::string chain_b;
    int seq_b = 0;
    std::string atom_b;

    // Parses "A:14:OG1,B:25:O".
    static PairQuery parse(const std::string& text);
};

// Per-frame distance between two named atoms.
std::vector<double> pair_distances(const Ensemble& e, const PairQuery& q);

struct FrameMetrics {
    double rmsd = 0;
    double ged_ratio = 0;
    double clash_ratio_pct = 0;
    double interaction_atom = 0;
    double interaction_pi = 0;
};

struct MetricsReport {
    double rmsd = 0;
    double ged_ratio = 0;
    double clash_ratio_pct = 0;
    double interaction_atom = 0;
    double interaction_pi = 0;
    std::vector<FrameMetrics> frames;

    std::string to_json() const;
};

// Frame-by-frame evaluation of a generated ensemble against its ground
// truth; aggregates are means over frames. Frames may be evaluated on
// several threads; results merge in frame order.
MetricsReport evaluate_ensembles(const Ensemble& truth, const Ensemble& generated,
                                 int threads = 1);

} // namespace cgback
