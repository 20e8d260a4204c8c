#pragma once

#include <string>
#include <vector>

#include "cgback/geometry.hpp"
#include "cgback/structure.hpp"
#include "cgback/templates.hpp"

namespace cgback {

// Internal coordinates of one placed atom relative to its anchor triple:
// d = |atom - j|, theta = angle(atom, j, k), tau = dihedral(atom, j, k, l).
struct ZRow {
    std::string atom;
    AnchorRef j, k, l;
    double d = 0;     // Angstrom, > 0
    double theta = 0; // radians, (0, pi)
    double tau = 0;   // radians, (-pi, pi]
};

struct ZResidue {
    ResidueType type = ResidueType::GLY;
    int seq_index = 0;
    std::vector<ZRow> rows; // placement order; empty for terminal residues
};

struct ZChain {
    std::string id;
    std::vector<ZResidue> residues;
};

// Internal-coordinate representation of one frame.
struct ZMatrixFrame {
    std::vector<ZChain> chains;

    const ZResidue* find(const std::string& chain_id, int seq_index) const;
    size_t row_count() const;
};

// Places an atom from its three anchors and internal coordinates. The
// result A satisfies |A - j| = d, angle(A, j, k) = theta and
// dihedral(A, j, k, l) = tau. Collinear anchors are rejected.
Vec3 place_atom(const Vec3& j, const Vec3& k, const Vec3& l, double d, double theta, double tau);

// Reads internal coordinates off a structure. Terminal residues yield no
// rows. Non-terminal residues must be complete.
ZMatrixFrame extract(const Structure& s, const CGTrace& trace);

struct ReconstructStats {
    int passes = 0;
};

// Rebuilds all-atom coordinates from a CA trace and internal
// coordinates. Atoms are placed in hierarchical passes (N of every
// residue, then C, then O, then side-chain slots in template order);
// terminal residues keep only their CA bead.
Structure reconstruct_frame(const CGTrace& trace, const ZMatrixFrame& zmat,
                            ReconstructStats* stats = nullptr);

// Derivatives of every placed position against the internal coordinates
// of its residue. Parameters are residue-local: slot s contributes lanes
// (3s, 3s+1, 3s+2) for (d, theta, tau). Cross-residue dependencies do not
// arise because every inter-residue anchor is a fixed CA bead.
struct ResidueJacobian {
    int n_slots = 0;
    // d_pos[slot][param] = d(position of slot)/d(param), param < 3*n_slots
    std::vector<std::vector<Vec3>> d_pos;
};

struct PlacementJacobian {
    // Indexed [chain][residue]; terminal residues hold an empty block.
    std::vector<std::vector<ResidueJacobian>> residues;
};

// As reconstruct_frame, with forward-mode accumulation through the
// placement passes. Coordinates are bit-identical to reconstruct_frame.
Structure reconstruct_with_jacobian(const CGTrace& trace, const ZMatrixFrame& zmat,
                                    PlacementJacobian& jacobian,
                                    ReconstructStats* stats = nullptr);

// Flat parameter addressing over a frame: chains, then residues, then
// slots, each slot contributing (d, theta, tau).
struct ParamLayout {
    std::vector<std::vector<int>> offsets; // [chain][residue] -> flat offset, -1 if terminal
    int total = 0;

    static ParamLayout of(const ZMatrixFrame& zmat);
};

// Columnar text format, one row per placed atom:
//   chain res_index atom j k l d theta tau
// Anchors in adjacent residues are suffixed @-1 / @+1.
std::string zmatrix_to_text(const ZMatrixFrame& frame);
// Multi-frame container: blocks introduced by "frame <n>" lines.
std::string zmatrix_frames_to_text(const std::vector<ZMatrixFrame>& frames);
std::vector<ZMatrixFrame> zmatrix_frames_from_text(const std::string& text);

} // namespace cgback
