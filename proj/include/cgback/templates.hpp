#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "cgback/elements.hpp"
#include "cgback/residue_types.hpp"

namespace cgback {

// Reference to an anchor atom. offset is the residue offset and is
// nonzero only for the CA beads of the previous/next residue.
struct AnchorRef {
    std::string atom;
    int offset = 0;

    bool operator==(const AnchorRef& o) const { return atom == o.atom && offset == o.offset; }
    std::string str() const {
        if (offset == 0)
            return atom;
        return atom + (offset < 0 ? "@-1" : "@+1");
    }
    static AnchorRef parse(const std::string& token);
};

// One entry of the placement order: the atom and the three anchors
// (j, k, l) its internal coordinates refer to. j is always the bonded
// parent.
struct AtomSlot {
    std::string atom;
    Element element;
    AnchorRef j, k, l;
};

struct AngleTriple {
    std::string atom;
    AnchorRef j, k;
};

struct TorsionQuad {
    std::string atom;
    AnchorRef j, k, l;
};

// Per-residue-type chemical template. CA is the coarse-grained bead and
// is never part of the placement order.
struct ResidueTemplate {
    ResidueType type;
    // Placement slots in order: O, N, C, then side-chain atoms.
    std::vector<AtomSlot> slots;
    // All in-residue heavy-atom bonds, including ring-closure bonds that
    // the placement order leaves implied. The peptide bond to the next
    // residue is added by bond_graph_reference().
    std::vector<std::pair<std::string, std::string>> bonds;
    // Atoms of the aromatic ring system, empty for non-aromatic types.
    std::vector<std::string> ring_atoms;

    bool has_atom(const std::string& name) const;
    int slot_index(const std::string& name) const; // -1 when absent
    const AtomSlot& slot(const std::string& name) const;

    // Bond-angle triples (atom, j, k) and torsion quadruples
    // (atom, j, k, l), one per slot, matching the internal coordinates.
    std::vector<AngleTriple> angles() const;
    std::vector<TorsionQuad> torsions() const;
};

// Largest placement order over all templates (tryptophan).
constexpr int kMaxSlotsPerResidue = 13;

// Immutable template lookup; total over the closed residue-type set.
const ResidueTemplate& template_for(ResidueType type);

// Anchor triple (j, k, l) for one atom of a residue type.
// Throws DataError for atoms outside the placement order.
std::array<AnchorRef, 3> anchors_for(ResidueType type, const std::string& atom);

// Node of the reference bond graph: residue position within the
// flattened sequence plus atom name.
struct GraphNode {
    int residue = 0;
    std::string atom;

    bool operator==(const GraphNode& o) const { return residue == o.residue && atom == o.atom; }
    bool operator<(const GraphNode& o) const {
        return residue != o.residue ? residue < o.residue : atom < o.atom;
    }
};

using GraphEdge = std::pair<GraphNode, GraphNode>;

// Ground-truth covalent edge set for a single chain: template bonds per
// residue plus the peptide bond C(i)-N(i+1) between consecutive
// residues. Edges are normalized (smaller node first) and sorted.
std::vector<GraphEdge> bond_graph_reference(const std::vector<ResidueType>& sequence);

// Human-readable export of every template, for diffing and re-import.
std::string templates_to_text();
std::vector<ResidueTemplate> templates_from_text(const std::string& text);

} // namespace cgback
