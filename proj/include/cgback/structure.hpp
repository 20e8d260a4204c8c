#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cgback/elements.hpp"
#include "cgback/geometry.hpp"
#include "cgback/residue_types.hpp"

namespace cgback {

struct Atom {
    std::string name;
    Element element = Element::C;
    std::optional<Vec3> pos; // empty until placed

    bool placed() const { return pos.has_value(); }
};

struct Residue {
    ResidueType type = ResidueType::GLY;
    int seq_index = 0; // PDB residue sequence number
    bool terminal = false;
    std::vector<Atom> atoms;

    const Atom* find_atom(const std::string& name) const {
        for (const Atom& a : atoms)
            if (a.name == name)
                return &a;
        return nullptr;
    }
    Atom* find_atom(const std::string& name) {
        for (Atom& a : atoms)
            if (a.name == name)
                return &a;
        return nullptr;
    }
    std::string label(const std::string& chain_id) const {
        return chain_id + ":" + std::to_string(seq_index) + ":" + residue_code(type);
    }
};

struct Chain {
    std::string id;
    std::vector<Residue> residues;
};

// One frame of an ensemble.
struct Structure {
    std::vector<Chain> chains;
    int frame_id = 0;

    size_t residue_count() const {
        size_t n = 0;
        for (const Chain& c : chains)
            n += c.residues.size();
        return n;
    }
    size_t atom_count() const {
        size_t n = 0;
        for (const Chain& c : chains)
            for (const Residue& r : c.residues)
                n += r.atoms.size();
        return n;
    }
};

// Frames sharing one (chain, residue, atom-name) skeleton.
struct Ensemble {
    std::vector<Structure> frames;
};

struct CGBead {
    ResidueType type = ResidueType::GLY;
    int seq_index = 0;
    bool terminal = false;
    Vec3 ca;
};

struct CGChain {
    std::string id;
    std::vector<CGBead> beads;
};

// Alpha-carbon trace: one bead per residue at the CA position.
struct CGTrace {
    std::vector<CGChain> chains;

    size_t bead_count() const {
        size_t n = 0;
        for (const CGChain& c : chains)
            n += c.beads.size();
        return n;
    }
};

// Maps a structure to its CA trace. Every residue must carry a placed CA.
CGTrace cg_map(const Structure& s);

// Flattened residue-type sequence in chain order, matching the residue
// indexing used by the reference bond graph.
std::vector<ResidueType> sequence_of(const Structure& s);

// Applies a rigid motion to every placed atom (returns a copy).
Structure transformed(const Structure& s, const RigidMotion& motion);
CGTrace transformed(const CGTrace& t, const RigidMotion& motion);

} // namespace cgback
