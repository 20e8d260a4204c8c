#include "cgback/structure.hpp"

#include "cgback/errors.hpp"

namespace cgback {

CGTrace cg_map(const Structure& s) {
    CGTrace trace;
    for (const Chain& chain : s.chains) {
        CGChain cg;
        cg.id = chain.id;
        for (const Residue& res : chain.residues) {
            const Atom* ca = res.find_atom("CA");
            if (ca == nullptr || !ca->placed())
                throw DataError("cg_map: residue " + res.label(chain.id) + " has no CA");
            cg.beads.push_back({res.type, res.seq_index, res.terminal, *ca->pos});
        }
        trace.chains.push_back(std::move(cg));
    }
    return trace;
}

std::vector<ResidueType> sequence_of(const Structure& s) {
    std::vector<ResidueType> seq;
    seq.reserve(s.residue_count());
    for (const Chain& chain : s.chains)
        for (const Residue& res : chain.residues)
            seq.push_back(res.type);
    return seq;
}

Structure transformed(const Structure& s, const RigidMotion& motion) {
    Structure out = s;
    for (Chain& chain : out.chains)
        for (Residue& res : chain.residues)
            for (Atom& a : res.atoms)
                if (a.pos)
                    a.pos = motion.apply(*a.pos);
    return out;
}

CGTrace transformed(const CGTrace& t, const RigidMotion& motion) {
    CGTrace out = t;
    for (CGChain& chain : out.chains)
        for (CGBead& bead : chain.beads)
            bead.ca = motion.apply(bead.ca);
    return out;
}

} // namespace cgback
