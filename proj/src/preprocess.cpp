#include "cgback/preprocess.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "cgback/errors.hpp"
#include "cgback/templates.hpp"

namespace cgback {

std::string PreprocessLog::text() const {
    std::string out;
    out += "hydrogens_removed " + std::to_string(hydrogens_removed) + "\n";
    out += "atoms_pruned " + std::to_string(atoms_pruned) + "\n";
    out += "frames_in " + std::to_string(frames_in) + "\n";
    out += "frames_kept " + std::to_string(frames_kept) + "\n";
    out += "terminal_residues " + std::to_string(terminal_residues) + "\n";
    for (const std::string& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

Ensemble preprocess(const Ensemble& in, const PreprocessPolicy& policy, PreprocessLog* log) {
    PreprocessLog local;
    PreprocessLog& lg = log ? *log : local;
    lg.frames_in = in.frames.size();

    Ensemble out;
    out.frames.reserve(in.frames.size());
    // Pruned atom names are aggregated once; frames share a skeleton.
    std::map<std::string, size_t> pruned_names;

    for (const Structure& frame : in.frames) {
        Structure cleaned;
        cleaned.frame_id = frame.frame_id;
        for (const Chain& chain : frame.chains) {
            if (chain.residues.size() < 3)
                throw DataError("chain " + chain.id + " has " +
                                std::to_string(chain.residues.size()) +
                                " residues; at least 3 are needed to anchor the backbone");
            Chain cc;
            cc.id = chain.id;
            for (size_t ri = 0; ri < chain.residues.size(); ++ri) {
                const Residue& res = chain.residues[ri];
                const ResidueTemplate& tmpl = template_for(res.type);
                Residue cr;
                cr.type = res.type;
                cr.seq_index = res.seq_index;
                cr.terminal = (ri == 0 || ri + 1 == chain.residues.size());
                for (const Atom& a : res.atoms) {
                    if (a.element == Element::H) {
                        ++lg.hydrogens_removed;
                        continue;
                    }
                    if (!tmpl.has_atom(a.name)) {
                        ++lg.atoms_pruned;
                        ++pruned_names[std::string(residue_code(res.type)) + ":" + a.name];
                        continue;
                    }
                    cr.atoms.push_back(a);
                }
                if (cr.find_atom("CA") == nullptr)
                    throw DataError("residue " + res.label(chain.id) + " has no CA");
                cc.residues.push_back(std::move(cr));
            }
            cleaned.chains.push_back(std::move(cc));
        }
        out.frames.push_back(std::move(cleaned));
    }

    if (!out.frames.empty()) {
        for (const Chain& chain : out.frames.front().chains)
            for (const Residue& res : chain.residues)
                if (res.terminal)
                    ++lg.terminal_residues;
    }

    if (out.frames.size() > policy.frame_cap) {
        std::vector<size_t> indices(out.frames.size());
        for (size_t i = 0; i < indices.size(); ++i)
            indices[i] = i;
        std::mt19937_64 rng(policy.seed);
        std::shuffle(indices.begin(), indices.end(), rng);
        indices.resize(policy.frame_cap);
        std::sort(indices.begin(), indices.end());
        Ensemble capped;
        capped.frames.reserve(policy.frame_cap);
        for (size_t i : indices)
            capped.frames.push_back(std::move(out.frames[i]));
        out = std::move(capped);
        lg.lines.push_back("subsampled_frames seed=" + std::to_string(policy.seed));
    }
    for (size_t f = 0; f < out.frames.size(); ++f)
        out.frames[f].frame_id = static_cast<int>(f);
    lg.frames_kept = out.frames.size();

    for (const auto& [name, count] : pruned_names)
        lg.lines.push_back("pruned_atom " + name + " count=" + std::to_string(count));
    return out;
}

} // namespace cgback
