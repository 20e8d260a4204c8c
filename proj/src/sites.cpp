#include "cgback/sites.hpp"

#include <map>

namespace cgback {

std::vector<Site> evaluation_sites(const Structure& s) {
    std::vector<Site> sites;
    int flat = 0;
    for (size_t ci = 0; ci < s.chains.size(); ++ci) {
        const Chain& chain = s.chains[ci];
        for (size_t ri = 0; ri < chain.residues.size(); ++ri, ++flat) {
            const Residue& res = chain.residues[ri];
            if (res.terminal)
                continue;
            const ResidueTemplate& tmpl = template_for(res.type);
            for (const Atom& a : res.atoms) {
                if (!a.placed())
                    continue;
                Site site;
                site.chain = static_cast<int>(ci);
                site.residue = static_cast<int>(ri);
                site.flat_residue = flat;
                site.slot = a.name == "CA" ? -1 : tmpl.slot_index(a.name);
                site.atom = a.name;
                site.element = a.element;
                site.pos = *a.pos;
                sites.push_back(std::move(site));
            }
        }
    }
    return sites;
}

ExclusionSet reference_exclusions(const Structure& s, const std::vector<Site>& sites) {
    std::map<GraphNode, int> index;
    for (size_t i = 0; i < sites.size(); ++i)
        index[{sites[i].flat_residue, sites[i].atom}] = static_cast<int>(i);

    std::vector<std::vector<int>> adj(sites.size());
    ExclusionSet excl;
    for (const GraphEdge& e : bond_graph_reference(sequence_of(s))) {
        const auto a = index.find(e.first);
        const auto b = index.find(e.second);
        if (a == index.end() || b == index.end())
            continue; // edge touches a masked terminal residue
        adj[a->second].push_back(b->second);
        adj[b->second].push_back(a->second);
        excl.add(a->second, b->second);
    }
    for (const std::vector<int>& nbrs : adj)
        for (size_t i = 0; i < nbrs.size(); ++i)
            for (size_t j = i + 1; j < nbrs.size(); ++j)
                excl.add(nbrs[i], nbrs[j]);
    return excl;
}

} // namespace cgback
