#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "cgback/structure.hpp"
#include "cgback/templates.hpp"

namespace cgback {

// One atom taking part in pairwise evaluations. flat_residue indexes the
// flattened residue sequence (the node space of the reference bond
// graph); slot is the placement-order index, -1 for CA.
struct Site {
    int chain = 0;
    int residue = 0; // within chain
    int flat_residue = 0;
    int slot = -1;
    std::string atom;
    Element element = Element::C;
    Vec3 pos;
};

// Placed atoms of non-terminal residues, in traversal order. Terminal
// residues are masked from losses and metrics.
std::vector<Site> evaluation_sites(const Structure& s);

// Unordered index pairs barred from nonbonded terms: bonded (1-2) pairs
// and pairs sharing a bonded neighbor (1-3).
class ExclusionSet {
  public:
    void add(int a, int b) { pairs_.insert(key(a, b)); }
    bool excluded(int a, int b) const { return pairs_.count(key(a, b)) != 0; }
    size_t size() const { return pairs_.size(); }

  private:
    static std::uint64_t key(int a, int b) {
        if (a > b)
            std::swap(a, b);
        return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
    }
    std::unordered_set<std::uint64_t> pairs_;
};

// Exclusions over the given sites derived from the reference bond graph
// of the structure's sequence.
ExclusionSet reference_exclusions(const Structure& s, const std::vector<Site>& sites);

} // namespace cgback
