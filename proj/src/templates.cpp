#include "cgback/templates.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace cgback {

AnchorRef AnchorRef::parse(const std::string& token) {
    auto at = token.find('@');
    if (at == std::string::npos)
        return {token, 0};
    const std::string name = token.substr(0, at);
    const std::string off = token.substr(at + 1);
    if (off == "-1")
        return {name, -1};
    if (off == "+1")
        return {name, +1};
    throw DataError("bad anchor token '" + token + "'");
}

bool ResidueTemplate::has_atom(const std::string& name) const {
    return name == "CA" || slot_index(name) >= 0;
}

int ResidueTemplate::slot_index(const std::string& name) const {
    for (size_t i = 0; i < slots.size(); ++i)
        if (slots[i].atom == name)
            return static_cast<int>(i);
    return -1;
}

const AtomSlot& ResidueTemplate::slot(const std::string& name) const {
    const int i = slot_index(name);
    if (i < 0)
        throw DataError(std::string(residue_code(type)) + " template has no atom '" + name + "'");
    return slots[i];
}

std::vector<AngleTriple> ResidueTemplate::angles() const {
    std::vector<AngleTriple> out;
    out.reserve(slots.size());
    for (const AtomSlot& s : slots)
        out.push_back({s.atom, s.j, s.k});
    return out;
}

std::vector<TorsionQuad> ResidueTemplate::torsions() const {
    std::vector<TorsionQuad> out;
    out.reserve(slots.size());
    for (const AtomSlot& s : slots)
        out.push_back({s.atom, s.j, s.k, s.l});
    return out;
}

namespace {

struct SideAtom {
    const char* name;
    const char* parent;
};

struct ResidueSpec {
    ResidueType type;
    std::vector<SideAtom> side;                                  // placement order past C
    std::vector<std::pair<const char*, const char*>> closures;   // ring bonds not on the tree
    std::vector<const char*> ring;                               // aromatic ring atoms
};

const std::vector<ResidueSpec>& residue_specs() {
    static const std::vector<ResidueSpec> specs = {
        {ResidueType::ALA, {{"CB", "CA"}}, {}, {}},
        {ResidueType::ARG,
         {{"CB", "CA"}, {"CG", "CB"}, {"CD", "CG"}, {"NE", "CD"}, {"CZ", "NE"},
          {"NH1", "CZ"}, {"NH2", "CZ"}},
         {},
         {}},
        {ResidueType::ASN, {{"CB", "CA"}, {"CG", "CB"}, {"OD1", "CG"}, {"ND2", "CG"}}, {}, {}},
        {ResidueType::ASP, {{"CB", "CA"}, {"CG", "CB"}, {"OD1", "CG"}, {"OD2", "CG"}}, {}, {}},
        {ResidueType::CYS, {{"CB", "CA"}, {"SG", "CB"}}, {}, {}},
        {ResidueType::GLN,
         {{"CB", "CA"}, {"CG", "CB"}, {"CD", "CG"}, {"OE1", "CD"}, {"NE2", "CD"}},
         {},
         {}},
        {ResidueType::GLU,
         {{"CB", "CA"}, {"CG", "CB"}, {"CD", "CG"}, {"OE1", "CD"}, {"OE2", "CD"}},
         {},
         {}},
        {ResidueType::GLY, {}, {}, {}},
        {ResidueType::HIS,
         {{"CB", "CA"}, {"CG", "CB"}, {"ND1", "CG"}, {"CE1", "ND1"}, {"NE2", "CE1"},
          {"CD2", "NE2"}},
         {{"CG", "CD2"}},
         {"CG", "ND1", "CE1", "NE2", "CD2"}},
        {ResidueType::ILE,
         {{"CB", "CA"}, {"CG1", "CB"}, {"CD1", "CG1"}, {"CG2", "CB"}},
         {},
         {}},
        {ResidueType::LEU, {{"CB", "CA"}, {"CG", "CB"}, {"CD1", "CG"}, {"CD2", "CG"}}, {}, {}},
        {ResidueType::LYS,
         {{"CB", "CA"}, {"CG", "CB"}, {"CD", "CG"}, {"CE", "CD"}, {"NZ", "CE"}},
         {},
         {}},
        {ResidueType::MET, {{"CB", "CA"}, {"CG", "CB"}, {"SD", "CG"}, {"CE", "SD"}}, {}, {}},
        {ResidueType::PHE,
         {{"CB", "CA"}, {"CG", "CB"}, {"CD1", "CG"}, {"CE1", "CD1"}, {"CZ", "CE1"},
          {"CE2", "CZ"}, {"CD2", "CE2"}},
         {{"CG", "CD2"}},
         {"CG", "CD1", "CE1", "CZ", "CE2", "CD2"}},
        {ResidueType::PRO, {{"CB", "CA"}, {"CG", "CB"}, {"CD", "CG"}}, {{"CD", "N"}}, {}},
        {ResidueType::SER, {{"CB", "CA"}, {"OG", "CB"}}, {}, {}},
        {ResidueType::THR, {{"CB", "CA"}, {"OG1", "CB"}, {"CG2", "CB"}}, {}, {}},
        {ResidueType::TRP,
         {{"CB", "CA"}, {"CG", "CB"}, {"CD1", "CG"}, {"NE1", "CD1"}, {"CE2", "NE1"},
          {"CZ2", "CE2"}, {"CH2", "CZ2"}, {"CZ3", "CH2"}, {"CE3", "CZ3"}, {"CD2", "CE3"}},
         {{"CG", "CD2"}, {"CE2", "CD2"}},
         {"CG", "CD1", "NE1", "CE2", "CD2", "CE3", "CZ3", "CH2", "CZ2"}},
        {ResidueType::TYR,
         {{"CB", "CA"}, {"CG", "CB"}, {"CD1", "CG"}, {"CE1", "CD1"}, {"CZ", "CE1"},
          {"OH", "CZ"}, {"CE2", "CZ"}, {"CD2", "CE2"}},
         {{"CG", "CD2"}},
         {"CG", "CD1", "CE1", "CZ", "CE2", "CD2"}},
        {ResidueType::VAL, {{"CB", "CA"}, {"CG1", "CB"}, {"CG2", "CB"}}, {}, {}},
        {ResidueType::TPO,
         {{"CB", "CA"}, {"OG1", "CB"}, {"CG2", "CB"}, {"P", "OG1"}, {"O1P", "P"},
          {"O2P", "P"}, {"O3P", "P"}},
         {},
         {}},
        {ResidueType::SEP,
         {{"CB", "CA"}, {"OG", "CB"}, {"P", "OG"}, {"O1P", "P"}, {"O2P", "P"}, {"O3P", "P"}},
         {},
         {}},
    };
    return specs;
}

ResidueTemplate build_template(const ResidueSpec& spec) {
    ResidueTemplate t;
    t.type = spec.type;

    // Backbone slots. N and C hang off the CA triple of residues
    // i-1, i, i+1; O is anchored entirely within the residue.
    t.slots.push_back({"O", Element::O, {"C", 0}, {"CA", 0}, {"N", 0}});
    t.slots.push_back({"N", Element::N, {"CA", 0}, {"CA", -1}, {"CA", +1}});
    t.slots.push_back({"C", Element::C, {"CA", 0}, {"CA", +1}, {"CA", -1}});

    // Side-chain slots chain through the bonded parent: j is the parent,
    // (k, l) are the parent's own (j, k). CB bottoms out on (CA, C, N).
    for (const SideAtom& sa : spec.side) {
        AtomSlot s;
        s.atom = sa.name;
        s.element = element_from_atom_name(sa.name);
        const std::string parent = sa.parent;
        if (parent == "CA") {
            s.j = {"CA", 0};
            s.k = {"C", 0};
            s.l = {"N", 0};
        } else {
            const AtomSlot& p = t.slot(parent);
            s.j = {parent, 0};
            s.k = p.j;
            s.l = p.k;
        }
        t.slots.push_back(std::move(s));
    }

    t.bonds = {{"N", "CA"}, {"CA", "C"}, {"C", "O"}};
    for (const SideAtom& sa : spec.side)
        t.bonds.emplace_back(sa.parent, sa.name);
    for (const auto& c : spec.closures)
        t.bonds.emplace_back(c.first, c.second);

    for (const char* r : spec.ring)
        t.ring_atoms.emplace_back(r);
    return t;
}

const std::map<ResidueType, ResidueTemplate>& template_table() {
    static const std::map<ResidueType, ResidueTemplate> table = [] {
        std::map<ResidueType, ResidueTemplate> m;
        for (const ResidueSpec& spec : residue_specs())
            m.emplace(spec.type, build_template(spec));
        return m;
    }();
    return table;
}

} // namespace

const ResidueTemplate& template_for(ResidueType type) {
    return template_table().at(type);
}

std::array<AnchorRef, 3> anchors_for(ResidueType type, const std::string& atom) {
    const AtomSlot& s = template_for(type).slot(atom);
    return {s.j, s.k, s.l};
}

std::vector<GraphEdge> bond_graph_reference(const std::vector<ResidueType>& sequence) {
    if (sequence.empty())
        throw DataError("bond_graph_reference: empty sequence");
    std::vector<GraphEdge> edges;
    for (size_t i = 0; i < sequence.size(); ++i) {
        const ResidueTemplate& t = template_for(sequence[i]);
        for (const auto& b : t.bonds) {
            GraphNode a{static_cast<int>(i), b.first};
            GraphNode c{static_cast<int>(i), b.second};
            if (c < a)
                std::swap(a, c);
            edges.emplace_back(a, c);
        }
        if (i + 1 < sequence.size())
            edges.emplace_back(GraphNode{static_cast<int>(i), "C"},
                               GraphNode{static_cast<int>(i + 1), "N"});
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

std::string templates_to_text() {
    std::ostringstream os;
    os << "# residue templates: slot <atom> <j> <k> <l>; bond <a> <b>; ring <atoms...>\n";
    for (ResidueType type : all_residue_types()) {
        const ResidueTemplate& t = template_for(type);
        os << "template " << residue_code(type) << "\n";
        for (const AtomSlot& s : t.slots)
            os << "slot " << s.atom << " " << s.j.str() << " " << s.k.str() << " " << s.l.str()
               << "\n";
        for (const auto& b : t.bonds)
            os << "bond " << b.first << " " << b.second << "\n";
        if (!t.ring_atoms.empty()) {
            os << "ring";
            for (const std::string& r : t.ring_atoms)
                os << " " << r;
            os << "\n";
        }
        os << "end\n";
    }
    return os.str();
}

std::vector<ResidueTemplate> templates_from_text(const std::string& text) {
    std::vector<ResidueTemplate> out;
    std::istringstream is(text);
    std::string line;
    ResidueTemplate current;
    bool open = false;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        const auto fail = [&](const std::string& why) {
            throw DataError("templates_from_text: line " + std::to_string(lineno) + ": " + why);
        };
        if (kw == "template") {
            if (open)
                fail("nested template block");
            std::string code;
            ls >> code;
            current = ResidueTemplate{};
            current.type = residue_type_from_code(code);
            open = true;
        } else if (kw == "slot") {
            if (!open)
                fail("slot outside template block");
            std::string atom, j, k, l;
            ls >> atom >> j >> k >> l;
            if (l.empty())
                fail("slot needs atom and three anchors");
            current.slots.push_back({atom, element_from_atom_name(atom), AnchorRef::parse(j),
                                     AnchorRef::parse(k), AnchorRef::parse(l)});
        } else if (kw == "bond") {
            if (!open)
                fail("bond outside template block");
            std::string a, b;
            ls >> a >> b;
            if (b.empty())
                fail("bond needs two atoms");
            current.bonds.emplace_back(a, b);
        } else if (kw == "ring") {
            if (!open)
                fail("ring outside template block");
            std::string a;
            while (ls >> a)
                current.ring_atoms.push_back(a);
        } else if (kw == "end") {
            if (!open)
                fail("end outside template block");
            out.push_back(current);
            open = false;
        } else {
            fail("unknown keyword '" + kw + "'");
        }
    }
    if (open)
        throw DataError("templates_from_text: unterminated template block");
    return out;
}

} // namespace cgback
