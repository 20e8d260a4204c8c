#include "cgback/pdb_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cgback/errors.hpp"
#include "cgback/templates.hpp"

namespace cgback {

std::string ParseLog::text() const {
    std::string out;
    for (const std::string& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

namespace {

std::string strip(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Columns are 1-based as in the format description.
std::string field(const std::string& line, size_t col, size_t len) {
    if (line.size() < col)
        return {};
    return line.substr(col - 1, std::min(len, line.size() - (col - 1)));
}

double parse_coord(const std::string& raw, const std::string& what, int lineno) {
    try {
        size_t used = 0;
        double v = std::stod(raw, &used);
        if (strip(raw.substr(used)).empty() && std::isfinite(v))
            return v;
    } catch (const std::exception&) {
    }
    throw DataError("PDB line " + std::to_string(lineno) + ": bad " + what + " field '" + raw +
                    "'");
}

struct AtomKey {
    std::string chain;
    int seq;
    std::string res_name;
    std::string atom;
};

void append_atom(Structure& frame, const AtomKey& key, Element element, const Vec3& pos,
                 int lineno, ParseLog* log) {
    Chain* chain = nullptr;
    for (Chain& c : frame.chains)
        if (c.id == key.chain)
            chain = &c;
    if (chain == nullptr) {
        frame.chains.push_back(Chain{key.chain, {}});
        chain = &frame.chains.back();
    }

    Residue* res = nullptr;
    if (!chain->residues.empty() && chain->residues.back().seq_index == key.seq)
        res = &chain->residues.back();
    if (res == nullptr) {
        if (!chain->residues.empty() && chain->residues.back().seq_index > key.seq)
            throw DataError("PDB line " + std::to_string(lineno) + ": residue numbers in chain " +
                            key.chain + " are not increasing");
        Residue r;
        r.type = residue_type_from_code(key.res_name);
        r.seq_index = key.seq;
        chain->residues.push_back(std::move(r));
        res = &chain->residues.back();
    } else if (res->type != residue_type_from_code(key.res_name)) {
        throw DataError("PDB line " + std::to_string(lineno) + ": residue " + key.chain + ":" +
                        std::to_string(key.seq) + " has conflicting names");
    }

    if (res->find_atom(key.atom) != nullptr) {
        if (log)
            log->add("duplicate_atom " + key.chain + ":" + std::to_string(key.seq) + ":" +
                     key.atom + " dropped");
        return;
    }
    Atom a;
    a.name = key.atom;
    a.element = element;
    a.pos = pos;
    res->atoms.push_back(std::move(a));
}

struct SkeletonRef {
    std::string chain;
    int seq;
    std::string atom;
};

std::vector<SkeletonRef> skeleton(const Structure& s) {
    std::vector<SkeletonRef> out;
    for (const Chain& c : s.chains)
        for (const Residue& r : c.residues)
            for (const Atom& a : r.atoms)
                out.push_back({c.id, r.seq_index, a.name});
    return out;
}

void check_skeletons(const Ensemble& e) {
    if (e.frames.size() < 2)
        return;
    const std::vector<SkeletonRef> ref = skeleton(e.frames.front());
    for (size_t f = 1; f < e.frames.size(); ++f) {
        const std::vector<SkeletonRef> cur = skeleton(e.frames[f]);
        const size_t n = std::min(ref.size(), cur.size());
        for (size_t i = 0; i < n; ++i) {
            if (ref[i].chain != cur[i].chain || ref[i].seq != cur[i].seq ||
                ref[i].atom != cur[i].atom)
                throw DataError("model " + std::to_string(f + 1) + " diverges from model 1 at " +
                                cur[i].chain + ":" + std::to_string(cur[i].seq) + ":" +
                                cur[i].atom);
        }
        if (ref.size() != cur.size()) {
            const SkeletonRef& extra = ref.size() > cur.size() ? ref[n] : cur[n];
            throw DataError("model " + std::to_string(f + 1) + " diverges from model 1 at " +
                            extra.chain + ":" + std::to_string(extra.seq) + ":" + extra.atom);
        }
    }
}

} // namespace

Ensemble parse_pdb(std::istream& in, ParseLog* log) {
    Ensemble ensemble;
    Structure frame;
    bool frame_has_atoms = false;
    int lineno = 0;
    std::string line;

    const auto flush_frame = [&] {
        if (frame_has_atoms) {
            frame.frame_id = static_cast<int>(ensemble.frames.size());
            ensemble.frames.push_back(std::move(frame));
        }
        frame = Structure{};
        frame_has_atoms = false;
    };

    while (std::getline(in, line)) {
        ++lineno;
        const std::string rec = field(line, 1, 6);
        if (rec.rfind("MODEL", 0) == 0 || rec.rfind("ENDMDL", 0) == 0) {
            flush_frame();
            continue;
        }
        if (rec != "ATOM  ")
            continue; // HETATM and other records are ignored

        const std::string atom_name = strip(field(line, 13, 4));
        const char altloc = line.size() >= 17 ? line[16] : ' ';
        const std::string res_name = strip(field(line, 18, 3));
        const std::string chain_id = strip(field(line, 22, 1));
        const std::string seq_raw = strip(field(line, 23, 4));
        const char icode = line.size() >= 27 ? line[26] : ' ';

        if (!is_known_residue_code(res_name))
            throw DataError("PDB line " + std::to_string(lineno) + ": unknown residue '" +
                            res_name + "' at " + chain_id + ":" + seq_raw);
        if (altloc != ' ' && altloc != 'A') {
            if (log)
                log->add(std::string("dropped_altloc ") + altloc + " " + chain_id + ":" + seq_raw +
                         ":" + atom_name);
            continue;
        }
        if (icode != ' ') {
            if (log)
                log->add(std::string("dropped_insertion_code ") + icode + " " + chain_id + ":" +
                         seq_raw + ":" + atom_name);
            continue;
        }

        int seq = 0;
        try {
            seq = std::stoi(seq_raw);
        } catch (const std::exception&) {
            throw DataError("PDB line " + std::to_string(lineno) + ": bad residue number '" +
                            seq_raw + "'");
        }

        const Vec3 pos{parse_coord(field(line, 31, 8), "x", lineno),
                       parse_coord(field(line, 39, 8), "y", lineno),
                       parse_coord(field(line, 47, 8), "z", lineno)};

        const std::string elem_field = strip(field(line, 77, 2));
        const Element element = elem_field.empty() ? element_from_atom_name(atom_name)
                                                   : element_from_symbol(elem_field);

        append_atom(frame, {chain_id.empty() ? "A" : chain_id, seq, res_name, atom_name}, element,
                    pos, lineno, log);
        frame_has_atoms = true;
    }
    flush_frame();

    if (ensemble.frames.empty())
        throw DataError("PDB stream contains no ATOM records");
    check_skeletons(ensemble);
    return ensemble;
}

Ensemble parse_pdb(const std::string& text, ParseLog* log) {
    std::istringstream is(text);
    return parse_pdb(is, log);
}

Ensemble parse_pdb_file(const std::string& path, ParseLog* log) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open '" + path + "'");
    return parse_pdb(in, log);
}

namespace {

void write_atom_line(std::string& out, int serial, const Atom& a, const Residue& r,
                     const std::string& chain_id) {
    // Names shorter than four characters start in column 14.
    std::string name = a.name;
    if (name.size() < 4)
        name = " " + name;
    const std::string cid = chain_id.empty() ? " " : chain_id.substr(0, 1);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "ATOM  %5d %-4s %3s %1s%4d    %8.3f%8.3f%8.3f%6.2f%6.2f          %2s\n",
                  serial % 100000, name.c_str(), residue_code(r.type), cid.c_str(), r.seq_index,
                  a.pos->x, a.pos->y, a.pos->z, 1.0, 0.0, element_symbol(a.element));
    out += buf;
}

void write_frame(std::string& out, const Structure& s, int& serial) {
    for (const Chain& c : s.chains) {
        for (const Residue& r : c.residues) {
            for (const Atom& a : r.atoms) {
                if (!a.placed()) {
                    if (r.terminal)
                        continue;
                    throw DataError("write_pdb: unplaced atom " + r.label(c.id) + ":" + a.name);
                }
                write_atom_line(out, serial++, a, r, c.id);
            }
        }
        out += "TER\n";
    }
}

} // namespace

std::string write_pdb(const Structure& s) {
    std::string out;
    int serial = 1;
    write_frame(out, s, serial);
    out += "END\n";
    return out;
}

std::string write_pdb(const Ensemble& e) {
    if (e.frames.size() == 1)
        return write_pdb(e.frames.front());
    std::string out;
    for (size_t f = 0; f < e.frames.size(); ++f) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "MODEL %8zu\n", f + 1);
        out += buf;
        int serial = 1;
        write_frame(out, e.frames[f], serial);
        out += "ENDMDL\n";
    }
    out += "END\n";
    return out;
}

void write_pdb_file(const Ensemble& e, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot open '" + path + "' for writing");
    out << write_pdb(e);
    if (!out)
        throw DataError("failed writing '" + path + "'");
}

} // namespace cgback
