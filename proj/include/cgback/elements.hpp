#pragma once

#include <string>

#include "cgback/errors.hpp"

namespace cgback {

// Heavy-atom elements of the supported residues, plus hydrogen so that
// parsed H/D atoms can be identified and stripped during preprocessing.
enum class Element { H, C, N, O, S, P };

// Single-bond covalent radii in Angstrom, used for bond inference.
inline double covalent_radius(Element e) {
    switch (e) {
    case Element::H: return 0.31;
    case Element::C: return 0.76;
    case Element::N: return 0.71;
    case Element::O: return 0.66;
    case Element::S: return 1.05;
    case Element::P: return 1.07;
    }
    return 0.0;
}

inline bool is_heteroatom(Element e) {
    return e == Element::N || e == Element::O || e == Element::S || e == Element::P;
}

inline const char* element_symbol(Element e) {
    switch (e) {
    case Element::H: return "H";
    case Element::C: return "C";
    case Element::N: return "N";
    case Element::O: return "O";
    case Element::S: return "S";
    case Element::P: return "P";
    }
    return "?";
}

// Derives the element from a PDB atom name when the element column is
// absent: leading digits are ignored, the first letter decides.
// Deuterium maps to H.
inline Element element_from_atom_name(const std::string& name) {
    for (char ch : name) {
        if (ch >= '0' && ch <= '9')
            continue;
        switch (ch) {
        case 'H':
        case 'D': return Element::H;
        case 'C': return Element::C;
        case 'N': return Element::N;
        case 'O': return Element::O;
        case 'S': return Element::S;
        case 'P': return Element::P;
        default:
            throw DataError("unsupported element in atom name '" + name + "'");
        }
    }
    throw DataError("cannot derive element from atom name '" + name + "'");
}

inline Element element_from_symbol(const std::string& symbol) {
    if (symbol == "H" || symbol == "D") return Element::H;
    if (symbol == "C") return Element::C;
    if (symbol == "N") return Element::N;
    if (symbol == "O") return Element::O;
    if (symbol == "S") return Element::S;
    if (symbol == "P") return Element::P;
    throw DataError("unsupported element symbol '" + symbol + "'");
}

} // namespace cgback
