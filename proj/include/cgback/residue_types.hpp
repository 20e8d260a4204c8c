#pragma once

#include <array>
#include <string>

#include "cgback/errors.hpp"

namespace cgback {

// The 20 canonical amino acids plus phosphothreonine and phosphoserine.
enum class ResidueType {
    ALA, ARG, ASN, ASP, CYS, GLN, GLU, GLY, HIS, ILE,
    LEU, LYS, MET, PHE, PRO, SER, THR, TRP, TYR, VAL,
    TPO, SEP,
};

constexpr int kNumResidueTypes = 22;

constexpr std::array<ResidueType, kNumResidueTypes> all_residue_types() {
    return {ResidueType::ALA, ResidueType::ARG, ResidueType::ASN, ResidueType::ASP,
            ResidueType::CYS, ResidueType::GLN, ResidueType::GLU, ResidueType::GLY,
            ResidueType::HIS, ResidueType::ILE, ResidueType::LEU, ResidueType::LYS,
            ResidueType::MET, ResidueType::PHE, ResidueType::PRO, ResidueType::SER,
            ResidueType::THR, ResidueType::TRP, ResidueType::TYR, ResidueType::VAL,
            ResidueType::TPO, ResidueType::SEP};
}

inline const char* residue_code(ResidueType t) {
    switch (t) {
    case ResidueType::ALA: return "ALA";
    case ResidueType::ARG: return "ARG";
    case ResidueType::ASN: return "ASN";
    case ResidueType::ASP: return "ASP";
    case ResidueType::CYS: return "CYS";
    case ResidueType::GLN: return "GLN";
    case ResidueType::GLU: return "GLU";
    case ResidueType::GLY: return "GLY";
    case ResidueType::HIS: return "HIS";
    case ResidueType::ILE: return "ILE";
    case ResidueType::LEU: return "LEU";
    case ResidueType::LYS: return "LYS";
    case ResidueType::MET: return "MET";
    case ResidueType::PHE: return "PHE";
    case ResidueType::PRO: return "PRO";
    case ResidueType::SER: return "SER";
    case ResidueType::THR: return "THR";
    case ResidueType::TRP: return "TRP";
    case ResidueType::TYR: return "TYR";
    case ResidueType::VAL: return "VAL";
    case ResidueType::TPO: return "TPO";
    case ResidueType::SEP: return "SEP";
    }
    return "???";
}

// Accepts the canonical three-letter codes. "SPO" is an alternative
// spelling of phosphoserine and maps to the same type as "SEP".
inline ResidueType residue_type_from_code(const std::string& code) {
    for (ResidueType t : all_residue_types())
        if (code == residue_code(t))
            return t;
    if (code == "SPO")
        return ResidueType::SEP;
    throw DataError("unknown residue code '" + code + "'");
}

inline bool is_known_residue_code(const std::string& code) {
    if (code == "SPO")
        return true;
    for (ResidueType t : all_residue_types())
        if (code == residue_code(t))
            return true;
    return false;
}

} // namespace cgback
