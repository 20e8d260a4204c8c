#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cgback/structure.hpp"

namespace cgback {

// Non-fatal parse events (dropped altlocs, insertion codes, duplicates).
struct ParseLog {
    std::vector<std::string> lines;

    void add(std::string line) { lines.push_back(std::move(line)); }
    std::string text() const;
};

// Reads a PDB stream into an ensemble. MODEL/ENDMDL records delimit
// frames; without them the file is a single frame. Only ATOM records are
// read; altloc 'A' or blank is kept, insertion-coded atoms are dropped.
// All frames must share one (chain, residue, atom-name) skeleton.
Ensemble parse_pdb(std::istream& in, ParseLog* log = nullptr);
Ensemble parse_pdb(const std::string& text, ParseLog* log = nullptr);
Ensemble parse_pdb_file(const std::string& path, ParseLog* log = nullptr);

// Writes fixed-width ATOM records at PDB precision (3 decimals).
// Multi-frame ensembles are emitted as MODEL blocks. Unplaced atoms of
// non-terminal residues are an error; unplaced terminal atoms are
// skipped.
std::string write_pdb(const Structure& s);
std::string write_pdb(const Ensemble& e);
void write_pdb_file(const Ensemble& e, const std::string& path);

} // namespace cgback
