#include "cgback/stats.hpp"

#include <cmath>
#include <cstdio>

#include "cgback/errors.hpp"

namespace cgback {

double radius_of_gyration(std::span<const Vec3> points) {
    if (points.empty())
        throw DataError("radius_of_gyration: no points");
    Vec3 centroid{};
    for (const Vec3& p : points)
        centroid += p;
    centroid = centroid / static_cast<double>(points.size());
    double acc = 0;
    for (const Vec3& p : points)
        acc += norm_sq(p - centroid);
    return std::sqrt(acc / static_cast<double>(points.size()));
}

std::vector<CompactnessRow> compactness_stats(const std::vector<NamedEnsemble>& entries) {
    std::vector<CompactnessRow> rows;
    for (const NamedEnsemble& entry : entries) {
        if (entry.ensemble == nullptr || entry.ensemble->frames.empty())
            continue;
        const Structure& first = entry.ensemble->frames.front();
        for (size_t ci = 0; ci < first.chains.size(); ++ci) {
            CompactnessRow row;
            row.entry = entry.name;
            row.chain = first.chains[ci].id;
            row.length = static_cast<int>(first.chains[ci].residues.size());
            double acc = 0;
            for (const Structure& frame : entry.ensemble->frames) {
                std::vector<Vec3> pts;
                for (const Residue& res : frame.chains[ci].residues)
                    for (const Atom& a : res.atoms)
                        if (a.pos)
                            pts.push_back(*a.pos);
                acc += radius_of_gyration(pts);
            }
            row.rg_mean = acc / static_cast<double>(entry.ensemble->frames.size());
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::string compactness_csv(const std::vector<CompactnessRow>& rows) {
    std::string out = "entry,chain,length,rg_mean\n";
    for (const CompactnessRow& r : rows) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%s,%s,%d,%.6f\n", r.entry.c_str(), r.chain.c_str(),
                      r.length, r.rg_mean);
        out += buf;
    }
    return out;
}

} // namespace cgback
