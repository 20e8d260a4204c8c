#include "cgback/spatial_hash.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace cgback {

namespace {

std::int64_t cell_key(int ix, int iy, int iz) {
    // 21 bits per axis, offset to stay positive
    constexpr std::int64_t off = 1 << 20;
    return ((ix + off) << 42) | ((iy + off) << 21) | (iz + off);
}

} // namespace

std::vector<std::pair<int, int>> neighbor_pairs_within(std::span<const Vec3> points,
                                                       double cutoff) {
    std::vector<std::pair<int, int>> pairs;
    if (points.size() < 2 || cutoff <= 0.0)
        return pairs;
    const double inv = 1.0 / cutoff;
    const double cut2 = cutoff * cutoff;

    std::unordered_map<std::int64_t, std::vector<int>> cells;
    cells.reserve(points.size());
    std::vector<std::array<int, 3>> coords(points.size());
    for (size_t i = 0; i < points.size(); ++i) {
        coords[i] = {static_cast<int>(std::floor(points[i].x * inv)),
                     static_cast<int>(std::floor(points[i].y * inv)),
                     static_cast<int>(std::floor(points[i].z * inv))};
        cells[cell_key(coords[i][0], coords[i][1], coords[i][2])].push_back(static_cast<int>(i));
    }

    for (size_t i = 0; i < points.size(); ++i) {
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz) {
                    const auto it = cells.find(
                        cell_key(coords[i][0] + dx, coords[i][1] + dy, coords[i][2] + dz));
                    if (it == cells.end())
                        continue;
                    for (int j : it->second)
                        if (j > static_cast<int>(i) &&
                            norm_sq(points[i] - points[j]) < cut2)
                            pairs.emplace_back(static_cast<int>(i), j);
                }
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

} // namespace cgback
