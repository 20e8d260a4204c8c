#include "cgback/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "cgback/errors.hpp"
#include "cgback/spatial_hash.hpp"

namespace cgback {

namespace {

std::vector<Vec3> site_coords(const std::vector<Site>& sites) {
    std::vector<Vec3> coords;
    coords.reserve(sites.size());
    for (const Site& s : sites)
        coords.push_back(s.pos);
    return coords;
}

void require_matching_sites(const std::vector<Site>& a, const std::vector<Site>& b,
                            const char* what) {
    if (a.size() != b.size())
        throw DataError(std::string(what) + ": structures have different atom sets");
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i].flat_residue != b[i].flat_residue || a[i].atom != b[i].atom)
            throw DataError(std::string(what) + ": skeleton mismatch at " + a[i].atom);
}

} // namespace

BondGraph infer_bond_graph(const Structure& s, double tol) {
    const std::vector<Site> sites = evaluation_sites(s);
    const std::vector<Vec3> coords = site_coords(sites);
    BondGraph g;
    g.nodes.reserve(sites.size());
    for (const Site& site : sites)
        g.nodes.push_back({site.flat_residue, site.atom});

    // Largest possible bond: two phosphorus radii plus the tolerance.
    const double max_bond = 2.0 * covalent_radius(Element::P) + tol;
    for (const auto& [i, j] : neighbor_pairs_within(coords, max_bond)) {
        const double limit =
            covalent_radius(sites[i].element) + covalent_radius(sites[j].element) + tol;
        if (distance(coords[i], coords[j]) < limit) {
            GraphNode a{sites[i].flat_residue, sites[i].atom};
            GraphNode b{sites[j].flat_residue, sites[j].atom};
            if (b < a)
                std::swap(a, b);
            g.edges.emplace_back(a, b);
        }
    }
    std::sort(g.nodes.begin(), g.nodes.end());
    std::sort(g.edges.begin(), g.edges.end());
    return g;
}

BondGraph reference_bond_graph(const Structure& s) {
    const std::vector<Site> sites = evaluation_sites(s);
    std::set<GraphNode> present;
    BondGraph g;
    g.nodes.reserve(sites.size());
    for (const Site& site : sites) {
        g.nodes.push_back({site.flat_residue, site.atom});
        present.insert(g.nodes.back());
    }
    for (const GraphEdge& e : bond_graph_reference(sequence_of(s)))
        if (present.count(e.first) != 0 && present.count(e.second) != 0)
            g.edges.push_back(e);
    std::sort(g.nodes.begin(), g.nodes.end());
    std::sort(g.edges.begin(), g.edges.end());
    return g;
}

double ged_ratio(const BondGraph& gen, const BondGraph& truth) {
    if (!gen.same_nodes(truth))
        throw DataError("ged_ratio: node sets differ");
    if (truth.edges.empty())
        throw DataError("ged_ratio: reference graph has no edges");
    std::vector<GraphEdge> sym;
    std::set_symmetric_difference(gen.edges.begin(), gen.edges.end(), truth.edges.begin(),
                                  truth.edges.end(), std::back_inserter(sym));
    return static_cast<double>(sym.size()) / static_cast<double>(truth.edges.size());
}

double clash_ratio_pct(const Structure& s, double clash_dist, double shell) {
    const std::vector<Site> sites = evaluation_sites(s);
    const std::vector<Vec3> coords = site_coords(sites);
    const ExclusionSet excl = reference_exclusions(s, sites);
    std::uint64_t in_shell = 0;
    std::uint64_t clashes = 0;
    for (const auto& [i, j] : neighbor_pairs_within(coords, shell)) {
        if (excl.excluded(i, j))
            continue;
        ++in_shell;
        if (distance(coords[i], coords[j]) < clash_dist)
            ++clashes;
    }
    if (in_shell == 0)
        return 0.0;
    return 100.0 * static_cast<double>(clashes) / static_cast<double>(in_shell);
}

double rmsd(const Structure& truth, const Structure& generated) {
    const std::vector<Site> ts = evaluation_sites(truth);
    const std::vector<Site> gs = evaluation_sites(generated);
    require_matching_sites(ts, gs, "rmsd");
    double acc = 0;
    for (size_t i = 0; i < ts.size(); ++i)
        acc += norm_sq(ts[i].pos - gs[i].pos);
    return std::sqrt(acc / static_cast<double>(ts.size()));
}

namespace {

struct RingCenter {
    int flat_residue = 0;
    Vec3 center;
};

std::vector<RingCenter> ring_centers(const Structure& s) {
    std::vector<RingCenter> centers;
    int flat = 0;
    for (const Chain& chain : s.chains) {
        for (const Residue& res : chain.residues) {
            const int my_flat = flat++;
            if (res.terminal)
                continue;
            const ResidueTemplate& tmpl = template_for(res.type);
            if (tmpl.ring_atoms.empty())
                continue;
            Vec3 acc{};
            bool complete = true;
            for (const std::string& name : tmpl.ring_atoms) {
                const Atom* a = res.find_atom(name);
                if (a == nullptr || !a->placed()) {
                    complete = false;
                    break;
                }
                acc += *a->pos;
            }
            if (!complete)
                continue;
            centers.push_back({my_flat, acc / static_cast<double>(tmpl.ring_atoms.size())});
        }
    }
    return centers;
}

} // namespace

InteractionScores interaction_scores(const Structure& truth, const Structure& generated) {
    const std::vector<Site> ts = evaluation_sites(truth);
    const std::vector<Site> gs = evaluation_sites(generated);
    require_matching_sites(ts, gs, "interaction_scores");

    InteractionScores scores;

    // Heteroatom pairs identified on the truth at < 3.3 A, scored on the
    // generated frame with a hinge at 4.0 A. Covalent 1-2/1-3 pairs are
    // not interactions.
    const ExclusionSet excl = reference_exclusions(truth, ts);
    const std::vector<Vec3> coords = site_coords(ts);
    for (const auto& [i, j] : neighbor_pairs_within(coords, 3.3)) {
        if (excl.excluded(i, j))
            continue;
        if (!is_heteroatom(ts[i].element) || !is_heteroatom(ts[j].element))
            continue;
        const double d_gen = distance(gs[i].pos, gs[j].pos);
        scores.atom_score += std::max(d_gen - 4.0, 0.0);
    }

    // Aromatic ring-center pairs identified on the truth at < 5.5 A,
    // hinge at 6.0 A.
    const std::vector<RingCenter> tr = ring_centers(truth);
    const std::vector<RingCenter> gr = ring_centers(generated);
    if (tr.size() != gr.size())
        throw DataError("interaction_scores: ring sets differ");
    for (size_t i = 0; i < tr.size(); ++i)
        for (size_t j = i + 1; j < tr.size(); ++j) {
            if (distance(tr[i].center, tr[j].center) >= 5.5)
                continue;
            const double d_gen = distance(gr[i].center, gr[j].center);
            scores.pi_score += std::max(d_gen - 6.0, 0.0);
        }
    return scores;
}

std::string Histogram::to_csv() const {
    std::string out = "bin_lo,bin_hi,count\n";
    for (size_t i = 0; i < counts.size(); ++i) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%.3f,%.3f,%llu\n", bin_width * static_cast<double>(i),
                      bin_width * static_cast<double>(i + 1),
                      static_cast<unsigned long long>(counts[i]));
        out += buf;
    }
    return out;
}

std::uint64_t Histogram::band_count(double lo, double hi) const {
    std::uint64_t acc = 0;
    for (size_t i = 0; i < counts.size(); ++i) {
        const double bin_lo = bin_width * static_cast<double>(i);
        const double bin_hi = bin_width * static_cast<double>(i + 1);
        if (bin_lo >= lo - 1e-12 && bin_hi <= hi + 1e-12)
            acc += counts[i];
    }
    return acc;
}

Histogram distance_histogram(std::span<const Structure> frames, double bin_width,
                             double max_distance) {
    Histogram h;
    h.bin_width = bin_width;
    h.max_distance = max_distance;
    h.counts.assign(static_cast<size_t>(std::ceil(max_distance / bin_width)), 0);
    for (const Structure& s : frames) {
        const std::vector<Site> sites = evaluation_sites(s);
        const std::vector<Vec3> coords = site_coords(sites);
        const ExclusionSet excl = reference_exclusions(s, sites);
        for (const auto& [i, j] : neighbor_pairs_within(coords, max_distance)) {
            if (excl.excluded(i, j))
                continue;
            const double d = distance(coords[i], coords[j]);
            const size_t bin = static_cast<size_t>(d / bin_width);
            if (bin < h.counts.size())
                ++h.counts[bin];
        }
    }
    return h;
}

PairQuery PairQuery::parse(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos)
        throw DataError("pair query needs two comma-separated atoms: '" + text + "'");
    const auto parse_one = [](const std::string& part, std::string& chain, int& seq,
                              std::string& atom) {
        const auto c1 = part.find(':');
        const auto c2 = part.find(':', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw DataError("pair query atom must be chain:res:atom, got '" + part + "'");
        chain = part.substr(0, c1);
        try {
            seq = std::stoi(part.substr(c1 + 1, c2 - c1 - 1));
        } catch (const std::exception&) {
            throw DataError("pair query has a bad residue number in '" + part + "'");
        }
        atom = part.substr(c2 + 1);
        if (chain.empty() || atom.empty())
            throw DataError("pair query atom must be chain:res:atom, got '" + part + "'");
    };
    PairQuery q;
    parse_one(text.substr(0, comma), q.chain_a, q.seq_a, q.atom_a);
    parse_one(text.substr(comma + 1), q.chain_b, q.seq_b, q.atom_b);
    return q;
}

std::vector<double> pair_distances(const Ensemble& e, const PairQuery& q) {
    std::vector<double> out;
    out.reserve(e.frames.size());
    const auto locate = [](const Structure& s, const std::string& chain_id, int seq,
                           const std::string& atom) -> Vec3 {
        for (const Chain& c : s.chains) {
            if (c.id != chain_id)
                continue;
            for (const Residue& r : c.residues) {
                if (r.seq_index != seq)
                    continue;
                const Atom* a = r.find_atom(atom);
                if (a == nullptr || !a->placed())
                    throw DataError("pair query: atom " + chain_id + ":" + std::to_string(seq) +
                                    ":" + atom + " not present");
                return *a->pos;
            }
        }
        throw DataError("pair query: residue " + chain_id + ":" + std::to_string(seq) +
                        " not found");
    };
    for (const Structure& s : e.frames)
        out.push_back(distance(locate(s, q.chain_a, q.seq_a, q.atom_a),
                               locate(s, q.chain_b, q.seq_b, q.atom_b)));
    return out;
}

std::string MetricsReport::to_json() const {
    std::ostringstream os;
    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "{\"rmsd\": %.12g, \"ged_ratio\": %.12g, \"clash_ratio_pct\": %.12g, "
                  "\"interaction_atom\": %.12g, \"interaction_pi\": %.12g, \"frames\": [",
                  rmsd, ged_ratio, clash_ratio_pct, interaction_atom, interaction_pi);
    os << buf;
    for (size_t i = 0; i < frames.size(); ++i) {
        const FrameMetrics& f = frames[i];
        std::snprintf(buf, sizeof(buf),
                      "%s{\"rmsd\": %.12g, \"ged_ratio\": %.12g, \"clash_ratio_pct\": %.12g, "
                      "\"interaction_atom\": %.12g, \"interaction_pi\": %.12g}",
                      i == 0 ? "" : ", ", f.rmsd, f.ged_ratio, f.clash_ratio_pct,
                      f.interaction_atom, f.interaction_pi);
        os << buf;
    }
    os << "]}";
    return os.str();
}

MetricsReport evaluate_ensembles(const Ensemble& truth, const Ensemble& generated, int threads) {
    if (truth.frames.size() != generated.frames.size())
        throw DataError("evaluate: ensembles have different frame counts (" +
                        std::to_string(truth.frames.size()) + " vs " +
                        std::to_string(generated.frames.size()) + ")");
    if (truth.frames.empty())
        throw DataError("evaluate: empty ensembles");

    MetricsReport report;
    report.frames.resize(truth.frames.size());
    std::vector<std::exception_ptr> errors(truth.frames.size());

    const auto eval_frame = [&](size_t f) {
        try {
            FrameMetrics m;
            m.rmsd = rmsd(truth.frames[f], generated.frames[f]);
            const BondGraph ref = reference_bond_graph(generated.frames[f]);
            m.ged_ratio = ged_ratio(infer_bond_graph(generated.frames[f]), ref);
            m.clash_ratio_pct = clash_ratio_pct(generated.frames[f]);
            const InteractionScores inter =
                interaction_scores(truth.frames[f], generated.frames[f]);
            m.interaction_atom = inter.atom_score;
            m.interaction_pi = inter.pi_score;
            report.frames[f] = m;
        } catch (...) {
            errors[f] = std::current_exception();
        }
    };

    if (threads <= 1) {
        for (size_t f = 0; f < truth.frames.size(); ++f)
            eval_frame(f);
    } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (size_t f = next.fetch_add(1); f < truth.frames.size();
                     f = next.fetch_add(1))
                    eval_frame(f);
            });
        for (std::thread& t : pool)
            t.join();
    }
    for (const std::exception_ptr& e : errors)
        if (e)
            std::rethrow_exception(e);

    const double n = static_cast<double>(report.frames.size());
    for (const FrameMetrics& f : report.frames) {
        report.rmsd += f.rmsd / n;
        report.ged_ratio += f.ged_ratio / n;
        report.clash_ratio_pct += f.clash_ratio_pct / n;
        report.interaction_atom += f.interaction_atom / n;
        report.interaction_pi += f.interaction_pi / n;
    }
    return report;
}

} // namespace cgback
