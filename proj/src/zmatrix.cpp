#include "cgback/zmatrix.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "cgback/detail/dual.hpp"
#include "cgback/errors.hpp"

namespace cgback {

const ZResidue* ZMatrixFrame::find(const std::string& chain_id, int seq_index) const {
    for (const ZChain& c : chains) {
        if (c.id != chain_id)
            continue;
        for (const ZResidue& r : c.residues)
            if (r.seq_index == seq_index)
                return &r;
    }
    return nullptr;
}

size_t ZMatrixFrame::row_count() const {
    size_t n = 0;
    for (const ZChain& c : chains)
        for (const ZResidue& r : c.residues)
            n += r.rows.size();
    return n;
}

namespace {

using Dual = detail::DualT<kMaxSlotsPerResidue * 3>;

template <class S>
Vec3T<S> place_kernel(const Vec3T<S>& aj, const Vec3T<S>& ak, const Vec3T<S>& al, const S& d,
                      const S& theta, const S& tau) {
    using std::cos;
    using std::sin;
    const Vec3T<S> u = normalized(aj - ak);           // k -> j direction
    const Vec3T<S> n = normalized(cross(ak - al, u)); // anchor-plane normal
    const Vec3T<S> m = cross(n, u);
    const S st = sin(theta);
    return aj + u * (-(d * cos(theta))) + m * (d * st * cos(tau)) + n * (d * st * sin(tau));
}

void check_anchors(const Vec3& aj, const Vec3& ak, const Vec3& al, const std::string& context) {
    const Vec3 v1 = aj - ak;
    const Vec3 v2 = ak - al;
    const double n1 = norm(v1);
    const double n2 = norm(v2);
    if (n1 == 0.0 || n2 == 0.0)
        throw NumericError(context + ": coincident anchor atoms");
    if (norm(cross(v1, v2)) < kDegeneracyTol * n1 * n2)
        throw NumericError(context + ": collinear anchor atoms");
}

// Adjacent-residue context used to resolve anchor references.
struct BeadWindow {
    const CGBead* prev = nullptr;
    const CGBead* self = nullptr;
    const CGBead* next = nullptr;
};

BeadWindow bead_window(const CGChain& chain, size_t ri) {
    BeadWindow w;
    w.self = &chain.beads[ri];
    if (ri > 0)
        w.prev = &chain.beads[ri - 1];
    if (ri + 1 < chain.beads.size())
        w.next = &chain.beads[ri + 1];
    return w;
}

void check_alignment(const Structure& s, const CGTrace& trace) {
    if (s.chains.size() != trace.chains.size())
        throw DataError("extract: structure and trace have different chain counts");
    for (size_t ci = 0; ci < s.chains.size(); ++ci) {
        const Chain& sc = s.chains[ci];
        const CGChain& tc = trace.chains[ci];
        if (sc.id != tc.id || sc.residues.size() != tc.beads.size())
            throw DataError("extract: chain " + sc.id + " does not match the trace");
        for (size_t ri = 0; ri < sc.residues.size(); ++ri)
            if (sc.residues[ri].type != tc.beads[ri].type ||
                sc.residues[ri].seq_index != tc.beads[ri].seq_index)
                throw DataError("extract: residue " + sc.residues[ri].label(sc.id) +
                                " does not match the trace");
    }
}

} // namespace

Vec3 place_atom(const Vec3& j, const Vec3& k, const Vec3& l, double d, double theta, double tau) {
    if (!(d > 0.0) || !std::isfinite(d))
        throw NumericError("place_atom: bond length must be positive");
    check_anchors(j, k, l, "place_atom");
    return place_kernel<double>(j, k, l, d, theta, tau);
}

ZMatrixFrame extract(const Structure& s, const CGTrace& trace) {
    check_alignment(s, trace);
    ZMatrixFrame out;
    for (size_t ci = 0; ci < s.chains.size(); ++ci) {
        const Chain& chain = s.chains[ci];
        const CGChain& beads = trace.chains[ci];
        ZChain zc;
        zc.id = chain.id;
        for (size_t ri = 0; ri < chain.residues.size(); ++ri) {
            const Residue& res = chain.residues[ri];
            ZResidue zr;
            zr.type = res.type;
            zr.seq_index = res.seq_index;
            const bool terminal = ri == 0 || ri + 1 == chain.residues.size();
            if (!terminal) {
                const BeadWindow w = bead_window(beads, ri);
                const std::string label = res.label(chain.id);
                const auto resolve = [&](const AnchorRef& ref) -> Vec3 {
                    if (ref.offset < 0)
                        return w.prev->ca;
                    if (ref.offset > 0)
                        return w.next->ca;
                    if (ref.atom == "CA")
                        return w.self->ca;
                    const Atom* a = res.find_atom(ref.atom);
                    if (a == nullptr || !a->placed())
                        throw DataError("extract: residue " + label + " missing anchor atom " +
                                        ref.atom);
                    return *a->pos;
                };
                for (const AtomSlot& slot : template_for(res.type).slots) {
                    const Atom* target = res.find_atom(slot.atom);
                    if (target == nullptr || !target->placed())
                        throw DataError("extract: residue " + label + " missing atom " +
                                        slot.atom);
                    const Vec3 aj = resolve(slot.j);
                    const Vec3 ak = resolve(slot.k);
                    const Vec3 al = resolve(slot.l);
                    ZRow row;
                    row.atom = slot.atom;
                    row.j = slot.j;
                    row.k = slot.k;
                    row.l = slot.l;
                    row.d = distance(*target->pos, aj);
                    if (row.d == 0.0)
                        throw NumericError("extract: " + label + ":" + slot.atom +
                                           " coincides with its anchor");
                    try {
                        check_anchors(aj, ak, al, "extract " + label + ":" + slot.atom);
                        row.theta = bond_angle(*target->pos, aj, ak);
                        row.tau = dihedral(*target->pos, aj, ak, al);
                    } catch (const NumericError& e) {
                        throw NumericError("extract: " + label + ":" + slot.atom + ": " +
                                           e.what());
                    }
                    zr.rows.push_back(std::move(row));
                }
            }
            zc.residues.push_back(std::move(zr));
        }
        out.chains.push_back(std::move(zc));
    }
    return out;
}

namespace {

// Validates one residue's rows against its template and returns them.
const ZResidue& rows_for(const ZMatrixFrame& zmat, const std::string& chain_id,
                         const CGBead& bead) {
    const ZResidue* zr = zmat.find(chain_id, bead.seq_index);
    const std::string label =
        chain_id + ":" + std::to_string(bead.seq_index) + ":" + residue_code(bead.type);
    if (zr == nullptr || zr->rows.empty())
        throw DataError("reconstruct: missing rows for residue " + label);
    const ResidueTemplate& tmpl = template_for(bead.type);
    if (zr->rows.size() != tmpl.slots.size())
        throw DataError("reconstruct: residue " + label + " has " +
                        std::to_string(zr->rows.size()) + " rows, template needs " +
                        std::to_string(tmpl.slots.size()));
    for (size_t i = 0; i < zr->rows.size(); ++i) {
        const ZRow& row = zr->rows[i];
        const AtomSlot& slot = tmpl.slots[i];
        if (row.atom != slot.atom || !(row.j == slot.j) || !(row.k == slot.k) ||
            !(row.l == slot.l))
            throw DataError("reconstruct: residue " + label + " row " + std::to_string(i) +
                            " does not match the " + residue_code(bead.type) + " template");
        if (!(row.d > 0.0) || !std::isfinite(row.theta) || !std::isfinite(row.tau))
            throw NumericError("reconstruct: residue " + label + ":" + row.atom +
                               " has invalid internal coordinates");
    }
    return *zr;
}

Structure skeleton_from_trace(const CGTrace& trace) {
    Structure s;
    for (const CGChain& tc : trace.chains) {
        Chain chain;
        chain.id = tc.id;
        for (size_t ri = 0; ri < tc.beads.size(); ++ri) {
            const CGBead& bead = tc.beads[ri];
            Residue res;
            res.type = bead.type;
            res.seq_index = bead.seq_index;
            res.terminal = ri == 0 || ri + 1 == tc.beads.size();
            Atom ca;
            ca.name = "CA";
            ca.element = Element::C;
            ca.pos = bead.ca;
            res.atoms.push_back(std::move(ca));
            if (!res.terminal)
                for (const AtomSlot& slot : template_for(bead.type).slots)
                    res.atoms.push_back(Atom{slot.atom, slot.element, std::nullopt});
            chain.residues.push_back(std::move(res));
        }
        s.chains.push_back(std::move(chain));
    }
    return s;
}

int pass_count(const CGTrace& trace) {
    int passes = 0;
    for (const CGChain& tc : trace.chains)
        for (size_t ri = 1; ri + 1 < tc.beads.size(); ++ri)
            passes = std::max(passes,
                              static_cast<int>(template_for(tc.beads[ri].type).slots.size()));
    return passes;
}

template <class S>
Vec3T<S> resolve_reconstruct_anchor(const AnchorRef& ref, const BeadWindow& w,
                                    const std::vector<Vec3T<S>>& placed,
                                    const ResidueTemplate& tmpl, const std::string& label) {
    const auto constant = [](const Vec3& v) { return Vec3T<S>{S(v.x), S(v.y), S(v.z)}; };
    if (ref.offset < 0)
        return constant(w.prev->ca);
    if (ref.offset > 0)
        return constant(w.next->ca);
    if (ref.atom == "CA")
        return constant(w.self->ca);
    const int idx = tmpl.slot_index(ref.atom);
    if (idx < 0 || static_cast<size_t>(idx) >= placed.size())
        throw DataError("reconstruct: residue " + label + " anchor " + ref.atom +
                        " is not placed yet");
    return placed[idx];
}

} // namespace

Structure reconstruct_frame(const CGTrace& trace, const ZMatrixFrame& zmat,
                            ReconstructStats* stats) {
    Structure s = skeleton_from_trace(trace);
    const int passes = pass_count(trace);

    for (size_t ci = 0; ci < trace.chains.size(); ++ci) {
        const CGChain& tc = trace.chains[ci];
        Chain& chain = s.chains[ci];
        for (size_t ri = 1; ri + 1 < tc.beads.size(); ++ri) {
            const CGBead& bead = tc.beads[ri];
            const ZResidue& zr = rows_for(zmat, tc.id, bead);
            const ResidueTemplate& tmpl = template_for(bead.type);
            const BeadWindow w = bead_window(tc, ri);
            const std::string label = chain.residues[ri].label(tc.id);
            std::vector<Vec3> placed;
            placed.reserve(zr.rows.size());
            // Passes are residue-local: every anchor is either a CA bead
            // or an earlier slot of the same residue.
            for (size_t si = 0; si < zr.rows.size(); ++si) {
                const ZRow& row = zr.rows[si];
                const Vec3 aj = resolve_reconstruct_anchor<double>(row.j, w, placed, tmpl, label);
                const Vec3 ak = resolve_reconstruct_anchor<double>(row.k, w, placed, tmpl, label);
                const Vec3 al = resolve_reconstruct_anchor<double>(row.l, w, placed, tmpl, label);
                check_anchors(aj, ak, al, "reconstruct " + label + ":" + row.atom);
                placed.push_back(place_kernel<double>(aj, ak, al, row.d, row.theta, row.tau));
                chain.residues[ri].find_atom(row.atom)->pos = placed.back();
            }
        }
    }
    if (stats != nullptr)
        stats->passes = passes;
    return s;
}

Structure reconstruct_with_jacobian(const CGTrace& trace, const ZMatrixFrame& zmat,
                                    PlacementJacobian& jacobian, ReconstructStats* stats) {
    Structure s = skeleton_from_trace(trace);
    const int passes = pass_count(trace);
    jacobian.residues.assign(trace.chains.size(), {});

    for (size_t ci = 0; ci < trace.chains.size(); ++ci) {
        const CGChain& tc = trace.chains[ci];
        Chain& chain = s.chains[ci];
        jacobian.residues[ci].resize(tc.beads.size());
        for (size_t ri = 1; ri + 1 < tc.beads.size(); ++ri) {
            const CGBead& bead = tc.beads[ri];
            const ZResidue& zr = rows_for(zmat, tc.id, bead);
            const ResidueTemplate& tmpl = template_for(bead.type);
            const BeadWindow w = bead_window(tc, ri);
            const std::string label = chain.residues[ri].label(tc.id);
            const int n_slots = static_cast<int>(zr.rows.size());

            std::vector<Vec3T<Dual>> placed;
            placed.reserve(zr.rows.size());
            for (size_t si = 0; si < zr.rows.size(); ++si) {
                const ZRow& row = zr.rows[si];
                const Vec3T<Dual> aj =
                    resolve_reconstruct_anchor<Dual>(row.j, w, placed, tmpl, label);
                const Vec3T<Dual> ak =
                    resolve_reconstruct_anchor<Dual>(row.k, w, placed, tmpl, label);
                const Vec3T<Dual> al =
                    resolve_reconstruct_anchor<Dual>(row.l, w, placed, tmpl, label);
                check_anchors({aj.x.v, aj.y.v, aj.z.v}, {ak.x.v, ak.y.v, ak.z.v},
                              {al.x.v, al.y.v, al.z.v}, "reconstruct " + label + ":" + row.atom);
                const int lane = static_cast<int>(si) * 3;
                placed.push_back(place_kernel<Dual>(aj, ak, al, Dual::seeded(row.d, lane),
                                                    Dual::seeded(row.theta, lane + 1),
                                                    Dual::seeded(row.tau, lane + 2)));
                chain.residues[ri].find_atom(row.atom)->pos =
                    Vec3{placed.back().x.v, placed.back().y.v, placed.back().z.v};
            }

            ResidueJacobian rj;
            rj.n_slots = n_slots;
            rj.d_pos.resize(n_slots);
            for (int si = 0; si < n_slots; ++si) {
                rj.d_pos[si].resize(3 * n_slots);
                for (int p = 0; p < 3 * n_slots; ++p)
                    rj.d_pos[si][p] =
                        Vec3{placed[si].x.g[p], placed[si].y.g[p], placed[si].z.g[p]};
            }
            jacobian.residues[ci][ri] = std::move(rj);
        }
    }
    if (stats != nullptr)
        stats->passes = passes;
    return s;
}

ParamLayout ParamLayout::of(const ZMatrixFrame& zmat) {
    ParamLayout layout;
    layout.offsets.resize(zmat.chains.size());
    for (size_t ci = 0; ci < zmat.chains.size(); ++ci) {
        layout.offsets[ci].resize(zmat.chains[ci].residues.size(), -1);
        for (size_t ri = 0; ri < zmat.chains[ci].residues.size(); ++ri) {
            const ZResidue& zr = zmat.chains[ci].residues[ri];
            if (zr.rows.empty())
                continue;
            layout.offsets[ci][ri] = layout.total;
            layout.total += 3 * static_cast<int>(zr.rows.size());
        }
    }
    return layout;
}

std::string zmatrix_to_text(const ZMatrixFrame& frame) {
    std::string out = "# chain res_index atom j k l d theta tau\n";
    for (const ZChain& c : frame.chains) {
        for (const ZResidue& r : c.residues) {
            for (const ZRow& row : r.rows) {
                char buf[160];
                std::snprintf(buf, sizeof(buf), "%s %d %s %s %s %s %.6f %.6f %.6f\n", c.id.c_str(),
                              r.seq_index, row.atom.c_str(), row.j.str().c_str(),
                              row.k.str().c_str(), row.l.str().c_str(), row.d, row.theta,
                              row.tau);
                out += buf;
            }
        }
    }
    return out;
}

std::string zmatrix_frames_to_text(const std::vector<ZMatrixFrame>& frames) {
    std::string out;
    for (size_t f = 0; f < frames.size(); ++f) {
        out += "frame " + std::to_string(f) + "\n";
        out += zmatrix_to_text(frames[f]);
    }
    return out;
}

std::vector<ZMatrixFrame> zmatrix_frames_from_text(const std::string& text) {
    std::vector<ZMatrixFrame> frames;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    ZMatrixFrame* frame = nullptr;
    const auto ensure_frame = [&]() -> ZMatrixFrame& {
        if (frame == nullptr) {
            frames.emplace_back();
            frame = &frames.back();
        }
        return *frame;
    };
    while (std::getline(is, line)) {
        ++lineno;
        const auto fail = [&](const std::string& why) {
            throw DataError("zmatrix text line " + std::to_string(lineno) + ": " + why);
        };
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream ls(line);
        std::string first;
        ls >> first;
        if (first == "frame") {
            frames.emplace_back();
            frame = &frames.back();
            continue;
        }
        std::string seq_s, atom, js, ks, l_s, ds, ths, tas;
        ls >> seq_s >> atom >> js >> ks >> l_s >> ds >> ths >> tas;
        if (tas.empty())
            fail("expected 9 columns");
        ZRow row;
        row.atom = atom;
        try {
            row.j = AnchorRef::parse(js);
            row.k = AnchorRef::parse(ks);
            row.l = AnchorRef::parse(l_s);
            row.d = std::stod(ds);
            row.theta = std::stod(ths);
            row.tau = std::stod(tas);
        } catch (const std::exception& e) {
            fail(e.what());
        }
        int seq = 0;
        try {
            seq = std::stoi(seq_s);
        } catch (const std::exception&) {
            fail("bad residue index '" + seq_s + "'");
        }

        ZMatrixFrame& fr = ensure_frame();
        ZChain* chain = nullptr;
        for (ZChain& c : fr.chains)
            if (c.id == first)
                chain = &c;
        if (chain == nullptr) {
            fr.chains.push_back(ZChain{first, {}});
            chain = &fr.chains.back();
        }
        ZResidue* res = nullptr;
        for (ZResidue& r : chain->residues)
            if (r.seq_index == seq)
                res = &r;
        if (res == nullptr) {
            ZResidue r;
            r.seq_index = seq;
            chain->residues.push_back(std::move(r));
            res = &chain->residues.back();
        }
        res->rows.push_back(std::move(row));
    }
    if (frames.empty())
        throw DataError("zmatrix text contains no rows");
    return frames;
}

} // namespace cgback
