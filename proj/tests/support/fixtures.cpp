#include "support/fixtures.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <unistd.h>

#include "cgback/errors.hpp"
#include "cgback/templates.hpp"

namespace cgback::testsupport {

namespace {

constexpr double kDeg = M_PI / 180.0;

double wrap_angle(double a) {
    while (a > M_PI)
        a -= 2.0 * M_PI;
    while (a <= -M_PI)
        a += 2.0 * M_PI;
    return a;
}

// Ideal backbone geometry.
constexpr double kNCa = 1.458;
constexpr double kCaC = 1.525;
constexpr double kCN = 1.329;
constexpr double kCO = 1.231;
constexpr double kAngNCaC = 111.0 * kDeg;
constexpr double kAngCaCN = 116.6 * kDeg;
constexpr double kAngCNCa = 121.7 * kDeg;
constexpr double kAngOCCa = 120.5 * kDeg;

// One side-chain slot of the idealized geometry tables. tau_free slots
// take the caller's chi-like value; others are fixed offsets.
struct SideIC {
    double d = 1.53;
    double theta_deg = 111.0;
    double tau_deg = 180.0;
    bool ring = false; // filled from the 2D ring layout
};

struct Point2 {
    double x = 0, y = 0;
};

double dist2(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double angle2(const Point2& a, const Point2& v, const Point2& b) {
    const double ax = a.x - v.x, ay = a.y - v.y;
    const double bx = b.x - v.x, by = b.y - v.y;
    return std::atan2(std::abs(ax * by - ay * bx), ax * bx + ay * by);
}

// Side of the (j -> k) line a point falls on.
int side2(const Point2& j, const Point2& k, const Point2& q) {
    const double c = (k.x - j.x) * (q.y - j.y) - (k.y - j.y) * (q.x - j.x);
    return c > 0 ? 1 : -1;
}

using Layout2D = std::map<std::string, Point2>;

// Planar layouts of the aromatic systems, CB included.
Layout2D ring_layout(ResidueType type) {
    Layout2D p;
    if (type == ResidueType::PHE || type == ResidueType::TYR) {
        const char* names[6] = {"CG", "CD1", "CE1", "CZ", "CE2", "CD2"};
        for (int k = 0; k < 6; ++k)
            p[names[k]] = {1.40 * std::cos(k * 60.0 * kDeg), 1.40 * std::sin(k * 60.0 * kDeg)};
        p["CB"] = {1.40 + 1.51, 0};
        if (type == ResidueType::TYR)
            p["OH"] = {-(1.40 + 1.36), 0};
    } else if (type == ResidueType::HIS) {
        const char* names[5] = {"CG", "ND1", "CE1", "NE2", "CD2"};
        const double r5 = 1.37 / (2.0 * std::sin(36.0 * kDeg));
        for (int k = 0; k < 5; ++k) {
            const double ang = (90.0 - 72.0 * k) * kDeg;
            p[names[k]] = {r5 * std::cos(ang), r5 * std::sin(ang)};
        }
        p["CB"] = {0, r5 + 1.50};
    } else if (type == ResidueType::TRP) {
        const char* hex[6] = {"CZ2", "CE2", "CD2", "CE3", "CZ3", "CH2"};
        for (int k = 0; k < 6; ++k)
            p[hex[k]] = {1.40 * std::cos(k * 60.0 * kDeg), 1.40 * std::sin(k * 60.0 * kDeg)};
        // Pentagon CD2-CG-CD1-NE1-CE2 fused on the CD2-CE2 edge.
        const double apothem = 1.40 / (2.0 * std::tan(36.0 * kDeg));
        const double r5 = 1.40 / (2.0 * std::sin(36.0 * kDeg));
        const Point2 center{0, 1.40 * std::sin(60.0 * kDeg) + apothem};
        const double a0 = std::atan2(p["CD2"].y - center.y, p["CD2"].x - center.x);
        const char* penta[5] = {"CD2", "CG", "CD1", "NE1", "CE2"};
        for (int k = 1; k < 4; ++k) {
            const double ang = a0 - 72.0 * kDeg * k;
            p[penta[k]] = {center.x + r5 * std::cos(ang), center.y + r5 * std::sin(ang)};
        }
        const double cb_ang = std::atan2(p["CG"].y - center.y, p["CG"].x - center.x);
        p["CB"] = {p["CG"].x + 1.50 * std::cos(cb_ang), p["CG"].y + 1.50 * std::sin(cb_ang)};
    }
    return p;
}

// Non-aromatic side-chain tables, slot order matching the templates.
const std::map<ResidueType, std::vector<SideIC>>& side_tables() {
    static const std::map<ResidueType, std::vector<SideIC>> tables = [] {
        std::map<ResidueType, std::vector<SideIC>> t;
        const SideIC cb{1.53, 110.5, -122.6, false};
        t[ResidueType::ALA] = {cb};
        t[ResidueType::ARG] = {cb,
                               {1.53, 114.0, -65, false},
                               {1.53, 111.0, 180, false},
                               {1.46, 112.0, 180, false},
                               {1.33, 124.0, 90, false},
                               {1.33, 120.0, 0, false},
                               {1.33, 120.0, 180, false}};
        t[ResidueType::ASN] = {cb,
                               {1.52, 112.6, -65, false},
                               {1.23, 120.8, -60, false},
                               {1.33, 116.4, 120, false}};
        t[ResidueType::ASP] = {cb,
                               {1.52, 112.6, -65, false},
                               {1.25, 118.4, -20, false},
                               {1.25, 118.4, 160, false}};
        t[ResidueType::CYS] = {cb, {1.81, 114.0, -60, false}};
        t[ResidueType::GLN] = {cb,
                               {1.53, 114.0, -65, false},
                               {1.52, 112.6, 180, false},
                               {1.23, 120.8, -30, false},
                               {1.33, 116.4, 150, false}};
        t[ResidueType::GLU] = {cb,
                               {1.53, 114.0, -65, false},
                               {1.52, 112.6, 180, false},
                               {1.25, 118.4, -20, false},
                               {1.25, 118.4, 160, false}};
        t[ResidueType::GLY] = {};
        t[ResidueType::ILE] = {cb,
                               {1.53, 110.4, -60, false},
                               {1.53, 114.0, 170, false},
                               {1.53, 110.5, 62, false}};
        t[ResidueType::LEU] = {cb,
                               {1.53, 116.3, -65, false},
                               {1.53, 110.7, 180, false},
                               {1.53, 110.7, 58, false}};
        t[ResidueType::LYS] = {cb,
                               {1.53, 114.0, -65, false},
                               {1.53, 111.0, 180, false},
                               {1.53, 111.0, 180, false},
                               {1.49, 111.9, 180, false}};
        t[ResidueType::MET] = {cb,
                               {1.53, 114.0, -65, false},
                               {1.81, 112.7, 180, false},
                               {1.79, 100.2, 180, false}};
        t[ResidueType::SER] = {cb, {1.42, 110.8, 170, false}};
        t[ResidueType::THR] = {cb, {1.43, 109.3, -60, false}, {1.52, 110.6, 178, false}};
        t[ResidueType::VAL] = {cb, {1.53, 110.6, 170, false}, {1.53, 110.6, 48, false}};
        t[ResidueType::TPO] = {cb,
                               {1.43, 109.3, -60, false},
                               {1.52, 110.6, 178, false},
                               {1.60, 119.0, 180, false},
                               {1.51, 108.0, 60, false},
                               {1.51, 108.0, 180, false},
                               {1.51, 108.0, -60, false}};
        t[ResidueType::SEP] = {cb,
                               {1.42, 110.8, 170, false},
                               {1.60, 119.0, 180, false},
                               {1.51, 108.0, 60, false},
                               {1.51, 108.0, 180, false},
                               {1.51, 108.0, -60, false}};
        return t;
    }();
    return tables;
}

// Proline's CG/CD torsions are solved once so that the implied CD-N ring
// bond lands at covalent distance.
std::vector<SideIC> proline_ics() {
    static const std::vector<SideIC> ics = [] {
        const Vec3 ca{0, 0, 0};
        const Vec3 n{kNCa, 0, 0};
        const Vec3 c{kCaC * std::cos(kAngNCaC), kCaC * std::sin(kAngNCaC), 0};
        const SideIC cb{1.53, 110.5, -115.0, false};
        const Vec3 cb_pos =
            place_atom(ca, c, n, cb.d, cb.theta_deg * kDeg, cb.tau_deg * kDeg);
        double best_g = 0, best_d = 0, best_err = 1e9;
        for (int gi = -180; gi < 180; gi += 2)
            for (int di = -180; di < 180; di += 2) {
                const Vec3 cg =
                    place_atom(cb_pos, ca, c, 1.50, 104.0 * kDeg, gi * kDeg);
                const Vec3 cd = place_atom(cg, cb_pos, ca, 1.51, 105.0 * kDeg, di * kDeg);
                const double err = std::abs(distance(cd, n) - 1.47);
                if (err < best_err) {
                    best_err = err;
                    best_g = gi;
                    best_d = di;
                }
            }
        return std::vector<SideIC>{cb,
                                   {1.50, 104.0, best_g, false},
                                   {1.51, 105.0, best_d, false}};
    }();
    return ics;
}

// Full per-slot internal coordinates for the side chain of one type.
// Aromatic rings come from the planar layouts; the first ring atom keeps
// a free torsion that orients the ring plane.
std::vector<SideIC> side_chain_ics(ResidueType type) {
    if (type == ResidueType::PRO)
        return proline_ics();
    const ResidueTemplate& tmpl = template_for(type);
    if (tmpl.ring_atoms.empty())
        return side_tables().at(type);

    const Layout2D layout = ring_layout(type);
    std::vector<SideIC> out;
    const SideIC cb{1.53, 110.5, -122.6, false};
    out.push_back(cb);
    bool first_ring = true;
    for (size_t si = 4; si < tmpl.slots.size(); ++si) { // past O, N, C, CB
        const AtomSlot& slot = tmpl.slots[si];
        if (slot.atom == "CG") {
            SideIC cg{dist2(layout.at("CG"), layout.at("CB")), 113.8, -65, false};
            out.push_back(cg);
            continue;
        }
        const Point2& pa = layout.at(slot.atom);
        const Point2& pj = layout.at(slot.j.atom);
        const Point2& pk = layout.at(slot.k.atom);
        SideIC ic;
        ic.d = dist2(pa, pj);
        ic.theta_deg = angle2(pa, pj, pk) / kDeg;
        ic.ring = true;
        if (first_ring) {
            ic.tau_deg = 100.0; // orients the ring plane off the backbone
            first_ring = false;
        } else {
            const Point2& pl = layout.at(slot.l.atom);
            ic.tau_deg = side2(pj, pk, pa) == side2(pj, pk, pl) ? 0.0 : 180.0;
        }
        out.push_back(ic);
    }
    return out;
}

struct BackbonePositions {
    std::vector<Vec3> n, ca, c, o;
};

BackbonePositions build_backbone(const std::vector<BackbonePose>& poses) {
    const size_t count = poses.size();
    BackbonePositions bb;
    bb.n.resize(count);
    bb.ca.resize(count);
    bb.c.resize(count);
    bb.o.resize(count);

    bb.n[0] = {0, 0, 0};
    bb.ca[0] = {kNCa, 0, 0};
    bb.c[0] = bb.ca[0] + Vec3{kCaC * std::cos(M_PI - kAngNCaC), kCaC * std::sin(M_PI - kAngNCaC), 0};
    for (size_t i = 0; i + 1 < count; ++i) {
        const double psi = poses[i].psi * kDeg;
        const double omega = poses[i].omega * kDeg;
        const double phi = poses[i + 1].phi * kDeg;
        bb.n[i + 1] = place_atom(bb.c[i], bb.ca[i], bb.n[i], kCN, kAngCaCN, psi);
        bb.ca[i + 1] = place_atom(bb.n[i + 1], bb.c[i], bb.ca[i], kNCa, kAngCNCa, omega);
        bb.c[i + 1] = place_atom(bb.ca[i + 1], bb.n[i + 1], bb.c[i], kCaC, kAngNCaC, phi);
    }
    for (size_t i = 0; i < count; ++i) {
        const double tau_o = wrap_angle(poses[i].psi * kDeg + M_PI);
        bb.o[i] = place_atom(bb.c[i], bb.ca[i], bb.n[i], kCO, kAngOCCa, tau_o);
    }
    return bb;
}

} // namespace

Chain build_chain(const std::string& id, const std::vector<ResidueType>& sequence,
                  const std::vector<BackbonePose>& poses, std::mt19937_64& rng,
                  double jitter_deg) {
    if (sequence.size() != poses.size())
        throw DataError("fixture: sequence/pose size mismatch");
    const BackbonePositions bb = build_backbone(poses);
    std::uniform_real_distribution<double> jitter(-jitter_deg, jitter_deg);
    std::uniform_real_distribution<double> small_jitter(-2.0, 2.0);

    Chain chain;
    chain.id = id;
    for (size_t i = 0; i < sequence.size(); ++i) {
        Residue res;
        res.type = sequence[i];
        res.seq_index = static_cast<int>(i) + 1;
        res.terminal = i == 0 || i + 1 == sequence.size();
        const auto put = [&](const std::string& name, const Vec3& pos) {
            res.atoms.push_back(Atom{name, element_from_atom_name(name), pos});
        };
        put("N", bb.n[i]);
        put("CA", bb.ca[i]);
        put("C", bb.c[i]);
        put("O", bb.o[i]);

        const ResidueTemplate& tmpl = template_for(res.type);
        const std::vector<SideIC> ics = side_chain_ics(res.type);
        for (size_t si = 3; si < tmpl.slots.size(); ++si) {
            const AtomSlot& slot = tmpl.slots[si];
            const SideIC& ic = ics[si - 3];
            const auto anchor = [&](const AnchorRef& ref) -> Vec3 {
                const Atom* a = res.find_atom(ref.atom);
                if (a == nullptr)
                    throw DataError("fixture: anchor " + ref.atom + " not placed");
                return *a->pos;
            };
            double tau = ic.tau_deg * kDeg;
            if (jitter_deg > 0)
                tau += (ic.ring || res.type == ResidueType::PRO ? small_jitter(rng)
                                                                : jitter(rng)) *
                       kDeg;
            put(slot.atom, place_atom(anchor(slot.j), anchor(slot.k), anchor(slot.l), ic.d,
                                      ic.theta_deg * kDeg, wrap_angle(tau)));
        }
        chain.residues.push_back(std::move(res));
    }
    return chain;
}

Structure poly_glu_helix(int n_residues) {
    std::mt19937_64 rng(12345);
    std::vector<ResidueType> seq(n_residues, ResidueType::GLU);
    std::vector<BackbonePose> poses(n_residues, BackbonePose{-57, -47, 180});
    Structure s;
    s.chains.push_back(build_chain("A", seq, poses, rng, 0.0));
    return s;
}

Structure omni_structure(std::uint64_t seed) {
    return omni_ensemble(1, seed, 0.0).frames.front();
}

Ensemble omni_ensemble(int n_frames, std::uint64_t seed, double jitter_deg) {
    const std::vector<ResidueType> chain_a = {
        ResidueType::GLY, ResidueType::ALA, ResidueType::VAL, ResidueType::LEU,
        ResidueType::ILE, ResidueType::SER, ResidueType::THR, ResidueType::CYS,
        ResidueType::MET, ResidueType::ASP, ResidueType::GLU, ResidueType::ASN,
        ResidueType::GLN, ResidueType::LYS, ResidueType::ARG, ResidueType::HIS,
        ResidueType::PHE, ResidueType::TYR, ResidueType::TRP, ResidueType::GLY};
    const std::vector<ResidueType> chain_b = {
        ResidueType::ALA, ResidueType::PRO, ResidueType::TPO, ResidueType::SEP,
        ResidueType::TRP, ResidueType::HIS, ResidueType::LYS, ResidueType::GLY};

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> pose_jitter(-jitter_deg, jitter_deg);
    Ensemble e;
    for (int f = 0; f < n_frames; ++f) {
        std::vector<BackbonePose> poses_a(chain_a.size(), BackbonePose{-120, 130, 180});
        std::vector<BackbonePose> poses_b(chain_b.size(), BackbonePose{-70, 150, 180});
        if (jitter_deg > 0) {
            for (BackbonePose& p : poses_a) {
                p.phi += pose_jitter(rng);
                p.psi += pose_jitter(rng);
            }
            for (BackbonePose& p : poses_b) {
                p.phi += pose_jitter(rng);
                p.psi += pose_jitter(rng);
            }
        }
        Structure s;
        s.frame_id = f;
        s.chains.push_back(build_chain("A", chain_a, poses_a, rng, jitter_deg));
        Chain b = build_chain("B", chain_b, poses_b, rng, jitter_deg);
        // Keep the chains apart.
        for (Residue& res : b.residues)
            for (Atom& a : res.atoms)
                if (a.pos)
                    a.pos = *a.pos + Vec3{0, 0, 30.0};
        s.chains.push_back(std::move(b));
        e.frames.push_back(std::move(s));
    }
    return e;
}

Ensemble toy_training_ensemble(int n_frames, std::uint64_t seed) {
    const std::vector<ResidueType> seq = {
        ResidueType::GLY, ResidueType::ALA, ResidueType::GLU, ResidueType::LEU,
        ResidueType::SER, ResidueType::LYS, ResidueType::VAL, ResidueType::ASP,
        ResidueType::THR, ResidueType::PHE, ResidueType::ALA, ResidueType::GLY};
    std::mt19937_64 rng(seed);
    Ensemble e;
    for (int f = 0; f < n_frames; ++f) {
        // Smooth per-frame drift so torsions correlate with CA geometry.
        const double t = static_cast<double>(f) / std::max(1, n_frames - 1);
        std::vector<BackbonePose> poses(seq.size());
        for (size_t i = 0; i < seq.size(); ++i) {
            poses[i].phi = -120 + 35.0 * std::sin(2.0 * t + 0.7 * static_cast<double>(i));
            poses[i].psi = 130 + 30.0 * std::cos(1.3 * t + 0.5 * static_cast<double>(i));
            poses[i].omega = 180;
        }
        Structure s;
        s.frame_id = f;
        s.chains.push_back(build_chain("A", seq, poses, rng, 3.0));
        e.frames.push_back(std::move(s));
    }
    return e;
}

RigidMotion random_rigid_motion(std::mt19937_64& rng, double span) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> shift(-span, span);
    RigidMotion m;
    m.rotation = Rotation::from_quaternion(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
    m.translation = {shift(rng), shift(rng), shift(rng)};
    return m;
}

double dihedral_oracle(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    const Vec3 axis = normalized(c - b);
    Vec3 u = (a - b) - axis * dot(a - b, axis);
    Vec3 v = (d - c) - axis * dot(d - c, axis);
    u = normalized(u);
    v = normalized(v);
    const double t = std::atan2(dot(cross(axis, v), u), dot(u, v));
    return t <= -M_PI ? M_PI : t;
}

double sample_von_mises(double mu, double kappa, std::mt19937_64& rng) {
    // Best & Fisher (1979) rejection sampler.
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
    const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
    const double r = (1.0 + rho * rho) / (2.0 * rho);
    while (true) {
        const double z = std::cos(M_PI * unit(rng));
        const double f = (1.0 + r * z) / (r + z);
        const double c = kappa * (r - f);
        const double u = unit(rng);
        if (c * (2.0 - c) - u > 0.0 || std::log(c / u) + 1.0 - c >= 0.0) {
            const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
            return wrap_angle(mu + sign * std::acos(f));
        }
    }
}

double chi_square_critical(int dof, double alpha) {
    // Wilson-Hilferty approximation of the upper quantile.
    const double z = alpha <= 0.01 ? 2.3263478740408408 : 1.6448536269514722;
    const double k = static_cast<double>(dof);
    const double term = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
    return k * term * term * term;
}

std::string make_temp_dir(const std::string& hint) {
    static std::atomic<int> counter{0};
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() /
                         ("cgback_test_" + hint + "_" + std::to_string(::getpid()) + "_" +
                          std::to_string(counter.fetch_add(1)));
    fs::create_directories(dir);
    return dir.string();
}

} // namespace cgback::testsupport
