#include "cgback/losses.hpp"

#include <cmath>
#include <cstdio>

#include "cgback/errors.hpp"
#include "cgback/spatial_hash.hpp"

namespace cgback {

std::string LossReport::to_json() const {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "{\"l_bond\": %.12g, \"l_angle\": %.12g, \"l_torsion\": %.12g, "
                  "\"l_xyz\": %.12g, \"l_steric\": %.12g, \"l_recon\": %.12g, "
                  "\"l_kl\": %.12g, \"l_elbo\": %.12g}",
                  bond, angle, torsion, xyz, steric, recon, kl, elbo);
    return buf;
}

double bond_loss(std::span<const double> truth, std::span<const double> predicted) {
    if (truth.size() != predicted.size())
        throw DataError("bond_loss: length mismatch");
    if (truth.empty())
        throw DataError("bond_loss: empty input");
    double acc = 0;
    for (size_t i = 0; i < truth.size(); ++i) {
        const double d = truth[i] - predicted[i];
        acc += d * d;
    }
    return acc / static_cast<double>(truth.size());
}

double angular_loss(std::span<const double> truth, std::span<const double> predicted,
                    double eps) {
    if (truth.size() != predicted.size())
        throw DataError("angular_loss: length mismatch");
    if (truth.empty())
        throw DataError("angular_loss: empty input");
    double acc = 0;
    for (size_t i = 0; i < truth.size(); ++i)
        acc += std::sqrt(2.0 * (1.0 - std::cos(truth[i] - predicted[i])) + eps);
    return acc / static_cast<double>(truth.size());
}

double xyz_loss(std::span<const Vec3> truth, std::span<const Vec3> predicted) {
    if (truth.size() != predicted.size())
        throw DataError("xyz_loss: atom-set mismatch");
    if (truth.empty())
        throw DataError("xyz_loss: empty input");
    double acc = 0;
    for (size_t i = 0; i < truth.size(); ++i)
        acc += norm_sq(truth[i] - predicted[i]);
    return acc / static_cast<double>(truth.size());
}

double steric_loss(std::span<const Vec3> coords, const ExclusionSet& excluded, double cutoff,
                   double threshold) {
    double acc = 0;
    for (const auto& [i, j] : neighbor_pairs_within(coords, cutoff)) {
        if (excluded.excluded(i, j))
            continue;
        const double d = norm(coords[i] - coords[j]);
        if (d < threshold)
            acc += threshold - d;
    }
    return acc;
}

double recon_loss(double bond, double angle, double torsion, double xyz, double steric,
                  const LossWeights& w) {
    return w.gamma * (bond + angle) + w.delta * torsion + w.eta * xyz + w.zeta * steric;
}

double kl_gaussian(std::span<const double> mu_q, std::span<const double> sigma_q,
                   std::span<const double> mu_p, std::span<const double> sigma_p) {
    if (mu_q.size() != sigma_q.size() || mu_q.size() != mu_p.size() ||
        mu_q.size() != sigma_p.size())
        throw DataError("kl_gaussian: length mismatch");
    double acc = 0;
    for (size_t i = 0; i < mu_q.size(); ++i) {
        if (!(sigma_q[i] > 0.0) || !(sigma_p[i] > 0.0))
            throw DataError("kl_gaussian: non-positive sigma");
        const double dm = mu_q[i] - mu_p[i];
        acc += std::log(sigma_p[i] / sigma_q[i]) +
               (sigma_q[i] * sigma_q[i] + dm * dm) / (2.0 * sigma_p[i] * sigma_p[i]) - 0.5;
    }
    return acc;
}

namespace {

// Aligned internal-coordinate lists of two frames sharing a layout, with
// the flat parameter offset of each row.
struct AlignedRows {
    std::vector<double> d_true, d_pred;
    std::vector<double> theta_true, theta_pred;
    std::vector<double> tau_true, tau_pred;
    std::vector<int> offsets; // flat offset of each row's d parameter
};

AlignedRows align_rows(const ZMatrixFrame& true_z, const ZMatrixFrame& pred_z,
                       const ParamLayout& layout) {
    AlignedRows out;
    if (true_z.chains.size() != pred_z.chains.size())
        throw DataError("loss: frames have different chain counts");
    for (size_t ci = 0; ci < true_z.chains.size(); ++ci) {
        const ZChain& tc = true_z.chains[ci];
        const ZChain& pc = pred_z.chains[ci];
        if (tc.residues.size() != pc.residues.size())
            throw DataError("loss: chain " + tc.id + " has mismatched residue counts");
        for (size_t ri = 0; ri < tc.residues.size(); ++ri) {
            const ZResidue& tr = tc.residues[ri];
            const ZResidue& pr = pc.residues[ri];
            if (tr.rows.size() != pr.rows.size())
                throw DataError("loss: residue " + std::to_string(tr.seq_index) +
                                " has mismatched row counts");
            for (size_t si = 0; si < tr.rows.size(); ++si) {
                out.d_true.push_back(tr.rows[si].d);
                out.d_pred.push_back(pr.rows[si].d);
                out.theta_true.push_back(tr.rows[si].theta);
                out.theta_pred.push_back(pr.rows[si].theta);
                out.tau_true.push_back(tr.rows[si].tau);
                out.tau_pred.push_back(pr.rows[si].tau);
                out.offsets.push_back(layout.offsets[ci][ri] + 3 * static_cast<int>(si));
            }
        }
    }
    return out;
}

// Matched non-terminal atom positions of two structures.
void paired_positions(const Structure& truth, const Structure& pred, std::vector<Vec3>& xs,
                      std::vector<Vec3>& ys) {
    const std::vector<Site> ts = evaluation_sites(truth);
    const std::vector<Site> ps = evaluation_sites(pred);
    if (ts.size() != ps.size())
        throw DataError("loss: structures have different atom sets");
    xs.reserve(ts.size());
    ys.reserve(ts.size());
    for (size_t i = 0; i < ts.size(); ++i) {
        if (ts[i].flat_residue != ps[i].flat_residue || ts[i].atom != ps[i].atom)
            throw DataError("loss: atom mismatch at " + ts[i].atom);
        xs.push_back(ts[i].pos);
        ys.push_back(ps[i].pos);
    }
}

} // namespace

LossReport compute_loss_report(const Structure& truth, const CGTrace& trace,
                               const ZMatrixFrame& true_z, const ZMatrixFrame& pred_z,
                               const LossWeights& w, double kl) {
    const Structure pred = reconstruct_frame(trace, pred_z);
    const ParamLayout layout = ParamLayout::of(pred_z);
    const AlignedRows rows = align_rows(true_z, pred_z, layout);

    LossReport report;
    report.bond = bond_loss(rows.d_true, rows.d_pred);
    report.angle = angular_loss(rows.theta_true, rows.theta_pred);
    report.torsion = angular_loss(rows.tau_true, rows.tau_pred);

    std::vector<Vec3> xs, ys;
    paired_positions(truth, pred, xs, ys);
    report.xyz = xyz_loss(xs, ys);

    const std::vector<Site> sites = evaluation_sites(pred);
    std::vector<Vec3> coords;
    coords.reserve(sites.size());
    for (const Site& s : sites)
        coords.push_back(s.pos);
    report.steric = steric_loss(coords, reference_exclusions(pred, sites));

    report.recon = recon_loss(report.bond, report.angle, report.torsion, report.xyz,
                              report.steric, w);
    report.kl = kl;
    report.elbo = report.recon + w.beta * kl;
    return report;
}

LossGradients loss_gradients(const Structure& truth, const CGTrace& trace,
                             const ZMatrixFrame& true_z, const ZMatrixFrame& pred_z,
                             const LossWeights& w) {
    LossGradients out;
    out.layout = ParamLayout::of(pred_z);
    out.grad.assign(out.layout.total, 0.0);

    PlacementJacobian jac;
    const Structure pred = reconstruct_with_jacobian(trace, pred_z, jac);

    const AlignedRows rows = align_rows(true_z, pred_z, out.layout);
    const size_t n_rows = rows.offsets.size();

    // Direct internal-coordinate terms.
    out.report.bond = bond_loss(rows.d_true, rows.d_pred);
    out.report.angle = angular_loss(rows.theta_true, rows.theta_pred);
    out.report.torsion = angular_loss(rows.tau_true, rows.tau_pred);
    const double inv_rows = 1.0 / static_cast<double>(n_rows);
    for (size_t i = 0; i < n_rows; ++i) {
        const int off = rows.offsets[i];
        out.grad[off] += w.gamma * 2.0 * (rows.d_pred[i] - rows.d_true[i]) * inv_rows;

        const double dth = rows.theta_true[i] - rows.theta_pred[i];
        const double gth = std::sqrt(2.0 * (1.0 - std::cos(dth)) + kAngularLossEpsilon);
        out.grad[off + 1] += w.gamma * (-std::sin(dth) / gth) * inv_rows;

        const double dta = rows.tau_true[i] - rows.tau_pred[i];
        const double gta = std::sqrt(2.0 * (1.0 - std::cos(dta)) + kAngularLossEpsilon);
        out.grad[off + 2] += w.delta * (-std::sin(dta) / gta) * inv_rows;
    }

    // Cartesian terms chain through the per-residue Jacobians.
    const std::vector<Site> pred_sites = evaluation_sites(pred);
    const std::vector<Site> true_sites = evaluation_sites(truth);
    if (pred_sites.size() != true_sites.size())
        throw DataError("loss: structures have different atom sets");

    const auto add_position_gradient = [&](const Site& site, const Vec3& dl_dpos) {
        if (site.slot < 0)
            return; // CA beads are inputs, not parameters
        const ResidueJacobian& rj = jac.residues[site.chain][site.residue];
        const int base = out.layout.offsets[site.chain][site.residue];
        for (int p = 0; p < 3 * rj.n_slots; ++p)
            out.grad[base + p] += dot(dl_dpos, rj.d_pos[site.slot][p]);
    };

    double xyz_acc = 0;
    const double inv_atoms = 1.0 / static_cast<double>(pred_sites.size());
    for (size_t i = 0; i < pred_sites.size(); ++i) {
        const Vec3 diff = pred_sites[i].pos - true_sites[i].pos;
        xyz_acc += norm_sq(diff);
        add_position_gradient(pred_sites[i], diff * (w.eta * 2.0 * inv_atoms));
    }
    out.report.xyz = xyz_acc * inv_atoms;

    std::vector<Vec3> coords;
    coords.reserve(pred_sites.size());
    for (const Site& s : pred_sites)
        coords.push_back(s.pos);
    const ExclusionSet excl = reference_exclusions(pred, pred_sites);
    double steric_acc = 0;
    for (const auto& [i, j] : neighbor_pairs_within(coords, 5.0)) {
        if (excl.excluded(i, j))
            continue;
        const double d = norm(coords[i] - coords[j]);
        if (d >= 2.0)
            continue;
        steric_acc += 2.0 - d;
        const Vec3 u = (coords[i] - coords[j]) / d;
        add_position_gradient(pred_sites[i], u * (-w.zeta));
        add_position_gradient(pred_sites[j], u * w.zeta);
    }
    out.report.steric = steric_acc;

    out.report.recon = recon_loss(out.report.bond, out.report.angle, out.report.torsion,
                                  out.report.xyz, out.report.steric, w);
    out.report.elbo = out.report.recon;
    return out;
}

} // namespace cgback
