#pragma once

#include <span>
#include <string>
#include <vector>

#include "cgback/sites.hpp"
#include "cgback/structure.hpp"
#include "cgback/zmatrix.hpp"

namespace cgback {

// Smoothing constant of the periodic angular loss.
constexpr double kAngularLossEpsilon = 1e-7;

struct LossWeights {
    double gamma = 1.0; // local (bond + angle)
    double delta = 1.0; // torsion
    double eta = 1.0;   // xyz
    double zeta = 3.0;  // steric
    double beta = 0.05; // KL
};

struct LossReport {
    double bond = 0;
    double angle = 0;
    double torsion = 0;
    double xyz = 0;
    double steric = 0;
    double recon = 0;
    double kl = 0;
    double elbo = 0;

    std::string to_json() const;
};

// Mean squared error over bond lengths.
double bond_loss(std::span<const double> truth, std::span<const double> predicted);

// Periodic loss mean(sqrt(2(1 - cos(delta)) + eps)); 2*pi-periodic, even,
// minimized at delta = 0 mod 2*pi. Serves both angles and torsions.
double angular_loss(std::span<const double> truth, std::span<const double> predicted,
                    double eps = kAngularLossEpsilon);

// Mean squared Cartesian deviation (Angstrom^2).
double xyz_loss(std::span<const Vec3> truth, std::span<const Vec3> predicted);

// Hinge penalty sum over unordered nonbonded pairs within the cutoff:
// max(threshold - distance, 0). Cell-grid accelerated; term order matches
// a naive double loop.
double steric_loss(std::span<const Vec3> coords, const ExclusionSet& excluded,
                   double cutoff = 5.0, double threshold = 2.0);

// Weighted sum gamma*(bond+angle) + delta*torsion + eta*xyz + zeta*steric.
double recon_loss(double bond, double angle, double torsion, double xyz, double steric,
                  const LossWeights& w);

// Closed-form KL divergence between diagonal Gaussians q and p.
double kl_gaussian(std::span<const double> mu_q, std::span<const double> sigma_q,
                   std::span<const double> mu_p, std::span<const double> sigma_p);

// All loss terms of one predicted frame against its reference. true_z
// must be the extraction of `truth` over `trace`; predicted coordinates
// are rebuilt from pred_z. kl is passed through to the ELBO.
LossReport compute_loss_report(const Structure& truth, const CGTrace& trace,
                               const ZMatrixFrame& true_z, const ZMatrixFrame& pred_z,
                               const LossWeights& w, double kl = 0.0);

// Analytic gradient of the reconstruction loss against every internal
// coordinate of pred_z, laid out per ParamLayout. Bond/angle/torsion
// terms differentiate directly; xyz and steric chain through the
// placement Jacobian.
struct LossGradients {
    LossReport report;
    ParamLayout layout;
    std::vector<double> grad;
};

LossGradients loss_gradients(const Structure& truth, const CGTrace& trace,
                             const ZMatrixFrame& true_z, const ZMatrixFrame& pred_z,
                             const LossWeights& w);

} // namespace cgback
