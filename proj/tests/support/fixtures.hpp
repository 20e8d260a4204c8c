#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cgback/structure.hpp"
#include "cgback/zmatrix.hpp"

namespace cgback::testsupport {

// Backbone torsions of one residue, degrees.
struct BackbonePose {
    double phi = -120;
    double psi = 130;
    double omega = 180;
};

// Builds a physically plausible all-atom chain: ideal backbone geometry
// driven by phi/psi/omega, side chains from idealized internal
// coordinates. Residues are numbered from 1; terminal flags are set.
Chain build_chain(const std::string& id, const std::vector<ResidueType>& sequence,
                  const std::vector<BackbonePose>& poses, std::mt19937_64& rng,
                  double jitter_deg = 0.0);

// 20-residue poly-glutamate alpha helix, single chain.
Structure poly_glu_helix(int n_residues = 20);

// Two-chain structure covering all 22 residue types on an extended
// backbone.
Structure omni_structure(std::uint64_t seed = 0);

// Ensemble of jittered omni frames sharing one skeleton.
Ensemble omni_ensemble(int n_frames, std::uint64_t seed = 0, double jitter_deg = 6.0);

// Small single-protein ensemble for trainer tests: per-frame backbone
// and side-chain torsions vary smoothly with the frame index, so the CA
// geometry carries signal about the torsions.
Ensemble toy_training_ensemble(int n_frames = 10, std::uint64_t seed = 0);

// Uniformly random rotation plus translation in [-span, span]^3.
RigidMotion random_rigid_motion(std::mt19937_64& rng, double span = 10.0);

// Independent torsion-angle oracle: projects the outer bonds onto the
// plane perpendicular to the central bond and takes the signed angle.
double dihedral_oracle(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

// Draws from a von Mises distribution (Best-Fisher rejection sampling).
double sample_von_mises(double mu, double kappa, std::mt19937_64& rng);

// Upper critical value of the chi-square distribution (Wilson-Hilferty).
double chi_square_critical(int dof, double alpha);

// Scratch directory under the system temp root, unique per call.
std::string make_temp_dir(const std::string& hint);

} // namespace cgback::testsupport
