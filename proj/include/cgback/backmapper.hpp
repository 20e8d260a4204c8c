#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cgback/losses.hpp"
#include "cgback/structure.hpp"
#include "cgback/zmatrix.hpp"

namespace cgback {

constexpr int kTorsionHistogramBins = 36;

// Fitted statistics for one placement slot of one residue type.
struct SlotStats {
    double bond_mean = 0;    // Angstrom
    double angle_mean = 0;   // circular mean, radians
    double torsion_mean = 0; // circular mean, radians
    std::array<double, kTorsionHistogramBins> torsion_hist{}; // sums to 1 when count > 0
    std::uint64_t count = 0;
    bool fallback = false; // filled from pooled per-slot statistics
};

// Per (residue type, slot) lookup tables of bond/angle means and torsion
// distributions.
struct LookupTables {
    std::map<ResidueType, std::vector<SlotStats>> tables;

    bool has(ResidueType type) const { return tables.count(type) != 0; }
    const SlotStats& at(ResidueType type, int slot) const;
};

// Fits tables from preprocessed ensembles. Slots never observed fall back
// to statistics pooled over all residue types at the same slot index and
// are marked as such.
LookupTables fit_tables(const std::vector<Ensemble>& ensembles);

// Rigid-motion-invariant descriptor of the CA neighborhood of one
// residue: CA-CA distances over the window ordered by (separation,
// position), interior CA angles, residue one-hot, window validity bits.
struct FeatureSpec {
    int window = 2;

    int dim() const {
        const int n = 2 * window + 1;
        return n * (n - 1) / 2 + (n - 2) + kNumResidueTypes + n;
    }
};

std::vector<double> featurize(const CGTrace& trace, int chain, int residue,
                              const FeatureSpec& spec);

// Small feed-forward network predicting, per residue, (sin, cos) pairs
// for the two CA-anchored backbone angles and for every torsion slot.
class TorsionNet {
  public:
    static constexpr int kAngleSlots = 2; // backbone N and C angles
    static constexpr int kTorsionSlots = kMaxSlotsPerResidue;
    static constexpr int kOutputDim = 2 * (kAngleSlots + kTorsionSlots);

    struct Layer {
        int rows = 0; // outputs
        int cols = 0; // inputs
        std::vector<double> w; // row-major
        std::vector<double> b;
    };

    struct Activations {
        std::vector<double> x, h1, h2, y;
    };

    // Gradient accumulator shaped like the layer stack.
    struct Gradients {
        std::vector<Layer> layers;
        void zero();
    };

    TorsionNet() = default;
    TorsionNet(FeatureSpec spec, int hidden, std::uint64_t seed);

    const FeatureSpec& feature_spec() const { return spec_; }
    int hidden() const { return hidden_; }
    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }

    std::vector<double> forward(std::span<const double> x) const;
    std::vector<double> forward(std::span<const double> x, Activations& acts) const;
    // Accumulates dL/dweights for one sample into grad.
    void backward(const Activations& acts, std::span<const double> dl_dy,
                  Gradients& grad) const;

    Gradients zero_gradients() const;

    // Normalized (sin, cos) of one output pair; never NaN.
    static std::array<double, 2> recovered_sin_cos(double s_raw, double c_raw);
    // atan2 of the pair, with d(angle)/d(s_raw), d(angle)/d(c_raw).
    static double recovered_angle(double s_raw, double c_raw, double* ds = nullptr,
                                  double* dc = nullptr);

    // Output indices of the (sin, cos) pair for a slot.
    static int angle_pair_offset(int backbone_angle_index); // 0: N, 1: C
    static int torsion_pair_offset(int slot);

  private:
    FeatureSpec spec_;
    int hidden_ = 64;
    std::vector<Layer> layers_; // in->h, h->h, h->out
};

struct FitMetadata {
    std::vector<std::string> ensembles;
    std::uint64_t seed = 0;
};

// Complete backmapping model: fitted tables plus an optional trained
// torsion network.
struct BackmapModel {
    LookupTables tables;
    std::optional<TorsionNet> net;
    FitMetadata metadata;
};

enum class BackmapMode { Deterministic, Stochastic };

struct BackmapOptions {
    BackmapMode mode = BackmapMode::Deterministic;
    std::uint64_t seed = 0;
    bool allow_fallback = true;
    bool use_net = true; // when the model carries one
};

// Generates an all-atom structure for a CA trace. Bond lengths and
// constrained angles come from table means; torsions (and the two
// CA-anchored backbone angles) come from circular means, seeded histogram
// sampling, or the torsion network. Output is bit-identical for identical
// inputs, mode and seed.
Structure backmap(const CGTrace& trace, const BackmapModel& model, const BackmapOptions& opts);

// The internal-coordinate frame the above decodes, exposed for training
// and inspection.
ZMatrixFrame backmap_zmatrix(const CGTrace& trace, const BackmapModel& model,
                             const BackmapOptions& opts);

struct TrainConfig {
    double learning_rate = 1e-3;
    int epochs = 200;
    int batch_size = 4; // frames
    std::uint64_t seed = 0;
    LossWeights weights;
    int window = 2;
    int hidden = 64;
};

struct TrainResult {
    TorsionNet net;
    // epoch_loss[0] is the pre-training evaluation; one entry per epoch
    // follows.
    std::vector<double> epoch_loss;
};

// Trains the torsion network to minimize the reconstruction loss via
// mini-batch Adam with analytic backpropagation through the placement
// Jacobian. Reproducible for a fixed seed.
TrainResult train_torsion_net(const std::vector<Ensemble>& ensembles, const LookupTables& tables,
                              const TrainConfig& cfg);

// Versioned JSON model file.
std::string model_to_json(const BackmapModel& model);
BackmapModel model_from_json(const std::string& text);
void save_model(const BackmapModel& model, const std::string& path);
BackmapModel load_model(const std::string& path);

} // namespace cgback
