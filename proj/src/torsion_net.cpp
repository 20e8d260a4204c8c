#include <algorithm>
#include <cmath>
#include <random>

#include "cgback/backmapper.hpp"
#include "cgback/errors.hpp"

namespace cgback {

namespace {

double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

TorsionNet::Layer make_layer(int rows, int cols, std::mt19937_64& rng) {
    TorsionNet::Layer l;
    l.rows = rows;
    l.cols = cols;
    l.w.resize(static_cast<size_t>(rows) * cols);
    l.b.assign(rows, 0.0);
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (double& w : l.w)
        w = (2.0 * uniform_unit(rng) - 1.0) * limit;
    return l;
}

void affine(const TorsionNet::Layer& l, std::span<const double> x, std::vector<double>& out) {
    out.assign(l.rows, 0.0);
    for (int r = 0; r < l.rows; ++r) {
        double acc = l.b[r];
        const double* wr = &l.w[static_cast<size_t>(r) * l.cols];
        for (int c = 0; c < l.cols; ++c)
            acc += wr[c] * x[c];
        out[r] = acc;
    }
}

void tanh_inplace(std::vector<double>& v) {
    for (double& x : v)
        x = std::tanh(x);
}

} // namespace

void TorsionNet::Gradients::zero() {
    for (Layer& l : layers) {
        std::fill(l.w.begin(), l.w.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
    }
}

TorsionNet::TorsionNet(FeatureSpec spec, int hidden, std::uint64_t seed)
    : spec_(spec), hidden_(hidden) {
    std::mt19937_64 rng(seed);
    layers_.push_back(make_layer(hidden, spec.dim(), rng));
    layers_.push_back(make_layer(hidden, hidden, rng));
    layers_.push_back(make_layer(kOutputDim, hidden, rng));
}

std::vector<double> TorsionNet::forward(std::span<const double> x) const {
    Activations acts;
    return forward(x, acts);
}

std::vector<double> TorsionNet::forward(std::span<const double> x, Activations& acts) const {
    if (static_cast<int>(x.size()) != spec_.dim())
        throw DataError("torsion net: feature vector has size " + std::to_string(x.size()) +
                        ", expected " + std::to_string(spec_.dim()));
    acts.x.assign(x.begin(), x.end());
    affine(layers_[0], acts.x, acts.h1);
    tanh_inplace(acts.h1);
    affine(layers_[1], acts.h1, acts.h2);
    tanh_inplace(acts.h2);
    affine(layers_[2], acts.h2, acts.y);
    return acts.y;
}

void TorsionNet::backward(const Activations& acts, std::span<const double> dl_dy,
                          Gradients& grad) const {
    // Output layer.
    std::vector<double> dh2(hidden_, 0.0);
    {
        const Layer& l = layers_[2];
        Layer& g = grad.layers[2];
        for (int r = 0; r < l.rows; ++r) {
            const double d = dl_dy[r];
            if (d == 0.0)
                continue;
            g.b[r] += d;
            double* gw = &g.w[static_cast<size_t>(r) * l.cols];
            const double* wr = &l.w[static_cast<size_t>(r) * l.cols];
            for (int c = 0; c < l.cols; ++c) {
                gw[c] += d * acts.h2[c];
                dh2[c] += d * wr[c];
            }
        }
    }
    // Hidden layers through the tanh nonlinearity.
    std::vector<double> dz2(hidden_);
    for (int i = 0; i < hidden_; ++i)
        dz2[i] = dh2[i] * (1.0 - acts.h2[i] * acts.h2[i]);
    std::vector<double> dh1(hidden_, 0.0);
    {
        const Layer& l = layers_[1];
        Layer& g = grad.layers[1];
        for (int r = 0; r < l.rows; ++r) {
            const double d = dz2[r];
            g.b[r] += d;
            double* gw = &g.w[static_cast<size_t>(r) * l.cols];
            const double* wr = &l.w[static_cast<size_t>(r) * l.cols];
            for (int c = 0; c < l.cols; ++c) {
                gw[c] += d * acts.h1[c];
                dh1[c] += d * wr[c];
            }
        }
    }
    std::vector<double> dz1(hidden_);
    for (int i = 0; i < hidden_; ++i)
        dz1[i] = dh1[i] * (1.0 - acts.h1[i] * acts.h1[i]);
    {
        const Layer& l = layers_[0];
        Layer& g = grad.layers[0];
        for (int r = 0; r < l.rows; ++r) {
            const double d = dz1[r];
            g.b[r] += d;
            double* gw = &g.w[static_cast<size_t>(r) * l.cols];
            for (int c = 0; c < l.cols; ++c)
                gw[c] += d * acts.x[c];
        }
    }
}

TorsionNet::Gradients TorsionNet::zero_gradients() const {
    Gradients g;
    g.layers = layers_;
    g.zero();
    return g;
}

std::array<double, 2> TorsionNet::recovered_sin_cos(double s_raw, double c_raw) {
    const double r = std::sqrt(s_raw * s_raw + c_raw * c_raw);
    if (r < 1e-12)
        return {0.0, 1.0};
    return {s_raw / r, c_raw / r};
}

double TorsionNet::recovered_angle(double s_raw, double c_raw, double* ds, double* dc) {
    const double r2 = s_raw * s_raw + c_raw * c_raw;
    if (r2 < 1e-24) {
        if (ds != nullptr)
            *ds = 0.0;
        if (dc != nullptr)
            *dc = 0.0;
        return 0.0;
    }
    if (ds != nullptr)
        *ds = c_raw / r2;
    if (dc != nullptr)
        *dc = -s_raw / r2;
    return std::atan2(s_raw, c_raw);
}

int TorsionNet::angle_pair_offset(int backbone_angle_index) {
    return 2 * backbone_angle_index;
}

int TorsionNet::torsion_pair_offset(int slot) {
    return 2 * (kAngleSlots + slot);
}

namespace {

struct AdamState {
    std::vector<TorsionNet::Layer> m, v;
    int t = 0;
};

void adam_step(TorsionNet& net, const TorsionNet::Gradients& grad, AdamState& state,
               double lr) {
    constexpr double b1 = 0.9;
    constexpr double b2 = 0.999;
    constexpr double eps = 1e-8;
    ++state.t;
    const double c1 = 1.0 - std::pow(b1, state.t);
    const double c2 = 1.0 - std::pow(b2, state.t);
    for (size_t li = 0; li < net.layers().size(); ++li) {
        TorsionNet::Layer& l = net.layers()[li];
        const TorsionNet::Layer& g = grad.layers[li];
        TorsionNet::Layer& m = state.m[li];
        TorsionNet::Layer& v = state.v[li];
        for (size_t i = 0; i < l.w.size(); ++i) {
            m.w[i] = b1 * m.w[i] + (1.0 - b1) * g.w[i];
            v.w[i] = b2 * v.w[i] + (1.0 - b2) * g.w[i] * g.w[i];
            l.w[i] -= lr * (m.w[i] / c1) / (std::sqrt(v.w[i] / c2) + eps);
        }
        for (size_t i = 0; i < l.b.size(); ++i) {
            m.b[i] = b1 * m.b[i] + (1.0 - b1) * g.b[i];
            v.b[i] = b2 * v.b[i] + (1.0 - b2) * g.b[i] * g.b[i];
            l.b[i] -= lr * (m.b[i] / c1) / (std::sqrt(v.b[i] / c2) + eps);
        }
    }
}

struct FrameData {
    const Structure* truth = nullptr;
    CGTrace trace;
    ZMatrixFrame true_z;
    // Features per (chain, residue); empty vectors for terminal residues.
    std::vector<std::vector<std::vector<double>>> features;
};

struct ResidueOutputs {
    TorsionNet::Activations acts;
    bool active = false;
};

// Decodes one frame with the current network, keeping activations so the
// parameter gradient can be pushed back through the network.
ZMatrixFrame predict_zmatrix(const FrameData& fd, const TorsionNet& net,
                             const LookupTables& tables,
                             std::vector<std::vector<ResidueOutputs>>& outputs) {
    ZMatrixFrame z;
    outputs.assign(fd.trace.chains.size(), {});
    for (size_t ci = 0; ci < fd.trace.chains.size(); ++ci) {
        const CGChain& chain = fd.trace.chains[ci];
        outputs[ci].resize(chain.beads.size());
        ZChain zc;
        zc.id = chain.id;
        for (size_t ri = 0; ri < chain.beads.size(); ++ri) {
            const CGBead& bead = chain.beads[ri];
            ZResidue zr;
            zr.type = bead.type;
            zr.seq_index = bead.seq_index;
            const bool terminal = ri == 0 || ri + 1 == chain.beads.size();
            if (!terminal) {
                ResidueOutputs& ro = outputs[ci][ri];
                ro.active = true;
                const std::vector<double>& y =
                    net.forward(fd.features[ci][ri], ro.acts);
                const ResidueTemplate& tmpl = template_for(bead.type);
                for (size_t si = 0; si < tmpl.slots.size(); ++si) {
                    const SlotStats& stats = tables.at(bead.type, static_cast<int>(si));
                    ZRow row;
                    row.atom = tmpl.slots[si].atom;
                    row.j = tmpl.slots[si].j;
                    row.k = tmpl.slots[si].k;
                    row.l = tmpl.slots[si].l;
                    row.d = stats.bond_mean;
                    if (si == 1 || si == 2) {
                        const int off = TorsionNet::angle_pair_offset(si == 1 ? 0 : 1);
                        row.theta = TorsionNet::recovered_angle(y[off], y[off + 1]);
                    } else {
                        row.theta = stats.angle_mean;
                    }
                    const int toff = TorsionNet::torsion_pair_offset(static_cast<int>(si));
                    row.tau = TorsionNet::recovered_angle(y[toff], y[toff + 1]);
                    zr.rows.push_back(std::move(row));
                }
            }
            zc.residues.push_back(std::move(zr));
        }
        z.chains.push_back(std::move(zc));
    }
    return z;
}

// Maps the flat internal-coordinate gradient back onto network outputs
// and accumulates weight gradients.
void backprop_frame(const FrameData& fd, const TorsionNet& net, const LossGradients& lg,
                    const std::vector<std::vector<ResidueOutputs>>& outputs,
                    TorsionNet::Gradients& grad) {
    for (size_t ci = 0; ci < fd.trace.chains.size(); ++ci) {
        for (size_t ri = 0; ri < fd.trace.chains[ci].beads.size(); ++ri) {
            const ResidueOutputs& ro = outputs[ci][ri];
            if (!ro.active)
                continue;
            const int base = lg.layout.offsets[ci][ri];
            const ResidueTemplate& tmpl = template_for(fd.trace.chains[ci].beads[ri].type);
            std::vector<double> dl_dy(TorsionNet::kOutputDim, 0.0);
            for (size_t si = 0; si < tmpl.slots.size(); ++si) {
                if (si == 1 || si == 2) {
                    const int off = TorsionNet::angle_pair_offset(si == 1 ? 0 : 1);
                    double ds = 0, dc = 0;
                    TorsionNet::recovered_angle(ro.acts.y[off], ro.acts.y[off + 1], &ds, &dc);
                    const double dl_dtheta = lg.grad[base + 3 * static_cast<int>(si) + 1];
                    dl_dy[off] += dl_dtheta * ds;
                    dl_dy[off + 1] += dl_dtheta * dc;
                }
                const int toff = TorsionNet::torsion_pair_offset(static_cast<int>(si));
                double ds = 0, dc = 0;
                TorsionNet::recovered_angle(ro.acts.y[toff], ro.acts.y[toff + 1], &ds, &dc);
                const double dl_dtau = lg.grad[base + 3 * static_cast<int>(si) + 2];
                dl_dy[toff] += dl_dtau * ds;
                dl_dy[toff + 1] += dl_dtau * dc;
            }
            net.backward(ro.acts, dl_dy, grad);
        }
    }
}

} // namespace

TrainResult train_torsion_net(const std::vector<Ensemble>& ensembles, const LookupTables& tables,
                              const TrainConfig& cfg) {
    if (!(cfg.learning_rate > 0))
        throw DataError("train: learning rate must be positive");
    if (cfg.epochs < 0)
        throw DataError("train: epochs must be non-negative");
    if (cfg.batch_size <= 0)
        throw DataError("train: batch size must be positive");

    const FeatureSpec spec{cfg.window};
    std::vector<FrameData> frames;
    for (const Ensemble& e : ensembles) {
        for (const Structure& s : e.frames) {
            FrameData fd;
            fd.truth = &s;
            fd.trace = cg_map(s);
            fd.true_z = extract(s, fd.trace);
            fd.features.resize(fd.trace.chains.size());
            for (size_t ci = 0; ci < fd.trace.chains.size(); ++ci) {
                fd.features[ci].resize(fd.trace.chains[ci].beads.size());
                for (size_t ri = 1; ri + 1 < fd.trace.chains[ci].beads.size(); ++ri)
                    fd.features[ci][ri] = featurize(fd.trace, static_cast<int>(ci),
                                                    static_cast<int>(ri), spec);
            }
            frames.push_back(std::move(fd));
        }
    }
    if (frames.empty())
        throw DataError("train: no training frames");

    TrainResult result;
    result.net = TorsionNet(spec, cfg.hidden, cfg.seed);

    const auto frame_loss = [&](const FrameData& fd, LossGradients* lg_out,
                                std::vector<std::vector<ResidueOutputs>>* outputs) {
        std::vector<std::vector<ResidueOutputs>> local;
        std::vector<std::vector<ResidueOutputs>>& outs = outputs != nullptr ? *outputs : local;
        const ZMatrixFrame pred = predict_zmatrix(fd, result.net, tables, outs);
        LossGradients lg = loss_gradients(*fd.truth, fd.trace, fd.true_z, pred, cfg.weights);
        const double loss = lg.report.recon;
        if (lg_out != nullptr)
            *lg_out = std::move(lg);
        return loss;
    };

    // Pre-training evaluation.
    double init_loss = 0;
    for (const FrameData& fd : frames)
        init_loss += frame_loss(fd, nullptr, nullptr);
    init_loss /= static_cast<double>(frames.size());
    result.epoch_loss.push_back(init_loss);

    AdamState adam;
    adam.m = result.net.layers();
    adam.v = result.net.layers();
    for (TorsionNet::Layer& l : adam.m) {
        std::fill(l.w.begin(), l.w.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
    }
    for (TorsionNet::Layer& l : adam.v) {
        std::fill(l.w.begin(), l.w.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
    }

    std::mt19937_64 rng(cfg.seed);
    std::vector<size_t> order(frames.size());
    for (size_t i = 0; i < order.size(); ++i)
        order[i] = i;

    TorsionNet::Gradients grad = result.net.zero_gradients();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_acc = 0;
        for (size_t start = 0; start < order.size();
             start += static_cast<size_t>(cfg.batch_size)) {
            const size_t end =
                std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
            grad.zero();
            for (size_t i = start; i < end; ++i) {
                const FrameData& fd = frames[order[i]];
                LossGradients lg;
                std::vector<std::vector<ResidueOutputs>> outputs;
                const double loss = frame_loss(fd, &lg, &outputs);
                if (!std::isfinite(loss))
                    throw NumericError("train: non-finite loss at epoch " +
                                       std::to_string(epoch) + ", frame " +
                                       std::to_string(order[i]));
                epoch_acc += loss;
                backprop_frame(fd, result.net, lg, outputs, grad);
            }
            const double scale = 1.0 / static_cast<double>(end - start);
            for (TorsionNet::Layer& l : grad.layers) {
                for (double& w : l.w)
                    w *= scale;
                for (double& b : l.b)
                    b *= scale;
            }
            adam_step(result.net, grad, adam, cfg.learning_rate);
        }
        result.epoch_loss.push_back(epoch_acc / static_cast<double>(frames.size()));
    }
    return result;
}

} // namespace cgback
