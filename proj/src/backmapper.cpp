#include "cgback/backmapper.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "cgback/errors.hpp"
#include "cgback/pdb_io.hpp"

namespace cgback {

const SlotStats& LookupTables::at(ResidueType type, int slot) const {
    const auto it = tables.find(type);
    if (it == tables.end())
        throw DataError(std::string("lookup tables do not cover residue type ") +
                        residue_code(type));
    if (slot < 0 || static_cast<size_t>(slot) >= it->second.size())
        throw DataError(std::string("lookup tables have no slot ") + std::to_string(slot) +
                        " for " + residue_code(type));
    return it->second[slot];
}

namespace {

int torsion_bin(double tau) {
    const double width = 2.0 * M_PI / kTorsionHistogramBins;
    int bin = static_cast<int>(std::floor((tau + M_PI) / width));
    if (bin < 0)
        bin = 0;
    if (bin >= kTorsionHistogramBins)
        bin = kTorsionHistogramBins - 1; // tau == +pi lands in the last bin
    return bin;
}

struct SlotAccumulator {
    double bond_sum = 0;
    double angle_sin = 0, angle_cos = 0;
    double torsion_sin = 0, torsion_cos = 0;
    std::array<std::uint64_t, kTorsionHistogramBins> hist{};
    std::uint64_t count = 0;

    void add(const ZRow& row) {
        bond_sum += row.d;
        angle_sin += std::sin(row.theta);
        angle_cos += std::cos(row.theta);
        torsion_sin += std::sin(row.tau);
        torsion_cos += std::cos(row.tau);
        ++hist[torsion_bin(row.tau)];
        ++count;
    }
    void merge(const SlotAccumulator& o) {
        bond_sum += o.bond_sum;
        angle_sin += o.angle_sin;
        angle_cos += o.angle_cos;
        torsion_sin += o.torsion_sin;
        torsion_cos += o.torsion_cos;
        for (int b = 0; b < kTorsionHistogramBins; ++b)
            hist[b] += o.hist[b];
        count += o.count;
    }
    SlotStats finalize(bool fallback) const {
        SlotStats s;
        s.count = count;
        s.fallback = fallback;
        if (count == 0)
            return s;
        const double n = static_cast<double>(count);
        s.bond_mean = bond_sum / n;
        s.angle_mean = std::atan2(angle_sin, angle_cos);
        s.torsion_mean = std::atan2(torsion_sin, torsion_cos);
        for (int b = 0; b < kTorsionHistogramBins; ++b)
            s.torsion_hist[b] = static_cast<double>(hist[b]) / n;
        return s;
    }
};

} // namespace

LookupTables fit_tables(const std::vector<Ensemble>& ensembles) {
    if (ensembles.empty())
        throw DataError("fit_tables: no ensembles");

    std::map<ResidueType, std::vector<SlotAccumulator>> acc;
    std::vector<SlotAccumulator> pooled(kMaxSlotsPerResidue);
    for (ResidueType type : all_residue_types())
        acc[type].resize(template_for(type).slots.size());

    for (const Ensemble& e : ensembles) {
        for (const Structure& frame : e.frames) {
            const CGTrace trace = cg_map(frame);
            const ZMatrixFrame z = extract(frame, trace);
            for (const ZChain& chain : z.chains) {
                for (const ZResidue& res : chain.residues) {
                    for (size_t si = 0; si < res.rows.size(); ++si) {
                        acc[res.type][si].add(res.rows[si]);
                        pooled[si].add(res.rows[si]);
                    }
                }
            }
        }
    }

    LookupTables tables;
    for (ResidueType type : all_residue_types()) {
        std::vector<SlotStats> slots;
        slots.reserve(acc[type].size());
        for (size_t si = 0; si < acc[type].size(); ++si) {
            if (acc[type][si].count > 0)
                slots.push_back(acc[type][si].finalize(false));
            else
                slots.push_back(pooled[si].finalize(true));
        }
        tables.tables.emplace(type, std::move(slots));
    }
    return tables;
}

std::vector<double> featurize(const CGTrace& trace, int chain, int residue,
                              const FeatureSpec& spec) {
    if (chain < 0 || static_cast<size_t>(chain) >= trace.chains.size())
        throw DataError("featurize: chain index out of range");
    const CGChain& c = trace.chains[chain];
    const int n = static_cast<int>(c.beads.size());
    if (residue <= 0 || residue >= n - 1)
        throw DataError("featurize: residue " + std::to_string(residue) + " is terminal");

    const int w = spec.window;
    const int span = 2 * w + 1;
    const auto at = [&](int offset) -> const CGBead* {
        const int idx = residue + offset;
        return idx >= 0 && idx < n ? &c.beads[idx] : nullptr;
    };

    std::vector<double> features;
    features.reserve(spec.dim());
    // Pair distances ordered by separation, then by window position.
    for (int sep = 1; sep < span; ++sep)
        for (int a = -w; a + sep <= w; ++a) {
            const CGBead* pa = at(a);
            const CGBead* pb = at(a + sep);
            features.push_back(pa != nullptr && pb != nullptr ? distance(pa->ca, pb->ca) : 0.0);
        }
    // Interior angles of consecutive CA triples.
    for (int m = -w + 1; m <= w - 1; ++m) {
        const CGBead* pa = at(m - 1);
        const CGBead* pb = at(m);
        const CGBead* pc = at(m + 1);
        features.push_back(pa != nullptr && pb != nullptr && pc != nullptr
                               ? bond_angle(pa->ca, pb->ca, pc->ca)
                               : 0.0);
    }
    // Residue type one-hot.
    for (int t = 0; t < kNumResidueTypes; ++t)
        features.push_back(static_cast<int>(c.beads[residue].type) == t ? 1.0 : 0.0);
    // Window validity.
    for (int offset = -w; offset <= w; ++offset)
        features.push_back(at(offset) != nullptr ? 1.0 : 0.0);
    return features;
}

namespace {

double sample_torsion(const SlotStats& stats, double u) {
    const double width = 2.0 * M_PI / kTorsionHistogramBins;
    double cum = 0;
    for (int b = 0; b < kTorsionHistogramBins; ++b) {
        const double p = stats.torsion_hist[b];
        if (p <= 0)
            continue;
        if (u < cum + p || b == kTorsionHistogramBins - 1) {
            const double frac = std::min(std::max((u - cum) / p, 0.0), 1.0);
            return -M_PI + (static_cast<double>(b) + frac) * width;
        }
        cum += p;
    }
    return stats.torsion_mean;
}

// Deterministic uniform in [0, 1) from the raw engine stream.
double next_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace

ZMatrixFrame backmap_zmatrix(const CGTrace& trace, const BackmapModel& model,
                             const BackmapOptions& opts) {
    const bool with_net = opts.use_net && model.net.has_value();
    std::mt19937_64 rng(opts.seed);

    ZMatrixFrame z;
    for (size_t ci = 0; ci < trace.chains.size(); ++ci) {
        const CGChain& chain = trace.chains[ci];
        ZChain zc;
        zc.id = chain.id;
        for (size_t ri = 0; ri < chain.beads.size(); ++ri) {
            const CGBead& bead = chain.beads[ri];
            ZResidue zr;
            zr.type = bead.type;
            zr.seq_index = bead.seq_index;
            const bool terminal = ri == 0 || ri + 1 == chain.beads.size();
            if (!terminal) {
                const ResidueTemplate& tmpl = template_for(bead.type);
                std::vector<double> net_out;
                if (with_net)
                    net_out = model.net->forward(featurize(
                        trace, static_cast<int>(ci), static_cast<int>(ri),
                        model.net->feature_spec()));
                for (size_t si = 0; si < tmpl.slots.size(); ++si) {
                    const SlotStats& stats = model.tables.at(bead.type, static_cast<int>(si));
                    if (stats.count == 0)
                        throw DataError(std::string("backmap: no statistics for ") +
                                        residue_code(bead.type) + ":" + tmpl.slots[si].atom);
                    if (stats.fallback && !opts.allow_fallback)
                        throw DataError(std::string("backmap: residue type ") +
                                        residue_code(bead.type) +
                                        " is not covered by the model (fallback disabled)");
                    ZRow row;
                    row.atom = tmpl.slots[si].atom;
                    row.j = tmpl.slots[si].j;
                    row.k = tmpl.slots[si].k;
                    row.l = tmpl.slots[si].l;
                    row.d = stats.bond_mean;

                    // The two CA-anchored backbone angles vary; all other
                    // angles are constrained to their fitted means.
                    const bool net_angle = with_net && (si == 1 || si == 2);
                    if (net_angle) {
                        const int off = TorsionNet::angle_pair_offset(si == 1 ? 0 : 1);
                        row.theta =
                            TorsionNet::recovered_angle(net_out[off], net_out[off + 1]);
                    } else {
                        row.theta = stats.angle_mean;
                    }

                    if (with_net) {
                        const int off = TorsionNet::torsion_pair_offset(static_cast<int>(si));
                        row.tau = TorsionNet::recovered_angle(net_out[off], net_out[off + 1]);
                    } else if (opts.mode == BackmapMode::Stochastic) {
                        row.tau = sample_torsion(stats, next_unit(rng));
                    } else {
                        row.tau = stats.torsion_mean;
                    }
                    zr.rows.push_back(std::move(row));
                }
            }
            zc.residues.push_back(std::move(zr));
        }
        z.chains.push_back(std::move(zc));
    }
    return z;
}

Structure backmap(const CGTrace& trace, const BackmapModel& model, const BackmapOptions& opts) {
    return reconstruct_frame(trace, backmap_zmatrix(trace, model, opts));
}

namespace {

using nlohmann::json;

json slot_to_json(const SlotStats& s) {
    json j;
    j["count"] = s.count;
    j["fallback"] = s.fallback;
    j["d"] = s.bond_mean;
    j["theta"] = s.angle_mean;
    j["tau"] = s.torsion_mean;
    j["tau_hist"] = s.torsion_hist;
    return j;
}

SlotStats slot_from_json(const json& j) {
    SlotStats s;
    s.count = j.at("count").get<std::uint64_t>();
    s.fallback = j.at("fallback").get<bool>();
    s.bond_mean = j.at("d").get<double>();
    s.angle_mean = j.at("theta").get<double>();
    s.torsion_mean = j.at("tau").get<double>();
    const auto hist = j.at("tau_hist").get<std::vector<double>>();
    if (hist.size() != kTorsionHistogramBins)
        throw DataError("model: torsion histogram must have " +
                        std::to_string(kTorsionHistogramBins) + " bins");
    std::copy(hist.begin(), hist.end(), s.torsion_hist.begin());
    return s;
}

json net_to_json(const TorsionNet& net) {
    json j;
    j["window"] = net.feature_spec().window;
    j["hidden"] = net.hidden();
    json layers = json::array();
    for (const TorsionNet::Layer& l : net.layers()) {
        json lj;
        lj["rows"] = l.rows;
        lj["cols"] = l.cols;
        lj["w"] = l.w;
        lj["b"] = l.b;
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    return j;
}

TorsionNet net_from_json(const json& j) {
    const FeatureSpec spec{j.at("window").get<int>()};
    TorsionNet net(spec, j.at("hidden").get<int>(), 0);
    const json& layers = j.at("layers");
    if (layers.size() != net.layers().size())
        throw DataError("model: unexpected network depth");
    for (size_t i = 0; i < layers.size(); ++i) {
        TorsionNet::Layer& l = net.layers()[i];
        if (layers[i].at("rows").get<int>() != l.rows ||
            layers[i].at("cols").get<int>() != l.cols)
            throw DataError("model: layer " + std::to_string(i) + " has unexpected shape");
        l.w = layers[i].at("w").get<std::vector<double>>();
        l.b = layers[i].at("b").get<std::vector<double>>();
        if (l.w.size() != static_cast<size_t>(l.rows * l.cols) ||
            l.b.size() != static_cast<size_t>(l.rows))
            throw DataError("model: layer " + std::to_string(i) + " has malformed weights");
    }
    return net;
}

} // namespace

std::string model_to_json(const BackmapModel& model) {
    json j;
    j["version"] = 1;
    json tables = json::object();
    for (const auto& [type, slots] : model.tables.tables) {
        json arr = json::array();
        const ResidueTemplate& tmpl = template_for(type);
        for (size_t si = 0; si < slots.size(); ++si) {
            json sj = slot_to_json(slots[si]);
            sj["atom"] = tmpl.slots[si].atom;
            arr.push_back(std::move(sj));
        }
        tables[residue_code(type)] = std::move(arr);
    }
    j["tables"] = std::move(tables);
    j["net"] = model.net.has_value() ? net_to_json(*model.net) : json(nullptr);
    j["feature_spec"] =
        model.net.has_value()
            ? json{{"window", model.net->feature_spec().window},
                   {"dim", model.net->feature_spec().dim()}}
            : json(nullptr);
    j["fit_metadata"] = {{"ensembles", model.metadata.ensembles}, {"seed", model.metadata.seed}};
    return j.dump(2);
}

BackmapModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("model: invalid JSON: ") + e.what());
    }
    try {
        if (j.at("version").get<int>() != 1)
            throw DataError("model: unsupported version");
        BackmapModel model;
        for (const auto& [code, arr] : j.at("tables").items()) {
            const ResidueType type = residue_type_from_code(code);
            const ResidueTemplate& tmpl = template_for(type);
            if (arr.size() != tmpl.slots.size())
                throw DataError("model: slot count for " + code + " does not match the template");
            std::vector<SlotStats> slots;
            slots.reserve(arr.size());
            for (size_t si = 0; si < arr.size(); ++si) {
                if (arr[si].at("atom").get<std::string>() != tmpl.slots[si].atom)
                    throw DataError("model: slot order for " + code +
                                    " does not match the template");
                slots.push_back(slot_from_json(arr[si]));
            }
            model.tables.tables.emplace(type, std::move(slots));
        }
        if (!j.at("net").is_null())
            model.net = net_from_json(j.at("net"));
        const json& meta = j.at("fit_metadata");
        model.metadata.ensembles = meta.at("ensembles").get<std::vector<std::string>>();
        model.metadata.seed = meta.at("seed").get<std::uint64_t>();
        return model;
    } catch (const json::exception& e) {
        throw DataError(std::string("model: malformed model file: ") + e.what());
    }
}

void save_model(const BackmapModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot open '" + path + "' for writing");
    out << model_to_json(model) << "\n";
    if (!out)
        throw DataError("failed writing '" + path + "'");
}

BackmapModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

} // namespace cgback
