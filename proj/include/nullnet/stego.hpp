#pragma once

// Steganographic image composition from a network's null space. A stego
// image S = alpha1 * H_perp + alpha2 * C_null carries the classifier-visible
// component of the hidden image H and the classifier-invisible null
// component of the cover image C, so the network classifies S exactly as it
// classifies alpha1 * H while S visually resembles C.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nullnet/data_io.hpp"
#include "nullnet/network.hpp"
#include "nullnet/nullspace.hpp"

namespace nullnet {

struct FilteredEntry {
    Vector image;
    int label = 0;
    Prediction prediction_original;
    Prediction prediction_rescaled;
};

/// Images the network classifies correctly at full scale and at alpha1 scale,
/// capped per class in dataset order.
struct FilteredDataset {
    std::vector<FilteredEntry> entries;
    double alpha1 = 0.0;
    std::size_t per_class_cap = 0;

    std::size_t size() const { return entries.size(); }
};

inline FilteredDataset build_filtered_dataset(const Network& f, const LabeledDataset& data,
                                              double alpha1, std::size_t per_class_cap) {
    if (!(alpha1 > 0.0 && alpha1 < 1.0))
        throw std::invalid_argument("build_filtered_dataset: alpha1 must lie in (0, 1)");
    FilteredDataset out;
    out.alpha1 = alpha1;
    out.per_class_cap = per_class_cap;
    std::vector<std::size_t> taken(f.output_dim(), 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const int label = data.labels[i];
        if (label < 0 || static_cast<std::size_t>(label) >= taken.size())
            throw std::invalid_argument("build_filtered_dataset: label out of range");
        if (taken[label] >= per_class_cap) continue;
        const Prediction original = predict(f, data.images[i]);
        if (original.cls != label) continue;
        const Prediction rescaled = predict(f, scaled(data.images[i], alpha1));
        if (rescaled.cls != label) continue;
        out.entries.push_back({data.images[i], label, original, rescaled});
        ++taken[label];
    }
    return out;
}

/// Largest alpha2 in (0, 1] keeping alpha1*H_perp + alpha2*C_null inside
/// [-1, 1] per pixel. For each pixel with C_null != 0 the admissible range is
/// margin / |C_null|, where margin is the distance from alpha1*H_perp to the
/// boundary being approached.
inline double select_alpha2(const Vector& hidden_perp, const Vector& cover_null, double alpha1) {
    if (hidden_perp.size() != cover_null.size())
        throw std::invalid_argument("select_alpha2: dimension mismatch");
    double bound = 1.0;
    for (std::size_t i = 0; i < hidden_perp.size(); ++i) {
        const double h = alpha1 * hidden_perp[i];
        if (std::abs(h) > 1.0)
            throw std::runtime_error("select_alpha2: hidden component out of range");
        const double c = cover_null[i];
        if (c == 0.0) continue;
        const double margin = c > 0.0 ? 1.0 - h : 1.0 + h;
        bound = std::min(bound, margin / std::abs(c));
    }
    return std::max(bound, 0.0);
}

struct StegoArtifact {
    Vector cover;   // C
    Vector hidden;  // H
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    Vector cover_null;   // C projected onto the null space
    Vector hidden_perp;  // H projected onto the row space
    Vector stego;        // S = alpha1 * hidden_perp + alpha2 * cover_null
    Prediction prediction_on_stego;
    Prediction prediction_on_scaled_hidden;  // prediction for alpha1 * H
};

/// Run the composition pipeline for one (hidden, cover) pair.
inline StegoArtifact compose_stego(const Network& f, const NetworkNullSpace& ns,
                                   const Vector& hidden, const Vector& cover, double alpha1) {
    if (!(alpha1 > 0.0 && alpha1 <= 1.0))
        throw std::invalid_argument("compose_stego: alpha1 must lie in (0, 1]");
    if (hidden.size() != ns.ambient_dim() || cover.size() != ns.ambient_dim())
        throw std::invalid_argument("compose_stego: dimension mismatch");
    for (double x : hidden)
        if (!(x >= -1.0 && x <= 1.0))
            throw std::invalid_argument("compose_stego: hidden image out of [-1, 1]");
    for (double x : cover)
        if (!(x >= -1.0 && x <= 1.0))
            throw std::invalid_argument("compose_stego: cover image out of [-1, 1]");

    StegoArtifact art;
    art.cover = cover;
    art.hidden = hidden;
    art.alpha1 = alpha1;
    art.cover_null = matvec(ns.null_projector, cover);
    art.hidden_perp = matvec(ns.row_projector, hidden);
    art.alpha2 = select_alpha2(art.hidden_perp, art.cover_null, alpha1);

    const std::size_t n = hidden.size();
    auto assemble = [&](double a2) {
        Vector s(n);
        for (std::size_t i = 0; i < n; ++i)
            s[i] = alpha1 * art.hidden_perp[i] + a2 * art.cover_null[i];
        return s;
    };
    art.stego = assemble(art.alpha2);
    // The closed-form bound is tight; shave off rounding overshoot if the
    // boundary pixel landed a few ulps outside.
    for (int guard = 0; guard < 8 && inf_norm(art.stego) > 1.0; ++guard) {
        art.alpha2 = std::nextafter(art.alpha2, 0.0);
        art.stego = assemble(art.alpha2);
    }
    if (inf_norm(art.stego) > 1.0)
        throw std::runtime_error("compose_stego: stego image escaped [-1, 1]");

    art.prediction_on_stego = predict(f, art.stego);
    art.prediction_on_scaled_hidden = predict(f, scaled(hidden, alpha1));
    return art;
}

struct StegoReport {
    bool class_match = false;  // predict(S) vs predict(alpha1 * H_perp)
    double softmax_gap = 0.0;  // inf-norm distance between the two distributions
    double confidence = 0.0;   // confidence of the stego prediction
};

inline StegoReport verify_stego(const Network& f, const StegoArtifact& art) {
    const Prediction on_stego = predict(f, art.stego);
    const Prediction on_hidden_perp = predict(f, scaled(art.hidden_perp, art.alpha1));
    StegoReport report;
    report.class_match = on_stego.cls == on_hidden_perp.cls;
    report.softmax_gap = inf_norm(sub(on_stego.distribution, on_hidden_perp.distribution));
    report.confidence = on_stego.confidence;
    return report;
}

/// The input split into the component the network reacts to (the row-space
/// part) and the component it ignores (the null part).
struct NnView {
    Vector seen;    // X_perp: sole contributor to the prediction
    Vector unseen;  // X_null: invisible to the network
};

inline NnView what_nn_sees(const Network& f, const NetworkNullSpace& ns, const Vector& x) {
    if (ns.ambient_dim() != f.input_dim())
        throw std::invalid_argument("what_nn_sees: null space does not belong to this network");
    if (x.size() != ns.ambient_dim())
        throw std::invalid_argument("what_nn_sees: dimension mismatch");
    NnView view;
    view.seen = matvec(ns.row_projector, x);
    view.unseen = matvec(ns.null_projector, x);
    return view;
}

/// Guarded scale for rendering vectors whose entries may exceed [-1, 1]:
/// 1 / max(1, max|v_i|), so the display copy stays in range.
inline double display_scale(const Vector& v) {
    const double m = inf_norm(v);
    return m > 1.0 ? 1.0 / m : 1.0;
}

}  // namespace nullnet
