#pragma once

#include <optional>
#include <vector>

#include "mmvr/augment.hpp"
#include "mmvr/harness/dataset.hpp"
#include "mmvr/keynet.hpp"
#include "mmvr/vr_extract.hpp"

namespace mmvr::harness {

// Feature scaling shared by training and evaluation. Intensities span many
// orders of magnitude, so they enter through a compressed log channel.
struct Featurizer {
    bool center = true;  // subtract the sequence centroid from positions
    int frame_stride = 1;  // temporal subsampling before the recurrent stage

    static double intensity_feature(double intensity) {
        return 0.05 * std::log10(intensity + 1e-30);
    }

    nn::Tensor frame_tensor(const radar::PointCloudFrame& f, const Vec3& centroid) const {
        if (f.points.empty()) return nn::Tensor({1, 6});  // placeholder row
        nn::Tensor X({int(f.points.size()), 6});
        for (int i = 0; i < X.rows(); ++i) {
            const radar::Point& p = f.points[std::size_t(i)];
            X.at(i, 0) = p.x - (center ? centroid.x : 0.0);
            X.at(i, 1) = p.y - (center ? centroid.y : 0.0);
            X.at(i, 2) = p.z - (center ? centroid.z : 0.0);
            X.at(i, 3) = p.velocity;
            X.at(i, 4) = intensity_feature(p.intensity);
            X.at(i, 5) = 0.1 * p.rcs_m2.value_or(0.0);
        }
        return X;
    }

    static Vec3 centroid_of(const std::vector<radar::PointCloudFrame>& frames) {
        Vec3 c{};
        long n = 0;
        for (const auto& f : frames)
            for (const auto& p : f.points) {
                c += Vec3{p.x, p.y, p.z};
                ++n;
            }
        if (n > 0) c = c * (1.0 / double(n));
        return c;
    }

    std::vector<nn::Tensor> sequence_tensors(const std::vector<radar::PointCloudFrame>& frames) const {
        Vec3 c = center ? centroid_of(frames) : Vec3{};
        std::vector<nn::Tensor> out;
        out.reserve(frames.size());
        for (std::size_t i = 0; i < frames.size(); i += std::size_t(std::max(1, frame_stride)))
            out.push_back(frame_tensor(frames[i], c));
        return out;
    }
};

// ---- keystroke windows ----

// Wide acceptance band for the keystroke pipeline: in dense scenes the
// per-point estimates of neighboring scatterers merge upward when their
// spectral lobes overlap, so only far-out clutter (table, TV) is rejected
// here and the attention encoder does the focusing.
inline vr::RcsBand device_band() { return vr::RcsBand{1.0, 55.0}; }

struct KeyWindow {
    std::vector<nn::Tensor> frames;      // featurized VR frames
    key::WindowLabels labels;
    std::vector<key::Press2D> presses_2d;
    std::optional<key::Press2D> confirm_2d;
    int start_frame = 0;                 // offset into the source sequence
    std::string sequence_id;
    std::vector<std::string> press_keys;  // ground truth, parallel to labels
};

// VR extraction applied frame by frame; frames with no in-band detections
// become a single zero row so the window stays rectangular.
inline std::vector<radar::PointCloudFrame> extract_device_frames(
    const std::vector<radar::PointCloudFrame>& frames,
    const aug::ActionFeatureModel* augmenter = nullptr) {
    // Keyboard-side filter: typing happens in front of the torso, so returns
    // behind (range-wise) the sequence median carry no key information and
    // only invite overfitting to body sway.
    std::vector<double> ys;
    for (const auto& f : frames)
        for (const auto& p : f.points) ys.push_back(p.y);
    double median_y = 0.0;
    if (!ys.empty()) {
        std::sort(ys.begin(), ys.end());
        median_y = ys[ys.size() / 2];
    }
    double y_cut = median_y - 0.10;

    std::vector<radar::PointCloudFrame> out;
    std::vector<radar::PointCloudFrame> history;
    for (const auto& f : frames) {
        vr::VrExtraction ex = vr::extract_vr_points(f, device_band(), vr::DbscanConfig{});
        radar::PointCloudFrame vf;
        vf.frame_index = ex.frame.frame_index;
        vf.timestamp_s = ex.frame.timestamp_s;
        for (const auto& p : ex.frame.points)
            if (ys.empty() || p.y < y_cut) vf.points.push_back(p);
        if (vf.points.empty() && !ex.frame.points.empty()) {
            // keep the closest return rather than an empty frame
            const radar::Point* best = &ex.frame.points.front();
            for (const auto& p : ex.frame.points)
                if (p.y < best->y) best = &p;
            vf.points.push_back(*best);
        }
        if (augmenter != nullptr && !vf.points.empty()) {
            aug::AugmentResult ar = aug::augment_frame(vf, history, *augmenter);
            vf = std::move(ar.frame);
        }
        history.push_back(vf);
        int cap = augmenter ? augmenter->config().history : 4;
        if (int(history.size()) > cap) history.erase(history.begin());
        out.push_back(std::move(vf));
    }
    return out;
}

// Builds sliding windows with labels from the sidecar ground truth.
inline std::vector<KeyWindow> build_key_windows(const LoadedSequence& seq, int window, int stride,
                                                const scene::KeyboardLayout& layout,
                                                int layout_index,
                                                const aug::ActionFeatureModel* augmenter = nullptr) {
    std::vector<radar::PointCloudFrame> vr_frames = extract_device_frames(seq.frames, augmenter);
    Featurizer feat;
    feat.center = false;  // key identity lives in absolute position
    std::vector<nn::Tensor> tensors;
    for (const auto& f : vr_frames) tensors.push_back(feat.frame_tensor(f, Vec3{}));

    std::vector<KeyWindow> windows;
    int n = int(tensors.size());
    if (n < window) return windows;
    for (int start = 0; start + window <= n; start += stride) {
        KeyWindow w;
        w.start_frame = start;
        w.sequence_id = seq.meta.id;
        w.frames.assign(tensors.begin() + start, tensors.begin() + start + window);
        for (const auto& p : seq.meta.presses) {
            if (p.frame_index < start || p.frame_index >= start + window) continue;
            w.labels.press_frames.push_back(p.frame_index - start);
            w.labels.keys.push_back(p.key);
            w.press_keys.push_back(p.key);
            w.labels.press_positions.push_back(p.position);
            w.presses_2d.push_back({p.u, p.v});
            if (p.key == layout.confirm_key) w.confirm_2d = key::Press2D{p.u, p.v};
        }
        w.labels.layout_index = layout_index;
        windows.push_back(std::move(w));
    }
    return windows;
}

}  // namespace mmvr::harness
