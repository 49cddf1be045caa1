#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "mmvr/harness/evaluate.hpp"

namespace mmvr::harness {

struct RecoveryCurve {
    std::map<int, double> top1;  // length -> accuracy
    std::map<int, double> top5;
    std::map<int, long> trials;

    io::json to_json() const {
        io::json j;
        j["top1"] = io::json::object();
        j["top5"] = io::json::object();
        j["trials"] = io::json::object();
        for (const auto& [l, v] : top1) j["top1"][std::to_string(l)] = v;
        for (const auto& [l, v] : top5) j["top5"][std::to_string(l)] = v;
        for (const auto& [l, v] : trials) j["trials"][std::to_string(l)] = v;
        return j;
    }
};

struct Candidate {
    std::string text;
    double logp = 0.0;
};

// Beam enumeration over independent per-press distributions; ranking by the
// product of per-press probabilities. Deterministic tie-break on the string.
inline std::vector<Candidate> beam_decode(const std::vector<std::vector<double>>& press_probs,
                                          const std::vector<std::string>& keys, int beam_width) {
    if (beam_width < 1) throw std::invalid_argument("beam width must be >= 1");
    std::vector<Candidate> beam{{std::string(), 0.0}};
    for (const auto& probs : press_probs) {
        std::vector<Candidate> next;
        for (const auto& c : beam)
            for (std::size_t k = 0; k < keys.size(); ++k) {
                double p = probs[k];
                next.push_back({c.text + keys[k], c.logp + std::log(std::max(p, 1e-300))});
            }
        std::sort(next.begin(), next.end(), [](const Candidate& a, const Candidate& b) {
            if (a.logp != b.logp) return a.logp > b.logp;
            return a.text < b.text;
        });
        if (int(next.size()) > beam_width) next.resize(std::size_t(beam_width));
        beam = std::move(next);
    }
    return beam;
}

// Per-press distributions for one keystroke sequence, decoded at the
// ground-truth press frames (single-character presses only; the confirmation
// press terminates the string and is excluded).
struct SequencePresses {
    std::vector<std::vector<double>> probs;  // one distribution per character press
    std::vector<std::string> keys;           // label space of the distributions
    std::string truth;
};

inline SequencePresses sequence_presses(const key::KeyNet& net, const LoadedSequence& s,
                                        const aug::ActionFeatureModel* augmenter = nullptr) {
    Featurizer feat;
    feat.center = false;
    std::vector<radar::PointCloudFrame> vr_frames = extract_device_frames(s.frames, augmenter);
    std::vector<nn::Tensor> tensors;
    for (const auto& f : vr_frames) tensors.push_back(feat.frame_tensor(f, Vec3{}));

    std::vector<key::Press2D> presses_2d;
    std::optional<key::Press2D> confirm_2d;
    const scene::KeyboardLayout* lay = nullptr;
    for (const auto& l : net.layouts())
        if (l.name == s.meta.layout) lay = &l;
    for (const auto& p : s.meta.presses) {
        presses_2d.push_back({p.u, p.v});
        if (lay && p.key == lay->confirm_key) confirm_2d = key::Press2D{p.u, p.v};
    }
    if (presses_2d.empty()) throw std::runtime_error("sequence has no presses: " + s.meta.id);
    key::LayoutConfidence conf = net.layout_confidence(presses_2d, confirm_2d);

    SequencePresses out;
    out.truth = s.meta.label;
    for (const auto& p : s.meta.presses) {
        if (p.key.size() != 1) continue;  // skip the confirmation press
        if (p.frame_index < 0 || p.frame_index >= int(tensors.size())) continue;
        key::PressEvent ev =
            net.decode_key(keynet_motion_at(net, tensors, p.frame_index), conf, p.frame_index);
        if (out.keys.empty()) out.keys = ev.keys;
        out.probs.push_back(ev.distribution);
    }
    return out;
}

// Per-length accuracy via prefix evaluation: each scripted password is typed
// once at the maximum length and every prefix length 2..max is scored from
// the same presses, so a length-L failure can never follow a length-(L-1)
// miss caused by different randomness.
inline RecoveryCurve recover_passwords(const key::KeyNet& net, const std::string& dir,
                                       const Manifest& man, int beam_width = 64,
                                       int min_len = 2, int max_len = 12,
                                       const std::string& split = "all",
                                       const aug::ActionFeatureModel* augmenter = nullptr) {
    std::vector<LoadedSequence> seqs = load_split(dir, man, split);
    if (seqs.empty()) throw std::runtime_error("no password sequences to recover");

    std::map<int, long> hit1, hit5, n;
    for (const auto& s : seqs) {
        SequencePresses sp = sequence_presses(net, s, augmenter);
        int chars = int(sp.probs.size());
        if (int(sp.truth.size()) < chars) chars = int(sp.truth.size());
        for (int L = min_len; L <= std::min(max_len, chars); ++L) {
            std::vector<std::vector<double>> prefix(sp.probs.begin(), sp.probs.begin() + L);
            std::vector<Candidate> cands = beam_decode(prefix, sp.keys, beam_width);
            std::string truth = sp.truth.substr(0, std::size_t(L));
            ++n[L];
            if (!cands.empty() && cands[0].text == truth) ++hit1[L];
            for (int k = 0; k < std::min<int>(5, int(cands.size())); ++k)
                if (cands[std::size_t(k)].text == truth) {
                    ++hit5[L];
                    break;
                }
        }
    }
    RecoveryCurve curve;
    for (const auto& [L, cnt] : n) {
        curve.trials[L] = cnt;
        curve.top1[L] = double(hit1[L]) / double(cnt);
        curve.top5[L] = double(hit5[L]) / double(cnt);
    }
    return curve;
}

}  // namespace mmvr::harness
