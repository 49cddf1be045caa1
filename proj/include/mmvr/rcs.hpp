#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "mmvr/core.hpp"
#include "mmvr/io.hpp"
#include "mmvr/radar.hpp"

namespace mmvr::rcs {

// Benchmark database from the corner-reflector calibration phase. Strengths
// are the measured linear detection intensities of a reference reflector of
// known sigma_r. Queries interpolate log-linearly in distance and clamp to
// the endpoints outside the measured range.
class CalibrationTable {
public:
    struct Entry {
        double distance_m = 0.0;
        double strength = 0.0;
    };

    CalibrationTable(std::vector<Entry> entries, double sigma_r_m2)
        : entries_(std::move(entries)), sigma_r_m2_(sigma_r_m2) {
        if (entries_.size() < 2)
            throw std::invalid_argument("calibration needs >= 2 distinct distances");
        if (sigma_r_m2_ <= 0.0) throw std::invalid_argument("sigma_r must be > 0");
        std::sort(entries_.begin(), entries_.end(),
                  [](const Entry& a, const Entry& b) { return a.distance_m < b.distance_m; });
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].distance_m <= 0.0 || entries_[i].strength <= 0.0)
                throw std::invalid_argument("calibration entries must have positive distance and strength");
            if (i > 0 && entries_[i].distance_m == entries_[i - 1].distance_m)
                throw std::invalid_argument("duplicate calibration distance: " +
                                            std::to_string(entries_[i].distance_m));
        }
    }

    double sigma_r_m2() const { return sigma_r_m2_; }
    const std::vector<Entry>& entries() const { return entries_; }

    // Interpolated reference strength at distance d (clamped extrapolation).
    double strength(double d) const {
        if (d <= entries_.front().distance_m) return entries_.front().strength;
        if (d >= entries_.back().distance_m) return entries_.back().strength;
        auto hi = std::upper_bound(entries_.begin(), entries_.end(), d,
                                   [](double x, const Entry& e) { return x < e.distance_m; });
        auto lo = hi - 1;
        double t = (std::log(d) - std::log(lo->distance_m)) /
                   (std::log(hi->distance_m) - std::log(lo->distance_m));
        return std::exp(std::log(lo->strength) +
                        t * (std::log(hi->strength) - std::log(lo->strength)));
    }

    // Benchmark function B(d), defined so that B(d) * d equals the reference
    // strength at d; the table absorbs all system constants.
    double b(double d) const { return strength(d) / d; }

    void save(const std::string& path) const {
        io::json header;
        header["kind"] = "calibration_table";
        header["sigma_r_m2"] = sigma_r_m2_;
        header["count"] = entries_.size();
        header["columns"] = {"distance_m", "strength"};
        std::vector<double> payload;
        for (const auto& e : entries_) {
            payload.push_back(e.distance_m);
            payload.push_back(e.strength);
        }
        io::write_container(path, header, payload);
    }

    static CalibrationTable load(const std::string& path) {
        io::Container c = io::read_container(path);
        if (c.header.value("kind", "") != "calibration_table")
            throw std::runtime_error("not a calibration table: " + path);
        std::size_t n = c.header.at("count").get<std::size_t>();
        if (c.payload.size() != 2 * n)
            throw std::runtime_error("calibration payload size mismatch: " + path);
        std::vector<Entry> es;
        for (std::size_t i = 0; i < n; ++i)
            es.push_back({c.payload[2 * i], c.payload[2 * i + 1]});
        return CalibrationTable(std::move(es), c.header.at("sigma_r_m2").get<double>());
    }

private:
    std::vector<Entry> entries_;
    double sigma_r_m2_;
};

inline CalibrationTable calibrate(const std::vector<std::pair<double, double>>& measurements,
                                  double sigma_r_m2) {
    std::vector<CalibrationTable::Entry> es;
    es.reserve(measurements.size());
    for (const auto& [d, s] : measurements) es.push_back({d, s});
    return CalibrationTable(std::move(es), sigma_r_m2);
}

enum class RcsMethod { proportional, snr_form };

struct RcsEstimate {
    double sigma_m2 = 0.0;
    RcsMethod method = RcsMethod::proportional;
    double distance_m = 0.0;
};

// Proportional estimator: sigma_p = p_rt / (B(L) * L) * sigma_r.
inline RcsEstimate rcs_proportional(double p_rt, const Vec3& location,
                                    const CalibrationTable& table) {
    double L = location.norm();
    if (L <= 0.0) throw std::invalid_argument("rcs_proportional: point at radar origin");
    if (p_rt < 0.0) throw std::invalid_argument("rcs_proportional: negative power");
    RcsEstimate e;
    e.method = RcsMethod::proportional;
    e.distance_m = L;
    e.sigma_m2 = p_rt / (table.b(L) * L) * table.sigma_r_m2();
    return e;
}

// SNR-form estimator:
// sigma = (4 pi)^3 d^4 k T F SNR / (P_t G_TX G_RX lambda^2 T_meas).
inline RcsEstimate rcs_from_snr(double snr_linear, double d_m, const radar::RadarConfig& cfg) {
    if (d_m <= 0.0) throw std::invalid_argument("rcs_from_snr: nonpositive distance");
    if (snr_linear < 0.0) throw std::invalid_argument("rcs_from_snr: negative SNR");
    double lam = cfg.wavelength_m();
    double num = std::pow(4.0 * kPi, 3) * std::pow(d_m, 4) * kBoltzmann * cfg.antenna_temp_k *
                 db_to_linear(cfg.noise_figure_db) * snr_linear;
    double den = dbm_to_watt(cfg.tx_power_dbm) * db_to_linear(cfg.tx_gain_db) *
                 db_to_linear(cfg.rx_gain_db) * lam * lam * cfg.meas_time_s;
    RcsEstimate e;
    e.method = RcsMethod::snr_form;
    e.distance_m = d_m;
    e.sigma_m2 = num / den;
    return e;
}

struct AnnotateResult {
    radar::PointCloudFrame frame;
    int dropped_at_origin = 0;
};

inline AnnotateResult annotate_rcs(const radar::PointCloudFrame& frame,
                                   const CalibrationTable& table) {
    AnnotateResult out;
    out.frame.timestamp_s = frame.timestamp_s;
    out.frame.frame_index = frame.frame_index;
    for (radar::Point p : frame.points) {
        Vec3 loc{p.x, p.y, p.z};
        if (loc.norm() <= 0.0) {
            ++out.dropped_at_origin;
            continue;
        }
        p.rcs_m2 = rcs_proportional(p.intensity, loc, table).sigma_m2;
        out.frame.points.push_back(p);
    }
    return out;
}

// Runs the reference reflector through the full simulate/detect chain at one
// distance and reports the strongest detection's intensity. Used to build
// calibration tables the same way a field calibration would.
inline radar::Detection measure_reference(const radar::RadarConfig& cfg, double distance_m,
                                          double sigma_r_m2, std::uint64_t seed) {
    radar::Scatterer s;
    s.position = {0.0, distance_m, 0.0};
    s.rcs_m2 = sigma_r_m2;
    radar::RawDataCube cube = radar::synthesize_frame({s}, cfg, seed);
    radar::RangeProfiles rp = radar::range_fft(cube, cfg);
    radar::RangeDopplerMap map = radar::doppler_map(rp, cfg);
    std::vector<radar::Detection> dets = radar::detect_points(map, radar::CfarConfig{});
    if (dets.empty())
        throw std::runtime_error("calibration reflector not detected at " +
                                 std::to_string(distance_m) + " m");
    return dets.front();  // detections are sorted by intensity
}

inline double measure_reference_strength(const radar::RadarConfig& cfg, double distance_m,
                                         double sigma_r_m2, std::uint64_t seed) {
    return measure_reference(cfg, distance_m, sigma_r_m2, seed).intensity;
}

inline CalibrationTable calibrate_with_simulator(const radar::RadarConfig& cfg,
                                                 const std::vector<double>& distances_m,
                                                 double sigma_r_m2, std::uint64_t seed,
                                                 int repeats = 16) {
    // Entries are keyed by the *detected* range, not the commanded distance:
    // annotation later looks points up at their detected range, so keying the
    // table the same way makes the FFT straddle loss cancel in the ratio.
    // Each reference strength is averaged over independent captures; a single
    // noisy capture would bake its fluctuation into every later estimate at
    // that distance.
    if (repeats < 1) throw std::invalid_argument("calibration repeats must be >= 1");
    std::vector<std::pair<double, double>> meas;
    for (std::size_t i = 0; i < distances_m.size(); ++i) {
        double range_m = 0.0, strength = 0.0;
        int got = 0;
        for (int r = 0; r < repeats; ++r) {
            try {
                radar::Detection d = measure_reference(
                    cfg, distances_m[i], sigma_r_m2,
                    seed + i * std::size_t(repeats) + std::size_t(r));
                range_m = d.range_m;  // deterministic peak bin, identical across repeats
                strength += d.intensity;
                ++got;
            } catch (const std::runtime_error&) {
                // marginal SNR at this distance; drop the failed capture
            }
        }
        if (got > 0) meas.emplace_back(range_m, strength / double(got));
    }
    return calibrate(meas, sigma_r_m2);
}

}  // namespace mmvr::rcs
