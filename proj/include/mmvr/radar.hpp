#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "mmvr/core.hpp"
#include "mmvr/io.hpp"

namespace mmvr::radar {

struct RadarConfig {
    double carrier_freq_hz = 60e9;
    double bandwidth_hz = 4000.14e6;
    double chirp_duration_s = 100e-6;
    int chirps_per_frame = 64;
    int samples_per_chirp = 256;
    int tx_count = 1;
    int rx_count = 4;
    double rx_spacing_m = 0.5 * kSpeedOfLight / 60e9;  // lambda/2
    // Desk-scale default power: keeps unobstructed cell SNR near 38 dB so
    // that heavy obstruction actually pushes returns toward the CFAR floor.
    double tx_power_dbm = -40.0;
    double tx_gain_db = 30.0;
    double rx_gain_db = 30.0;
    double antenna_temp_k = 290.0;
    double noise_figure_db = 9.0;
    double meas_time_s = 6.4e-3;
    double frame_rate_hz = 100.0 / 3.0;

    double wavelength_m() const { return kSpeedOfLight / carrier_freq_hz; }
    double range_bin_m() const { return kSpeedOfLight / (2.0 * bandwidth_hz); }
    double doppler_bin_mps() const {
        return wavelength_m() / (2.0 * double(chirps_per_frame) * chirp_duration_s);
    }
    double max_range_m() const { return double(samples_per_chirp) * range_bin_m(); }
    double max_abs_velocity_mps() const {
        return double(chirps_per_frame) / 2.0 * doppler_bin_mps();
    }
    double sample_rate_hz() const { return double(samples_per_chirp) / chirp_duration_s; }
    double noise_power_w() const {
        return kBoltzmann * antenna_temp_k * db_to_linear(noise_figure_db) * bandwidth_hz;
    }

    void validate() const {
        if (bandwidth_hz <= 0.0) throw std::invalid_argument("bandwidth_hz must be > 0");
        if (chirp_duration_s <= 0.0) throw std::invalid_argument("chirp_duration_s must be > 0");
        if (carrier_freq_hz <= 0.0) throw std::invalid_argument("carrier_freq_hz must be > 0");
        if (rx_spacing_m > wavelength_m() / 2.0 + 1e-12)
            throw std::invalid_argument("rx_spacing_m must be <= lambda/2 for unambiguous angles");
        auto pow2 = [](int n) { return n > 0 && (n & (n - 1)) == 0; };
        if (!pow2(samples_per_chirp)) throw std::invalid_argument("samples_per_chirp must be a power of two");
        if (!pow2(chirps_per_frame)) throw std::invalid_argument("chirps_per_frame must be a power of two");
        if (rx_count < 1 || tx_count < 1) throw std::invalid_argument("need at least one antenna");
    }

    io::json to_json() const {
        return io::json{{"carrier_freq_hz", carrier_freq_hz},
                        {"bandwidth_hz", bandwidth_hz},
                        {"chirp_duration_s", chirp_duration_s},
                        {"chirps_per_frame", chirps_per_frame},
                        {"samples_per_chirp", samples_per_chirp},
                        {"tx_count", tx_count},
                        {"rx_count", rx_count},
                        {"rx_spacing_m", rx_spacing_m},
                        {"tx_power_dbm", tx_power_dbm},
                        {"tx_gain_db", tx_gain_db},
                        {"rx_gain_db", rx_gain_db},
                        {"antenna_temp_k", antenna_temp_k},
                        {"noise_figure_db", noise_figure_db},
                        {"meas_time_s", meas_time_s},
                        {"frame_rate_hz", frame_rate_hz}};
    }
    std::uint64_t hash() const { return fnv1a(to_json().dump()); }

    // RX phase centers: one pair along x (azimuth baseline) and one along z
    // (elevation baseline), the assumed orthogonal virtual-array layout.
    Vec3 rx_offset(int k) const {
        return {double(k & 1) * rx_spacing_m, 0.0, double((k >> 1) & 1) * rx_spacing_m};
    }
};

// One point reflector as seen at a scene instant. Attenuation is the one-way
// obstruction loss; it is applied once per direction of travel.
struct Scatterer {
    Vec3 position;
    Vec3 velocity;
    double rcs_m2 = 1.0;
    double attenuation_db_oneway = 0.0;
    int obstacle_crossings = 0;
};

// Radar-equation receive power for a single scatterer (two-way obstruction).
inline double received_power_w(const RadarConfig& cfg, const Scatterer& s) {
    double d = s.position.norm();
    double lam = cfg.wavelength_m();
    double num = dbm_to_watt(cfg.tx_power_dbm) * db_to_linear(cfg.tx_gain_db) *
                 db_to_linear(cfg.rx_gain_db) * lam * lam * s.rcs_m2;
    double den = std::pow(4.0 * kPi, 3) * std::pow(d, 4);
    return num / den * db_to_linear(-2.0 * s.attenuation_db_oneway);
}

struct RawDataCube {
    std::vector<cdouble> iq;  // [rx][chirp][sample]
    int rx = 0, chirps = 0, samples = 0;
    int frame_index = 0;
    std::uint64_t seed = 0;

    cdouble& at(int r, int m, int n) {
        return iq[(std::size_t(r) * std::size_t(chirps) + std::size_t(m)) * std::size_t(samples) +
                  std::size_t(n)];
    }
    cdouble at(int r, int m, int n) const {
        return iq[(std::size_t(r) * std::size_t(chirps) + std::size_t(m)) * std::size_t(samples) +
                  std::size_t(n)];
    }
};

inline RawDataCube synthesize_frame(const std::vector<Scatterer>& snapshot, const RadarConfig& cfg,
                                    std::uint64_t seed, int frame_index = 0) {
    cfg.validate();
    RawDataCube cube;
    cube.rx = cfg.rx_count;
    cube.chirps = cfg.chirps_per_frame;
    cube.samples = cfg.samples_per_chirp;
    cube.frame_index = frame_index;
    cube.seed = seed;
    cube.iq.assign(std::size_t(cube.rx) * std::size_t(cube.chirps) * std::size_t(cube.samples),
                   cdouble{0.0, 0.0});

    double lam = cfg.wavelength_m();
    double fs = cfg.sample_rate_hz();
    for (const Scatterer& s : snapshot) {
        double d = s.position.norm();
        if (d <= 0.0) throw std::invalid_argument("scatterer at radar origin");
        if (d >= cfg.max_range_m())
            throw std::invalid_argument("scatterer at " + std::to_string(d) +
                                        " m exceeds unambiguous range " +
                                        std::to_string(cfg.max_range_m()) + " m");
        Vec3 dir = s.position * (1.0 / d);
        double v_r = dir.dot(s.velocity);
        if (std::abs(v_r) > cfg.max_abs_velocity_mps())
            throw std::invalid_argument("radial velocity " + std::to_string(v_r) +
                                        " m/s exceeds unambiguous span +-" +
                                        std::to_string(cfg.max_abs_velocity_mps()) + " m/s");
        double amp = std::sqrt(received_power_w(cfg, s));
        double beat_hz = 2.0 * d * cfg.bandwidth_hz / (kSpeedOfLight * cfg.chirp_duration_s);
        double phase0 = 4.0 * kPi * d / lam;
        double dphi_chirp = 4.0 * kPi * v_r * cfg.chirp_duration_s / lam;
        cdouble step = std::polar(1.0, 2.0 * kPi * beat_hz / fs);
        for (int r = 0; r < cube.rx; ++r) {
            double rx_phase = (2.0 * kPi / lam) * dir.dot(cfg.rx_offset(r));
            for (int m = 0; m < cube.chirps; ++m) {
                cdouble acc = std::polar(amp, phase0 + double(m) * dphi_chirp + rx_phase);
                cdouble* row = &cube.at(r, m, 0);
                for (int n = 0; n < cube.samples; ++n) {
                    row[n] += acc;
                    acc *= step;
                }
            }
        }
    }

    Rng rng(seed ^ (0xABCD1234ULL + std::uint64_t(frame_index) * 0x9e3779b97f4a7c15ULL));
    double np = cfg.noise_power_w();
    for (auto& x : cube.iq) x += rng.complex_normal(np);
    return cube;
}

// ---- FFT processing ----

enum class Window { rect, hann };

inline std::vector<double> make_window(Window w, int n) {
    std::vector<double> out(std::size_t(n), 1.0);
    if (w == Window::hann)
        for (int i = 0; i < n; ++i)
            out[std::size_t(i)] = 0.5 * (1.0 - std::cos(2.0 * kPi * double(i) / double(n)));
    return out;
}

// In-place iterative radix-2 FFT (unnormalized).
inline void fft_inplace(std::vector<cdouble>& a) {
    std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft length must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = -2.0 * kPi / double(len);
        cdouble wl = std::polar(1.0, ang);
        for (std::size_t i = 0; i < n; i += len) {
            cdouble w{1.0, 0.0};
            for (std::size_t k = 0; k < len / 2; ++k) {
                cdouble u = a[i + k];
                cdouble v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

struct RangeProfiles {
    std::vector<cdouble> data;  // [rx][chirp][range_bin]
    int rx = 0, chirps = 0, bins = 0;
    double range_bin_m = 0.0;
    Window window = Window::hann;

    cdouble& at(int r, int m, int b) {
        return data[(std::size_t(r) * std::size_t(chirps) + std::size_t(m)) * std::size_t(bins) +
                    std::size_t(b)];
    }
    cdouble at(int r, int m, int b) const {
        return data[(std::size_t(r) * std::size_t(chirps) + std::size_t(m)) * std::size_t(bins) +
                    std::size_t(b)];
    }
};

inline RangeProfiles range_fft(const RawDataCube& cube, const RadarConfig& cfg,
                               Window window = Window::hann) {
    if (cube.samples <= 0 || (cube.samples & (cube.samples - 1)) != 0)
        throw std::invalid_argument("samples_per_chirp must be a power of two");
    if (cube.rx != cfg.rx_count || cube.chirps != cfg.chirps_per_frame ||
        cube.samples != cfg.samples_per_chirp)
        throw std::invalid_argument("cube dimensions do not match config");
    RangeProfiles rp;
    rp.rx = cube.rx;
    rp.chirps = cube.chirps;
    rp.bins = cube.samples;
    rp.range_bin_m = cfg.range_bin_m();
    rp.window = window;
    rp.data.resize(cube.iq.size());
    std::vector<double> win = make_window(window, cube.samples);
    std::vector<cdouble> row(std::size_t(cube.samples));
    for (int r = 0; r < cube.rx; ++r)
        for (int m = 0; m < cube.chirps; ++m) {
            for (int n = 0; n < cube.samples; ++n)
                row[std::size_t(n)] = cube.at(r, m, n) * win[std::size_t(n)];
            fft_inplace(row);
            for (int b = 0; b < cube.samples; ++b) rp.at(r, m, b) = row[std::size_t(b)];
        }
    return rp;
}

// Doppler axis is fftshifted: index chirps/2 is the zero-velocity bin.
struct RangeDopplerMap {
    std::vector<double> magnitude;   // [range_bin][doppler_bin], linear power
    std::vector<cdouble> rx_spectra; // [rx][range_bin][doppler_bin]
    int rx = 0, range_bins = 0, doppler_bins = 0;
    double range_bin_m = 0.0;
    double doppler_bin_mps = 0.0;

    int zero_doppler_bin() const { return doppler_bins / 2; }
    double velocity_of(int doppler_idx) const {
        return double(doppler_idx - zero_doppler_bin()) * doppler_bin_mps;
    }
    double& mag(int rb, int db) {
        return magnitude[std::size_t(rb) * std::size_t(doppler_bins) + std::size_t(db)];
    }
    double mag(int rb, int db) const {
        return magnitude[std::size_t(rb) * std::size_t(doppler_bins) + std::size_t(db)];
    }
    cdouble spec(int r, int rb, int db) const {
        return rx_spectra[(std::size_t(r) * std::size_t(range_bins) + std::size_t(rb)) *
                              std::size_t(doppler_bins) +
                          std::size_t(db)];
    }
    cdouble& spec_mut(int r, int rb, int db) {
        return rx_spectra[(std::size_t(r) * std::size_t(range_bins) + std::size_t(rb)) *
                              std::size_t(doppler_bins) +
                          std::size_t(db)];
    }
};

inline RangeDopplerMap doppler_map(const RangeProfiles& rp, const RadarConfig& cfg,
                                   Window window = Window::hann) {
    if (rp.chirps < 2) throw std::invalid_argument("doppler_map needs >= 2 chirps");
    RangeDopplerMap map;
    map.rx = rp.rx;
    map.range_bins = rp.bins;
    map.doppler_bins = rp.chirps;
    map.range_bin_m = rp.range_bin_m;
    map.doppler_bin_mps = cfg.doppler_bin_mps();
    map.magnitude.assign(std::size_t(map.range_bins) * std::size_t(map.doppler_bins), 0.0);
    map.rx_spectra.assign(std::size_t(map.rx) * map.magnitude.size(), cdouble{0.0, 0.0});
    std::vector<double> win = make_window(window, rp.chirps);
    std::vector<cdouble> col(std::size_t(rp.chirps));
    int half = rp.chirps / 2;
    for (int r = 0; r < rp.rx; ++r)
        for (int b = 0; b < rp.bins; ++b) {
            for (int m = 0; m < rp.chirps; ++m)
                col[std::size_t(m)] = rp.at(r, m, b) * win[std::size_t(m)];
            fft_inplace(col);
            for (int j = 0; j < rp.chirps; ++j) {
                cdouble x = col[std::size_t((j + half) % rp.chirps)];
                map.spec_mut(r, b, j) = x;
                map.mag(b, j) += std::norm(x);
            }
        }
    return map;
}

// ---- detection ----

struct CfarConfig {
    double pfa = 1e-4;
    int guard = 2;
    int train = 8;
};

struct Detection {
    double range_m = 0.0;
    double radial_velocity_mps = 0.0;
    double azimuth_rad = 0.0;    // filled by to_point_cloud, arccos convention in [0, pi]
    double elevation_rad = 0.0;
    double intensity = 0.0;      // noise-subtracted local power sum around the peak cell
    double snr_db = 0.0;
    double dphi_az = 0.0;        // inter-antenna phase differences at the cell
    double dphi_el = 0.0;
    int range_bin = 0;
    int doppler_bin = 0;
};

inline std::vector<Detection> detect_points(const RangeDopplerMap& map, const CfarConfig& cfar) {
    int R = map.range_bins, D = map.doppler_bins;
    int w = cfar.guard + cfar.train;
    if (2 * w + 1 > R || 2 * w + 1 > D)
        throw std::invalid_argument("CFAR window does not fit within the map");
    // Summed-area tables for the full window and the guard region.
    auto sat = [R, D](const std::vector<double>& m) {
        std::vector<double> s(std::size_t(R + 1) * std::size_t(D + 1), 0.0);
        for (int i = 0; i < R; ++i)
            for (int j = 0; j < D; ++j)
                s[std::size_t(i + 1) * std::size_t(D + 1) + std::size_t(j + 1)] =
                    m[std::size_t(i) * std::size_t(D) + std::size_t(j)] +
                    s[std::size_t(i) * std::size_t(D + 1) + std::size_t(j + 1)] +
                    s[std::size_t(i + 1) * std::size_t(D + 1) + std::size_t(j)] -
                    s[std::size_t(i) * std::size_t(D + 1) + std::size_t(j)];
        return s;
    };
    std::vector<double> S = sat(map.magnitude);
    auto box = [&S, D](int r0, int r1, int d0, int d1) {  // inclusive cell ranges
        return S[std::size_t(r1 + 1) * std::size_t(D + 1) + std::size_t(d1 + 1)] -
               S[std::size_t(r0) * std::size_t(D + 1) + std::size_t(d1 + 1)] -
               S[std::size_t(r1 + 1) * std::size_t(D + 1) + std::size_t(d0)] +
               S[std::size_t(r0) * std::size_t(D + 1) + std::size_t(d0)];
    };

    std::vector<Detection> dets;
    for (int rb = 0; rb < R; ++rb)
        for (int db = 0; db < D; ++db) {
            int r0 = std::max(0, rb - w), r1 = std::min(R - 1, rb + w);
            int d0 = std::max(0, db - w), d1 = std::min(D - 1, db + w);
            int g0 = std::max(0, rb - cfar.guard), g1 = std::min(R - 1, rb + cfar.guard);
            int h0 = std::max(0, db - cfar.guard), h1 = std::min(D - 1, db + cfar.guard);
            double train_sum = box(r0, r1, d0, d1) - box(g0, g1, h0, h1);
            int n_train = (r1 - r0 + 1) * (d1 - d0 + 1) - (g1 - g0 + 1) * (h1 - h0 + 1);
            if (n_train <= 0) continue;
            double noise = train_sum / double(n_train);
            if (noise <= 0.0) continue;
            // CA-CFAR scaling for exponentially distributed cells.
            double alpha = double(n_train) * (std::pow(cfar.pfa, -1.0 / double(n_train)) - 1.0);
            double cell = map.mag(rb, db);
            if (cell <= alpha / double(n_train) * train_sum) continue;

            Detection d;
            d.range_bin = rb;
            d.doppler_bin = db;
            d.range_m = double(rb) * map.range_bin_m;
            d.radial_velocity_mps = map.velocity_of(db);
            double local = 0.0;
            int n_local = 0;
            for (int i = std::max(0, rb - 1); i <= std::min(R - 1, rb + 1); ++i)
                for (int j = std::max(0, db - 1); j <= std::min(D - 1, db + 1); ++j) {
                    local += map.mag(i, j);
                    ++n_local;
                }
            // Subtract the CFAR noise-floor estimate so intensity tracks the
            // target's signal power alone; without this the floor contribution
            // biases downstream power-ratio estimates for weak references.
            d.intensity = std::max(local - noise * double(n_local), 1e-12 * local);
            d.snr_db = linear_to_db(cell / noise);
            if (map.rx >= 2) d.dphi_az = std::arg(map.spec(1, rb, db) * std::conj(map.spec(0, rb, db)));
            if (map.rx >= 3) d.dphi_el = std::arg(map.spec(2, rb, db) * std::conj(map.spec(0, rb, db)));
            dets.push_back(d);
        }
    std::stable_sort(dets.begin(), dets.end(),
                     [](const Detection& a, const Detection& b) { return a.intensity > b.intensity; });
    return dets;
}

// ---- point cloud ----

struct Point {
    double x = 0.0, y = 0.0, z = 0.0;
    double velocity = 0.0;
    double intensity = 0.0;
    std::optional<double> rcs_m2;
};

struct PointCloudFrame {
    std::vector<Point> points;
    double timestamp_s = 0.0;
    int frame_index = 0;
};

struct PointCloudResult {
    PointCloudFrame frame;
    int aliased_dropped = 0;
};

// Forward model used by tests: inter-antenna phase for a given arrival cosine.
inline double phase_from_cos(const RadarConfig& cfg, double cos_theta) {
    return 2.0 * kPi * cfg.rx_spacing_m * cos_theta / cfg.wavelength_m();
}

inline PointCloudResult to_point_cloud(const std::vector<Detection>& dets, const RadarConfig& cfg,
                                       double timestamp_s = 0.0, int frame_index = 0) {
    PointCloudResult out;
    out.frame.timestamp_s = timestamp_s;
    out.frame.frame_index = frame_index;
    double lam = cfg.wavelength_m();
    double denom = 2.0 * kPi * cfg.rx_spacing_m;
    for (Detection d : dets) {
        double cos_az = lam * d.dphi_az / denom;
        double cos_el = lam * d.dphi_el / denom;
        if (std::abs(cos_az) > 1.0 || std::abs(cos_el) > 1.0) {
            ++out.aliased_dropped;
            continue;
        }
        double y2 = d.range_m * d.range_m * (1.0 - cos_az * cos_az - cos_el * cos_el);
        if (y2 < 0.0) {
            ++out.aliased_dropped;
            continue;
        }
        d.azimuth_rad = std::acos(cos_az);
        d.elevation_rad = std::acos(cos_el);
        Point p;
        p.x = d.range_m * cos_az;
        p.z = d.range_m * cos_el;
        p.y = std::sqrt(y2);
        p.velocity = d.radial_velocity_mps;
        p.intensity = d.intensity;
        out.frame.points.push_back(p);
    }
    return out;
}

// ---- serialization ----

inline void write_frame(const std::string& path, const PointCloudFrame& frame,
                        const RadarConfig& cfg, std::uint64_t seed, bool vr_only = false) {
    io::json header;
    header["kind"] = "point_cloud_frame";
    header["columns"] = {"x_m", "y_m", "z_m", "velocity_mps", "intensity", "rcs_m2"};
    header["units"] = {"m", "m", "m", "m/s", "linear_power", "m^2"};
    header["count"] = frame.points.size();
    header["timestamp_s"] = frame.timestamp_s;
    header["frame_index"] = frame.frame_index;
    header["seed"] = seed;
    header["config_hash"] = hex64(cfg.hash());
    header["has_rcs"] = !frame.points.empty() && frame.points.front().rcs_m2.has_value();
    if (vr_only) header["vr_only"] = true;
    std::vector<double> payload;
    payload.reserve(frame.points.size() * 6);
    for (const auto& p : frame.points) {
        payload.push_back(p.x);
        payload.push_back(p.y);
        payload.push_back(p.z);
        payload.push_back(p.velocity);
        payload.push_back(p.intensity);
        payload.push_back(p.rcs_m2.value_or(0.0));
    }
    io::write_container(path, header, payload);
}

inline PointCloudFrame read_frame(const std::string& path) {
    io::Container c = io::read_container(path);
    if (c.header.value("kind", "") != "point_cloud_frame")
        throw std::runtime_error("not a point cloud frame: " + path);
    PointCloudFrame f;
    f.timestamp_s = c.header.value("timestamp_s", 0.0);
    f.frame_index = c.header.value("frame_index", 0);
    bool has_rcs = c.header.value("has_rcs", false);
    std::size_t n = c.header.at("count").get<std::size_t>();
    if (c.payload.size() != n * 6) throw std::runtime_error("frame payload size mismatch: " + path);
    for (std::size_t i = 0; i < n; ++i) {
        Point p;
        p.x = c.payload[i * 6 + 0];
        p.y = c.payload[i * 6 + 1];
        p.z = c.payload[i * 6 + 2];
        p.velocity = c.payload[i * 6 + 3];
        p.intensity = c.payload[i * 6 + 4];
        if (has_rcs) p.rcs_m2 = c.payload[i * 6 + 5];
        f.points.push_back(p);
    }
    return f;
}

inline std::string dump_frame_text(const PointCloudFrame& frame) {
    std::string out;
    char buf[256];
    for (const auto& p : frame.points) {
        if (p.rcs_m2)
            std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %.9g %.9g %.9g\n", p.x, p.y, p.z,
                          p.velocity, p.intensity, *p.rcs_m2);
        else
            std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %.9g %.9g\n", p.x, p.y, p.z, p.velocity,
                          p.intensity);
        out += buf;
    }
    return out;
}

inline void write_cube(const std::string& path, const RawDataCube& cube, const RadarConfig& cfg) {
    io::json header;
    header["kind"] = "raw_data_cube";
    header["rx"] = cube.rx;
    header["chirps"] = cube.chirps;
    header["samples"] = cube.samples;
    header["frame_index"] = cube.frame_index;
    header["seed"] = cube.seed;
    header["units"] = "complex_iq_interleaved";
    header["config_hash"] = hex64(cfg.hash());
    std::vector<double> payload;
    payload.reserve(cube.iq.size() * 2);
    for (const auto& x : cube.iq) {
        payload.push_back(x.real());
        payload.push_back(x.imag());
    }
    io::write_container(path, header, payload);
}

inline RawDataCube read_cube(const std::string& path) {
    io::Container c = io::read_container(path);
    if (c.header.value("kind", "") != "raw_data_cube")
        throw std::runtime_error("not a raw data cube: " + path);
    RawDataCube cube;
    cube.rx = c.header.at("rx").get<int>();
    cube.chirps = c.header.at("chirps").get<int>();
    cube.samples = c.header.at("samples").get<int>();
    cube.frame_index = c.header.value("frame_index", 0);
    cube.seed = c.header.value("seed", std::uint64_t(0));
    if (c.payload.size() != std::size_t(cube.rx) * std::size_t(cube.chirps) *
                                std::size_t(cube.samples) * 2)
        throw std::runtime_error("cube payload size mismatch: " + path);
    cube.iq.resize(c.payload.size() / 2);
    for (std::size_t i = 0; i < cube.iq.size(); ++i)
        cube.iq[i] = {c.payload[2 * i], c.payload[2 * i + 1]};
    return cube;
}

}  // namespace mmvr::radar
