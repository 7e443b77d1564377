#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "acit/errors.hpp"
#include "acit/model.hpp"
#include "acit/rng.hpp"
#include "acit/tsr.hpp"

namespace acit {

// ---------------------------------------------------------------------------
// scenario generation

struct GenConfig {
  std::uint64_t seed = 42;
  std::size_t channels = 64;   // C of the emitted feature files
  double label_balance = 0.5;  // crossing fraction
  double speed_coupling = 0.5; // 0 decouples ego speed from the label
  double noise = 1.0;          // track jitter scale
  int min_frames = 28;
  int max_frames = 46;
  std::size_t clips_train = 800;
  std::size_t clips_val = 200;
  std::size_t clips_test = 100;
};

inline constexpr int kClipLen = 16;
inline constexpr int kClipStride = 3;  // 16 frames at 80% overlap
inline constexpr int kCanvas = 256;
inline constexpr int kCell = 32;  // kCanvas / 8
inline constexpr double kFrameW = 1920.0;
inline constexpr double kFrameH = 1080.0;

// One synthetic street scene: a pedestrian track over T frames plus the
// latents the renderers need. The label moment ("event") sits immediately
// after the last frame, so every frame is usable observation.
struct Scenario {
  std::uint64_t scenario_id = 0;
  std::uint64_t seed = 0;
  int label = 0;  // 1 = crossing
  int n_frames = 0;
  int event_frame = 0;  // == n_frames
  std::vector<std::array<double, 4>> bbox;  // x1,y1,x2,y2 in 1920x1080 px
  std::vector<double> speed;

  // rendering latents
  double ped_intensity = 0.9;
  double gait_freq = 0.4;
  double bg_drift = 0.15;
  std::uint64_t texture_seed = 0;
};

inline Scenario generate_scenario(std::uint64_t seed, const GenConfig& cfg) {
  CounterRng rng(seed);
  Scenario s;
  s.seed = seed;
  s.texture_seed = CounterRng::derive(seed, "texture");

  s.label = rng.uniform() < cfg.label_balance ? 1 : 0;
  s.n_frames =
      cfg.min_frames +
      int(rng.next_below(std::uint64_t(cfg.max_frames - cfg.min_frames + 1)));
  s.event_frame = s.n_frames;

  const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
  const double x0 = kFrameW / 2 + side * rng.uniform(350.0, 700.0);
  const double y_base = rng.uniform(580.0, 820.0);
  const double h0 = rng.uniform(120.0, 260.0);

  // crossing: lateral drift toward the road center with growing height;
  // non-crossing: parallel drift with stable height. All draws happen for
  // both labels so stream positions never depend on the label.
  const double vx_cross = -side * rng.uniform(6.0, 14.0);
  const double vx_parallel = rng.uniform(-2.0, 2.0);
  const double growth_cross = rng.uniform(0.006, 0.015);
  const double growth_parallel = rng.uniform(-0.002, 0.002);
  const double vy = rng.uniform(-1.5, 1.5);
  const double vx = s.label ? vx_cross : vx_parallel;
  const double growth = s.label ? growth_cross : growth_parallel;

  const double speed_base = rng.uniform(20.0, 50.0);
  const double decel = rng.uniform(0.3, 0.7);  // applied only when coupled
  const double coupled = s.label ? cfg.speed_coupling * decel : 0.0;

  s.bbox.resize(s.n_frames);
  s.speed.resize(s.n_frames);
  for (int t = 0; t < s.n_frames; ++t) {
    const double jitter_x = cfg.noise * rng.gaussian(0.0, 1.2);
    const double jitter_y = cfg.noise * rng.gaussian(0.0, 0.8);
    const double h = h0 * (1.0 + growth * t);
    const double w = 0.42 * h;
    double cx = x0 + vx * t + jitter_x;
    double cy = y_base + vy * t + jitter_y;
    cx = std::min(std::max(cx, w / 2 + 1.0), kFrameW - w / 2 - 1.0);
    cy = std::min(std::max(cy, h + 1.0), kFrameH - 1.0);
    s.bbox[t] = {cx - w / 2, cy - h, cx + w / 2, cy};

    const double wander = cfg.noise * rng.gaussian(0.0, 0.4);
    double v = speed_base * (1.0 - coupled * double(t) / s.n_frames) + wander;
    s.speed[t] = std::max(v, 0.0);
  }

  s.ped_intensity = rng.uniform(0.7, 1.0);
  s.gait_freq = 0.25 + 0.06 * std::abs(vx);
  s.bg_drift = 0.15;
  return s;
}

// Sliding 16-frame windows at stride 3; the last admissible window ends
// before the event frame. Short scenarios yield an empty list.
inline std::vector<int> extract_clips(const Scenario& s) {
  std::vector<int> starts;
  const int usable = s.event_frame;
  for (int start = 0; start + kClipLen <= usable; start += kClipStride) {
    starts.push_back(start);
  }
  return starts;
}

// Majority class gets weight 1, the minority the count ratio.
inline std::pair<double, double> class_weights(std::size_t n_pos,
                                               std::size_t n_neg) {
  if (n_pos == 0 || n_neg == 0) {
    throw ConfigError("class_weights: both classes must be present, got " +
                      std::to_string(n_pos) + "/" + std::to_string(n_neg));
  }
  if (n_pos >= n_neg) {
    return {1.0, double(n_pos) / double(n_neg)};
  }
  return {double(n_neg) / double(n_pos), 1.0};
}

// ---------------------------------------------------------------------------
// rendering (f32, deterministic)

namespace synth {

inline float hash_noise(std::uint64_t seed, std::int64_t x, std::int64_t y,
                        int ch) {
  std::uint64_t h = CounterRng::mix(seed ^ (std::uint64_t(x) * 0x9E3779B97F4A7C15ULL) ^
                                    (std::uint64_t(y) << 17) ^
                                    (std::uint64_t(ch) << 3));
  return float(double(h >> 11) * 0x1.0p-53) * 2.0f - 1.0f;
}

inline double cumulative_speed(const Scenario& s, int t) {
  double acc = 0;
  for (int u = 0; u <= t && u < s.n_frames; ++u) acc += s.speed[u];
  return acc;
}

struct BandColor {
  float r, g, b;
};

inline BandColor band_color(int y) {
  if (y < 96) return {0.55f, 0.65f, 0.80f};   // sky
  if (y < 192) return {0.35f, 0.35f, 0.38f};  // road
  return {0.50f, 0.47f, 0.42f};               // sidewalk
}

// Global street view: banded background with drifting texture plus the
// pedestrian as a bright articulated rectangle at its box position.
inline void render_global_rgb(const Scenario& s, int t, float* out) {
  const double sx = kCanvas / kFrameW, sy = kCanvas / kFrameH;
  const auto& bb = s.bbox[std::size_t(t)];
  const double bx1 = bb[0] * sx, by1 = bb[1] * sy;
  const double bx2 = bb[2] * sx, by2 = bb[3] * sy;
  const std::int64_t drift =
      std::int64_t(s.bg_drift * cumulative_speed(s, t - 1));
  const double phase = std::sin(s.gait_freq * t * 6.2831853);
  const float leg_split = float((bx1 + bx2) / 2.0);

  float* px = out;
  for (int y = 0; y < kCanvas; ++y) {
    const BandColor base = band_color(y);
    for (int x = 0; x < kCanvas; ++x, px += 3) {
      const float n =
          0.06f * hash_noise(s.texture_seed, x + drift, y, 0);
      float r = base.r + n, g = base.g + n, b = base.b + n;
      if (x >= bx1 && x <= bx2 && y >= by1 && y <= by2) {
        float inten = float(s.ped_intensity);
        const double leg_zone = by2 - 0.35 * (by2 - by1);
        if (y > leg_zone) {
          inten *= float(1.0 + (x < leg_split ? 0.3 : -0.3) * phase);
        }
        r = inten;
        g = inten * 0.85f;
        b = inten * 0.70f;
      }
      px[0] = r;
      px[1] = g;
      px[2] = b;
    }
  }
}

// Quantized region map: road mask, sidewalk mask, pedestrian mask.
inline void render_global_semantic(const Scenario& s, int t, float* out) {
  const double sx = kCanvas / kFrameW, sy = kCanvas / kFrameH;
  const auto& bb = s.bbox[std::size_t(t)];
  const double bx1 = bb[0] * sx, by1 = bb[1] * sy;
  const double bx2 = bb[2] * sx, by2 = bb[3] * sy;
  float* px = out;
  for (int y = 0; y < kCanvas; ++y) {
    const float road = (y >= 96 && y < 192) ? 1.0f : 0.0f;
    const float walk = y >= 192 ? 1.0f : 0.0f;
    for (int x = 0; x < kCanvas; ++x, px += 3) {
      const bool ped = x >= bx1 && x <= bx2 && y >= by1 && y <= by2;
      px[0] = road;
      px[1] = walk;
      px[2] = ped ? 1.0f : 0.0f;
    }
  }
}

// Pedestrian-centered crop: the figure fills most of the canvas and its
// apparent size follows the box height; the background texture is sampled
// at the box's world position, so it slides as the pedestrian moves.
inline void render_local_rgb(const Scenario& s, int t, float* out) {
  const auto& bb = s.bbox[std::size_t(t)];
  const auto& bb0 = s.bbox[0];
  const double h0 = bb0[3] - bb0[1];
  const double scale = (bb[3] - bb[1]) / h0;
  const double half_h = std::min(150.0 * scale, 120.0);
  const double half_w = 0.42 * half_h;
  const double cx = 128.0, cy = 140.0;
  const double phase = std::sin(s.gait_freq * t * 6.2831853);
  const std::int64_t wx = std::int64_t(bb[0] * 0.7);
  const std::int64_t wy = std::int64_t(bb[1] * 0.7);

  float* px = out;
  for (int y = 0; y < kCanvas; ++y) {
    for (int x = 0; x < kCanvas; ++x, px += 3) {
      const float n = 0.10f * hash_noise(s.texture_seed, wx + x / 4, wy + y / 4, 1);
      float r = 0.45f + n, g = 0.44f + n, b = 0.42f + n;
      const bool inside = std::abs(x - cx) <= half_w && std::abs(y - cy) <= half_h;
      if (inside) {
        float inten = float(s.ped_intensity);
        if (y > cy + 0.25 * half_h) {  // legs
          inten *= float(1.0 + (x < cx ? 0.35 : -0.35) * phase);
        }
        r = inten;
        g = inten * 0.82f;
        b = inten * 0.68f;
      }
      px[0] = r;
      px[1] = g;
      px[2] = b;
    }
  }
}

enum class VisualModality { local_rgb, local_flow, global_sem, global_flow };

// Full-resolution frame for one modality; flow frames are the difference of
// consecutive base renders (zero at t=0).
inline void render_frame(const Scenario& s, int t, VisualModality m,
                         float* out) {
  const std::size_t n = std::size_t(kCanvas) * kCanvas * 3;
  switch (m) {
    case VisualModality::local_rgb:
      render_local_rgb(s, t, out);
      return;
    case VisualModality::global_sem:
      render_global_semantic(s, t, out);
      return;
    case VisualModality::local_flow:
    case VisualModality::global_flow: {
      std::vector<float> prev(n, 0.0f);
      auto render_base = m == VisualModality::local_flow ? render_local_rgb
                                                         : render_global_rgb;
      render_base(s, t, out);
      if (t == 0) {
        std::fill(out, out + n, 0.0f);
        return;
      }
      render_base(s, t - 1, prev.data());
      for (std::size_t i = 0; i < n; ++i) out[i] -= prev[i];
      return;
    }
  }
}

// 32x32 cell means: [256,256,3] -> [8,8,3]
inline void pool_frame(const float* frame, float* cells) {
  constexpr float inv = 1.0f / (kCell * kCell);
  for (int gr = 0; gr < 8; ++gr) {
    for (int gc = 0; gc < 8; ++gc) {
      float acc[3] = {0, 0, 0};
      for (int r = 0; r < kCell; ++r) {
        const float* row = frame + ((gr * kCell + r) * kCanvas + gc * kCell) * 3;
        for (int c = 0; c < kCell; ++c) {
          acc[0] += row[c * 3 + 0];
          acc[1] += row[c * 3 + 1];
          acc[2] += row[c * 3 + 2];
        }
      }
      float* dst = cells + (gr * 8 + gc) * 3;
      dst[0] = acc[0] * inv;
      dst[1] = acc[1] * inv;
      dst[2] = acc[2] * inv;
    }
  }
}

// Frozen 3->C projection standing in for a pretrained backbone's channel
// richness; derived from the dataset seed, never trained.
inline std::vector<float> feature_projection(std::uint64_t dataset_seed,
                                             std::size_t channels) {
  CounterRng rng(CounterRng::derive(dataset_seed, "feature-projection"));
  std::vector<float> p(3 * channels);
  const double sd = 1.0 / std::sqrt(3.0);
  for (auto& v : p) v = float(rng.gaussian(0.0, sd));
  return p;
}

// Per-scenario pooled tracks for all four visual modalities, each
// n_frames x (8*8*3). Flow tracks are differences of pooled base renders,
// which equals pooling the full-resolution difference (pooling is linear).
struct PooledTracks {
  std::vector<float> local_rgb, local_flow, global_sem, global_flow;
  int n_frames = 0;
};

inline PooledTracks pooled_tracks(const Scenario& s) {
  const std::size_t frame_n = std::size_t(kCanvas) * kCanvas * 3;
  const std::size_t cells_n = 8 * 8 * 3;
  PooledTracks tr;
  tr.n_frames = s.n_frames;
  tr.local_rgb.resize(s.n_frames * cells_n);
  tr.local_flow.assign(s.n_frames * cells_n, 0.0f);
  tr.global_sem.resize(s.n_frames * cells_n);
  tr.global_flow.assign(s.n_frames * cells_n, 0.0f);

  std::vector<float> frame(frame_n);
  std::vector<float> global_rgb(s.n_frames * cells_n);
  for (int t = 0; t < s.n_frames; ++t) {
    render_local_rgb(s, t, frame.data());
    pool_frame(frame.data(), tr.local_rgb.data() + t * cells_n);
    render_global_semantic(s, t, frame.data());
    pool_frame(frame.data(), tr.global_sem.data() + t * cells_n);
    render_global_rgb(s, t, frame.data());
    pool_frame(frame.data(), global_rgb.data() + t * cells_n);
  }
  for (int t = 1; t < s.n_frames; ++t) {
    for (std::size_t i = 0; i < cells_n; ++i) {
      tr.local_flow[t * cells_n + i] =
          tr.local_rgb[t * cells_n + i] - tr.local_rgb[(t - 1) * cells_n + i];
      tr.global_flow[t * cells_n + i] =
          global_rgb[t * cells_n + i] - global_rgb[(t - 1) * cells_n + i];
    }
  }
  return tr;
}

// One modality's 16-frame feature window: [16,8,8,C] floats.
inline std::vector<float> feature_window(const std::vector<float>& pooled,
                                         int start,
                                         const std::vector<float>& projection,
                                         std::size_t channels) {
  const std::size_t cells_n = 8 * 8 * 3;
  std::vector<float> out(std::size_t(kClipLen) * 8 * 8 * channels, 0.0f);
  for (int t = 0; t < kClipLen; ++t) {
    const float* cells = pooled.data() + std::size_t(start + t) * cells_n;
    float* dst = out.data() + std::size_t(t) * 8 * 8 * channels;
    for (int cell = 0; cell < 64; ++cell) {
      const float* c3 = cells + cell * 3;
      float* d = dst + std::size_t(cell) * channels;
      for (std::size_t ch = 0; ch < channels; ++ch) {
        d[ch] = c3[0] * projection[0 * channels + ch] +
                c3[1] * projection[1 * channels + ch] +
                c3[2] * projection[2 * channels + ch];
      }
    }
  }
  return out;
}

}  // namespace synth

// ---------------------------------------------------------------------------
// manifest

struct ClipRecord {
  std::string clip_id;
  std::string split;  // train | val | test
  std::uint64_t scenario_id = 0;
  int start_frame = 0;
  int label = 0;
  std::string storage;  // "dir:<relpath>" or "gen:<scenario_seed>"
  std::vector<float> speed;  // kClipLen
  std::vector<float> bbox;   // kClipLen * 4
};

struct DatasetManifest {
  std::vector<ClipRecord> records;

  std::vector<const ClipRecord*> split(const std::string& name) const {
    std::vector<const ClipRecord*> out;
    for (const auto& r : records) {
      if (r.split == name) out.push_back(&r);
    }
    return out;
  }

  void validate(std::vector<std::string>* warnings = nullptr) const {
    std::set<std::string> ids;
    std::map<std::uint64_t, std::string> scenario_split;
    std::map<std::string, std::size_t> split_counts;
    for (const auto& r : records) {
      if (!ids.insert(r.clip_id).second) {
        throw ValidationError("manifest: duplicate clip id " + r.clip_id);
      }
      auto [it, fresh] = scenario_split.emplace(r.scenario_id, r.split);
      if (!fresh && it->second != r.split) {
        throw ValidationError("manifest: scenario " +
                              std::to_string(r.scenario_id) +
                              " appears in splits " + it->second + " and " +
                              r.split);
      }
      split_counts[r.split]++;
    }
    if (warnings) {
      for (const char* s : {"train", "val", "test"}) {
        if (split_counts[s] == 0) {
          warnings->push_back(std::string("split '") + s + "' is empty");
        }
      }
    }
  }
};

namespace detail {

inline std::string join_floats(const std::vector<float>& v) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    std::snprintf(buf, sizeof buf, "%.9g", double(v[i]));
    out += buf;
  }
  return out;
}

inline std::vector<float> parse_floats(const std::string& s,
                                       const std::string& where) {
  std::vector<float> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto comma = s.find(',', pos);
    const std::string tok =
        s.substr(pos, comma == std::string::npos ? s.size() - pos : comma - pos);
    if (tok.empty()) throw FormatError(where + ": empty numeric field");
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) {
      throw FormatError(where + ": bad number '" + tok + "'");
    }
    out.push_back(float(v));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto tab = line.find('\t', pos);
    if (tab == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
  return out;
}

}  // namespace detail

// Tab-separated text, one record per line, '#' comments. Field order:
// clip_id split scenario_id start_frame label storage speed bbox
inline void write_manifest(const std::string& path,
                           const DatasetManifest& manifest) {
  manifest.validate();
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write manifest: " + path);
  f << "# dataset manifest, tab-separated\n";
  f << "# clip_id\tsplit\tscenario_id\tstart_frame\tlabel\tstorage\tspeed\tbbox\n";
  for (const auto& r : manifest.records) {
    f << r.clip_id << '\t' << r.split << '\t' << r.scenario_id << '\t'
      << r.start_frame << '\t' << r.label << '\t' << r.storage << '\t'
      << detail::join_floats(r.speed) << '\t' << detail::join_floats(r.bbox)
      << '\n';
  }
  if (!f) throw IoError("short write: " + path);
}

inline DatasetManifest read_manifest(const std::string& path,
                                     std::vector<std::string>* warnings =
                                         nullptr) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read manifest: " + path);
  DatasetManifest m;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::string where = path + ":" + std::to_string(line_no);
    auto fields = detail::split_tabs(line);
    if (fields.size() != 8) {
      throw FormatError(where + ": expected 8 tab-separated fields, got " +
                        std::to_string(fields.size()));
    }
    ClipRecord r;
    r.clip_id = fields[0];
    r.split = fields[1];
    if (r.split != "train" && r.split != "val" && r.split != "test") {
      throw FormatError(where + ": unknown split '" + r.split + "'");
    }
    try {
      r.scenario_id = std::stoull(fields[2]);
      r.start_frame = std::stoi(fields[3]);
      r.label = std::stoi(fields[4]);
    } catch (const std::exception&) {
      throw FormatError(where + ": malformed numeric field");
    }
    if (r.label != 0 && r.label != 1) {
      throw FormatError(where + ": label must be 0 or 1");
    }
    r.storage = fields[5];
    r.speed = detail::parse_floats(fields[6], where);
    r.bbox = detail::parse_floats(fields[7], where);
    if (r.speed.size() != kClipLen || r.bbox.size() != kClipLen * 4) {
      throw FormatError(where + ": motion fields must hold " +
                        std::to_string(kClipLen) + " steps");
    }
    m.records.push_back(std::move(r));
  }
  m.validate(warnings);
  return m;
}

// ---------------------------------------------------------------------------
// dataset materialization and loading

struct SplitSummary {
  std::size_t clips = 0, positives = 0, negatives = 0;
};

struct DatasetSummary {
  std::map<std::string, SplitSummary> splits;
  std::size_t scenarios = 0;
};

// Writes <root>/<split>/<clip_id>/{lrgb,lof,gs,gof,speed,bbox}.tsr and
// manifest.tsv at the root. Fully determined by the config.
inline DatasetSummary generate_dataset(const std::string& root,
                                       const GenConfig& cfg,
                                       bool force = false) {
  namespace fs = std::filesystem;
  if (fs::exists(root) && !fs::is_empty(root)) {
    if (!force) {
      throw ConfigError("output directory not empty: " + root +
                        " (pass --force to overwrite)");
    }
    fs::remove_all(root);
  }
  fs::create_directories(root);

  const auto projection = synth::feature_projection(cfg.seed, cfg.channels);
  DatasetManifest manifest;
  DatasetSummary summary;
  std::uint64_t scenario_counter = 0;

  const std::pair<const char*, std::size_t> quotas[3] = {
      {"train", cfg.clips_train}, {"val", cfg.clips_val},
      {"test", cfg.clips_test}};
  for (const auto& [split, quota] : quotas) {
    std::size_t written = 0;
    while (written < quota) {
      const std::uint64_t sseed =
          CounterRng::derive(cfg.seed, 1000003 * (scenario_counter + 1));
      Scenario scn = generate_scenario(sseed, cfg);
      scn.scenario_id = scenario_counter++;
      ++summary.scenarios;
      const auto starts = extract_clips(scn);
      if (starts.empty()) continue;
      const auto tracks = synth::pooled_tracks(scn);

      for (int start : starts) {
        if (written >= quota) break;
        char idbuf[32];
        std::snprintf(idbuf, sizeof idbuf, "s%06llu_f%03d",
                      (unsigned long long)scn.scenario_id, start);
        ClipRecord rec;
        rec.clip_id = idbuf;
        rec.split = split;
        rec.scenario_id = scn.scenario_id;
        rec.start_frame = start;
        rec.label = scn.label;
        rec.storage = std::string("dir:") + split + "/" + idbuf;
        for (int t = 0; t < kClipLen; ++t) {
          rec.speed.push_back(float(scn.speed[std::size_t(start + t)]));
          for (int j = 0; j < 4; ++j) {
            rec.bbox.push_back(float(scn.bbox[std::size_t(start + t)][j]));
          }
        }

        const fs::path dir = fs::path(root) / split / idbuf;
        fs::create_directories(dir);
        const Shape fshape{kClipLen, 8, 8, cfg.channels};
        write_tsr((dir / "lrgb.tsr").string(), fshape,
                  synth::feature_window(tracks.local_rgb, start, projection,
                                        cfg.channels)
                      .data());
        write_tsr((dir / "lof.tsr").string(), fshape,
                  synth::feature_window(tracks.local_flow, start, projection,
                                        cfg.channels)
                      .data());
        write_tsr((dir / "gs.tsr").string(), fshape,
                  synth::feature_window(tracks.global_sem, start, projection,
                                        cfg.channels)
                      .data());
        write_tsr((dir / "gof.tsr").string(), fshape,
                  synth::feature_window(tracks.global_flow, start, projection,
                                        cfg.channels)
                      .data());
        write_tsr((dir / "speed.tsr").string(), Shape{kClipLen, 1},
                  rec.speed.data());
        write_tsr((dir / "bbox.tsr").string(), Shape{kClipLen, 4},
                  rec.bbox.data());

        auto& ss = summary.splits[split];
        ss.clips++;
        (rec.label ? ss.positives : ss.negatives)++;
        manifest.records.push_back(std::move(rec));
        ++written;
      }
    }
  }
  write_manifest((fs::path(root) / "manifest.tsv").string(), manifest);
  return summary;
}

template <typename T>
struct ClipSample {
  std::string clip_id;
  int label = 0;
  ClipInput<T> input;
};

// Loads one clip. dir-backed records read the six TSR files; gen-backed
// records regenerate the scenario from its seed.
template <typename T>
ClipSample<T> load_clip(const std::string& root, const ClipRecord& rec,
                        const GenConfig& cfg) {
  namespace fs = std::filesystem;
  ClipSample<T> sample;
  sample.clip_id = rec.clip_id;
  sample.label = rec.label;

  if (rec.storage.rfind("dir:", 0) == 0) {
    const fs::path dir = fs::path(root) / rec.storage.substr(4);
    sample.input.local_rgb = load_features<T>((dir / "lrgb.tsr").string());
    sample.input.local_flow = load_features<T>((dir / "lof.tsr").string());
    sample.input.global_sem = load_features<T>((dir / "gs.tsr").string());
    sample.input.global_flow = load_features<T>((dir / "gof.tsr").string());
  } else if (rec.storage.rfind("gen:", 0) == 0) {
    const std::uint64_t sseed = std::stoull(rec.storage.substr(4));
    Scenario scn = generate_scenario(sseed, cfg);
    if (rec.start_frame + kClipLen > scn.n_frames) {
      throw ValidationError("clip " + rec.clip_id +
                            ": window exceeds regenerated scenario");
    }
    const auto tracks = synth::pooled_tracks(scn);
    const auto projection = synth::feature_projection(cfg.seed, cfg.channels);
    const Shape fshape{kClipLen, 8, 8, cfg.channels};
    auto to_tensor = [&](const std::vector<float>& pooled) {
      auto w = synth::feature_window(pooled, rec.start_frame, projection,
                                     cfg.channels);
      std::vector<T> v(w.begin(), w.end());
      return Tensor<T>::from_data(fshape, std::move(v));
    };
    sample.input.local_rgb = to_tensor(tracks.local_rgb);
    sample.input.local_flow = to_tensor(tracks.local_flow);
    sample.input.global_sem = to_tensor(tracks.global_sem);
    sample.input.global_flow = to_tensor(tracks.global_flow);
  } else {
    throw FormatError("clip " + rec.clip_id + ": unknown storage '" +
                      rec.storage + "'");
  }

  std::vector<T> speed(rec.speed.begin(), rec.speed.end());
  std::vector<T> bbox(rec.bbox.begin(), rec.bbox.end());
  sample.input.motion.speed =
      Tensor<T>::from_data({kClipLen, 1}, std::move(speed));
  sample.input.motion.bbox =
      Tensor<T>::from_data({kClipLen, 4}, std::move(bbox));
  return sample;
}

// Raw 16-frame clip tensors for the end-to-end frame mode.
template <typename T>
ClipInput<T> render_clip_frames(const Scenario& scn, int start) {
  const std::size_t frame_n = std::size_t(kCanvas) * kCanvas * 3;
  auto render_all = [&](synth::VisualModality m) {
    std::vector<T> out(std::size_t(kClipLen) * frame_n);
    std::vector<float> frame(frame_n);
    for (int t = 0; t < kClipLen; ++t) {
      synth::render_frame(scn, start + t, m, frame.data());
      for (std::size_t i = 0; i < frame_n; ++i) {
        out[std::size_t(t) * frame_n + i] = T(frame[i]);
      }
    }
    return Tensor<T>::from_data({kClipLen, kCanvas, kCanvas, 3},
                                std::move(out));
  };
  ClipInput<T> clip;
  clip.visuals_are_frames = true;
  clip.local_rgb = render_all(synth::VisualModality::local_rgb);
  clip.local_flow = render_all(synth::VisualModality::local_flow);
  clip.global_sem = render_all(synth::VisualModality::global_sem);
  clip.global_flow = render_all(synth::VisualModality::global_flow);
  std::vector<T> speed, bbox;
  for (int t = 0; t < kClipLen; ++t) {
    speed.push_back(T(scn.speed[std::size_t(start + t)]));
    for (int j = 0; j < 4; ++j) {
      bbox.push_back(T(scn.bbox[std::size_t(start + t)][j]));
    }
  }
  clip.motion.speed = Tensor<T>::from_data({kClipLen, 1}, std::move(speed));
  clip.motion.bbox = Tensor<T>::from_data({kClipLen, 4}, std::move(bbox));
  return clip;
}

}  // namespace acit
