#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "acit/ammi.hpp"
#include "acit/attention.hpp"
#include "acit/avmi.hpp"
#include "acit/config.hpp"
#include "acit/encoder_stub.hpp"
#include "acit/mmff.hpp"
#include "acit/rng.hpp"
#include "acit/tfa.hpp"
#include "acit/tsr.hpp"

namespace acit {

enum class ParamKind { weight, bias, gain, cls_token, gate_scalar };

template <typename T>
struct RunContext {
  bool training = false;
  CounterRng dropout_rng{0};
};

// One clip as the model consumes it. Visual tensors are either backbone
// features [N,g,g,C] or raw frames [N,S,S,3] (then the patch stub runs).
template <typename T>
struct ClipInput {
  Tensor<T> local_rgb, local_flow, global_sem, global_flow;
  bool visuals_are_frames = false;
  MotionInputs<T> motion;
};

// The complete parameter set: encoder stub, two visual interaction pairs,
// motion interaction, inter-modal fusion, temporal head, and the v5
// per-modality temporal encoders. Which pieces are live depends on the
// variant; parameters() lists only the live ones.
template <typename T>
class AcitModel {
 public:
  ModelConfig cfg;
  MotionNorm norm;

  PatchEmbedParams<T> encoder;
  DualPathParams<T> avmi_local, avmi_global;
  AmmiParams<T> ammi;
  MmffParams<T> mmff;
  TfaParams<T> tfa;

  struct ModalityEncoder {
    Tensor<T> cls;
    std::vector<EncoderLayerParams<T>> layers;
  };
  std::array<ModalityEncoder, 3> v5_encoders;

  static AcitModel build(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    AcitModel m;
    m.cfg = cfg;
    m.allocate();
    m.initialize(seed);
    return m;
  }

  // Visits every live parameter with a stable name. The same order drives
  // initialization, the optimizer, checkpoints, and parameter counting.
  void for_each_param(
      const std::function<void(const std::string&, Tensor<T>&, ParamKind,
                               bool /*head_weight*/)>& fn) {
    const Variant v = cfg.variant;

    fn("encoder.w", encoder.w, ParamKind::weight, false);
    fn("encoder.b", encoder.b, ParamKind::bias, false);

    auto visit_avmi = [&](const std::string& prefix, DualPathParams<T>& p) {
      fn(prefix + ".reduce_primary", p.reduce_primary, ParamKind::weight, false);
      fn(prefix + ".reduce_aux", p.reduce_aux, ParamKind::weight, false);
      if (v != Variant::v4) {
        fn(prefix + ".sa_q", p.sa_q, ParamKind::weight, false);
        fn(prefix + ".sa_k", p.sa_k, ParamKind::weight, false);
        fn(prefix + ".sa_v", p.sa_v, ParamKind::weight, false);
        fn(prefix + ".ga_q", p.ga_q, ParamKind::weight, false);
        fn(prefix + ".ga_k", p.ga_k, ParamKind::weight, false);
        fn(prefix + ".ga_v", p.ga_v, ParamKind::weight, false);
        fn(prefix + ".alpha", p.alpha, ParamKind::gate_scalar, false);
      }
    };
    visit_avmi("avmi_local", avmi_local);
    visit_avmi("avmi_global", avmi_global);

    auto visit_attn = [&](const std::string& prefix, AttentionParams<T>& p) {
      for (std::size_t h = 0; h < p.w_q.size(); ++h) {
        const std::string hp = prefix + ".h" + std::to_string(h);
        fn(hp + ".w_q", p.w_q[h], ParamKind::weight, false);
        fn(hp + ".w_k", p.w_k[h], ParamKind::weight, false);
        fn(hp + ".w_v", p.w_v[h], ParamKind::weight, false);
      }
      fn(prefix + ".w_o", p.w_o, ParamKind::weight, false);
    };

    fn("ammi.speed_w", ammi.speed_w, ParamKind::weight, false);
    fn("ammi.speed_b", ammi.speed_b, ParamKind::bias, false);
    fn("ammi.bbox_w", ammi.bbox_w, ParamKind::weight, false);
    fn("ammi.bbox_b", ammi.bbox_b, ParamKind::bias, false);
    fn("ammi.ln_speed_g", ammi.ln_speed_g, ParamKind::gain, false);
    fn("ammi.ln_speed_b", ammi.ln_speed_b, ParamKind::bias, false);
    fn("ammi.ln_bbox_g", ammi.ln_bbox_g, ParamKind::gain, false);
    fn("ammi.ln_bbox_b", ammi.ln_bbox_b, ParamKind::bias, false);
    visit_attn("ammi.attn_a", ammi.attn_a);
    visit_attn("ammi.attn_b", ammi.attn_b);
    fn("ammi.ln_merged_g", ammi.ln_merged_g, ParamKind::gain, false);
    fn("ammi.ln_merged_b", ammi.ln_merged_b, ParamKind::bias, false);
    fn("ammi.ffn_w1", ammi.ffn_w1, ParamKind::weight, false);
    fn("ammi.ffn_b1", ammi.ffn_b1, ParamKind::bias, false);
    fn("ammi.ffn_w2", ammi.ffn_w2, ParamKind::weight, false);
    fn("ammi.ffn_b2", ammi.ffn_b2, ParamKind::bias, false);

    if (v == Variant::v2) {
      fn("mmff.sum_w", mmff.sum_w, ParamKind::weight, false);
      fn("mmff.sum_b", mmff.sum_b, ParamKind::bias, false);
    } else {
      static const char* mod[3] = {"l", "g", "m"};
      for (int i = 0; i < 3; ++i) {
        const std::string mp = std::string("mmff.") + mod[i];
        fn(mp + ".w_q", mmff.w_q[i], ParamKind::weight, false);
        fn(mp + ".w_k", mmff.w_k[i], ParamKind::weight, false);
        fn(mp + ".w_v", mmff.w_v[i], ParamKind::weight, false);
      }
    }

    auto visit_layer = [&](const std::string& prefix,
                           EncoderLayerParams<T>& p) {
      visit_attn(prefix + ".mhsa", p.mhsa);
      fn(prefix + ".ln1_g", p.ln1_g, ParamKind::gain, false);
      fn(prefix + ".ln1_b", p.ln1_b, ParamKind::bias, false);
      fn(prefix + ".ffn_w1", p.ffn_w1, ParamKind::weight, false);
      fn(prefix + ".ffn_b1", p.ffn_b1, ParamKind::bias, false);
      fn(prefix + ".ffn_w2", p.ffn_w2, ParamKind::weight, false);
      fn(prefix + ".ffn_b2", p.ffn_b2, ParamKind::bias, false);
      fn(prefix + ".ln2_g", p.ln2_g, ParamKind::gain, false);
      fn(prefix + ".ln2_b", p.ln2_b, ParamKind::bias, false);
    };

    if (v == Variant::v5) {
      static const char* mod[3] = {"l", "g", "m"};
      for (int i = 0; i < 3; ++i) {
        const std::string mp = std::string("v5.") + mod[i];
        fn(mp + ".cls", v5_encoders[i].cls, ParamKind::cls_token, false);
        for (std::size_t l = 0; l < v5_encoders[i].layers.size(); ++l) {
          visit_layer(mp + ".layer" + std::to_string(l),
                      v5_encoders[i].layers[l]);
        }
      }
    } else if (v != Variant::v1) {
      fn("tfa.cls", tfa.cls, ParamKind::cls_token, false);
      for (std::size_t l = 0; l < tfa.layers.size(); ++l) {
        visit_layer("tfa.layer" + std::to_string(l), tfa.layers[l]);
      }
    }
    fn("tfa.head.w1", tfa.head.w1, ParamKind::weight, true);
    fn("tfa.head.b1", tfa.head.b1, ParamKind::bias, false);
    fn("tfa.head.w2", tfa.head.w2, ParamKind::weight, true);
    fn("tfa.head.b2", tfa.head.b2, ParamKind::bias, false);
  }

  struct NamedParam {
    std::string name;
    Tensor<T> tensor;
    bool head_weight;
  };

  std::vector<NamedParam> parameters() {
    std::vector<NamedParam> out;
    for_each_param([&](const std::string& name, Tensor<T>& t, ParamKind,
                       bool head) { out.push_back({name, t, head}); });
    return out;
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for_each_param([&](const std::string&, Tensor<T>& t, ParamKind, bool) {
      n += t.size();
    });
    return n;
  }

  // --- forward ---------------------------------------------------------

  Tensor<T> forward(const ClipInput<T>& clip, RunContext<T>& ctx) const {
    const Variant v = cfg.variant;
    auto feats = [&](const Tensor<T>& visual) {
      if (!clip.visuals_are_frames) {
        if (visual.rank() != 4 || visual.shape()[0] != cfg.n_steps ||
            visual.shape()[1] != cfg.grid || visual.shape()[2] != cfg.grid ||
            visual.shape()[3] != cfg.channels) {
          throw DimensionError("forward: visual features must be (" +
                               std::to_string(cfg.n_steps) + "," +
                               std::to_string(cfg.grid) + "," +
                               std::to_string(cfg.grid) + "," +
                               std::to_string(cfg.channels) + "), got " +
                               shape_str(visual.shape()));
        }
        return visual;
      }
      return encode_clip(visual, encoder, cfg.n_steps, cfg.image_size,
                         cfg.patch);
    };

    const AvmiMode amode =
        v == Variant::v4 ? AvmiMode::pool_add : AvmiMode::dual_path;
    auto feat_local =
        avmi_forward(feats(clip.local_rgb), feats(clip.local_flow), avmi_local,
                     amode);
    auto feat_global = avmi_forward(feats(clip.global_sem),
                                    feats(clip.global_flow), avmi_global,
                                    amode);

    auto [x_speed, x_bbox] = embed_motion(clip.motion, ammi, norm,
                                          T(cfg.ln_eps));
    const AmmiMode mmode =
        v == Variant::v3 ? AmmiMode::self_add : AmmiMode::cross;
    auto feat_motion = cross_modal_block(x_speed, x_bbox, ammi, cfg.ammi_heads,
                                         cfg.dropout_ammi, ctx.dropout_rng,
                                         ctx.training, mmode, T(cfg.ln_eps));

    if (v == Variant::v5) {
      // temporal fusion first, per modality, then one inter-modal step
      auto summarize = [&](const Tensor<T>& f, const ModalityEncoder& enc) {
        auto x = prepend_cls(f, enc.cls);
        if (cfg.use_positional_encoding) {
          x = add(x, positional_encoding<T>(x.shape()[0], x.shape()[1]));
        }
        for (const auto& layer : enc.layers) {
          x = encoder_layer(x, layer, cfg.v5_heads, T(cfg.ln_eps));
        }
        return row(x, 0);
      };
      std::array<Tensor<T>, 3> summaries{
          summarize(feat_local, v5_encoders[0]),
          summarize(feat_global, v5_encoders[1]),
          summarize(feat_motion, v5_encoders[2])};
      auto refined = refine_step(summaries, mmff);
      auto fused_vec = reshape(refined, {3 * cfg.token_dim});
      return mlp_head(fused_vec, tfa.head, cfg.dropout_mlp, ctx.dropout_rng,
                      ctx.training);
    }

    const MmffMode fmode =
        v == Variant::v2 ? MmffMode::elem_add : MmffMode::inter_modal;
    auto fused = mmff_forward(feat_local, feat_global, feat_motion, mmff,
                              fmode);
    const TfaMode tmode =
        v == Variant::v1 ? TfaMode::mean_pool : TfaMode::encoder;
    return tfa_forward(fused, tfa, cfg.tfa_heads, cfg.n_steps,
                       cfg.use_positional_encoding, cfg.dropout_mlp,
                       ctx.dropout_rng, ctx.training, tmode, T(cfg.ln_eps));
  }

  // --- checkpoints -------------------------------------------------------

  // Directory of one TSR file per parameter plus index.txt and config.txt.
  void save_checkpoint(const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream index(fs::path(dir) / "index.txt");
    if (!index) throw IoError("cannot write checkpoint index in " + dir);
    for_each_param([&](const std::string& name, Tensor<T>& t, ParamKind,
                       bool) {
      const std::string file = file_name_for(name);
      write_tsr((fs::path(dir) / file).string(), t);
      index << name << '\t' << file << '\t' << dims_str(t.shape()) << '\n';
    });
    // normalization stats ride along as plain tensors
    auto mean = Tensor<T>::scalar(T(norm.speed_mean));
    auto sd = Tensor<T>::scalar(T(norm.speed_std));
    write_tsr((fs::path(dir) / "norm_speed_mean.tsr").string(), mean);
    write_tsr((fs::path(dir) / "norm_speed_std.tsr").string(), sd);
    index << "norm.speed_mean\tnorm_speed_mean.tsr\t1\n";
    index << "norm.speed_std\tnorm_speed_std.tsr\t1\n";

    std::ofstream conf(fs::path(dir) / "config.txt");
    write_config(conf, cfg);
  }

  static AcitModel load_checkpoint(const std::string& dir) {
    namespace fs = std::filesystem;
    const auto conf_path = fs::path(dir) / "config.txt";
    std::ifstream conf(conf_path);
    if (!conf) throw IoError("missing checkpoint config: " + conf_path.string());
    ModelConfig cfg = read_config(conf, conf_path.string());

    AcitModel m;
    m.cfg = cfg;
    m.allocate();

    std::map<std::string, std::string> files;
    const auto index_path = fs::path(dir) / "index.txt";
    std::ifstream index(index_path);
    if (!index) throw IoError("missing checkpoint index: " + index_path.string());
    std::string line;
    int line_no = 0;
    while (std::getline(index, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto tab1 = line.find('\t');
      const auto tab2 = line.find('\t', tab1 + 1);
      if (tab1 == std::string::npos || tab2 == std::string::npos) {
        throw FormatError(index_path.string() + ": malformed line " +
                          std::to_string(line_no));
      }
      files[line.substr(0, tab1)] = line.substr(tab1 + 1, tab2 - tab1 - 1);
    }

    m.for_each_param([&](const std::string& name, Tensor<T>& t, ParamKind,
                         bool) {
      auto it = files.find(name);
      if (it == files.end()) {
        throw FormatError(index_path.string() + ": missing parameter " + name);
      }
      auto loaded = load_tensor<T>((fs::path(dir) / it->second).string());
      if (loaded.shape() != t.shape()) {
        throw FormatError("checkpoint parameter " + name + " has shape " +
                          shape_str(loaded.shape()) + ", expected " +
                          shape_str(t.shape()));
      }
      t.values() = loaded.values();
    });
    if (files.count("norm.speed_mean")) {
      m.norm.speed_mean = double(
          load_tensor<T>((fs::path(dir) / files["norm.speed_mean"]).string())[0]);
    }
    if (files.count("norm.speed_std")) {
      m.norm.speed_std = double(
          load_tensor<T>((fs::path(dir) / files["norm.speed_std"]).string())[0]);
    }
    return m;
  }

  static void write_config(std::ostream& out, const ModelConfig& c) {
    out << "variant=" << variant_name(c.variant) << '\n'
        << "n_steps=" << c.n_steps << '\n'
        << "grid=" << c.grid << '\n'
        << "channels=" << c.channels << '\n'
        << "token_dim=" << c.token_dim << '\n'
        << "ammi_heads=" << c.ammi_heads << '\n'
        << "ammi_ffn_dim=" << c.ammi_ffn_dim << '\n'
        << "tfa_layers=" << c.tfa_layers << '\n'
        << "tfa_heads=" << c.tfa_heads << '\n'
        << "tfa_ffn_dim=" << c.tfa_ffn_dim << '\n'
        << "mlp_hidden=" << c.mlp_hidden << '\n'
        << "v5_heads=" << c.v5_heads << '\n'
        << "dropout_mlp=" << c.dropout_mlp << '\n'
        << "dropout_ammi=" << c.dropout_ammi << '\n'
        << "ln_eps=" << c.ln_eps << '\n'
        << "use_positional_encoding=" << (c.use_positional_encoding ? 1 : 0)
        << '\n'
        << "image_size=" << c.image_size << '\n'
        << "patch=" << c.patch << '\n';
  }

  static ModelConfig read_config(std::istream& in, const std::string& where) {
    ModelConfig c;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw FormatError(where + ": malformed line " + std::to_string(line_no));
      }
      const std::string key = line.substr(0, eq);
      const std::string val = line.substr(eq + 1);
      if (key == "variant") c.variant = parse_variant(val);
      else if (key == "n_steps") c.n_steps = std::stoul(val);
      else if (key == "grid") c.grid = std::stoul(val);
      else if (key == "channels") c.channels = std::stoul(val);
      else if (key == "token_dim") c.token_dim = std::stoul(val);
      else if (key == "ammi_heads") c.ammi_heads = std::stoul(val);
      else if (key == "ammi_ffn_dim") c.ammi_ffn_dim = std::stoul(val);
      else if (key == "tfa_layers") c.tfa_layers = std::stoul(val);
      else if (key == "tfa_heads") c.tfa_heads = std::stoul(val);
      else if (key == "tfa_ffn_dim") c.tfa_ffn_dim = std::stoul(val);
      else if (key == "mlp_hidden") c.mlp_hidden = std::stoul(val);
      else if (key == "v5_heads") c.v5_heads = std::stoul(val);
      else if (key == "dropout_mlp") c.dropout_mlp = std::stod(val);
      else if (key == "dropout_ammi") c.dropout_ammi = std::stod(val);
      else if (key == "ln_eps") c.ln_eps = std::stod(val);
      else if (key == "use_positional_encoding")
        c.use_positional_encoding = val != "0";
      else if (key == "image_size") c.image_size = std::stoul(val);
      else if (key == "patch") c.patch = std::stoul(val);
      else throw FormatError(where + ": unknown config key '" + key + "'");
    }
    c.validate();
    return c;
  }

 private:
  static std::string file_name_for(std::string name) {
    for (auto& ch : name) {
      if (ch == '.') ch = '_';
    }
    return name + ".tsr";
  }

  static std::string dims_str(const Shape& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(s[i]);
    }
    return out;
  }

  void allocate() {
    const std::size_t c = cfg.channels, d = cfg.token_dim;
    const std::size_t fused = cfg.fused_dim();

    encoder.w = Tensor<T>::zeros({cfg.patch * cfg.patch * 3, c}, true);
    encoder.b = Tensor<T>::zeros({c}, true);

    for (auto* p : {&avmi_local, &avmi_global}) {
      p->reduce_primary = Tensor<T>::zeros({c, d}, true);
      p->reduce_aux = Tensor<T>::zeros({c, d}, true);
      p->sa_q = Tensor<T>::zeros({d, d}, true);
      p->sa_k = Tensor<T>::zeros({d, d}, true);
      p->sa_v = Tensor<T>::zeros({d, d}, true);
      p->ga_q = Tensor<T>::zeros({d, d}, true);
      p->ga_k = Tensor<T>::zeros({d, d}, true);
      p->ga_v = Tensor<T>::zeros({d, d}, true);
      p->alpha = Tensor<T>::zeros({1}, true);
    }

    auto alloc_attn = [](std::size_t dm, std::size_t heads) {
      AttentionParams<T> a;
      const std::size_t dh = dm / heads;
      for (std::size_t h = 0; h < heads; ++h) {
        a.w_q.push_back(Tensor<T>::zeros({dm, dh}, true));
        a.w_k.push_back(Tensor<T>::zeros({dm, dh}, true));
        a.w_v.push_back(Tensor<T>::zeros({dm, dh}, true));
      }
      a.w_o = Tensor<T>::zeros({dm, dm}, true);
      return a;
    };

    ammi.speed_w = Tensor<T>::zeros({1, d}, true);
    ammi.speed_b = Tensor<T>::zeros({d}, true);
    ammi.bbox_w = Tensor<T>::zeros({4, d}, true);
    ammi.bbox_b = Tensor<T>::zeros({d}, true);
    ammi.ln_speed_g = Tensor<T>::zeros({d}, true);
    ammi.ln_speed_b = Tensor<T>::zeros({d}, true);
    ammi.ln_bbox_g = Tensor<T>::zeros({d}, true);
    ammi.ln_bbox_b = Tensor<T>::zeros({d}, true);
    ammi.attn_a = alloc_attn(d, cfg.ammi_heads);
    ammi.attn_b = alloc_attn(d, cfg.ammi_heads);
    ammi.ln_merged_g = Tensor<T>::zeros({d}, true);
    ammi.ln_merged_b = Tensor<T>::zeros({d}, true);
    ammi.ffn_w1 = Tensor<T>::zeros({d, cfg.ammi_ffn_dim}, true);
    ammi.ffn_b1 = Tensor<T>::zeros({cfg.ammi_ffn_dim}, true);
    ammi.ffn_w2 = Tensor<T>::zeros({cfg.ammi_ffn_dim, d}, true);
    ammi.ffn_b2 = Tensor<T>::zeros({d}, true);

    for (int i = 0; i < 3; ++i) {
      mmff.w_q[i] = Tensor<T>::zeros({d, d}, true);
      mmff.w_k[i] = Tensor<T>::zeros({d, d}, true);
      mmff.w_v[i] = Tensor<T>::zeros({d, d}, true);
    }
    mmff.sum_w = Tensor<T>::zeros({d, fused}, true);
    mmff.sum_b = Tensor<T>::zeros({fused}, true);

    auto alloc_layer = [&](std::size_t dm, std::size_t heads,
                           std::size_t ffn) {
      EncoderLayerParams<T> l;
      l.mhsa = alloc_attn(dm, heads);
      l.ln1_g = Tensor<T>::zeros({dm}, true);
      l.ln1_b = Tensor<T>::zeros({dm}, true);
      l.ffn_w1 = Tensor<T>::zeros({dm, ffn}, true);
      l.ffn_b1 = Tensor<T>::zeros({ffn}, true);
      l.ffn_w2 = Tensor<T>::zeros({ffn, dm}, true);
      l.ffn_b2 = Tensor<T>::zeros({dm}, true);
      l.ln2_g = Tensor<T>::zeros({dm}, true);
      l.ln2_b = Tensor<T>::zeros({dm}, true);
      return l;
    };

    tfa.cls = Tensor<T>::zeros({fused}, true);
    tfa.layers.clear();
    for (std::size_t l = 0; l < cfg.tfa_layers; ++l) {
      tfa.layers.push_back(alloc_layer(fused, cfg.tfa_heads, cfg.tfa_ffn_dim));
    }
    tfa.head.w1 = Tensor<T>::zeros({fused, cfg.mlp_hidden}, true);
    tfa.head.b1 = Tensor<T>::zeros({cfg.mlp_hidden}, true);
    tfa.head.w2 = Tensor<T>::zeros({cfg.mlp_hidden, 1}, true);
    tfa.head.b2 = Tensor<T>::zeros({1}, true);

    for (int i = 0; i < 3; ++i) {
      v5_encoders[i].cls = Tensor<T>::zeros({d}, true);
      v5_encoders[i].layers.clear();
      for (std::size_t l = 0; l < cfg.tfa_layers; ++l) {
        v5_encoders[i].layers.push_back(
            alloc_layer(d, cfg.v5_heads, 2 * d));
      }
    }
  }

  // Every parameter draws from a stream derived from (seed, its name), so
  // identically named parameters match across variants under one seed.
  void initialize(std::uint64_t seed) {
    for_each_param([&](const std::string& name, Tensor<T>& t, ParamKind kind,
                       bool) {
      CounterRng rng(CounterRng::derive(seed, name));
      switch (kind) {
        case ParamKind::weight: {
          const std::size_t fan_in = t.rank() == 2 ? t.shape()[0] : t.size();
          const std::size_t fan_out = t.rank() == 2 ? t.shape()[1] : 1;
          const double sd = std::sqrt(2.0 / double(fan_in + fan_out));
          for (auto& v : t.values()) v = T(rng.gaussian(0.0, sd));
          break;
        }
        case ParamKind::bias:
          for (auto& v : t.values()) v = T(0);
          break;
        case ParamKind::gain:
          for (auto& v : t.values()) v = T(1);
          break;
        case ParamKind::cls_token:
          for (auto& v : t.values()) v = T(rng.gaussian(0.0, 0.02));
          break;
        case ParamKind::gate_scalar:
          for (auto& v : t.values()) v = T(0);
          break;
      }
    });
  }
};

}  // namespace acit
