#pragma once

#include <cstddef>
#include <string>

#include "acit/errors.hpp"

namespace acit {

enum class Variant { full, v1, v2, v3, v4, v5 };

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::v1: return "v1";
    case Variant::v2: return "v2";
    case Variant::v3: return "v3";
    case Variant::v4: return "v4";
    case Variant::v5: return "v5";
  }
  return "?";
}

inline Variant parse_variant(const std::string& s) {
  for (Variant v : {Variant::full, Variant::v1, Variant::v2, Variant::v3,
                    Variant::v4, Variant::v5}) {
    if (variant_name(v) == s) return v;
  }
  throw ConfigError("unknown variant '" + s +
                    "' (expected full|v1|v2|v3|v4|v5)");
}

// Architecture hyperparameters. The `desk` preset trades width for CPU
// speed; `paper_scale` restores the published dimensions. All shape
// relations (grid tokens, 3x concat, head divisibility) hold for both.
struct ModelConfig {
  Variant variant = Variant::full;

  std::size_t n_steps = 16;   // clip length
  std::size_t grid = 8;       // spatial feature grid (grid x grid tokens)
  std::size_t channels = 64;  // backbone channels C
  std::size_t token_dim = 64; // width after the 1x1 reduction

  std::size_t ammi_heads = 4;
  std::size_t ammi_ffn_dim = 128;

  std::size_t tfa_layers = 2;
  std::size_t tfa_heads = 6;
  std::size_t tfa_ffn_dim = 512;
  std::size_t mlp_hidden = 128;

  std::size_t v5_heads = 4;  // per-modality temporal encoders in v5

  double dropout_mlp = 0.3;
  double dropout_ammi = 0.1;
  double ln_eps = 1e-5;
  bool use_positional_encoding = true;

  std::size_t image_size = 256;  // raw frame extent for the patch stub
  std::size_t patch = 32;

  std::size_t n_tokens() const { return grid * grid; }
  std::size_t fused_dim() const { return 3 * token_dim; }
  std::size_t cls_len() const { return n_steps + 1; }

  static ModelConfig desk() { return ModelConfig{}; }

  static ModelConfig paper_scale() {
    ModelConfig c;
    c.channels = 1024;
    c.token_dim = 256;
    c.ammi_ffn_dim = 512;
    c.tfa_ffn_dim = 2048;
    c.mlp_hidden = 128;
    return c;
  }

  void validate() const {
    if (n_steps < 1) throw ConfigError("config: n_steps must be >= 1");
    if (grid < 1) throw ConfigError("config: grid must be >= 1");
    if (channels < 1) throw ConfigError("config: channels must be >= 1");
    if (token_dim < 2) throw ConfigError("config: token_dim must be >= 2");
    if (ammi_heads == 0 || token_dim % ammi_heads != 0) {
      throw ConfigError("config: token_dim " + std::to_string(token_dim) +
                        " not divisible by ammi_heads " +
                        std::to_string(ammi_heads));
    }
    if (tfa_heads == 0 || fused_dim() % tfa_heads != 0) {
      throw ConfigError("config: fused width " + std::to_string(fused_dim()) +
                        " not divisible by tfa_heads " +
                        std::to_string(tfa_heads));
    }
    if (v5_heads == 0 || token_dim % v5_heads != 0) {
      throw ConfigError("config: token_dim " + std::to_string(token_dim) +
                        " not divisible by v5_heads " +
                        std::to_string(v5_heads));
    }
    if (fused_dim() % 2 != 0 || token_dim % 2 != 0) {
      throw ConfigError("config: widths must be even for the position table");
    }
    if (dropout_mlp < 0 || dropout_mlp >= 1 || dropout_ammi < 0 ||
        dropout_ammi >= 1) {
      throw ConfigError("config: dropout rates must lie in [0,1)");
    }
    if (image_size == 0 || patch == 0 || image_size % patch != 0 ||
        image_size / patch != grid) {
      throw ConfigError("config: image_size/patch must equal the grid extent");
    }
    if (ln_eps <= 0) throw ConfigError("config: ln_eps must be positive");
  }
};

}  // namespace acit
