#pragma once

#include <array>
#include <string>

#include <json.hpp>

#include "painter/error.hpp"

namespace painter::nn {

struct ModelConfig {
  int n_layers = 4;
  int hidden = 128;
  int heads = 4;
  int vocab = 0;
  int ctx_len = 1024;
  int grid = 8;
  int feat = 64;
  int pos_dim = 16;
  double param_scale = 0.02;
  int mlp_mult = 4;
  std::array<int, 3> enc_channels{16, 32, 64};
  bool freeze_encoder = false;

  int head_dim() const { return hidden / heads; }
  int mlp_dim() const { return mlp_mult * hidden; }
  int image_rows() const { return grid * grid; }
  int image_dim() const { return feat + pos_dim; }
  /// Stride of the first convolution; the remaining three halve the map.
  int first_stride() const { return 256 / (8 * grid); }

  void validate() const {
    auto need = [](bool ok, const std::string& what) {
      if (!ok) throw ShapeMismatch("invalid model config: " + what);
    };
    need(n_layers >= 2, "n_layers must be >= 2");
    need(hidden > 0 && heads > 0 && hidden % heads == 0, "hidden must be divisible by heads");
    need(vocab > 2, "vocab too small");
    need(ctx_len > 0, "ctx_len must be positive");
    need(grid > 0 && 256 % (8 * grid) == 0, "grid must divide 32");
    need(feat > 0 && pos_dim >= 0 && pos_dim % 4 == 0, "pos_dim must be a multiple of 4");
    need(mlp_mult > 0, "mlp_mult must be positive");
    for (int c : enc_channels) need(c > 0, "encoder channels must be positive");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"n_layers", c.n_layers},   {"hidden", c.hidden},
                     {"heads", c.heads},         {"vocab", c.vocab},
                     {"ctx_len", c.ctx_len},     {"grid", c.grid},
                     {"feat", c.feat},           {"pos_dim", c.pos_dim},
                     {"param_scale", c.param_scale}, {"mlp_mult", c.mlp_mult},
                     {"enc_channels", c.enc_channels}, {"freeze_encoder", c.freeze_encoder}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  ModelConfig d;
  c.n_layers = j.value("n_layers", d.n_layers);
  c.hidden = j.value("hidden", d.hidden);
  c.heads = j.value("heads", d.heads);
  c.vocab = j.value("vocab", d.vocab);
  c.ctx_len = j.value("ctx_len", d.ctx_len);
  c.grid = j.value("grid", d.grid);
  c.feat = j.value("feat", d.feat);
  c.pos_dim = j.value("pos_dim", d.pos_dim);
  c.param_scale = j.value("param_scale", d.param_scale);
  c.mlp_mult = j.value("mlp_mult", d.mlp_mult);
  c.enc_channels = j.value("enc_channels", d.enc_channels);
  c.freeze_encoder = j.value("freeze_encoder", d.freeze_encoder);
}

}  // namespace painter::nn
