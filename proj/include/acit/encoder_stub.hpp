#pragma once

#include <string>

#include "acit/ops.hpp"
#include "acit/tensor.hpp"
#include "acit/tsr.hpp"

namespace acit {

// Trainable patch-embedding backbone stand-in: splits a frame into
// non-overlapping patches and projects each to C channels.
template <typename T>
struct PatchEmbedParams {
  Tensor<T> w;  // [patch*patch*3, C]
  Tensor<T> b;  // [C]
};

// [S,S,3] frame -> [g,g,C] feature map with g = S/patch, row-major cells.
template <typename T>
Tensor<T> patch_embed(const Tensor<T>& frame, const PatchEmbedParams<T>& p,
                      std::size_t image_size = 256, std::size_t patch = 32) {
  if (frame.shape() != Shape{image_size, image_size, 3}) {
    throw DimensionError("patch_embed: frame must be (" +
                         std::to_string(image_size) + "," +
                         std::to_string(image_size) + ",3), got " +
                         shape_str(frame.shape()));
  }
  const std::size_t grid = image_size / patch;
  auto patches = extract_patches(frame, patch);     // [g*g, patch*patch*3]
  auto projected = linear(patches, p.w, p.b);       // [g*g, C]
  return reshape(projected, {grid, grid, p.w.shape()[1]});
}

// [N,S,S,3] clip -> [N,g,g,C], one shared patch embedding for all frames.
template <typename T>
Tensor<T> encode_clip(const Tensor<T>& frames, const PatchEmbedParams<T>& p,
                      std::size_t n_steps = 16, std::size_t image_size = 256,
                      std::size_t patch = 32) {
  if (frames.rank() != 4 || frames.shape()[0] != n_steps) {
    throw ContractError("encode_clip: expected " + std::to_string(n_steps) +
                        " frames, got " + shape_str(frames.shape()));
  }
  std::vector<Tensor<T>> maps;
  maps.reserve(n_steps);
  for (std::size_t t = 0; t < n_steps; ++t) {
    maps.push_back(patch_embed(row(frames, t), p, image_size, patch));
  }
  return stack(maps);
}

// Feature-file ingestion path: a rank-4 (16,8,8,C) TSR tensor.
template <typename T>
Tensor<T> load_features(const std::string& path, std::size_t n_steps = 16,
                        std::size_t grid = 8) {
  TsrData d = read_tsr(path);
  if (d.shape.size() != 4) {
    throw FormatError(path + ": feature file must have rank 4, got rank " +
                      std::to_string(d.shape.size()));
  }
  if (d.shape[0] != n_steps || d.shape[1] != grid || d.shape[2] != grid) {
    throw FormatError(path + ": feature dims must be (" +
                      std::to_string(n_steps) + "," + std::to_string(grid) +
                      "," + std::to_string(grid) + ",C), got " +
                      shape_str(d.shape));
  }
  std::vector<T> v(d.count());
  if (d.dtype == TsrDtype::f32) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = T(d.f32[i]);
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = T(d.f64[i]);
  }
  return Tensor<T>::from_data(d.shape, std::move(v));
}

template <typename T>
void write_features(const std::string& path, const Tensor<T>& features) {
  if (features.rank() != 4) {
    throw ContractError("write_features: expected rank-4 features, got " +
                        shape_str(features.shape()));
  }
  write_tsr(path, features);
}

}  // namespace acit
