#pragma once

// Binary tensor container. Layout (all little-endian):
//   magic "RTFS" | u32 version=1 | u32 tensor count
//   per tensor: u16 name length | name bytes (UTF-8)
//               u8 dtype (0 = f32, 1 = u8 blob) | u8 rank
//               rank x u32 dims | row-major payload
// Tensors are written in name-sorted order, so save->load->save is
// byte-identical. Model stores embed their config as a JSON byte blob under
// the reserved name "__config__".

#include <map>
#include <string>

#include "rtfs/model.h"

namespace rtfs {

inline constexpr const char* kConfigTensorName = "__config__";

// Low-level container access (used for visual-feature files too).
void save_container(const std::map<std::string, Tensor>& tensors, const std::string& path,
                    const std::string& config_json = "");
struct RawContainer {
  std::map<std::string, Tensor> tensors;
  std::string config_json;  // empty if absent
};
RawContainer load_container(const std::string& path);

// Model weight stores: save embeds the config; load validates the tensor
// set against the embedded config (missing/extra names and shapes are hard
// errors naming the offender) unless allow_extra is set.
void save_weights(const WeightStore& store, const std::string& path);
WeightStore load_weights(const std::string& path, bool allow_extra = false);

}  // namespace rtfs
