#pragma once

// Assembles encoder, VP, CAF, the shared RTFS block, the S3 masking stage
// and the decoder into one inference graph. A WeightStore owns every tensor
// by name; a ModelGraph binds non-owning layer views onto it, so exactly one
// RTFS weight set serves all R applications.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rtfs/caf.h"
#include "rtfs/dual.h"
#include "rtfs/rtfs_block.h"
#include "rtfs/s3.h"
#include "rtfs/stft.h"
#include "rtfs/vp_block.h"

namespace rtfs {

struct ModelConfig {
  std::int64_t window = 256;
  std::int64_t hop = 128;
  std::int64_t c_a = 256;
  std::int64_t d = 64;
  std::int64_t q = 2;
  std::int64_t h_a = 32;
  std::int64_t sru_layers = 4;
  std::int64_t unfold_kernel = 8;
  std::int64_t attn_heads = 4;
  std::int64_t attn_qk = 4;  // E, Q/K channel width per head
  std::int64_t caf_heads = 4;
  std::int64_t c_v = 512;
  std::int64_t vp_hidden = 64;
  std::int64_t vp_q = 4;
  std::int64_t vp_heads = 8;
  std::int64_t vp_ffn = 128;
  std::int64_t r = 4;

  void validate() const;  // throws format_error on a bad combination
};

ModelConfig config_from_json(const std::string& json_text);
std::string config_to_json(const ModelConfig& cfg);
// Applies one "key=value" override (the CLI --set flag).
void config_set(ModelConfig& cfg, const std::string& key_value);

struct WeightStore {
  std::map<std::string, Tensor> tensors;  // sorted; serialization order
  ModelConfig config;

  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);
};

struct TensorReq {
  std::string name;
  std::vector<std::int64_t> dims;
  bool trainable = true;
  enum class Init { uniform, constant } init = Init::uniform;
  float init_param = 1.0f;  // uniform: +/- bound (1/sqrt(fan_in)); constant: the value
};

// The full tensor inventory one graph needs, in a fixed documented order.
// This is the single source of truth shared by init_random, store
// validation, graph binding and the parameter ledger.
std::vector<TensorReq> required_tensors(const ModelConfig& cfg);

WeightStore init_random(const ModelConfig& cfg, std::uint64_t seed);

struct ModelGraph {
  ModelConfig config;
  std::shared_ptr<WeightStore> store;
  ConvLayer encoder;
  VpWeights vp;
  CafWeights caf;
  RtfsWeights rtfs;
  MaskWeights mask;
  ConvLayer decoder;
};

// Validates the store against required_tensors(cfg) (missing/extra names,
// exact shapes) and binds the layer views.
ModelGraph build(const ModelConfig& cfg, std::shared_ptr<WeightStore> store);

// x: 16 kHz mono; v0: C_v x T_v visual features. Output has x's length.
Waveform forward(const ModelGraph& g, const Waveform& x, const Tensor& v0);
DualWaveform forward(const ModelGraph& g, const DualWaveform& x, const Tensor& v0);

}  // namespace rtfs
