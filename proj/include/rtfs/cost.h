#pragma once

// Static parameter/MAC accounting from the config alone (no weights, no
// inference). Conventions: MACs count weight-bearing multiplies only
// (convs, SRU/attention matmuls); elementwise ops, norms, activations,
// softmax, pooling, interpolation and the STFT pair are excluded, as are
// bias adds. Transposed convs count input elements x (C_out/groups) x k.
// Shared RTFS weights are counted once in params and R times in MACs.

#include <string>
#include <vector>

#include "rtfs/model.h"

namespace rtfs {

struct CostRow {
  std::string module;
  std::int64_t params = 0;
  std::int64_t macs = 0;
};

struct CostReport {
  std::vector<CostRow> rows;  // graph order
  std::int64_t total_params = 0;
  std::int64_t total_macs = 0;
  std::int64_t input_samples = 0;
  int sample_rate = kSampleRate;
};

CostReport count_costs(const ModelConfig& cfg, std::int64_t input_samples);

// Spec-shaped convenience wrappers over a built graph.
CostReport count_params(const ModelGraph& g);
CostReport count_macs(const ModelGraph& g, std::int64_t input_samples);

std::string report_text(const CostReport& r);
std::string report_json(const CostReport& r);
std::string report_csv(const CostReport& r);
CostReport report_from_json(const std::string& json_text);

}  // namespace rtfs
