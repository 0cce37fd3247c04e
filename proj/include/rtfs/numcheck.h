#pragma once

// Numerical smoothness auditing: compares forward-mode directional
// derivatives of every block (and the end-to-end pipeline) against central
// finite differences at seeded random probe points. Probes that land a
// ReLU/PReLU pre-activation closer than a threshold to its kink are
// discarded and redrawn, so the comparison stays meaningful.

#include <string>
#include <vector>

#include "rtfs/model.h"

namespace rtfs {

struct AuditRow {
  std::string block;
  double max_rel_err = 0.0;
  int probes = 0;
  int skipped = 0;  // probe points discarded for kink proximity
};

struct AuditReport {
  std::vector<AuditRow> rows;
  double threshold = 1e-2;
  bool pass(double tol) const;
};

// Relative error ||fd - jvp||_2 / (||jvp||_2 + 1e-8) between two tangents.
double tangent_rel_err(const Tensor& fd, const Tensor& jvp);

AuditReport smoothness_audit(const ModelGraph& g, std::uint64_t seed,
                             std::int64_t input_samples = 8000, int probes = 5);

}  // namespace rtfs
