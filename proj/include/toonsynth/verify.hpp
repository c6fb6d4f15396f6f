#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace toonsynth {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  std::uint64_t seed = 20240601;
  int points = 100;          // random points per gradient check
  int mask_pairs = 1000;     // boundary IoU oracle pairs
  std::string fault;         // "giou-grad" perturbs the GIoU gradient
  int determinism_samples = 3;
};

/// Gradient and oracle suite for the loss kernels and metrics, plus
/// serial/parallel equivalence and synthesis determinism.
std::vector<CheckResult> run_verify(const VerifyOptions& options = {});

/// Individual groups, exposed for the test suites.
CheckResult check_giou_gradient(const VerifyOptions& options);
CheckResult check_qfl_gradient(const VerifyOptions& options);
CheckResult check_dice_gradient(const VerifyOptions& options);
CheckResult check_feature_mse_gradient(const VerifyOptions& options);
CheckResult check_ppa_gradient(const VerifyOptions& options);
CheckResult check_perfect_prediction(const VerifyOptions& options);
CheckResult check_boundary_iou_oracle(const VerifyOptions& options);
CheckResult check_ap_fixtures(const VerifyOptions& options);
CheckResult check_assignment_oracle(const VerifyOptions& options);
CheckResult check_serial_parallel(const VerifyOptions& options);
CheckResult check_synthesis_determinism(const VerifyOptions& options);

}  // namespace toonsynth
