#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "toonsynth/geometry.hpp"
#include "toonsynth/tensor.hpp"

namespace toonsynth::loss {

struct Stage1Weights {
  double box = 2.0;
  double conf = 1.0;
  double mask = 2.0;

  bool operator==(const Stage1Weights&) const = default;
};

enum class GiouMode {
  Standard,      // mean of 1 - GIoU
  MeanGiou,  // mean of GIoU
};

enum class Reduction { Sum, Mean };

/// Every constant the kernels default to, in one place.
struct LossDefaults {
  Stage1Weights stage1;
  double qfl_beta = 2.0;
  double clip_eps = 1e-7;
  double dice_eps = 1e-6;
  int dice_size = 320;
  std::array<double, 6> ppa_level_weights{1, 1, 1, 1, 1, 5};
  int ppa_pool = 31;
  double ppa_boundary_gain = 5.0;
  GiouMode giou_mode = GiouMode::Standard;
  Reduction feature_reduction = Reduction::Sum;
  double assign_center_weight = 0.5;
};

// ---------------------------------------------------------------------------
// Box regression

double giou(const BoundingBox& a, const BoundingBox& b);

/// Gradients are d(loss)/d(x_min, y_min, x_max, y_max) of each prediction.
struct BoxLoss {
  double value = 0.0;
  std::vector<std::array<double, 4>> grad;
};

BoxLoss giou_loss(std::span<const BoundingBox> pred, std::span<const BoundingBox> gt,
                  GiouMode mode = GiouMode::Standard);

// ---------------------------------------------------------------------------
// Confidence

struct VectorLoss {
  double value = 0.0;
  std::vector<double> grad;
};

/// -sum |y - s|^beta [(1 - y) log(1 - s) + y log s], s clipped to [eps, 1 - eps].
/// The gradient is zero where the clip is active.
VectorLoss quality_focal_loss(std::span<const double> y, std::span<const double> sigma, double beta = 2.0,
                              double eps = 1e-7);

// ---------------------------------------------------------------------------
// Masks

/// Bilinear resampling with half-pixel centers and edge clamping, held as per
/// axis taps so the adjoint (used for gradients) is exact.
class Resampler {
 public:
  Resampler(int in_h, int in_w, int out_h, int out_w);

  int in_h() const noexcept { return in_h_; }
  int in_w() const noexcept { return in_w_; }
  int out_h() const noexcept { return out_h_; }
  int out_w() const noexcept { return out_w_; }
  bool identity() const noexcept { return in_h_ == out_h_ && in_w_ == out_w_; }

  void forward(const double* in, double* out) const;
  /// out_grad (out_h x out_w) -> in_grad (in_h x in_w), accumulated.
  void adjoint(const double* out_grad, double* in_grad) const;

 private:
  struct Tap {
    int i0, i1;
    double w0, w1;
  };
  static std::vector<Tap> taps(int in, int out);

  int in_h_, in_w_, out_h_, out_w_;
  std::vector<Tap> ty_, tx_;
};

struct TensorLoss {
  double value = 0.0;
  Tensor grad;
};

/// pred and gt are N x H x W stacks; both are resampled to size x size before
/// (1/N) sum_i [1 - 2 <g,p> / (<g,g> + <p,p> + eps)]. The gradient is taken
/// through the resampling, w.r.t. the original pred.
TensorLoss dice_loss(const Tensor& pred, const Tensor& gt, double eps = 1e-6, int size = 320);

// ---------------------------------------------------------------------------
// Feature pyramids and side outputs

struct PyramidLoss {
  double value = 0.0;
  std::vector<Tensor> grad;
};

/// Sum over levels of the summed (or per-level mean) squared difference.
PyramidLoss feature_mse_loss(std::span<const Tensor> pred, std::span<const Tensor> gt,
                             Reduction reduction = Reduction::Sum);

/// W = 1 + gain * |meanpool(gt) - gt|, pool x pool window, stride 1, zero
/// padding of pool/2 on every side, divisor pool^2.
Tensor ppa_weight_map(const Tensor& gt, int pool = 31, double gain = 5.0);

/// sum_D lambda_D [wBCE_D + 1 - wIoU_D]. Each H_D x W_D side map is upsampled
/// bilinearly to the gt resolution and clipped to [eps, 1 - eps];
/// wBCE = sum W bce / sum W, wIoU = sum W p g / sum W (p + g - p g).
/// Gradients are w.r.t. each side map at its own resolution.
PyramidLoss ppa_loss(std::span<const Tensor> side, const Tensor& gt, std::span<const double> level_weights,
                     double eps = 1e-7, int pool = 31, double gain = 5.0);

double stage1_loss(double box, double conf, double mask, const Stage1Weights& w = {});
double stage2_loss(double is, double ppa);

// ---------------------------------------------------------------------------
// Candidate grid and label assignment

struct AnchorGrid {
  int input_size = 720;
  std::vector<int> sizes{80, 40, 20};

  std::size_t count() const noexcept;
  /// input_size / sizes[level].
  double stride(std::size_t level) const;
  std::size_t level_of(std::size_t candidate) const;
  /// Cell center, (j + 0.5) * stride on each axis.
  std::array<double, 2> center(std::size_t candidate) const;
};

/// Offsets are (top, left, bottom, right) distances from the cell center.
BoundingBox decode(const AnchorGrid& grid, std::size_t candidate, const std::array<double, 4>& tlbr);
std::vector<BoundingBox> decode_all(const AnchorGrid& grid, std::span<const std::array<double, 4>> tlbr);

struct Assignment {
  std::size_t gt = 0;
  std::size_t candidate = 0;
  double iou = 0.0;  // quality target y for the matched candidate
  double cost = 0.0;
  double confidence = 0.0;
};

/// Simplified assigner. cost = -IoU + center_weight * |center(decoded) -
/// center(gt)| / input_size. Ground truths in descending area order (stable)
/// each take their cheapest unassigned candidate, ties to the lowest index.
/// Result is ordered by gt index.
std::vector<Assignment> assign_labels(const AnchorGrid& grid, std::span<const BoundingBox> decoded,
                                      std::span<const double> confidences, std::span<const BoundingBox> gts,
                                      double center_weight = 0.5);

}  // namespace toonsynth::loss
