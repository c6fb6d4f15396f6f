#include "toonsynth/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "toonsynth/error.hpp"

namespace toonsynth::loss {

namespace {

void require_box(const BoundingBox& b, const char* what) {
  if (!b.valid() || !std::isfinite(b.area())) throw InvalidArgument(std::string(what) + " box has no area");
}

struct GiouParts {
  double value;
  std::array<double, 4> grad;  // d GIoU / d pred
};

GiouParts giou_with_grad(const BoundingBox& p, const BoundingBox& g) {
  const double pw = p.x_max - p.x_min, ph = p.y_max - p.y_min;
  const double ap = pw * ph, ag = g.area();

  const double ix0 = std::max(p.x_min, g.x_min), ix1 = std::min(p.x_max, g.x_max);
  const double iy0 = std::max(p.y_min, g.y_min), iy1 = std::min(p.y_max, g.y_max);
  const double iw = std::max(0.0, ix1 - ix0), ih = std::max(0.0, iy1 - iy0);
  const double inter = iw * ih;
  const double uni = ap + ag - inter;

  const double cw = std::max(p.x_max, g.x_max) - std::min(p.x_min, g.x_min);
  const double ch = std::max(p.y_max, g.y_max) - std::min(p.y_min, g.y_min);
  const double c = cw * ch;

  const double value = inter / uni - (c - uni) / c;

  // Partial derivatives of iw, ih, cw, ch w.r.t. (x_min, y_min, x_max, y_max).
  std::array<double, 4> diw{}, dih{}, dcw{}, dch{};
  if (iw > 0.0) {
    diw[0] = p.x_min > g.x_min ? -1.0 : 0.0;
    diw[2] = p.x_max < g.x_max ? 1.0 : 0.0;
  }
  if (ih > 0.0) {
    dih[1] = p.y_min > g.y_min ? -1.0 : 0.0;
    dih[3] = p.y_max < g.y_max ? 1.0 : 0.0;
  }
  dcw[0] = p.x_min < g.x_min ? -1.0 : 0.0;
  dcw[2] = p.x_max > g.x_max ? 1.0 : 0.0;
  dch[1] = p.y_min < g.y_min ? -1.0 : 0.0;
  dch[3] = p.y_max > g.y_max ? 1.0 : 0.0;
  const std::array<double, 4> dap{-ph, -pw, ph, pw};

  GiouParts r{value, {}};
  for (int k = 0; k < 4; ++k) {
    const double di = diw[k] * ih + iw * dih[k];
    const double du = dap[k] - di;
    const double dc = dcw[k] * ch + cw * dch[k];
    r.grad[k] = di / uni - inter * du / (uni * uni) + du / c - uni * dc / (c * c);
  }
  return r;
}

}  // namespace

double giou(const BoundingBox& a, const BoundingBox& b) {
  require_box(a, "first");
  require_box(b, "second");
  return giou_with_grad(a, b).value;
}

BoxLoss giou_loss(std::span<const BoundingBox> pred, std::span<const BoundingBox> gt, GiouMode mode) {
  if (pred.empty()) throw InvalidArgument("giou_loss needs at least one box pair");
  if (pred.size() != gt.size()) throw InvalidArgument("giou_loss: prediction and target counts differ");
  const double n = static_cast<double>(pred.size());
  const double sign = mode == GiouMode::Standard ? -1.0 : 1.0;
  BoxLoss out;
  out.grad.resize(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    require_box(pred[i], "predicted");
    require_box(gt[i], "target");
    const GiouParts g = giou_with_grad(pred[i], gt[i]);
    out.value += (mode == GiouMode::Standard ? 1.0 - g.value : g.value) / n;
    for (int k = 0; k < 4; ++k) out.grad[i][k] = sign * g.grad[k] / n;
  }
  return out;
}

VectorLoss quality_focal_loss(std::span<const double> y, std::span<const double> sigma, double beta, double eps) {
  if (y.size() != sigma.size()) throw InvalidArgument("quality_focal_loss: size mismatch");
  if (beta < 0.0) throw InvalidArgument("quality_focal_loss: beta must be >= 0");
  VectorLoss out;
  out.grad.assign(y.size(), 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool clipped = sigma[i] < eps || sigma[i] > 1.0 - eps;
    const double s = std::clamp(sigma[i], eps, 1.0 - eps);
    const double d = s - y[i];
    const double m = std::pow(std::fabs(d), beta);
    const double ce = -((1.0 - y[i]) * std::log(1.0 - s) + y[i] * std::log(s));
    out.value += m * ce;
    if (clipped) continue;
    const double dm = (d == 0.0 || beta == 0.0) ? 0.0 : beta * std::pow(std::fabs(d), beta - 1.0) * (d > 0 ? 1.0 : -1.0);
    const double dce = (1.0 - y[i]) / (1.0 - s) - y[i] / s;
    out.grad[i] = dm * ce + m * dce;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Resampler::Tap> Resampler::taps(int in, int out) {
  std::vector<Tap> t(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    const double src = std::clamp((o + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
    const int i0 = static_cast<int>(std::floor(src));
    const int i1 = std::min(i0 + 1, in - 1);
    const double f = src - i0;
    t[static_cast<std::size_t>(o)] = {i0, i1, 1.0 - f, f};
  }
  return t;
}

Resampler::Resampler(int in_h, int in_w, int out_h, int out_w)
    : in_h_(in_h), in_w_(in_w), out_h_(out_h), out_w_(out_w) {
  if (in_h < 1 || in_w < 1 || out_h < 1 || out_w < 1) throw InvalidArgument("resampler sizes must be positive");
  ty_ = taps(in_h, out_h);
  tx_ = taps(in_w, out_w);
}

void Resampler::forward(const double* in, double* out) const {
  for (int y = 0; y < out_h_; ++y) {
    const Tap& ty = ty_[static_cast<std::size_t>(y)];
    const double* r0 = in + static_cast<std::ptrdiff_t>(ty.i0) * in_w_;
    const double* r1 = in + static_cast<std::ptrdiff_t>(ty.i1) * in_w_;
    for (int x = 0; x < out_w_; ++x) {
      const Tap& tx = tx_[static_cast<std::size_t>(x)];
      out[static_cast<std::ptrdiff_t>(y) * out_w_ + x] =
          ty.w0 * (tx.w0 * r0[tx.i0] + tx.w1 * r0[tx.i1]) + ty.w1 * (tx.w0 * r1[tx.i0] + tx.w1 * r1[tx.i1]);
    }
  }
}

void Resampler::adjoint(const double* out_grad, double* in_grad) const {
  for (int y = 0; y < out_h_; ++y) {
    const Tap& ty = ty_[static_cast<std::size_t>(y)];
    double* r0 = in_grad + static_cast<std::ptrdiff_t>(ty.i0) * in_w_;
    double* r1 = in_grad + static_cast<std::ptrdiff_t>(ty.i1) * in_w_;
    for (int x = 0; x < out_w_; ++x) {
      const Tap& tx = tx_[static_cast<std::size_t>(x)];
      const double g = out_grad[static_cast<std::ptrdiff_t>(y) * out_w_ + x];
      r0[tx.i0] += ty.w0 * tx.w0 * g;
      r0[tx.i1] += ty.w0 * tx.w1 * g;
      r1[tx.i0] += ty.w1 * tx.w0 * g;
      r1[tx.i1] += ty.w1 * tx.w1 * g;
    }
  }
}

TensorLoss dice_loss(const Tensor& pred, const Tensor& gt, double eps, int size) {
  if (pred.rank() != 3 || gt.rank() != 3) throw InvalidArgument("dice_loss expects N x H x W stacks");
  const int n = pred.dim(0);
  if (n == 0) throw InvalidArgument("dice_loss needs at least one mask");
  if (gt.dim(0) != n) throw InvalidArgument("dice_loss: prediction and target counts differ");

  const Resampler rp(pred.dim(1), pred.dim(2), size, size);
  const Resampler rg(gt.dim(1), gt.dim(2), size, size);
  const std::size_t plane = static_cast<std::size_t>(size) * size;
  const std::size_t pin = static_cast<std::size_t>(pred.dim(1)) * pred.dim(2);
  const std::size_t gin = static_cast<std::size_t>(gt.dim(1)) * gt.dim(2);

  TensorLoss out;
  out.grad = Tensor(pred.shape);
  std::vector<double> p(plane), g(plane), dp(plane);
  for (int i = 0; i < n; ++i) {
    rp.forward(pred.data.data() + i * pin, p.data());
    rg.forward(gt.data.data() + i * gin, g.data());
    double a = 0.0, b = 0.0, c = 0.0;
    for (std::size_t j = 0; j < plane; ++j) {
      a += g[j] * p[j];
      b += g[j] * g[j];
      c += p[j] * p[j];
    }
    const double den = b + c + eps;
    out.value += (1.0 - 2.0 * a / den) / n;
    for (std::size_t j = 0; j < plane; ++j) dp[j] = -2.0 * (g[j] * den - 2.0 * a * p[j]) / (den * den) / n;
    rp.adjoint(dp.data(), out.grad.data.data() + i * pin);
  }
  return out;
}

// ---------------------------------------------------------------------------

PyramidLoss feature_mse_loss(std::span<const Tensor> pred, std::span<const Tensor> gt, Reduction reduction) {
  if (pred.size() != gt.size()) throw InvalidArgument("feature_mse_loss: level count mismatch");
  PyramidLoss out;
  for (std::size_t d = 0; d < pred.size(); ++d) {
    if (!pred[d].same_shape(gt[d])) {
      throw InvalidArgument("feature_mse_loss: shape mismatch at level " + std::to_string(d + 1));
    }
    const double scale = reduction == Reduction::Mean && pred[d].size() > 0 ? 1.0 / pred[d].size() : 1.0;
    Tensor g(pred[d].shape);
    double sum = 0.0;
    for (std::size_t j = 0; j < pred[d].size(); ++j) {
      const double diff = pred[d].data[j] - gt[d].data[j];
      sum += diff * diff;
      g.data[j] = 2.0 * diff * scale;
    }
    out.value += sum * scale;
    out.grad.push_back(std::move(g));
  }
  return out;
}

Tensor ppa_weight_map(const Tensor& gt, int pool, double gain) {
  if (gt.rank() != 2) throw InvalidArgument("ppa weight map expects an H x W mask");
  if (pool < 1 || pool % 2 == 0) throw InvalidArgument("ppa pool size must be odd");
  const int h = gt.dim(0), w = gt.dim(1), r = pool / 2;
  std::vector<double> rows(gt.size(), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int k = std::max(0, x - r); k <= std::min(w - 1, x + r); ++k) s += gt.data[static_cast<std::size_t>(y) * w + k];
      rows[static_cast<std::size_t>(y) * w + x] = s;
    }
  }
  Tensor out(gt.shape);
  const double div = static_cast<double>(pool) * pool;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int k = std::max(0, y - r); k <= std::min(h - 1, y + r); ++k) s += rows[static_cast<std::size_t>(k) * w + x];
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      out.data[i] = 1.0 + gain * std::fabs(s / div - gt.data[i]);
    }
  }
  return out;
}

PyramidLoss ppa_loss(std::span<const Tensor> side, const Tensor& gt, std::span<const double> level_weights,
                     double eps, int pool, double gain) {
  if (side.size() != level_weights.size()) throw InvalidArgument("ppa_loss: one weight per side level required");
  if (gt.rank() != 2) throw InvalidArgument("ppa_loss expects an H x W ground truth");
  const int h = gt.dim(0), w = gt.dim(1);
  const Tensor wmap = ppa_weight_map(gt, pool, gain);
  const double wsum = std::accumulate(wmap.data.begin(), wmap.data.end(), 0.0);
  const std::size_t n = gt.size();

  PyramidLoss out;
  std::vector<double> up(n), dp(n);
  for (std::size_t d = 0; d < side.size(); ++d) {
    if (side[d].rank() != 2) throw InvalidArgument("ppa_loss: side outputs must be H x W");
    const Resampler rs(side[d].dim(0), side[d].dim(1), h, w);
    rs.forward(side[d].data.data(), up.data());

    double bce = 0.0, inter = 0.0, uni = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double p = std::clamp(up[j], eps, 1.0 - eps), g = gt.data[j], wj = wmap.data[j];
      bce += wj * -(g * std::log(p) + (1.0 - g) * std::log(1.0 - p));
      inter += wj * p * g;
      uni += wj * (p + g - p * g);
    }
    const double lam = level_weights[d];
    out.value += lam * (bce / wsum + 1.0 - inter / uni);

    for (std::size_t j = 0; j < n; ++j) {
      if (up[j] < eps || up[j] > 1.0 - eps) {
        dp[j] = 0.0;
        continue;
      }
      const double p = up[j], g = gt.data[j], wj = wmap.data[j];
      const double dbce = wj * (-g / p + (1.0 - g) / (1.0 - p)) / wsum;
      const double diou = (wj * g * uni - inter * wj * (1.0 - g)) / (uni * uni);
      dp[j] = lam * (dbce - diou);
    }
    Tensor g(side[d].shape);
    rs.adjoint(dp.data(), g.data.data());
    out.grad.push_back(std::move(g));
  }
  return out;
}

double stage1_loss(double box, double conf, double mask, const Stage1Weights& w) {
  return w.box * box + w.conf * conf + w.mask * mask;
}

double stage2_loss(double is, double ppa) { return is + ppa; }

// ---------------------------------------------------------------------------

std::size_t AnchorGrid::count() const noexcept {
  std::size_t n = 0;
  for (int s : sizes) n += static_cast<std::size_t>(s) * s;
  return n;
}

double AnchorGrid::stride(std::size_t level) const {
  return static_cast<double>(input_size) / sizes.at(level);
}

std::size_t AnchorGrid::level_of(std::size_t candidate) const {
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    const auto cells = static_cast<std::size_t>(sizes[l]) * sizes[l];
    if (candidate < cells) return l;
    candidate -= cells;
  }
  throw InvalidArgument("candidate index out of range");
}

std::array<double, 2> AnchorGrid::center(std::size_t candidate) const {
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    const auto n = static_cast<std::size_t>(sizes[l]);
    if (candidate < n * n) {
      const double s = stride(l);
      return {(static_cast<double>(candidate % n) + 0.5) * s, (static_cast<double>(candidate / n) + 0.5) * s};
    }
    candidate -= n * n;
  }
  throw InvalidArgument("candidate index out of range");
}

BoundingBox decode(const AnchorGrid& grid, std::size_t candidate, const std::array<double, 4>& tlbr) {
  const auto c = grid.center(candidate);
  return {c[0] - tlbr[1], c[1] - tlbr[0], c[0] + tlbr[3], c[1] + tlbr[2]};
}

std::vector<BoundingBox> decode_all(const AnchorGrid& grid, std::span<const std::array<double, 4>> tlbr) {
  if (tlbr.size() != grid.count()) throw InvalidArgument("one offset vector per candidate required");
  std::vector<BoundingBox> out;
  out.reserve(tlbr.size());
  for (std::size_t i = 0; i < tlbr.size(); ++i) out.push_back(decode(grid, i, tlbr[i]));
  return out;
}

std::vector<Assignment> assign_labels(const AnchorGrid& grid, std::span<const BoundingBox> decoded,
                                      std::span<const double> confidences, std::span<const BoundingBox> gts,
                                      double center_weight) {
  if (decoded.size() != confidences.size()) throw InvalidArgument("assign_labels: one confidence per candidate");
  if (gts.size() > decoded.size()) throw InvalidArgument("assign_labels: more targets than candidates");
  std::vector<std::size_t> order(gts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return gts[a].area() > gts[b].area(); });

  std::vector<bool> taken(decoded.size(), false);
  std::vector<Assignment> out(gts.size());
  for (std::size_t gi : order) {
    const BoundingBox& g = gts[gi];
    Assignment best{gi, decoded.size(), 0.0, 0.0, 0.0};
    for (std::size_t c = 0; c < decoded.size(); ++c) {
      if (taken[c]) continue;
      const double v = iou(decoded[c], g);
      const double dx = decoded[c].center_x() - g.center_x(), dy = decoded[c].center_y() - g.center_y();
      const double cost = -v + center_weight * std::sqrt(dx * dx + dy * dy) / grid.input_size;
      if (best.candidate == decoded.size() || cost < best.cost) best = {gi, c, v, cost, confidences[c]};
    }
    taken[best.candidate] = true;
    out[gi] = best;
  }
  return out;
}

}  // namespace toonsynth::loss
