#include "tensor_ops.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>

#include "deepsep/error.hpp"
#include "deepsep/simd.hpp"

namespace deepsep::onnx_rt {

namespace {

[[noreturn]] void Fail(const std::string& what) { throw Error(ErrorCode::BackendFailure, what); }

[[noreturn]] void TooSmall(const std::string& op) {
  throw Error(ErrorCode::ImageTooSmall, op + " output would have a zero spatial dimension");
}

std::int64_t NormalizeAxis(std::int64_t axis, int rank) {
  if (axis < 0) axis += rank;
  if (axis < 0 || axis >= rank) Fail("axis out of range");
  return axis;
}

const Tensor& Need(const std::vector<const Tensor*>& in, std::size_t idx, const Node& node) {
  if (idx >= in.size() || in[idx] == nullptr) {
    Fail(node.op_type + " '" + node.name + "' is missing input " + std::to_string(idx));
  }
  return *in[idx];
}

const Tensor* Optional(const std::vector<const Tensor*>& in, std::size_t idx) {
  return idx < in.size() ? in[idx] : nullptr;
}

std::vector<std::int64_t> IntsOf(const Tensor& t) {
  if (t.is_int) return t.i;
  std::vector<std::int64_t> out;
  for (float v : t.f) out.push_back(static_cast<std::int64_t>(v));
  return out;
}

void Expect4d(const Tensor& x, const std::string& op) {
  if (x.rank() != 4) Fail(op + " expects an NCHW tensor");
}

// Output extent of a pooling/conv window sweep, PyTorch ceil_mode rule.
std::int64_t PooledExtent(std::int64_t in, std::int64_t k, std::int64_t s, std::int64_t pad_begin,
                          std::int64_t pad_end, bool ceil_mode) {
  const std::int64_t span = in + pad_begin + pad_end - k + (ceil_mode ? s - 1 : 0);
  if (span < 0) return 0;
  std::int64_t out = span / s + 1;
  if (ceil_mode && (out - 1) * s >= in + pad_begin) --out;
  return out;
}

}  // namespace

std::size_t Tensor::numel() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, std::int64_t b) { return a * static_cast<std::size_t>(b); });
}

std::int64_t Tensor::dim(int axis) const {
  return shape[static_cast<std::size_t>(NormalizeAxis(axis, rank()))];
}

Tensor Tensor::zeros(std::vector<std::int64_t> shape) {
  Tensor t;
  t.shape = std::move(shape);
  t.f.assign(t.numel(), 0.0f);
  return t;
}

Tensor Tensor::ints(std::vector<std::int64_t> shape, std::vector<std::int64_t> values) {
  Tensor t;
  t.shape = std::move(shape);
  t.i = std::move(values);
  t.is_int = true;
  return t;
}

std::int64_t Node::get_int(const std::string& key, std::int64_t fallback) const {
  const auto it = attrs.find(key);
  return it == attrs.end() ? fallback : it->second.i;
}

float Node::get_float(const std::string& key, float fallback) const {
  const auto it = attrs.find(key);
  return it == attrs.end() ? fallback : it->second.f;
}

std::string Node::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = attrs.find(key);
  return it == attrs.end() ? fallback : it->second.s;
}

std::vector<std::int64_t> Node::get_ints(const std::string& key,
                                         std::vector<std::int64_t> fallback) const {
  const auto it = attrs.find(key);
  return it == attrs.end() ? fallback : it->second.ints;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, std::vector<std::int64_t> strides,
              std::vector<std::int64_t> pads, std::vector<std::int64_t> dilations,
              std::int64_t group) {
  Expect4d(x, "Conv");
  if (w.rank() != 4) Fail("Conv weights must be 4-D");
  if (strides.empty()) strides = {1, 1};
  if (pads.empty()) pads = {0, 0, 0, 0};
  if (dilations.empty()) dilations = {1, 1};
  const std::int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], wd = x.shape[3];
  const std::int64_t m = w.shape[0], cg = w.shape[1], kh = w.shape[2], kw = w.shape[3];
  if (group < 1 || c != cg * group || m % group != 0) Fail("Conv channel/group mismatch");
  const std::int64_t sh = strides[0], sw = strides[1];
  const std::int64_t dh = dilations[0], dw = dilations[1];
  const std::int64_t pt = pads[0], pl = pads[1], pb = pads[2], pr = pads[3];
  const std::int64_t ekh = (kh - 1) * dh + 1, ekw = (kw - 1) * dw + 1;
  const std::int64_t oh = PooledExtent(h, ekh, sh, pt, pb, false);
  const std::int64_t ow = PooledExtent(wd, ekw, sw, pl, pr, false);
  if (oh < 1 || ow < 1) TooSmall("Conv");

  Tensor y = Tensor::zeros({n, m, oh, ow});
  const std::int64_t mg = m / group;
  const std::int64_t kdim = cg * kh * kw;
  const std::int64_t npix = oh * ow;
  const bool pointwise = kh == 1 && kw == 1 && sh == 1 && sw == 1 && pt == 0 && pl == 0 &&
                         pb == 0 && pr == 0;
  const auto& kernels = simd::kernels();

  // Column chunk so the im2col panel stays around 8 MiB.
  const std::int64_t chunk =
      std::max<std::int64_t>(16, std::min<std::int64_t>(npix, (2 << 20) / std::max<std::int64_t>(kdim, 1)));
  std::vector<float> col(pointwise ? 0 : static_cast<std::size_t>(kdim * chunk));

  for (std::int64_t b = 0; b < n; ++b) {
    float* ybase = y.f.data() + b * m * npix;
    if (bias != nullptr) {
      for (std::int64_t oc = 0; oc < m; ++oc) {
        std::fill_n(ybase + oc * npix, npix, bias->f[static_cast<std::size_t>(oc)]);
      }
    }
    for (std::int64_t g = 0; g < group; ++g) {
      const float* xg = x.f.data() + (b * c + g * cg) * h * wd;
      const float* wg = w.f.data() + g * mg * kdim;
      float* yg = ybase + g * mg * npix;
      if (pointwise) {
        kernels.gemm_f32(mg, npix, kdim, wg, kdim, xg, h * wd, yg, npix);
        continue;
      }
      for (std::int64_t j0 = 0; j0 < npix; j0 += chunk) {
        const std::int64_t nc = std::min(chunk, npix - j0);
        for (std::int64_t ci = 0; ci < cg; ++ci) {
          const float* plane = xg + ci * h * wd;
          for (std::int64_t ky = 0; ky < kh; ++ky) {
            for (std::int64_t kx = 0; kx < kw; ++kx) {
              float* dst = col.data() + ((ci * kh + ky) * kw + kx) * nc;
              for (std::int64_t j = 0; j < nc; ++j) {
                const std::int64_t p = j0 + j;
                const std::int64_t iy = (p / ow) * sh - pt + ky * dh;
                const std::int64_t ix = (p % ow) * sw - pl + kx * dw;
                dst[j] = (iy >= 0 && iy < h && ix >= 0 && ix < wd) ? plane[iy * wd + ix] : 0.0f;
              }
            }
          }
        }
        kernels.gemm_f32(mg, nc, kdim, wg, kdim, col.data(), nc, yg + j0, npix);
      }
    }
  }
  return y;
}

Tensor max_pool2d(const Tensor& x, std::vector<std::int64_t> kernel,
                  std::vector<std::int64_t> strides, std::vector<std::int64_t> pads,
                  bool ceil_mode) {
  Expect4d(x, "MaxPool");
  if (kernel.size() != 2) Fail("MaxPool expects a 2-D kernel");
  if (strides.empty()) strides = {1, 1};
  if (pads.empty()) pads = {0, 0, 0, 0};
  const std::int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
  const std::int64_t oh = PooledExtent(h, kernel[0], strides[0], pads[0], pads[2], ceil_mode);
  const std::int64_t ow = PooledExtent(w, kernel[1], strides[1], pads[1], pads[3], ceil_mode);
  if (oh < 1 || ow < 1) TooSmall("MaxPool");
  Tensor y = Tensor::zeros({n, c, oh, ow});
  for (std::int64_t p = 0; p < n * c; ++p) {
    const float* src = x.f.data() + p * h * w;
    float* dst = y.f.data() + p * oh * ow;
    for (std::int64_t oy = 0; oy < oh; ++oy) {
      const std::int64_t y0 = std::max<std::int64_t>(oy * strides[0] - pads[0], 0);
      const std::int64_t y1 = std::min<std::int64_t>(oy * strides[0] - pads[0] + kernel[0], h);
      for (std::int64_t ox = 0; ox < ow; ++ox) {
        const std::int64_t x0 = std::max<std::int64_t>(ox * strides[1] - pads[1], 0);
        const std::int64_t x1 = std::min<std::int64_t>(ox * strides[1] - pads[1] + kernel[1], w);
        float best = -std::numeric_limits<float>::infinity();
        for (std::int64_t yy = y0; yy < y1; ++yy) {
          for (std::int64_t xx = x0; xx < x1; ++xx) best = std::max(best, src[yy * w + xx]);
        }
        dst[oy * ow + ox] = best;
      }
    }
  }
  return y;
}

Tensor avg_pool2d(const Tensor& x, std::vector<std::int64_t> kernel,
                  std::vector<std::int64_t> strides, std::vector<std::int64_t> pads, bool ceil_mode,
                  bool count_include_pad) {
  Expect4d(x, "AveragePool");
  if (kernel.size() != 2) Fail("AveragePool expects a 2-D kernel");
  if (strides.empty()) strides = {1, 1};
  if (pads.empty()) pads = {0, 0, 0, 0};
  const std::int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
  const std::int64_t oh = PooledExtent(h, kernel[0], strides[0], pads[0], pads[2], ceil_mode);
  const std::int64_t ow = PooledExtent(w, kernel[1], strides[1], pads[1], pads[3], ceil_mode);
  if (oh < 1 || ow < 1) TooSmall("AveragePool");
  Tensor y = Tensor::zeros({n, c, oh, ow});
  for (std::int64_t p = 0; p < n * c; ++p) {
    const float* src = x.f.data() + p * h * w;
    float* dst = y.f.data() + p * oh * ow;
    for (std::int64_t oy = 0; oy < oh; ++oy) {
      const std::int64_t ys = oy * strides[0] - pads[0];
      const std::int64_t y0 = std::max<std::int64_t>(ys, 0);
      const std::int64_t y1 = std::min<std::int64_t>(ys + kernel[0], h);
      const std::int64_t ypad_end = std::min<std::int64_t>(ys + kernel[0], h + pads[2]);
      for (std::int64_t ox = 0; ox < ow; ++ox) {
        const std::int64_t xs = ox * strides[1] - pads[1];
        const std::int64_t x0 = std::max<std::int64_t>(xs, 0);
        const std::int64_t x1 = std::min<std::int64_t>(xs + kernel[1], w);
        const std::int64_t xpad_end = std::min<std::int64_t>(xs + kernel[1], w + pads[3]);
        double acc = 0.0;
        for (std::int64_t yy = y0; yy < y1; ++yy) {
          for (std::int64_t xx = x0; xx < x1; ++xx) acc += src[yy * w + xx];
        }
        const double count = count_include_pad
                                 ? static_cast<double>((ypad_end - ys) * (xpad_end - xs))
                                 : static_cast<double>((y1 - y0) * (x1 - x0));
        dst[oy * ow + ox] = static_cast<float>(acc / count);
      }
    }
  }
  return y;
}

namespace {

std::vector<std::int64_t> BroadcastShape(const Tensor& a, const Tensor& b) {
  const int r = std::max(a.rank(), b.rank());
  std::vector<std::int64_t> out(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) {
    const int ia = a.rank() - r + i, ib = b.rank() - r + i;
    const std::int64_t da = ia >= 0 ? a.shape[static_cast<std::size_t>(ia)] : 1;
    const std::int64_t db = ib >= 0 ? b.shape[static_cast<std::size_t>(ib)] : 1;
    if (da != db && da != 1 && db != 1) Fail("incompatible broadcast shapes");
    out[static_cast<std::size_t>(i)] = std::max(da, db);
  }
  return out;
}

std::vector<std::int64_t> BroadcastStrides(const Tensor& t, const std::vector<std::int64_t>& shape) {
  const int r = static_cast<int>(shape.size());
  std::vector<std::int64_t> strides(static_cast<std::size_t>(r), 0);
  std::int64_t s = 1;
  for (int i = t.rank() - 1; i >= 0; --i) {
    const int o = r - t.rank() + i;
    strides[static_cast<std::size_t>(o)] = t.shape[static_cast<std::size_t>(i)] == 1 ? 0 : s;
    s *= t.shape[static_cast<std::size_t>(i)];
  }
  return strides;
}

std::vector<float> AsFloat(const Tensor& t) {
  if (!t.is_int) return t.f;
  return std::vector<float>(t.i.begin(), t.i.end());
}

Tensor Binary(const Tensor& a, const Tensor& b, const std::function<float(float, float)>& fn) {
  Tensor y;
  y.shape = BroadcastShape(a, b);
  const std::size_t total = y.numel();
  y.f.resize(total);
  const auto af = AsFloat(a);
  const auto bf = AsFloat(b);
  if (a.shape == b.shape) {
    for (std::size_t k = 0; k < total; ++k) y.f[k] = fn(af[k], bf[k]);
    return y;
  }
  const auto sa = BroadcastStrides(a, y.shape);
  const auto sb = BroadcastStrides(b, y.shape);
  const int r = y.rank();
  std::vector<std::int64_t> idx(static_cast<std::size_t>(r), 0);
  std::int64_t oa = 0, ob = 0;
  for (std::size_t k = 0; k < total; ++k) {
    y.f[k] = fn(af[static_cast<std::size_t>(oa)], bf[static_cast<std::size_t>(ob)]);
    for (int d = r - 1; d >= 0; --d) {
      const auto u = static_cast<std::size_t>(d);
      ++idx[u];
      oa += sa[u];
      ob += sb[u];
      if (idx[u] < y.shape[u]) break;
      oa -= sa[u] * idx[u];
      ob -= sb[u] * idx[u];
      idx[u] = 0;
    }
  }
  return y;
}

Tensor Concat(const Node& node, const std::vector<const Tensor*>& in) {
  if (in.empty()) Fail("Concat without inputs");
  const Tensor& first = Need(in, 0, node);
  const auto axis = static_cast<std::size_t>(NormalizeAxis(node.get_int("axis", 0), first.rank()));
  Tensor y;
  y.shape = first.shape;
  y.is_int = first.is_int;
  y.shape[axis] = 0;
  for (std::size_t k = 0; k < in.size(); ++k) {
    const Tensor& t = Need(in, k, node);
    if (t.rank() != first.rank()) Fail("Concat rank mismatch");
    for (std::size_t d = 0; d < first.shape.size(); ++d) {
      if (d != axis && t.shape[d] != first.shape[d]) Fail("Concat shape mismatch");
    }
    y.shape[axis] += t.shape[axis];
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= static_cast<std::size_t>(first.shape[d]);
  for (std::size_t d = axis + 1; d < first.shape.size(); ++d) inner *= static_cast<std::size_t>(first.shape[d]);
  if (y.is_int) y.i.resize(y.numel()); else y.f.resize(y.numel());
  const std::size_t out_row = static_cast<std::size_t>(y.shape[axis]) * inner;
  std::size_t offset = 0;
  for (const Tensor* t : in) {
    const std::size_t row = static_cast<std::size_t>(t->shape[axis]) * inner;
    for (std::size_t o = 0; o < outer; ++o) {
      if (y.is_int) {
        std::copy_n(t->i.data() + o * row, row, y.i.data() + o * out_row + offset);
      } else {
        std::copy_n(t->f.data() + o * row, row, y.f.data() + o * out_row + offset);
      }
    }
    offset += row;
  }
  return y;
}

Tensor BatchNorm(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& x = Need(in, 0, node);
  const Tensor& scale = Need(in, 1, node);
  const Tensor& bias = Need(in, 2, node);
  const Tensor& mean = Need(in, 3, node);
  const Tensor& var = Need(in, 4, node);
  const float eps = node.get_float("epsilon", 1e-5f);
  Tensor y = x;
  const std::int64_t n = x.shape[0], c = x.shape[1];
  const std::size_t inner = x.numel() / static_cast<std::size_t>(n * c);
  const auto& k = simd::kernels();
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const auto u = static_cast<std::size_t>(ch);
      const float s = scale.f[u] / std::sqrt(var.f[u] + eps);
      const float t = bias.f[u] - mean.f[u] * s;
      float* p = y.f.data() + static_cast<std::size_t>(b * c + ch) * inner;
      k.affine_f32(p, p, inner, s, t);
    }
  }
  return y;
}

Tensor Lrn(const Node& node, const Tensor& x) {
  Expect4d(x, "LRN");
  const std::int64_t size = node.get_int("size", 5);
  const float alpha = node.get_float("alpha", 1e-4f);
  const float beta = node.get_float("beta", 0.75f);
  const float bias = node.get_float("bias", 1.0f);
  const std::int64_t n = x.shape[0], c = x.shape[1];
  const std::int64_t hw = x.shape[2] * x.shape[3];
  Tensor y = x;
  const std::int64_t lo = (size - 1) / 2, hi = size / 2;
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const std::int64_t c0 = std::max<std::int64_t>(0, ch - lo);
      const std::int64_t c1 = std::min<std::int64_t>(c - 1, ch + hi);
      for (std::int64_t p = 0; p < hw; ++p) {
        double sq = 0.0;
        for (std::int64_t q = c0; q <= c1; ++q) {
          const float v = x.f[static_cast<std::size_t>((b * c + q) * hw + p)];
          sq += static_cast<double>(v) * v;
        }
        const auto at = static_cast<std::size_t>((b * c + ch) * hw + p);
        y.f[at] = static_cast<float>(x.f[at] / std::pow(bias + alpha / size * sq, beta));
      }
    }
  }
  return y;
}

Tensor Pad(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& x = Need(in, 0, node);
  Expect4d(x, "Pad");
  if (node.get_string("mode", "constant") != "constant") Fail("Pad supports constant mode only");
  std::vector<std::int64_t> pads = node.get_ints("pads");
  if (const Tensor* p = Optional(in, 1)) pads = IntsOf(*p);
  float value = node.get_float("value", 0.0f);
  if (const Tensor* v = Optional(in, 2); v && !v->f.empty()) value = v->f[0];
  if (pads.size() != 8) Fail("Pad expects 8 pad values for NCHW");
  if (pads[0] || pads[1] || pads[4] || pads[5]) Fail("Pad only supports spatial padding");
  const std::int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
  const std::int64_t oh = h + pads[2] + pads[6], ow = w + pads[3] + pads[7];
  if (oh < 1 || ow < 1) TooSmall("Pad");
  Tensor y = Tensor::zeros({n, c, oh, ow});
  std::fill(y.f.begin(), y.f.end(), value);
  for (std::int64_t p = 0; p < n * c; ++p) {
    for (std::int64_t yy = 0; yy < h; ++yy) {
      const std::int64_t ty = yy + pads[2];
      if (ty < 0 || ty >= oh) continue;
      for (std::int64_t xx = 0; xx < w; ++xx) {
        const std::int64_t tx = xx + pads[3];
        if (tx < 0 || tx >= ow) continue;
        y.f[static_cast<std::size_t>((p * oh + ty) * ow + tx)] =
            x.f[static_cast<std::size_t>((p * h + yy) * w + xx)];
      }
    }
  }
  return y;
}

Tensor Gather(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& data = Need(in, 0, node);
  const Tensor& indices = Need(in, 1, node);
  const auto axis = static_cast<std::size_t>(NormalizeAxis(node.get_int("axis", 0), data.rank()));
  const auto idx = IntsOf(indices);
  Tensor y;
  y.is_int = data.is_int;
  for (std::size_t d = 0; d < axis; ++d) y.shape.push_back(data.shape[d]);
  for (auto d : indices.shape) y.shape.push_back(d);
  for (std::size_t d = axis + 1; d < data.shape.size(); ++d) y.shape.push_back(data.shape[d]);
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= static_cast<std::size_t>(data.shape[d]);
  for (std::size_t d = axis + 1; d < data.shape.size(); ++d) inner *= static_cast<std::size_t>(data.shape[d]);
  const std::int64_t extent = data.shape[axis];
  if (y.is_int) y.i.resize(y.numel()); else y.f.resize(y.numel());
  std::size_t out = 0;
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::int64_t k : idx) {
      if (k < 0) k += extent;
      if (k < 0 || k >= extent) Fail("Gather index out of range");
      const std::size_t src = (o * static_cast<std::size_t>(extent) + static_cast<std::size_t>(k)) * inner;
      if (y.is_int) {
        std::copy_n(data.i.data() + src, inner, y.i.data() + out);
      } else {
        std::copy_n(data.f.data() + src, inner, y.f.data() + out);
      }
      out += inner;
    }
  }
  return y;
}

Tensor Unsqueeze(const Node& node, const std::vector<const Tensor*>& in) {
  Tensor y = Need(in, 0, node);
  std::vector<std::int64_t> axes = node.get_ints("axes");
  if (const Tensor* a = Optional(in, 1)) axes = IntsOf(*a);
  const int out_rank = y.rank() + static_cast<int>(axes.size());
  for (auto& a : axes) a = NormalizeAxis(a, out_rank);
  std::sort(axes.begin(), axes.end());
  for (auto a : axes) y.shape.insert(y.shape.begin() + a, 1);
  return y;
}

Tensor Slice(const Node& node, const std::vector<const Tensor*>& in) {
  const Tensor& x = Need(in, 0, node);
  std::vector<std::int64_t> starts = node.get_ints("starts");
  std::vector<std::int64_t> ends = node.get_ints("ends");
  std::vector<std::int64_t> axes = node.get_ints("axes");
  std::vector<std::int64_t> steps;
  if (const Tensor* t = Optional(in, 1)) starts = IntsOf(*t);
  if (const Tensor* t = Optional(in, 2)) ends = IntsOf(*t);
  if (const Tensor* t = Optional(in, 3)) axes = IntsOf(*t);
  if (const Tensor* t = Optional(in, 4)) steps = IntsOf(*t);
  if (axes.empty()) {
    axes.resize(starts.size());
    std::iota(axes.begin(), axes.end(), 0);
  }
  if (steps.empty()) steps.assign(starts.size(), 1);
  std::vector<std::int64_t> lo(x.shape.size(), 0), step(x.shape.size(), 1);
  std::vector<std::int64_t> shape = x.shape;
  for (std::size_t k = 0; k < axes.size(); ++k) {
    const auto a = static_cast<std::size_t>(NormalizeAxis(axes[k], x.rank()));
    const std::int64_t dim = x.shape[a];
    if (steps[k] != 1) Fail("Slice supports unit steps only");
    std::int64_t s = starts[k] < 0 ? starts[k] + dim : starts[k];
    std::int64_t e = ends[k] < 0 ? ends[k] + dim : ends[k];
    s = std::clamp<std::int64_t>(s, 0, dim);
    e = std::clamp<std::int64_t>(e, 0, dim);
    lo[a] = s;
    shape[a] = std::max<std::int64_t>(0, e - s);
  }
  Tensor y;
  y.shape = shape;
  y.is_int = x.is_int;
  const std::size_t total = y.numel();
  if (y.is_int) y.i.resize(total); else y.f.resize(total);
  std::vector<std::int64_t> src_strides(x.shape.size(), 1);
  for (int d = x.rank() - 2; d >= 0; --d) {
    const auto u = static_cast<std::size_t>(d);
    src_strides[u] = src_strides[u + 1] * x.shape[u + 1];
  }
  std::vector<std::int64_t> idx(shape.size(), 0);
  for (std::size_t k = 0; k < total; ++k) {
    std::int64_t src = 0;
    for (std::size_t d = 0; d < shape.size(); ++d) src += (lo[d] + idx[d]) * src_strides[d];
    if (y.is_int) y.i[k] = x.i[static_cast<std::size_t>(src)];
    else y.f[k] = x.f[static_cast<std::size_t>(src)];
    for (int d = static_cast<int>(shape.size()) - 1; d >= 0; --d) {
      const auto u = static_cast<std::size_t>(d);
      if (++idx[u] < shape[u]) break;
      idx[u] = 0;
    }
  }
  return y;
}

const std::set<std::string>& SupportedOps() {
  static const std::set<std::string> ops = {
      "Conv",    "Relu",      "MaxPool", "AveragePool", "GlobalAveragePool", "Concat",
      "Add",     "Sub",       "Mul",     "Div",         "BatchNormalization", "Identity",
      "Dropout", "Constant",  "Clip",    "Pad",         "LRN",               "Gather",
      "Unsqueeze", "Slice",
  };
  return ops;
}

}  // namespace

bool op_supported(const std::string& op_type) { return SupportedOps().count(op_type) != 0; }

std::vector<Tensor> run_op(const Node& node, const std::vector<const Tensor*>& in) {
  const std::string& op = node.op_type;
  if (op == "Conv") {
    if (node.get_string("auto_pad", "NOTSET") != "NOTSET") Fail("Conv auto_pad is not supported");
    return {conv2d(Need(in, 0, node), Need(in, 1, node), Optional(in, 2), node.get_ints("strides"),
                   node.get_ints("pads"), node.get_ints("dilations"), node.get_int("group", 1))};
  }
  if (op == "Relu") {
    Tensor y = Need(in, 0, node);
    simd::kernels().relu_f32(y.f.data(), y.f.size());
    return {std::move(y)};
  }
  if (op == "MaxPool") {
    if (node.get_string("auto_pad", "NOTSET") != "NOTSET") Fail("MaxPool auto_pad is not supported");
    for (auto d : node.get_ints("dilations")) {
      if (d != 1) Fail("MaxPool dilation is not supported");
    }
    return {max_pool2d(Need(in, 0, node), node.get_ints("kernel_shape"), node.get_ints("strides"),
                       node.get_ints("pads"), node.get_int("ceil_mode", 0) != 0)};
  }
  if (op == "AveragePool") {
    if (node.get_string("auto_pad", "NOTSET") != "NOTSET") Fail("AveragePool auto_pad is not supported");
    return {avg_pool2d(Need(in, 0, node), node.get_ints("kernel_shape"), node.get_ints("strides"),
                       node.get_ints("pads"), node.get_int("ceil_mode", 0) != 0,
                       node.get_int("count_include_pad", 0) != 0)};
  }
  if (op == "GlobalAveragePool") {
    const Tensor& x = Need(in, 0, node);
    Expect4d(x, op);
    const std::int64_t hw = x.shape[2] * x.shape[3];
    Tensor y = Tensor::zeros({x.shape[0], x.shape[1], 1, 1});
    const auto& k = simd::kernels();
    for (std::size_t p = 0; p < y.f.size(); ++p) {
      y.f[p] = static_cast<float>(k.sum_f32(x.f.data() + p * static_cast<std::size_t>(hw),
                                            static_cast<std::size_t>(hw)) / static_cast<double>(hw));
    }
    return {std::move(y)};
  }
  if (op == "Concat") return {Concat(node, in)};
  if (op == "Add") return {Binary(Need(in, 0, node), Need(in, 1, node), std::plus<float>())};
  if (op == "Sub") return {Binary(Need(in, 0, node), Need(in, 1, node), std::minus<float>())};
  if (op == "Mul") return {Binary(Need(in, 0, node), Need(in, 1, node), std::multiplies<float>())};
  if (op == "Div") return {Binary(Need(in, 0, node), Need(in, 1, node), std::divides<float>())};
  if (op == "BatchNormalization") return {BatchNorm(node, in)};
  if (op == "Identity" || op == "Dropout") return {Need(in, 0, node)};
  if (op == "Constant") {
    const auto it = node.attrs.find("value");
    if (it == node.attrs.end() || !it->second.has_tensor) Fail("Constant without tensor value");
    return {it->second.t};
  }
  if (op == "Clip") {
    Tensor y = Need(in, 0, node);
    float lo = node.get_float("min", -std::numeric_limits<float>::infinity());
    float hi = node.get_float("max", std::numeric_limits<float>::infinity());
    if (const Tensor* t = Optional(in, 1); t && !t->f.empty()) lo = t->f[0];
    if (const Tensor* t = Optional(in, 2); t && !t->f.empty()) hi = t->f[0];
    for (auto& v : y.f) v = std::clamp(v, lo, hi);
    return {std::move(y)};
  }
  if (op == "Pad") return {Pad(node, in)};
  if (op == "LRN") return {Lrn(node, Need(in, 0, node))};
  if (op == "Gather") return {Gather(node, in)};
  if (op == "Unsqueeze") return {Unsqueeze(node, in)};
  if (op == "Slice") return {Slice(node, in)};
  Fail("unsupported operator " + op);
}

}  // namespace deepsep::onnx_rt
