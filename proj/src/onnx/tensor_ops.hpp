#pragma once

// Dense NCHW float tensors and the operator subset the tap graphs use.
// Internal to the ONNX backend.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace deepsep::onnx_rt {

struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<float> f;          // float payload
  std::vector<std::int64_t> i;   // integer payload (shapes, indices)
  bool is_int = false;

  std::size_t numel() const;
  std::int64_t dim(int axis) const;  // negative axes count from the back
  int rank() const { return static_cast<int>(shape.size()); }

  static Tensor zeros(std::vector<std::int64_t> shape);
  static Tensor ints(std::vector<std::int64_t> shape, std::vector<std::int64_t> values);
};

struct Attribute {
  std::int64_t i = 0;
  float f = 0.0f;
  std::string s;
  std::vector<std::int64_t> ints;
  std::vector<float> floats;
  Tensor t;
  bool has_tensor = false;
};

struct Node {
  std::string op_type;
  std::string name;
  std::vector<std::string> inputs;   // "" marks an omitted optional input
  std::vector<std::string> outputs;
  std::map<std::string, Attribute> attrs;

  bool has(const std::string& key) const { return attrs.count(key) != 0; }
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  float get_float(const std::string& key, float fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::vector<std::int64_t> get_ints(const std::string& key,
                                     std::vector<std::int64_t> fallback = {}) const;
};

// Inputs are positional; nullptr marks an omitted optional input. Throws
// Error(BackendFailure) on unsupported attributes and Error(ImageTooSmall)
// when a spatial dimension collapses to zero.
std::vector<Tensor> run_op(const Node& node, const std::vector<const Tensor*>& inputs);

bool op_supported(const std::string& op_type);

// Individual kernels, exposed for tests.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor* bias, std::vector<std::int64_t> strides,
              std::vector<std::int64_t> pads, std::vector<std::int64_t> dilations,
              std::int64_t group);
Tensor max_pool2d(const Tensor& x, std::vector<std::int64_t> kernel,
                  std::vector<std::int64_t> strides, std::vector<std::int64_t> pads,
                  bool ceil_mode);
Tensor avg_pool2d(const Tensor& x, std::vector<std::int64_t> kernel,
                  std::vector<std::int64_t> strides, std::vector<std::int64_t> pads, bool ceil_mode,
                  bool count_include_pad);

}  // namespace deepsep::onnx_rt
