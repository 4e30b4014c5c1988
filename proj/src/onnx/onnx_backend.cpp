#include "deepsep/onnx_backend.hpp"

#include <google/protobuf/io/coded_stream.h>
#include <google/protobuf/io/zero_copy_stream_impl_lite.h>

#include <algorithm>
#include <climits>
#include <cstring>
#include <set>
#include <unordered_map>

#include "deepsep/error.hpp"
#include "deepsep/util.hpp"
#include "onnx.pb.h"
#include "tensor_ops.hpp"

namespace deepsep {

namespace {

using onnx_rt::Attribute;
using onnx_rt::Node;
using onnx_rt::Tensor;

[[noreturn]] void Fail(const std::string& what) { throw Error(ErrorCode::BackendFailure, what); }

template <typename T>
std::vector<T> RawValues(const std::string& raw) {
  if (raw.size() % sizeof(T) != 0) Fail("raw tensor payload has a ragged size");
  std::vector<T> out(raw.size() / sizeof(T));
  std::memcpy(out.data(), raw.data(), raw.size());
  return out;
}

Tensor ConvertTensor(const onnx::TensorProto& proto) {
  if (proto.data_location() == onnx::TensorProto::EXTERNAL) {
    Fail("tensor '" + proto.name() + "' uses external data, which is not supported");
  }
  Tensor t;
  t.shape.assign(proto.dims().begin(), proto.dims().end());
  const bool raw = proto.has_raw_data();
  switch (proto.data_type()) {
    case onnx::TensorProto::FLOAT:
      t.f = raw ? RawValues<float>(proto.raw_data())
                : std::vector<float>(proto.float_data().begin(), proto.float_data().end());
      break;
    case onnx::TensorProto::INT64:
      t.is_int = true;
      t.i = raw ? RawValues<std::int64_t>(proto.raw_data())
                : std::vector<std::int64_t>(proto.int64_data().begin(), proto.int64_data().end());
      break;
    case onnx::TensorProto::INT32: {
      t.is_int = true;
      if (raw) {
        const auto v = RawValues<std::int32_t>(proto.raw_data());
        t.i.assign(v.begin(), v.end());
      } else {
        t.i.assign(proto.int32_data().begin(), proto.int32_data().end());
      }
      break;
    }
    default:
      Fail("tensor '" + proto.name() + "' has unsupported element type " +
           std::to_string(proto.data_type()));
  }
  const std::size_t have = t.is_int ? t.i.size() : t.f.size();
  if (have != t.numel()) Fail("tensor '" + proto.name() + "' payload does not match its shape");
  return t;
}

Attribute ConvertAttribute(const onnx::AttributeProto& proto) {
  Attribute a;
  a.i = proto.i();
  a.f = proto.f();
  a.s = proto.s();
  a.ints.assign(proto.ints().begin(), proto.ints().end());
  a.floats.assign(proto.floats().begin(), proto.floats().end());
  if (proto.has_t()) {
    a.t = ConvertTensor(proto.t());
    a.has_tensor = true;
  }
  return a;
}

}  // namespace

struct OnnxBackend::Impl {
  std::filesystem::path path;
  Network network;
  Preprocessing preprocessing;
  std::string input_name;
  std::vector<Node> nodes;
  std::unordered_map<std::string, Tensor> constants;
  std::vector<std::string> exposed;        // registry taps found among graph outputs
  std::unordered_map<std::string, std::size_t> producer;  // value name -> node index

  void Load();
  Tensor MakeInput(const ImageBuffer& img) const;
  std::vector<FeatureMap> Run(const ImageBuffer& img, std::span<const LayerTap> taps) const;
};

void OnnxBackend::Impl::Load() {
  const std::string bytes = read_file(path);
  google::protobuf::io::ArrayInputStream raw(bytes.data(), static_cast<int>(bytes.size()));
  google::protobuf::io::CodedInputStream coded(&raw);
  coded.SetTotalBytesLimit(INT_MAX);
  onnx::ModelProto model;
  if (!model.ParseFromCodedStream(&coded)) Fail("cannot parse ONNX model " + path.string());
  const onnx::GraphProto& graph = model.graph();

  for (const auto& init : graph.initializer()) constants.emplace(init.name(), ConvertTensor(init));
  for (const auto& in : graph.input()) {
    if (constants.count(in.name()) != 0) continue;
    if (!input_name.empty()) Fail("model has more than one runtime input");
    input_name = in.name();
  }
  if (input_name.empty()) Fail("model has no runtime input");

  for (const auto& np : graph.node()) {
    if (!onnx_rt::op_supported(np.op_type())) {
      Fail("unsupported operator " + np.op_type() + " in node '" + np.name() + "'");
    }
    if (!np.domain().empty() && np.domain() != "ai.onnx") {
      Fail("operator domain '" + np.domain() + "' is not supported");
    }
    Node node;
    node.op_type = np.op_type();
    node.name = np.name();
    node.inputs.assign(np.input().begin(), np.input().end());
    node.outputs.assign(np.output().begin(), np.output().end());
    for (const auto& attr : np.attribute()) node.attrs.emplace(attr.name(), ConvertAttribute(attr));
    for (const auto& out : node.outputs) {
      if (!out.empty()) producer[out] = nodes.size();
    }
    nodes.push_back(std::move(node));
  }

  std::set<std::string> known;
  for (const auto& tap : taps_for(network)) known.insert(tap.layer);
  for (const auto& out : graph.output()) {
    if (known.count(out.name()) == 0) continue;
    if (producer.count(out.name()) == 0 && constants.count(out.name()) == 0) {
      Fail("graph output '" + out.name() + "' has no producer");
    }
    exposed.push_back(out.name());
  }
}

Tensor OnnxBackend::Impl::MakeInput(const ImageBuffer& img) const {
  const int h = img.height(), w = img.width();
  Tensor t = Tensor::zeros({1, 3, h, w});
  const auto px = img.data();
  for (int c = 0; c < 3; ++c) {
    const float mean = preprocessing.mean[static_cast<std::size_t>(c)];
    const float sd = preprocessing.std[static_cast<std::size_t>(c)];
    float* plane = t.f.data() + static_cast<std::size_t>(c) * h * w;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t at = static_cast<std::size_t>(y) * w + x;
        const float unit = static_cast<float>(px[at * 3 + static_cast<std::size_t>(c)]) / 255.0f;
        plane[at] = (unit - mean) / sd;
      }
    }
  }
  return t;
}

std::vector<FeatureMap> OnnxBackend::Impl::Run(const ImageBuffer& img,
                                               std::span<const LayerTap> taps) const {
  for (const auto& tap : taps) {
    if (tap.network != network) {
      throw Error(ErrorCode::TapMismatch, "tap " + std::string(to_string(tap.network)) + "/" +
                                              tap.layer + " does not belong to " +
                                              std::string(to_string(network)));
    }
    if (std::find(exposed.begin(), exposed.end(), tap.layer) == exposed.end()) {
      throw Error(ErrorCode::UnknownLayer, "model " + path.filename().string() +
                                               " does not expose layer " + tap.layer);
    }
    if (img.width() < tap.min_input || img.height() < tap.min_input) {
      throw Error(ErrorCode::ImageTooSmall,
                  std::to_string(img.width()) + "x" + std::to_string(img.height()) +
                      " is below the minimum input " + std::to_string(tap.min_input) + " for " +
                      tap.layer);
    }
  }

  // Backward sweep: which nodes feed the requested outputs.
  std::vector<char> needed(nodes.size(), 0);
  std::vector<std::string> stack;
  for (const auto& tap : taps) stack.push_back(tap.layer);
  while (!stack.empty()) {
    const std::string name = std::move(stack.back());
    stack.pop_back();
    const auto it = producer.find(name);
    if (it == producer.end() || needed[it->second]) continue;
    needed[it->second] = 1;
    for (const auto& in : nodes[it->second].inputs) {
      if (!in.empty()) stack.push_back(in);
    }
  }

  // Remaining consumer counts so intermediates are freed after last use.
  std::unordered_map<std::string, int> uses;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    if (!needed[n]) continue;
    for (const auto& in : nodes[n].inputs) {
      if (!in.empty()) ++uses[in];
    }
  }
  for (const auto& tap : taps) ++uses[tap.layer];

  std::unordered_map<std::string, Tensor> values;
  values.emplace(input_name, MakeInput(img));
  auto lookup = [&](const std::string& name) -> const Tensor* {
    if (const auto it = values.find(name); it != values.end()) return &it->second;
    if (const auto it = constants.find(name); it != constants.end()) return &it->second;
    Fail("value '" + name + "' is used before it is produced");
  };

  for (std::size_t n = 0; n < nodes.size(); ++n) {
    if (!needed[n]) continue;
    const Node& node = nodes[n];
    std::vector<const Tensor*> args;
    args.reserve(node.inputs.size());
    for (const auto& in : node.inputs) args.push_back(in.empty() ? nullptr : lookup(in));
    std::vector<Tensor> results = onnx_rt::run_op(node, args);
    for (const auto& in : node.inputs) {
      if (in.empty()) continue;
      if (--uses[in] == 0) values.erase(in);
    }
    for (std::size_t k = 0; k < node.outputs.size() && k < results.size(); ++k) {
      if (!node.outputs[k].empty()) values[node.outputs[k]] = std::move(results[k]);
    }
  }

  std::vector<FeatureMap> maps;
  maps.reserve(taps.size());
  for (const auto& tap : taps) {
    const Tensor* t = lookup(tap.layer);
    if (t->rank() != 4 || t->shape[0] != 1) Fail("tap " + tap.layer + " is not a 1xCxHxW tensor");
    if (t->shape[1] != tap.channels) {
      throw Error(ErrorCode::TapMismatch, "tap " + tap.layer + " has " +
                                              std::to_string(t->shape[1]) +
                                              " channels, registry says " +
                                              std::to_string(tap.channels));
    }
    if (t->shape[2] < 1 || t->shape[3] < 1) {
      throw Error(ErrorCode::ImageTooSmall, "tap " + tap.layer + " collapsed to zero size");
    }
    maps.emplace_back(static_cast<int>(t->shape[2]), static_cast<int>(t->shape[3]),
                      static_cast<int>(t->shape[1]), t->f);
  }
  return maps;
}

OnnxBackend::OnnxBackend(const std::filesystem::path& model_path, Network network,
                         Preprocessing preprocessing)
    : impl_(std::make_unique<Impl>()) {
  impl_->path = model_path;
  impl_->network = network;
  impl_->preprocessing = preprocessing;
  impl_->Load();
}

OnnxBackend::~OnnxBackend() = default;

std::string OnnxBackend::name() const { return "onnx:" + impl_->path.filename().string(); }
Network OnnxBackend::network() const { return impl_->network; }
Preprocessing OnnxBackend::preprocessing() const { return impl_->preprocessing; }

std::vector<FeatureMap> OnnxBackend::extract_many(const ImageBuffer& img,
                                                  std::span<const LayerTap> taps) const {
  if (img.empty()) throw Error(ErrorCode::InvalidArgument, "empty image");
  return impl_->Run(img, taps);
}

std::vector<std::string> OnnxBackend::exposed_layers() const { return impl_->exposed; }

}  // namespace deepsep
