#pragma once

#include <filesystem>
#include <memory>

#include "deepsep/features.hpp"

namespace deepsep {

// Runs an exported ONNX graph whose outputs are named after registry taps
// ("conv1", "fire4", ...). The graph takes one float NCHW input with dynamic
// height and width. Only the subgraph feeding the requested taps executes.
class OnnxBackend : public FeatureBackend {
 public:
  // Throws IoError and BackendFailure (unparseable model, unsupported
  // operator, external data). Graph outputs that are not registry taps of
  // `network` are ignored.
  OnnxBackend(const std::filesystem::path& model_path, Network network,
              Preprocessing preprocessing = {});
  ~OnnxBackend() override;

  std::string name() const override;
  Network network() const override;
  Preprocessing preprocessing() const override;

  // Throws UnknownLayer for taps the graph does not expose and ImageTooSmall
  // when the input is below a tap's minimum size.
  std::vector<FeatureMap> extract_many(const ImageBuffer& img,
                                       std::span<const LayerTap> taps) const override;

  // Tap names present as graph outputs, in graph order.
  std::vector<std::string> exposed_layers() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace deepsep
