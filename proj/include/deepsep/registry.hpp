#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace deepsep {

enum class Network { AlexNet, InceptionV3, ResNet50, SqueezeNet11, Vgg16 };

std::string_view to_string(Network network);
std::optional<Network> parse_network(std::string_view id);
const std::vector<Network>& all_networks();

// A named activation point of one architecture.
struct LayerTap {
  Network network = Network::SqueezeNet11;
  std::string layer;
  int channels = 0;
  // Smallest square input whose activation at this tap is at least 1x1.
  int min_input = 1;

  friend bool operator==(const LayerTap& a, const LayerTap& b) {
    return a.network == b.network && a.layer == b.layer && a.channels == b.channels;
  }
};

// The 46 taps: AlexNet conv1..conv5, Inception-v3 2a3x3..mixed7c, ResNet-50
// conv1 and layer1..layer4, SqueezeNet-v1.1 conv1 and fire1..fire8, VGG-16
// conv11..conv53. Order within a network is depth order.
std::span<const LayerTap> tap_registry();
std::vector<LayerTap> taps_for(Network network);

// Throws UnknownLayer.
const LayerTap& find_tap(Network network, std::string_view layer);
const LayerTap& find_tap(std::string_view network, std::string_view layer);

// Serialized registry shared with the model exporter (share/layers.json).
std::string registry_to_json();

}  // namespace deepsep
