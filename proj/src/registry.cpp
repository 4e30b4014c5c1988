#include "deepsep/registry.hpp"

#include <json.hpp>

#include "deepsep/error.hpp"
#include "deepsep/util.hpp"

namespace deepsep {

std::string_view to_string(Network network) {
  switch (network) {
    case Network::AlexNet: return "alexnet";
    case Network::InceptionV3: return "inceptionv3";
    case Network::ResNet50: return "resnet50";
    case Network::SqueezeNet11: return "squeezenet11";
    case Network::Vgg16: return "vgg16";
  }
  return "?";
}

std::optional<Network> parse_network(std::string_view id) {
  const std::string n = to_lower(id);
  for (Network net : all_networks()) {
    if (n == to_string(net)) return net;
  }
  if (n == "squeezenet1_1" || n == "squeezenet-v1.1") return Network::SqueezeNet11;
  if (n == "inception_v3" || n == "inception-v3") return Network::InceptionV3;
  if (n == "resnet-50") return Network::ResNet50;
  if (n == "vgg-16") return Network::Vgg16;
  return std::nullopt;
}

const std::vector<Network>& all_networks() {
  static const std::vector<Network> nets = {Network::AlexNet, Network::InceptionV3,
                                            Network::ResNet50, Network::SqueezeNet11,
                                            Network::Vgg16};
  return nets;
}

std::span<const LayerTap> tap_registry() {
  using N = Network;
  static const std::vector<LayerTap> taps = {
      {N::AlexNet, "conv1", 64, 7},
      {N::AlexNet, "conv2", 192, 15},
      {N::AlexNet, "conv3", 384, 31},
      {N::AlexNet, "conv4", 256, 31},
      {N::AlexNet, "conv5", 256, 31},
      {N::InceptionV3, "2a3x3", 32, 7},
      {N::InceptionV3, "3b1x1", 80, 11},
      {N::InceptionV3, "4a3x3", 192, 19},
      {N::InceptionV3, "mixed5b", 256, 27},
      {N::InceptionV3, "mixed5c", 288, 27},
      {N::InceptionV3, "mixed5d", 288, 27},
      {N::InceptionV3, "mixed6a", 768, 43},
      {N::InceptionV3, "mixed6b", 768, 43},
      {N::InceptionV3, "mixed6c", 768, 43},
      {N::InceptionV3, "mixed6d", 768, 43},
      {N::InceptionV3, "mixed6e", 768, 43},
      {N::InceptionV3, "mixed7a", 1280, 75},
      {N::InceptionV3, "mixed7b", 2048, 75},
      {N::InceptionV3, "mixed7c", 2048, 75},
      {N::ResNet50, "conv1", 64, 1},
      {N::ResNet50, "layer1", 256, 1},
      {N::ResNet50, "layer2", 512, 1},
      {N::ResNet50, "layer3", 1024, 1},
      {N::ResNet50, "layer4", 2048, 1},
      {N::SqueezeNet11, "conv1", 64, 3},
      {N::SqueezeNet11, "fire1", 128, 5},
      {N::SqueezeNet11, "fire2", 128, 5},
      {N::SqueezeNet11, "fire3", 256, 9},
      {N::SqueezeNet11, "fire4", 256, 9},
      {N::SqueezeNet11, "fire5", 384, 17},
      {N::SqueezeNet11, "fire6", 384, 17},
      {N::SqueezeNet11, "fire7", 512, 17},
      {N::SqueezeNet11, "fire8", 512, 17},
      {N::Vgg16, "conv11", 64, 1},
      {N::Vgg16, "conv12", 64, 1},
      {N::Vgg16, "conv21", 128, 2},
      {N::Vgg16, "conv22", 128, 2},
      {N::Vgg16, "conv31", 256, 4},
      {N::Vgg16, "conv32", 256, 4},
      {N::Vgg16, "conv33", 256, 4},
      {N::Vgg16, "conv41", 512, 8},
      {N::Vgg16, "conv42", 512, 8},
      {N::Vgg16, "conv43", 512, 8},
      {N::Vgg16, "conv51", 512, 16},
      {N::Vgg16, "conv52", 512, 16},
      {N::Vgg16, "conv53", 512, 16},
  };
  return taps;
}

std::vector<LayerTap> taps_for(Network network) {
  std::vector<LayerTap> out;
  for (const auto& t : tap_registry()) {
    if (t.network == network) out.push_back(t);
  }
  return out;
}

const LayerTap& find_tap(Network network, std::string_view layer) {
  for (const auto& t : tap_registry()) {
    if (t.network == network && t.layer == layer) return t;
  }
  throw Error(ErrorCode::UnknownLayer,
              std::string(to_string(network)) + " has no tap '" + std::string(layer) + "'");
}

const LayerTap& find_tap(std::string_view network, std::string_view layer) {
  const auto net = parse_network(network);
  if (!net) throw Error(ErrorCode::UnknownLayer, "unknown network '" + std::string(network) + "'");
  return find_tap(*net, layer);
}

std::string registry_to_json() {
  nlohmann::ordered_json doc;
  doc["version"] = 1;
  nlohmann::ordered_json nets = nlohmann::ordered_json::object();
  for (Network net : all_networks()) {
    nlohmann::ordered_json layers = nlohmann::ordered_json::array();
    for (const auto& t : taps_for(net)) {
      layers.push_back({{"name", t.layer}, {"channels", t.channels}, {"min_input", t.min_input}});
    }
    nets[std::string(to_string(net))] = layers;
  }
  doc["networks"] = nets;
  return doc.dump(2) + "\n";
}

}  // namespace deepsep
