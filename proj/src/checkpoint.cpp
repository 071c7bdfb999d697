#include "nfq/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <vector>

#include "nfq/errors.hpp"

namespace nfq {

namespace {

constexpr int kFormatVersion = 1;

void put_f64(std::vector<unsigned char>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

double get_f64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const QFunction& qf,
                     const CheckpointInfo& info) {
  std::filesystem::create_directories(dir);
  const Network& net = qf.network();

  std::vector<unsigned char> bytes;
  bytes.reserve(net.parameter_count() * 8);
  for (const auto& layer : net.layers()) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) put_f64(bytes, layer.weights(r, c));
    }
  }
  for (const auto& layer : net.layers()) {
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) put_f64(bytes, layer.bias[i]);
  }

  const Json manifest{
      {"format_version", kFormatVersion},
      {"encoding", std::string(to_string(qf.encoding()))},
      {"input_dim", net.input_dim()},
      {"layers", layers_to_json(net.specs())},
      {"parameter_count", net.parameter_count()},
      {"weights_file", "weights.bin"},
      {"weights_bytes", bytes.size()},
      {"actions", qf.actions().values()},
      {"action_bound", qf.action_bound()},
      {"lookback", info.lookback},
      {"normalizer",
       {{"mean", vector_to_json(qf.normalizer().mean)},
        {"std", vector_to_json(qf.normalizer().std)},
        {"frozen", qf.normalizer().frozen}}},
      {"episode", info.episode},
      {"td_rounds", info.td_rounds},
      {"cost_id", info.cost_id}};

  {
    std::ofstream out(dir / "weights.bin", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "weights.bin").string());
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw IoError("failed writing " + (dir / "weights.bin").string());
  }
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot read checkpoint manifest " + manifest_path.string());

  Checkpoint cp;
  try {
    cp.manifest = Json::parse(in);
  } catch (const Json::exception& e) {
    throw IoError("malformed checkpoint manifest " + manifest_path.string() + ": " + e.what());
  }
  const Json& m = cp.manifest;

  try {
    if (m.at("format_version").get<int>() != kFormatVersion) {
      throw IoError("unsupported checkpoint format version");
    }
    const auto encoding = encoding_from_string(m.at("encoding").get<std::string>());
    const auto input_dim = m.at("input_dim").get<Eigen::Index>();
    const auto specs = layers_from_json(m.at("layers"));
    Normalizer norm;
    norm.mean = vector_from_json(m.at("normalizer").at("mean"));
    norm.std = vector_from_json(m.at("normalizer").at("std"));
    norm.frozen = m.at("normalizer").at("frozen").get<bool>();
    if (norm.mean.size() != norm.std.size()) throw IoError("normalizer mean/std length mismatch");

    const auto weights_path = dir / m.at("weights_file").get<std::string>();
    std::ifstream win(weights_path, std::ios::binary);
    if (!win) throw IoError("cannot read checkpoint weights " + weights_path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(win)),
                                     std::istreambuf_iterator<char>());

    std::vector<DenseLayer> layers;
    Eigen::Index fan_in = input_dim;
    std::size_t expected = 0;
    for (const auto& s : specs) {
      DenseLayer l;
      l.activation = s.activation;
      l.weights.resize(s.width, fan_in);
      l.bias.resize(s.width);
      expected += std::size_t(s.width) * std::size_t(fan_in + 1);
      fan_in = s.width;
      layers.push_back(std::move(l));
    }
    if (expected != m.at("parameter_count").get<std::size_t>() ||
        bytes.size() != expected * 8 || bytes.size() != m.at("weights_bytes").get<std::size_t>()) {
      throw IoError("checkpoint weights do not match the manifest (" +
                    std::to_string(bytes.size()) + " bytes, " + std::to_string(expected) +
                    " parameters expected)");
    }
    const unsigned char* p = bytes.data();
    for (auto& l : layers) {
      for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c, p += 8) l.weights(r, c) = get_f64(p);
      }
    }
    for (auto& l : layers) {
      for (Eigen::Index i = 0; i < l.bias.size(); ++i, p += 8) l.bias[i] = get_f64(p);
    }

    cp.qf = QFunction(encoding, Network(input_dim, std::move(layers)), std::move(norm),
                      ActionSet(m.at("actions").get<std::vector<double>>()),
                      m.at("action_bound").get<double>());
    cp.info.episode = m.at("episode").get<int>();
    cp.info.td_rounds = m.at("td_rounds").get<int>();
    cp.info.lookback = m.at("lookback").get<int>();
    cp.info.cost_id = m.at("cost_id").get<std::string>();
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    throw IoError("checkpoint " + dir.string() + " is inconsistent: " + e.what());
  }
  return cp;
}

}  // namespace nfq
