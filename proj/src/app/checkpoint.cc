#include "eelmo/app/checkpoint.h"

#include <bit>
#include <cstdint>
#include <cstring>

#include "eelmo/errors.h"
#include "eelmo/fileio.h"

namespace eelmo::app {

using json = nlohmann::json;

void Checkpoint::Capture(const std::vector<net::Parameter *> &params) {
  tensors.clear();
  for (const net::Parameter *p : params) {
    tensors.emplace_back(p->id(), net::Tensor(p->tensor().shape(), p->tensor().storage()));
  }
}

const net::Tensor &Checkpoint::Find(const std::string &id) const {
  for (const auto &[name, tensor] : tensors) {
    if (name == id) return tensor;
  }
  throw FormatError("checkpoint has no parameter '" + id + "'");
}

void Checkpoint::Restore(const std::vector<net::Parameter *> &params) const {
  for (net::Parameter *p : params) {
    const net::Tensor &t = Find(p->id());
    if (t.shape() != p->tensor().shape()) {
      throw DimensionError("parameter '" + p->id() + "' has shape " +
                           net::ShapeString(p->tensor().shape()) + " but the checkpoint holds " +
                           net::ShapeString(t.shape()));
    }
    std::copy(t.values().begin(), t.values().end(), p->tensor().values().begin());
  }
}

namespace {

void AppendLe(std::string &out, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

double ReadLe(const char *p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) {
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[b])) << (8 * b);
  }
  return std::bit_cast<double>(bits);
}

}  // namespace

std::string SerializeCheckpoint(const Checkpoint &checkpoint) {
  json manifest;
  manifest["format_version"] = kCheckpointVersion;
  manifest["kind"] = checkpoint.kind;
  manifest["config"] = checkpoint.config.ToText();
  manifest["meta"] = checkpoint.meta;
  json params = json::array();
  std::string payload;
  for (const auto &[id, tensor] : checkpoint.tensors) {
    params.push_back({{"id", id},
                      {"shape", tensor.shape()},
                      {"offset", payload.size()},
                      {"count", tensor.size()}});
    for (double v : tensor.values()) AppendLe(payload, v);
  }
  manifest["params"] = std::move(params);
  manifest["payload_bytes"] = payload.size();
  const std::string text = manifest.dump();
  return std::string(kCheckpointMagic) + " " + std::to_string(kCheckpointVersion) + "\n" +
         std::to_string(text.size()) + "\n" + text + payload;
}

Checkpoint ParseCheckpoint(const std::string &bytes) {
  const std::size_t first = bytes.find('\n');
  if (first == std::string::npos) throw FormatError("checkpoint header is truncated");
  const std::string header = bytes.substr(0, first);
  const std::string magic = std::string(kCheckpointMagic) + " ";
  if (header.rfind(magic, 0) != 0) throw FormatError("not a checkpoint file");
  if (header != magic + std::to_string(kCheckpointVersion)) {
    throw FormatError("unsupported checkpoint version '" + header.substr(magic.size()) +
                      "', expected " + std::to_string(kCheckpointVersion));
  }
  const std::size_t second = bytes.find('\n', first + 1);
  if (second == std::string::npos) throw FormatError("checkpoint manifest length missing");
  std::size_t length = 0;
  try {
    length = std::stoull(bytes.substr(first + 1, second - first - 1));
  } catch (const std::logic_error &) {
    throw FormatError("checkpoint manifest length is not a number");
  }
  if (second + 1 + length > bytes.size()) throw FormatError("checkpoint manifest is truncated");
  json manifest;
  try {
    manifest = json::parse(bytes.substr(second + 1, length));
  } catch (const json::exception &e) {
    throw FormatError(std::string("checkpoint manifest: ") + e.what());
  }
  const std::size_t base = second + 1 + length;
  const std::size_t payload_bytes = bytes.size() - base;

  Checkpoint out;
  try {
    if (manifest.at("format_version").get<int>() != kCheckpointVersion) {
      throw FormatError("checkpoint manifest version mismatch");
    }
    out.kind = manifest.at("kind").get<std::string>();
    out.config = RunConfig::FromText(manifest.at("config").get<std::string>());
    out.meta = manifest.at("meta");
    if (manifest.at("payload_bytes").get<std::size_t>() != payload_bytes) {
      throw FormatError("checkpoint payload has " + std::to_string(payload_bytes) +
                        " bytes, manifest says " +
                        std::to_string(manifest.at("payload_bytes").get<std::size_t>()));
    }
    std::size_t expected_offset = 0;
    for (const json &p : manifest.at("params")) {
      const auto shape = p.at("shape").get<net::Shape>();
      const auto offset = p.at("offset").get<std::size_t>();
      const auto count = p.at("count").get<std::size_t>();
      if (offset != expected_offset || count != net::ShapeSize(shape)) {
        throw FormatError("checkpoint parameter '" + p.at("id").get<std::string>() +
                          "' has inconsistent offset or count");
      }
      std::vector<double> values(count);
      for (std::size_t i = 0; i < count; ++i) values[i] = ReadLe(bytes.data() + base + offset + 8 * i);
      out.tensors.emplace_back(p.at("id").get<std::string>(),
                               net::Tensor(shape, std::move(values)));
      expected_offset += 8 * count;
    }
    if (expected_offset != payload_bytes) {
      throw FormatError("checkpoint offsets do not cover the payload");
    }
  } catch (const json::exception &e) {
    throw FormatError(std::string("checkpoint manifest: ") + e.what());
  }
  return out;
}

void SaveCheckpoint(const std::string &path, const Checkpoint &checkpoint) {
  WriteFileAtomic(path, SerializeCheckpoint(checkpoint));
}

Checkpoint LoadCheckpoint(const std::string &path) { return ParseCheckpoint(ReadFile(path)); }

}  // namespace eelmo::app
