#include "csc/checkpoint.hpp"

#include "binary_io.hpp"
#include "csc/errors.hpp"

namespace csc {

void save_model(const Model& model, const std::filesystem::path& path, const CheckpointMetadata& meta) {
  io::Writer w;
  w.header(io::ContainerKind::model);
  const Architecture& a = model.arch;
  for (int d : {a.input.height, a.input.width, a.input.channels, a.conv1_channels, a.conv2_channels,
                a.feature_dim, a.num_outputs})
    w.u32(static_cast<std::uint32_t>(d));
  w.u8(model.freeze_extractor ? 1 : 0);
  w.u64(model.rng_seed);
  for (const auto* t : model.params.tensors()) w.blob<float>(*t);
  w.u32(static_cast<std::uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {
    w.str(k);
    w.str(v);
  }
  w.write_file(path);
}

LoadedModel load_model(const std::filesystem::path& path) {
  auto r = io::Reader::from_file(path);
  r.header(io::ContainerKind::model);
  LoadedModel out;
  Architecture& a = out.model.arch;
  a.input.height = static_cast<int>(r.u32());
  a.input.width = static_cast<int>(r.u32());
  a.input.channels = static_cast<int>(r.u32());
  a.conv1_channels = static_cast<int>(r.u32());
  a.conv2_channels = static_cast<int>(r.u32());
  a.feature_dim = static_cast<int>(r.u32());
  a.num_outputs = static_cast<int>(r.u32());
  a.validate();
  out.model.freeze_extractor = r.u8() != 0;
  out.model.rng_seed = r.u64();
  const auto expected = Parameters<float>::zeros_like(a);
  auto dst = out.model.params.tensors();
  const auto shapes = expected.tensors();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    *dst[i] = r.blob<float>();
    if (dst[i]->size() != shapes[i]->size()) throw FormatError("checkpoint tensor size does not match dims");
  }
  const std::uint32_t entries = r.u32();
  for (std::uint32_t i = 0; i < entries; ++i) {
    std::string k = r.str();
    out.metadata[k] = r.str();
  }
  if (!r.at_end()) throw FormatError("trailing bytes after checkpoint");
  return out;
}

}  // namespace csc
