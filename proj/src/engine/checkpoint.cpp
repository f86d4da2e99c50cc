#include "matteforge/engine/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "matteforge/engine/params.hpp"

namespace mf::engine {
namespace {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

template <typename U>
void put(std::ostream& os, U value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(U));
}

template <typename U>
U get(std::istream& is, const std::filesystem::path& path) {
  U value{};
  if (!is.read(reinterpret_cast<char*>(&value), sizeof(U))) {
    throw DataError("truncated checkpoint " + path.string());
  }
  return value;
}

}  // namespace

void write_archive(const std::filesystem::path& path, const std::vector<NamedArray>& entries) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os.write(kArchiveMagic, 4);
  put<std::uint32_t>(os, kArchiveVersion);
  put<std::uint64_t>(os, entries.size());
  for (const auto& e : entries) {
    if (shape_numel(e.shape) != e.data.size()) {
      throw DimensionError("archive entry " + e.name + " has inconsistent shape");
    }
    put<std::uint32_t>(os, static_cast<std::uint32_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) put<std::uint64_t>(os, d);
    os.write(reinterpret_cast<const char*>(e.data.data()),
             static_cast<std::streamsize>(e.data.size() * sizeof(float)));
  }
  if (!os) throw DataError("failed writing " + path.string());
}

std::vector<NamedArray> read_archive(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kArchiveMagic, 4) != 0) {
    throw DataError(path.string() + " is not a checkpoint (bad magic)");
  }
  const auto version = get<std::uint32_t>(is, path);
  if (version != kArchiveVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version) + " in " +
                    path.string());
  }
  const auto count = get<std::uint64_t>(is, path);
  std::vector<NamedArray> entries;
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedArray e;
    const auto name_len = get<std::uint32_t>(is, path);
    if (name_len > 4096) throw DataError("corrupt checkpoint " + path.string());
    e.name.resize(name_len);
    if (!is.read(e.name.data(), name_len)) throw DataError("truncated checkpoint " + path.string());
    const auto rank = get<std::uint32_t>(is, path);
    if (rank > 8) throw DataError("corrupt checkpoint " + path.string());
    for (std::uint32_t r = 0; r < rank; ++r) e.shape.push_back(get<std::uint64_t>(is, path));
    const auto n = shape_numel(e.shape);
    if (n > (std::size_t{1} << 32)) throw DataError("corrupt checkpoint " + path.string());
    e.data.resize(n);
    if (!is.read(reinterpret_cast<char*>(e.data.data()), static_cast<std::streamsize>(n * sizeof(float)))) {
      throw DataError("truncated checkpoint " + path.string());
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

const NamedArray* find_entry(const std::vector<NamedArray>& entries, std::string_view name) {
  auto it = std::find_if(entries.begin(), entries.end(), [&](const NamedArray& e) { return e.name == name; });
  return it == entries.end() ? nullptr : &*it;
}

template <typename T>
Tensor<T> ParamStore<T>::add(const std::string& name, Tensor<T> value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name " + name);
  value.set_requires_grad(true);
  names_.push_back(name);
  params_.push_back(value);
  return value;
}

template <typename T>
RunningStats<T>& ParamStore<T>::add_stats(const std::string& prefix, std::size_t channels) {
  if (std::find(stat_prefixes_.begin(), stat_prefixes_.end(), prefix) != stat_prefixes_.end()) {
    throw std::invalid_argument("duplicate buffer prefix " + prefix);
  }
  stat_prefixes_.push_back(prefix);
  stats_.push_back(RunningStats<T>::make(channels));
  return stats_.back();
}

template <typename T>
Tensor<T> ParamStore<T>::find(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  return it == names_.end() ? Tensor<T>{} : params_[static_cast<std::size_t>(it - names_.begin())];
}

template <typename T>
bool ParamStore<T>::contains(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

template <typename T>
std::vector<typename ParamStore<T>::Buffer> ParamStore<T>::buffers() const {
  std::vector<Buffer> out;
  for (std::size_t i = 0; i < stats_.size(); ++i) {
    out.push_back({stat_prefixes_[i] + "/running_mean", stats_[i].mean});
    out.push_back({stat_prefixes_[i] + "/running_var", stats_[i].var});
  }
  return out;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace mf::engine
