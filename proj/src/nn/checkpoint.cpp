#include "rforge/nn/checkpoint.hpp"

#include <cstdint>
#include <fstream>
#include <map>

#include "rforge/error.hpp"

namespace rforge::nn {

namespace {

template <typename T>
void write_raw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ContractError("truncated checkpoint data");
  return v;
}

struct Record {
  std::uint64_t rows = 0, cols = 0;
  std::vector<double> values;
};

std::map<std::string, Record> read_records(const std::filesystem::path& dir) {
  std::ifstream in(dir / kCheckpointDataFile, std::ios::binary);
  if (!in) throw ContractError("cannot open " + (dir / kCheckpointDataFile).string());
  const auto count = read_raw<std::uint64_t>(in);
  std::map<std::string, Record> records;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = read_raw<std::uint64_t>(in);
    if (len > 4096) throw ContractError("corrupt checkpoint record name");
    std::string name(len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(len));
    Record r;
    r.rows = read_raw<std::uint64_t>(in);
    r.cols = read_raw<std::uint64_t>(in);
    r.values.resize(r.rows * r.cols);
    in.read(reinterpret_cast<char*>(r.values.data()),
            static_cast<std::streamsize>(r.values.size() * sizeof(double)));
    if (!in) throw ContractError("truncated checkpoint data");
    records.emplace(std::move(name), std::move(r));
  }
  return records;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const nlohmann::json& config,
                     const std::vector<std::pair<std::string, const ParameterSet*>>& sets) {
  std::filesystem::create_directories(dir);
  nlohmann::json index;
  index["version"] = kCheckpointVersion;
  index["config"] = config;
  index["records"] = nlohmann::json::array();

  std::ofstream out(dir / kCheckpointDataFile, std::ios::binary | std::ios::trunc);
  if (!out) throw ContractError("cannot write " + (dir / kCheckpointDataFile).string());
  std::uint64_t count = 0;
  for (const auto& [prefix, set] : sets) count += set->entries().size();
  write_raw(out, count);
  for (const auto& [prefix, set] : sets) {
    for (const auto& p : set->entries()) {
      const std::string name = prefix + p.name;
      write_raw<std::uint64_t>(out, name.size());
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      write_raw<std::uint64_t>(out, p.tensor.rows());
      write_raw<std::uint64_t>(out, p.tensor.cols());
      out.write(reinterpret_cast<const char*>(p.tensor.values().data()),
                static_cast<std::streamsize>(p.tensor.size() * sizeof(double)));
      index["records"].push_back({{"name", name}, {"shape", {p.tensor.rows(), p.tensor.cols()}}});
    }
  }
  std::ofstream idx(dir / kCheckpointIndexFile, std::ios::trunc);
  idx << index.dump(2) << '\n';
}

nlohmann::json load_checkpoint_config(const std::filesystem::path& dir) {
  std::ifstream in(dir / kCheckpointIndexFile);
  if (!in) throw ContractError("cannot open " + (dir / kCheckpointIndexFile).string());
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ContractError(std::string("malformed checkpoint index: ") + e.what());
  }
  if (!index.contains("version") || !index["version"].is_number_integer()) {
    throw ContractError("checkpoint index has no version");
  }
  if (index["version"].get<int>() != kCheckpointVersion) {
    throw ContractError("unsupported checkpoint version " + index["version"].dump());
  }
  return index.value("config", nlohmann::json::object());
}

void load_checkpoint(const std::filesystem::path& dir, const std::vector<PrefixedSet>& sets) {
  load_checkpoint_config(dir);
  const auto records = read_records(dir);
  for (const auto& [prefix, set] : sets) {
    for (auto& p : set->entries()) {
      const auto it = records.find(prefix + p.name);
      if (it == records.end()) throw ContractError("checkpoint lacks " + prefix + p.name);
      if (it->second.rows != p.tensor.rows() || it->second.cols != p.tensor.cols()) {
        throw ContractError("checkpoint shape mismatch for " + prefix + p.name);
      }
      auto dst = p.tensor.mutable_values();
      std::copy(it->second.values.begin(), it->second.values.end(), dst.begin());
    }
  }
}

}  // namespace rforge::nn
