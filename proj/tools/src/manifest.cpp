#include "manifest.hpp"

#include <cstdio>
#include <fstream>
#include <vector>

#include "volsr/errors.hpp"

namespace volsr {

std::uint64_t fnv1a64_file(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw io_error("cannot open for checksum: " + path);
  std::uint64_t h = 14695981039346656037ULL;
  char buf[1 << 16];
  while (f) {
    f.read(buf, sizeof(buf));
    const std::streamsize got = f.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

std::string hex64(std::uint64_t h) {
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx",
                static_cast<unsigned long long>(h));
  return out;
}

RunManifest::RunManifest(const std::string &subcommand, std::uint64_t seed) {
  j["subcommand"] = subcommand;
  j["seed"] = seed;
  j["config"] = nlohmann::json::object();
  j["inputs"] = nlohmann::json::array();
  j["outputs"] = nlohmann::json::array();
}

void RunManifest::add_input(const std::string &path) {
  j["inputs"].push_back(path);
}

void RunManifest::add_output(const std::string &path) {
  j["outputs"].push_back(path);
}

void RunManifest::write(const std::string &path, double wall_seconds) {
  j["wall_time_s"] = wall_seconds;
  nlohmann::json sums = nlohmann::json::object();
  for (const auto &out : j["outputs"])
    sums[out.get<std::string>()] =
        hex64(fnv1a64_file(out.get<std::string>()));
  j["checksums"] = sums;

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f)
      throw io_error("cannot open for writing: " + tmp);
    f << j.dump(2) << '\n';
    if (!f)
      throw io_error("short write: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw io_error("cannot move temp file into place: " + path);
}

} // namespace volsr
