#pragma once

#include <chrono>
#include <cstdint>
#include <string>

#include <json.hpp>

namespace volsr {

std::uint64_t fnv1a64_file(const std::string &path);
std::string hex64(std::uint64_t h);

class StopWatch {
public:
  StopWatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

/// Run provenance record, one per invocation: the resolved configuration,
/// input/output paths, wall time, and an FNV-1a checksum per output file.
/// Checksums are computed when the manifest is written, after all outputs
/// are on disk. Timing fields are the only nondeterministic content.
struct RunManifest {
  nlohmann::json j;

  RunManifest(const std::string &subcommand, std::uint64_t seed);

  void add_input(const std::string &path);
  void add_output(const std::string &path);
  void write(const std::string &path, double wall_seconds);
};

} // namespace volsr
