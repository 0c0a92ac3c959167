#pragma once

// Run provenance: canonical config hashing, the sidecar written next to every
// artifact-producing command's outputs, and the output-directory lockfile.
// Sidecars carry no timestamps so reruns with identical config and seed are
// byte-identical.

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "glio/error.hpp"
#include "glio/hash.hpp"
#include "glio/version.hpp"

namespace glio {

// Canonical form: sorted keys, no whitespace.
inline std::string canonical_config(const nlohmann::json& config) {
  return nlohmann::json(config).dump();
}

inline std::string config_hash(const nlohmann::json& config) {
  return hex64(fnv1a64(canonical_config(config)));
}

namespace detail {

inline nlohmann::ordered_json provenance_json(const std::string& command,
                                              const nlohmann::json& config, uint64_t seed) {
  nlohmann::ordered_json j;
  j["tool"] = "gliotype";
  j["tool_version"] = kVersion;
  j["command"] = command;
  j["seed"] = seed;
  j["config_hash"] = config_hash(config);
  j["config"] = config;
  return j;
}

}  // namespace detail

// Directory-shaped artifacts get dir/provenance.json.
inline void write_provenance(const std::filesystem::path& dir, const std::string& command,
                             const nlohmann::json& config, uint64_t seed) {
  std::ofstream f(dir / "provenance.json", std::ios::trunc);
  if (!f) throw_data("provenance: cannot write to " + dir.string());
  f << detail::provenance_json(command, config, seed).dump(2) << "\n";
}

// File-shaped artifacts get <file>.provenance.json next to them.
inline void write_file_provenance(const std::filesystem::path& artifact, const std::string& command,
                                  const nlohmann::json& config, uint64_t seed) {
  std::ofstream f(artifact.string() + ".provenance.json", std::ios::trunc);
  if (!f) throw_data("provenance: cannot write next to " + artifact.string());
  f << detail::provenance_json(command, config, seed).dump(2) << "\n";
}

// Guards an output directory against concurrent runs. The lock file is
// created exclusively and removed on scope exit; a stale lock (after a crash)
// must be removed by the operator.
class DirLock {
 public:
  explicit DirLock(const std::filesystem::path& dir) : lock_path_(dir / ".gliotype.lock") {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (std::filesystem::exists(lock_path_))
      throw_data("output directory is locked by another run (remove " + lock_path_.string() +
                 " if stale)");
    std::ofstream f(lock_path_);
    if (!f) throw_data("cannot create lock file " + lock_path_.string());
    f << "locked\n";
    owned_ = true;
  }

  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

  ~DirLock() {
    if (owned_) {
      std::error_code ec;
      std::filesystem::remove(lock_path_, ec);
    }
  }

 private:
  std::filesystem::path lock_path_;
  bool owned_ = false;
};

}  // namespace glio
