#pragma once

#include "mstl/common.hpp"

#include <map>
#include <string>
#include <vector>

namespace mstl {

/// Git-style content hash (sha1 over "blob <len>\0<bytes>").
std::string content_hash(const std::string& bytes);

/// Per-run record sufficient to re-execute a CLI invocation exactly.
struct RunManifest {
  std::string command;
  std::vector<std::string> args;
  std::map<std::string, std::string> input_hashes;  // path -> content hash
  std::uint64_t seed = 0;
  std::string output_dir;
  std::map<std::string, std::string> params;

  void add_input(const std::string& path);
  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
};

}  // namespace mstl
