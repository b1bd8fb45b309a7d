#include "mstl/manifest.hpp"

#include <openssl/sha.h>

#include <nlohmann/json.hpp>

#include <cstdio>

namespace mstl {

std::string content_hash(const std::string& bytes) {
  std::string blob = "blob " + std::to_string(bytes.size());
  blob.push_back('\0');
  blob += bytes;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), digest);
  std::string out;
  char buf[3];
  for (unsigned char c : digest) {
    std::snprintf(buf, sizeof(buf), "%02x", c);
    out += buf;
  }
  return out;
}

void RunManifest::add_input(const std::string& path) {
  input_hashes[path] = content_hash(read_file(path));
}

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["args"] = args;
  j["inputs"] = input_hashes;
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  j["params"] = params;
  return j.dump(2);
}

RunManifest RunManifest::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.args = j.at("args").get<std::vector<std::string>>();
  m.input_hashes = j.at("inputs").get<std::map<std::string, std::string>>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.output_dir = j.at("output_dir").get<std::string>();
  m.params = j.at("params").get<std::map<std::string, std::string>>();
  return m;
}

}  // namespace mstl
