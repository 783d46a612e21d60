#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "pds/errors.hpp"
#include "pds/json_codec.hpp"

namespace pds {

// layer.conf: flat `key = value` lines, '#' comments. Shared by the service
// and the CLI.
struct LayerConfig {
  std::string listen_address = "127.0.0.1:8080";
  std::filesystem::path data_dir = "data";
  std::string admin_key_digest;  // hex SHA-256 of the administrator bearer token
  std::size_t report_capacity = 256;
  bool audit_fsync = false;

  static LayerConfig parse(const std::string& text) {
    LayerConfig cfg;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t eol = text.find('\n', pos);
      std::string line = text.substr(pos, eol == std::string::npos ? eol : eol - pos);
      pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
      ++lineno;

      std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      auto trim = [](std::string s) {
        std::size_t a = s.find_first_not_of(" \t\r");
        std::size_t b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      line = trim(line);
      if (line.empty()) continue;

      std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw Error(Errc::parse_error, "config line " + std::to_string(lineno) + ": expected key = value");
      std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));

      if (key == "listen_address") {
        cfg.listen_address = value;
      } else if (key == "data_dir") {
        cfg.data_dir = value;
      } else if (key == "admin_key_digest") {
        cfg.admin_key_digest = value;
      } else if (key == "report_capacity") {
        cfg.report_capacity = static_cast<std::size_t>(std::stoull(value));
      } else if (key == "audit_fsync") {
        if (value != "true" && value != "false")
          throw Error(Errc::parse_error, "config line " + std::to_string(lineno) + ": audit_fsync must be true or false");
        cfg.audit_fsync = value == "true";
      } else {
        throw Error(Errc::parse_error, "config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
      }
    }
    return cfg;
  }

  static LayerConfig load(const std::filesystem::path& path) {
    return parse(read_text_file(path));
  }

  // host/port split of listen_address.
  std::pair<std::string, int> listen_host_port() const {
    std::size_t colon = listen_address.rfind(':');
    if (colon == std::string::npos)
      throw Error(Errc::parse_error, "listen_address must be host:port");
    return {listen_address.substr(0, colon),
            std::stoi(listen_address.substr(colon + 1))};
  }
};

}  // namespace pds
