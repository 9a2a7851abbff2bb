#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "network/change_net.hpp"
#include "synth/scene.hpp"
#include "training/train_config.hpp"

namespace cd::config {

struct Entry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

// "key = value" lines; '#' starts a comment, blank lines are ignored.
// Duplicate keys and lines without '=' raise ConfigError.
std::vector<Entry> parse_entries(std::string_view text, const std::string& source = "<config>");

// Every setting shared by the subcommands. Keys are prefixed by section:
// scene.*, net.*, train.*.
struct RunConfig {
  synth::DatasetSpec dataset;
  net::NetConfig net;
  train::TrainConfig train;
};

// Unknown keys and malformed values raise ConfigError naming the key.
RunConfig resolve(const std::vector<Entry>& entries, const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

std::vector<std::pair<std::string, std::string>> net_entries(const net::NetConfig& net);
std::vector<std::pair<std::string, std::string>> train_entries(const train::TrainConfig& t);
// Full resolved configuration, one "key = value" per line in a fixed order.
std::string format_resolved(const RunConfig& cfg);

}  // namespace cd::config
