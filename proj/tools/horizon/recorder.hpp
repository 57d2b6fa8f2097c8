#pragma once

// Binds CLI options to variables and remembers them, so a run can echo its
// fully resolved configuration and replay it later.

#include <CLI11.hpp>
#include <cstdint>
#include <functional>
#include <json.hpp>
#include <string>
#include <type_traits>
#include <vector>

#include "horizon/label_io.hpp"

namespace horizon::cli {

class Recorder {
 public:
  Recorder(CLI::App* app, std::string command) : app_(app), command_(std::move(command)) {}

  CLI::App* app() const { return app_; }
  const std::string& command() const { return command_; }

  template <typename T>
  CLI::Option* option(const std::string& flag, T& value, const std::string& help) {
    auto* opt = app_->add_option(flag, value, help)->capture_default_str();
    const std::string key = long_name(opt);
    entries_.push_back({key, [&value] { return nlohmann::ordered_json(value); },
                        [&value, key] { return std::vector<std::string>{"--" + key, to_arg(value)}; }});
    return opt;
  }

  CLI::Option* flag(const std::string& flag, bool& value, const std::string& help) {
    auto* opt = app_->add_flag(flag, value, help);
    const std::string key = long_name(opt);
    entries_.push_back({key, [&value] { return nlohmann::ordered_json(value); },
                        [&value, key] {
                          return value ? std::vector<std::string>{"--" + key} : std::vector<std::string>{};
                        }});
    return opt;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["command"] = command_;
    nlohmann::ordered_json opts = nlohmann::ordered_json::object();
    std::vector<std::string> argv{command_};
    for (const auto& e : entries_) {
      opts[e.key] = e.value();
      for (auto& a : e.args()) argv.push_back(std::move(a));
    }
    j["options"] = std::move(opts);
    j["argv"] = std::move(argv);
    return j;
  }

 private:
  struct Entry {
    std::string key;
    std::function<nlohmann::ordered_json()> value;
    std::function<std::vector<std::string>()> args;
  };

  static std::string long_name(const CLI::Option* opt) {
    const auto& names = opt->get_lnames();
    return names.empty() ? opt->get_name() : names.front();
  }

  template <typename T>
  static std::string to_arg(const T& v) {
    if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else if constexpr (std::is_floating_point_v<T>) {
      return format_double(v);
    } else {
      return std::to_string(v);
    }
  }

  CLI::App* app_;
  std::string command_;
  std::vector<Entry> entries_;
};

}  // namespace horizon::cli
