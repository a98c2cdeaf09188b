#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mvdepth::cli {

enum class KeyType { kInt, kUInt, kDouble, kBool, kString, kPath };

struct KeySpec {
  std::string name;  // snake_case; the flag is --name with '_' -> '-'
  KeyType type;
  std::string default_value;  // empty: no default
  std::string help;
  std::vector<std::string> commands;  // empty: every command
  std::map<std::string, std::string> command_defaults = {};
  bool hidden = false;

  bool applies_to(const std::string& command) const;
  std::string default_for(const std::string& command) const;
};

// Schema of every configuration key.
const std::vector<KeySpec>& config_schema();
std::vector<const KeySpec*> keys_for(const std::string& command);
std::string flag_name(const std::string& key);

// Validated key-value configuration for one command. Layering: schema
// defaults, then the config file, then command-line overrides.
class RunConfig {
 public:
  explicit RunConfig(std::string command);

  // Throws kInvalidConfig naming the key (and file line) at fault.
  void load_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value, const std::string& origin);

  bool has(const std::string& key) const;
  int64_t get_int(const std::string& key) const;
  uint64_t get_uint(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::string get_string(const std::string& key) const;

  const std::string& command() const { return command_; }

 private:
  const KeySpec& spec(const std::string& key, const std::string& origin) const;
  const std::string& raw(const std::string& key) const;

  std::string command_;
  std::map<std::string, std::string> values_;
};

}  // namespace mvdepth::cli
