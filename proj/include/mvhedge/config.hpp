#ifndef MVHEDGE_CONFIG_HPP
#define MVHEDGE_CONFIG_HPP

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "mvhedge/params.hpp"

namespace mvhedge {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` pairs. Blank lines and `#` comments are ignored.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);

/// Default parameters overridden by `kv`. Keys are the parameter field names;
/// unknown keys and malformed numbers raise ConfigError. When T is given but
/// T_L or n_steps are not, T_L follows T and n_steps keeps dt = 1/250.
ModelBundle bundle_from_key_values(const KeyValues& kv, ModelBundle base = {});

ModelBundle load_config(const std::filesystem::path& path);

std::string to_key_values(const ModelBundle& b);

}  // namespace mvhedge

#endif  // MVHEDGE_CONFIG_HPP
