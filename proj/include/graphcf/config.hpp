#ifndef GRAPHCF_CONFIG_HPP
#define GRAPHCF_CONFIG_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace graphcf {

// Flat key=value experiment configuration with a fixed schema. Unknown keys
// are rejected on write; values are validated by the typed getters, which
// name the offending key in the error.
class ExperimentConfig {
 public:
  ExperimentConfig() = default;

  // "key=value" lines; '#' starts a comment, blank lines are skipped.
  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);
  // Parses a single "key=value" argument (as given to --set).
  void set_pair(const std::string& pair);

  bool known(const std::string& key) const;
  std::string get(const std::string& key) const;  // stored or schema default

  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int lo, int hi) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;

  // Keys explicitly set so far (not defaults).
  const std::map<std::string, std::string>& overrides() const {
    return values_;
  }

  // Full schema: one "key  default  description" block per key.
  static std::string help();

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace graphcf

#endif
