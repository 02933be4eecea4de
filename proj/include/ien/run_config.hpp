// SPDX-License-Identifier: Apache-2.0
//
// Structured-text run configuration and report files. Both formats are
// plain "key = value" lines with '#' comments; writers emit keys in a
// fixed documented order so outputs are diff-able.

#ifndef IEN_RUN_CONFIG_HPP
#define IEN_RUN_CONFIG_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ien/network.hpp"

namespace ien {

struct RunConfig {
  IenConfig model;
  TrainOptions train;
  std::uint64_t seed = 1;
  std::string train_path;
  std::string eval_path;
  std::string out_dir = ".";
};

// Key order: t_plus_1, d_v, d_e, d_h, k, cell_variant, merge_mode,
// epochs, batch_size, lr, adam_beta1, adam_beta2, adam_eps, seed,
// train_path, eval_path, out_dir. Unknown keys are a config error.
RunConfig read_run_config(const std::string& path);
std::string run_config_to_text(const RunConfig& config);
void write_run_config(const std::string& path, const RunConfig& config);

// Ordered key/value report; doubles are rendered with %.17g so equal
// runs serialize byte-identically.
class Report {
 public:
  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, const char* value);
  void add(const std::string& key, double value);
  void add(const std::string& key, std::uint64_t value);
  void add(const std::string& key, int value);

  std::string to_text() const;
  void write(const std::string& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::string format_double(double v);  // %.17g

}  // namespace ien

#endif  // IEN_RUN_CONFIG_HPP
