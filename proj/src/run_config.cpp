// SPDX-License-Identifier: Apache-2.0

#include "ien/run_config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace ien {

namespace {

std::string trim(const std::string& s) {
  const std::size_t first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const std::size_t last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    if (!value.empty() && value[0] == '-') throw std::invalid_argument(value);
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an unsigned integer, got '" +
                      value + "'");
  }
}

double parse_f64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + value +
                      "'");
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

RunConfig read_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "' for reading");

  RunConfig rc;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "t_plus_1") rc.model.T_plus_1 = parse_u64(key, value);
    else if (key == "d_v") rc.model.d_v = parse_u64(key, value);
    else if (key == "d_e") rc.model.d_e = parse_u64(key, value);
    else if (key == "d_h") rc.model.d_h = parse_u64(key, value);
    else if (key == "k") rc.model.K = parse_u64(key, value);
    else if (key == "cell_variant") {
      try {
        rc.model.cell_variant = cell_variant_from_string(value);
      } catch (const UsageError& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "merge_mode") {
      try {
        rc.model.merge_mode = merge_mode_from_string(value);
      } catch (const UsageError& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "epochs") rc.train.epochs = parse_u64(key, value);
    else if (key == "batch_size") rc.train.batch_size = parse_u64(key, value);
    else if (key == "lr") rc.train.lr = parse_f64(key, value);
    else if (key == "adam_beta1") rc.train.beta1 = parse_f64(key, value);
    else if (key == "adam_beta2") rc.train.beta2 = parse_f64(key, value);
    else if (key == "adam_eps") rc.train.eps = parse_f64(key, value);
    else if (key == "seed") rc.seed = parse_u64(key, value);
    else if (key == "train_path") rc.train_path = value;
    else if (key == "eval_path") rc.eval_path = value;
    else if (key == "out_dir") rc.out_dir = value;
    else {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": unknown key '" + key + "'");
    }
  }
  rc.train.seed = rc.seed;
  return rc;
}

std::string run_config_to_text(const RunConfig& rc) {
  std::ostringstream out;
  out << "t_plus_1 = " << rc.model.T_plus_1 << "\n"
      << "d_v = " << rc.model.d_v << "\n"
      << "d_e = " << rc.model.d_e << "\n"
      << "d_h = " << rc.model.d_h << "\n"
      << "k = " << rc.model.K << "\n"
      << "cell_variant = " << to_string(rc.model.cell_variant) << "\n"
      << "merge_mode = " << to_string(rc.model.merge_mode) << "\n"
      << "epochs = " << rc.train.epochs << "\n"
      << "batch_size = " << rc.train.batch_size << "\n"
      << "lr = " << format_double(rc.train.lr) << "\n"
      << "adam_beta1 = " << format_double(rc.train.beta1) << "\n"
      << "adam_beta2 = " << format_double(rc.train.beta2) << "\n"
      << "adam_eps = " << format_double(rc.train.eps) << "\n"
      << "seed = " << rc.seed << "\n"
      << "train_path = " << rc.train_path << "\n"
      << "eval_path = " << rc.eval_path << "\n"
      << "out_dir = " << rc.out_dir << "\n";
  return out.str();
}

void write_run_config(const std::string& path, const RunConfig& rc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open config '" + path + "' for writing");
  out << run_config_to_text(rc);
  if (!out) throw IoError("write failed for '" + path + "'");
}

void Report::add(const std::string& key, const std::string& value) {
  entries_.emplace_back(key, value);
}
void Report::add(const std::string& key, const char* value) {
  entries_.emplace_back(key, std::string(value));
}
void Report::add(const std::string& key, double value) {
  entries_.emplace_back(key, format_double(value));
}
void Report::add(const std::string& key, std::uint64_t value) {
  entries_.emplace_back(key, std::to_string(value));
}
void Report::add(const std::string& key, int value) {
  entries_.emplace_back(key, std::to_string(value));
}

std::string Report::to_text() const {
  std::ostringstream out;
  for (const auto& [key, value] : entries_) {
    out << key << " = " << value << "\n";
  }
  return out.str();
}

void Report::write(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open report '" + path + "' for writing");
  out << to_text();
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace ien
