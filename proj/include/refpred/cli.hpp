#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace refpred::cli {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::optional<std::size_t> n_ref;
};

// Each command reads the JSON config, writes its artifacts under out_dir
// (atomically: temp file then rename), and returns a process exit code.
// Failures print one machine-readable JSON error object to stderr.
int cmd_split(const std::string& config_path, const std::string& out_dir, const Overrides& ov);
int cmd_select(const std::string& config_path, const std::string& out_dir, const Overrides& ov);
int cmd_run(const std::string& config_path, const std::string& out_dir, const Overrides& ov);
int cmd_sweep(const std::string& config_path, const std::string& out_dir, const Overrides& ov);
int cmd_synthetic(const std::string& config_path, const std::string& out_dir,
                  const Overrides& ov);

}  // namespace refpred::cli
