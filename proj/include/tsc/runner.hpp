#pragma once

#include <string>
#include <vector>

#include "tsc/config.hpp"

namespace tsc {

std::string version_string();

// Command implementations behind the CLI. Each writes its outputs plus a
// run manifest (command, resolved config, seed, version) into cfg.out_dir
// and returns a process exit code.
int cmd_pretrain(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg, const std::string& method,
              std::string pretrained_path);
int cmd_eval(const RunConfig& cfg, const std::string& checkpoint_path);
int cmd_forecast(const RunConfig& cfg);
int cmd_anova(const RunConfig& cfg, const std::string& checkpoint_path);
int cmd_plot(const std::vector<std::string>& curve_csvs, const std::string& out_dir);

}  // namespace tsc
