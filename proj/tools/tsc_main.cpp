#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tsc/config.hpp"
#include "tsc/errors.hpp"
#include "tsc/runner.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::int64_t seed = -1;
    std::string out_dir;
    int workers = 0;

    tsc::RunConfig resolve() const {
        tsc::RunConfig cfg = tsc::load_config_file(config_path);
        if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (workers > 0) cfg.workers = workers;
        return cfg;
    }
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "run configuration JSON")
        ->required();
    cmd->add_option("--seed", flags.seed, "override the config seed");
    cmd->add_option("--out", flags.out_dir, "override the output directory");
    cmd->add_option("--workers", flags.workers, "worker count for parallel sections");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-agent piecewise-linear traffic signal control experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tsc::version_string());

    CommonFlags pretrain_flags, train_flags, eval_flags, forecast_flags, anova_flags;
    std::string method = "ours";
    std::string pretrained_path;
    std::string checkpoint_path;
    std::vector<std::string> plot_inputs;
    std::string plot_out = "out";

    CLI::App* pretrain = app.add_subcommand("pretrain", "fit the EHH influence module");
    add_common(pretrain, pretrain_flags);

    CLI::App* train = app.add_subcommand("train", "train a controller");
    add_common(train, train_flags);
    train->add_option("--method", method, "ours, ippo or fixed")
        ->check(CLI::IsMember({"ours", "ippo", "fixed"}));
    train->add_option("--pretrained", pretrained_path,
                      "pretrained EHH checkpoint (method=ours)");

    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint greedily");
    add_common(eval, eval_flags);
    eval->add_option("--checkpoint", checkpoint_path,
                     "trained checkpoint (omit for fixed-time)");

    CLI::App* forecast = app.add_subcommand("forecast", "run the forecasting harness");
    add_common(forecast, forecast_flags);

    CLI::App* anova = app.add_subcommand("anova", "emit the importance report");
    add_common(anova, anova_flags);
    anova->add_option("--checkpoint", checkpoint_path, "pretrained EHH checkpoint");

    CLI::App* plot = app.add_subcommand("plot", "render comparison figures");
    plot->add_option("curves", plot_inputs, "learning-curve CSV files")->required();
    plot->add_option("--out", plot_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (pretrain->parsed()) return tsc::cmd_pretrain(pretrain_flags.resolve());
        if (train->parsed())
            return tsc::cmd_train(train_flags.resolve(), method, pretrained_path);
        if (eval->parsed()) return tsc::cmd_eval(eval_flags.resolve(), checkpoint_path);
        if (forecast->parsed()) return tsc::cmd_forecast(forecast_flags.resolve());
        if (anova->parsed()) return tsc::cmd_anova(anova_flags.resolve(), checkpoint_path);
        if (plot->parsed()) return tsc::cmd_plot(plot_inputs, plot_out);
    } catch (const tsc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
