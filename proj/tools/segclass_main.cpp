#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "segclass/pipeline.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("-c,--config", args.config_path, "Run config JSON file")->required();
    cmd->add_option("overrides", args.overrides,
                    "Dotted-key overrides applied after the file, e.g. train.epochs=3");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-segment scientific-document subject classifier"};
    app.require_subcommand(1);

    CommonArgs prepare_args, train_args, evaluate_args, predict_args, report_args;
    std::string predict_input, predict_output;

    add_common(app.add_subcommand("prepare", "Validate, split, segment and weight the corpus"),
               prepare_args);
    add_common(app.add_subcommand("train", "Train the classifier head on prepared artifacts"),
               train_args);
    add_common(app.add_subcommand("evaluate", "Write the evaluation report for a split"),
               evaluate_args);
    auto* predict_cmd =
        app.add_subcommand("predict", "Score unlabeled JSON-lines documents");
    add_common(predict_cmd, predict_args);
    predict_cmd->add_option("-i,--input", predict_input, "Unlabeled JSON-lines input")->required();
    predict_cmd->add_option("-o,--output", predict_output,
                            "Output path (default: <output.dir>/predictions.jsonl)");
    add_common(app.add_subcommand("report", "Render reports/report.json as markdown"),
               report_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("prepare")) {
            segclass::run_prepare(
                segclass::load_run_config(prepare_args.config_path, prepare_args.overrides));
        } else if (app.got_subcommand("train")) {
            segclass::run_train(
                segclass::load_run_config(train_args.config_path, train_args.overrides));
        } else if (app.got_subcommand("evaluate")) {
            segclass::run_evaluate(
                segclass::load_run_config(evaluate_args.config_path, evaluate_args.overrides));
        } else if (app.got_subcommand("predict")) {
            const auto config =
                segclass::load_run_config(predict_args.config_path, predict_args.overrides);
            const std::filesystem::path output =
                predict_output.empty() ? config.output_dir / "predictions.jsonl"
                                       : std::filesystem::path(predict_output);
            segclass::run_predict(config, predict_input, output);
        } else if (app.got_subcommand("report")) {
            std::cout << segclass::run_report(
                segclass::load_run_config(report_args.config_path, report_args.overrides));
        }
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return 0;
}
