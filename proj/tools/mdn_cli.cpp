#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mdn/errors.hpp"
#include "mdn/runner.hpp"

namespace {

// Shared --config/--output/key=value plumbing for gen-data and train.
struct SpecArgs {
    std::vector<std::string> configs;
    std::vector<std::string> overrides;
};

void add_spec_options(CLI::App* cmd, SpecArgs& args) {
    cmd->add_option("--config", args.configs, "Config file(s), applied in order")
        ->check(CLI::ExistingFile)
        ->type_size(1)   // each --config takes exactly one file, so that the
        ->expected(1)    // key=value positionals that follow stay free; the flag
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)  // remains repeatable
        ->allow_extra_args(false);
    cmd->add_option("overrides", args.overrides,
                    "key=value overrides applied after config files");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(mdn::kVersion) +
                 " — margin-based debiasing engine with meta-learned group margins"};
    app.require_subcommand(1);
    app.set_version_flag("--version", mdn::kVersion);

    SpecArgs gen_args;
    CLI::App* gen = app.add_subcommand(
        "gen-data", "Generate a biased dataset bundle (run.output names the bundle file)");
    add_spec_options(gen, gen_args);

    SpecArgs train_args;
    CLI::App* train = app.add_subcommand(
        "train", "Train one mode for run.reps seeded repetitions and write run artifacts");
    add_spec_options(train, train_args);

    mdn::GradCheckOptions gc;
    CLI::App* gradcheck = app.add_subcommand(
        "gradcheck", "Finite-difference verification of every analytic gradient");
    gradcheck->add_option("--seed", gc.seed, "Base seed for the random instances");
    gradcheck->add_option("--instances", gc.instances, "Random instances per suite")
        ->check(CLI::PositiveNumber);
    gradcheck->add_option("--corrupt", gc.corrupt,
                          "Perturb the named suite's analytic gradient (self-test hook)");

    std::vector<std::string> compare_dirs;
    std::string compare_out = "compare";
    CLI::App* compare = app.add_subcommand(
        "compare", "Merge run reports into a mode x rho table and plot data");
    compare->add_option("--out", compare_out, "Directory for table.tsv / plotdata.tsv");
    compare->add_option("runs", compare_dirs, "Run directories (each holding rep*/report.json)")
        ->required()
        ->expected(-2);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // parse problems are config errors
    }

    try {
        if (*gen) {
            mdn::ExperimentSpec spec =
                mdn::parse_spec(gen_args.configs, gen_args.overrides);
            mdn::cmd_gen_data(spec, std::cout);
        } else if (*train) {
            mdn::ExperimentSpec spec =
                mdn::parse_spec(train_args.configs, train_args.overrides);
            mdn::cmd_train(spec, std::cout);
        } else if (*gradcheck) {
            if (!mdn::cmd_gradcheck(gc, std::cout)) return 3;
        } else if (*compare) {
            mdn::cmd_compare(compare_dirs, compare_out, std::cout);
        }
    } catch (const mdn::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
