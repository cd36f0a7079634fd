#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "perihom/errors.hpp"
#include "perihom/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Homogenization toolkit for semi-linear diffusion-reaction systems on perforated domains"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::vector<std::string> eps_tokens;
    int order = -1;
    int jobs = 0;
    std::string cutoff;
    std::string macro_mode;
    bool gnuplot = false;

    for (const char* name : {"mesh", "cell", "micro", "macro", "verify"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "configuration file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
        sub->add_option("--eps", eps_tokens, "epsilon list, e.g. --eps 1/4 1/8 (overrides geometry.eps_list)");
        sub->add_option("--order", order, "expansion order M in {0,1,2}");
        sub->add_option("--jobs", jobs, "worker pool size for the verify sweep");
        sub->add_option("--cutoff", cutoff, "cut-off convention: paper or standard");
        sub->add_option("--macro-mode", macro_mode, "volume_only or with_surface");
        sub->add_flag("--gnuplot-script", gnuplot, "also emit a gnuplot script for the report");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string sub = app.get_subcommands().front()->get_name();

    try {
        perihom::RunConfig config = perihom::load_config_file(config_path);
        if (!out_dir.empty()) config.out_dir = out_dir;
        if (!eps_tokens.empty()) {
            config.eps_list.clear();
            for (const std::string& tok : eps_tokens) {
                config.eps_list.push_back(perihom::parse_epsilon_token(tok));
            }
        }
        if (order >= 0) {
            if (order > 2) throw perihom::ValidationError("--order must be 0, 1 or 2");
            config.order = order;
        }
        if (jobs > 0) config.jobs = jobs;
        if (!cutoff.empty()) {
            if (cutoff == "paper") config.cutoff = perihom::CutoffConvention::paper;
            else if (cutoff == "standard") config.cutoff = perihom::CutoffConvention::standard;
            else throw perihom::ValidationError("--cutoff must be paper or standard");
        }
        if (!macro_mode.empty()) {
            if (macro_mode == "volume_only") config.macro_mode = perihom::MacroMode::volume_only;
            else if (macro_mode == "with_surface") config.macro_mode = perihom::MacroMode::with_surface;
            else throw perihom::ValidationError("--macro-mode must be volume_only or with_surface");
        }
        return perihom::run_command(sub, config, std::cout, gnuplot);
    } catch (const perihom::NoConvergence& e) {
        std::cerr << "error: " << e.what() << "\n";
        return perihom::kExitNoConvergence;
    } catch (const perihom::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return perihom::kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return perihom::kExitConfigError;
    }
}
