#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ctube/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"complex tube incidence experiments"};
    app.set_version_flag("--version", ctube::version_string());
    app.require_subcommand(1, 1);

    std::string config_path, out_dir;
    std::vector<std::string> overrides;
    for (const std::string& name : ctube::command_names()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "flat key = value config file");
        sub->add_option("--set", overrides, "override one key, key=value")->allow_extra_args(false);
        sub->add_option("--out", out_dir, "directory for report.json and data.csv");
    }
    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    ctube::ExperimentConfig cfg;
    try {
        std::string text;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ctube::PreconditionError("cannot open config '" + config_path + "'");
            std::ostringstream ss;
            ss << in.rdbuf();
            text = ss.str();
        }
        cfg = ctube::parse_config(text);
        for (const std::string& o : overrides) ctube::set_value(cfg, o);
    } catch (const std::exception& e) {
        std::cerr << "ctube: config error: " << e.what() << "\n";
        return 2;
    }

    ctube::RunResult r = ctube::run_command(command, cfg, out_dir);
    if (out_dir.empty()) std::cout << r.report;
    if (r.status == 0)
        std::cerr << command << ": pass\n";
    else
        std::cerr << command << ": " << (r.status == 1 ? "fail" : "error") << ": " << r.reason << "\n";
    return r.status;
}
