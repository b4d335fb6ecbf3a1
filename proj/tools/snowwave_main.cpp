#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "snowwave/errors.hpp"
#include "snowwave/runner.hpp"

namespace {

// --config accepts an INI run file or a manifest.json from a previous run
// (the manifest embeds the resolved config, so runs can be repeated from it).
snowwave::RunConfig load_config(const std::string& path) {
    if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
        std::ifstream in(path);
        if (!in) throw snowwave::ValidationError("cannot open manifest: " + path);
        nlohmann::json manifest;
        in >> manifest;
        if (!manifest.contains("config_ini"))
            throw snowwave::ValidationError("manifest has no config_ini field: " + path);
        return snowwave::RunConfig::from_ini(
            snowwave::IniFile::parse(manifest["config_ini"].get<std::string>()));
    }
    return snowwave::RunConfig::from_ini(snowwave::IniFile::load(path));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"snowwave: strongly damped and Westervelt wave solvers on prefractal domains"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand

    std::string config_path;
    std::string out_dir;
    int threads = 0;
    app.add_option("--config", config_path, "run configuration file (INI or manifest.json)");
    app.add_option("--out", out_dir, "output directory (overrides [run] out)");
    app.add_option("--threads", threads, "worker threads (overrides [run] threads)");

    const std::vector<std::pair<std::string, std::string>> kinds = {
        {"mesh", "triangulate the configured domain"},
        {"eigs", "Dirichlet-Laplacian eigenbasis"},
        {"solve-linear", "strongly damped linear wave solve"},
        {"solve-westervelt", "Westervelt fixed-point solve"},
        {"mosco", "domain-convergence experiment"},
        {"verify", "analytic inequality checks"},
    };
    for (const auto& [name, help] : kinds) app.add_subcommand(name, help);

    CLI11_PARSE(app, argc, argv);

    try {
        snowwave::RunConfig config =
            config_path.empty() ? snowwave::RunConfig{} : load_config(config_path);
        for (const auto& [name, help] : kinds) {
            (void)help;
            if (app.got_subcommand(name))
                config.experiment = snowwave::experiment_from_name(name);
        }
        if (!out_dir.empty()) config.out_dir = out_dir;
        if (threads > 0) {
            config.threads = threads;
            config.mosco.n_threads = threads;
        }
        config.validate();
        snowwave::run_experiment(config);
        return 0;
    } catch (const snowwave::SmallnessError& e) {
        std::cerr << "smallness gate error: " << e.what() << '\n';
        return 4;
    } catch (const snowwave::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const snowwave::ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
