#include "qdlab/harness.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>

namespace {

int resolve_threads(int flag) {
    if (flag > 0) return flag;
    if (const char* env = std::getenv("QDLAB_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
        }
        std::cerr << "ignoring invalid QDLAB_THREADS='" << env << "'\n";
    }
    return 1;
}

int report(const qdlab::RunResult& r, bool print_payload) {
    if (r.exit_code != qdlab::kExitOk) {
        std::cerr << "qdlab: " << r.message << "\n";
        return r.exit_code;
    }
    if (print_payload && r.files.empty()) std::cout << r.results_json;
    for (const std::string& f : r.files) std::cerr << "wrote " << f << "\n";
    return qdlab::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"qdlab: quasiderivative Monte Carlo and Bellman oracle experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string out_dir;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config (JSON)")->required();
        sub->add_option("--seed", seed, "override the base seed");
        sub->add_option("--threads", threads, "worker threads (default: QDLAB_THREADS or 1)");
        sub->add_option("--out", out_dir, "output directory");
    };
    CLI::App* run = app.add_subcommand("run", "run the estimators of a config");
    add_common(run);
    CLI::App* check = app.add_subcommand("check", "run assumption checks only");
    add_common(check);
    app.add_subcommand("list", "list built-in problems, domains and experiments");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? qdlab::kExitOk : qdlab::kExitUsage;
    }

    if (app.got_subcommand("list")) {
        qdlab::list_catalog(std::cout);
        return qdlab::kExitOk;
    }

    CLI::App* sub = app.got_subcommand("run") ? run : check;
    qdlab::RunOverrides ov;
    if (sub->count("--seed") > 0) ov.seed = seed;
    ov.threads = resolve_threads(threads);
    if (!out_dir.empty()) ov.out = out_dir;

    qdlab::ExperimentConfig cfg;
    try {
        cfg = qdlab::load_config(config_path);
    } catch (const qdlab::ConfigError& e) {
        std::cerr << "qdlab: " << e.what() << "\n";
        return qdlab::kExitSchema;
    }
    const qdlab::RunResult r = sub == run ? qdlab::run_experiment(cfg, ov) : qdlab::check_experiment(cfg, ov);
    return report(r, true);
}
