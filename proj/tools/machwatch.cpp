#include "machwatch/service/server.hpp"
#include "machwatch/sim/catalog.hpp"
#include "machwatch/sim/simulate.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>

using namespace machwatch;

namespace {

httplib::Server* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

struct RunArgs {
    std::string from, to, model;
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
};

void add_range(CLI::App* cmd, RunArgs& a) {
    cmd->add_option("--from", a.from, "Range start (epoch seconds or ISO-8601 UTC)");
    cmd->add_option("--to", a.to, "Range end, exclusive");
}

void add_pipeline(CLI::App* cmd, RunArgs& a) {
    add_range(cmd, a);
    cmd->add_option("--config", a.config, "Pipeline config file");
    cmd->add_option("--seed", a.seed, "Override pipeline.seed");
}

std::optional<Interval> range_of(const RunArgs& a) {
    if (a.from.empty() && a.to.empty()) return std::nullopt;
    if (a.from.empty() || a.to.empty()) throw DataError("--from and --to go together");
    return Interval{civil::parse_time(a.from), civil::parse_time(a.to)};
}

ServiceConfig service_config(const std::string& data_dir, const RunArgs& a) {
    auto c = ServiceConfig::from_env();
    if (!data_dir.empty()) c.data_dir = data_dir;
    if (a.config) c.config_path = *a.config;
    if (a.seed) c.seed = *a.seed;
    return c;
}

int print_run(const RunRecord& r) {
    std::cout << to_json(r).dump(1) << '\n';
    if (r.status == RunStatus::Failed) {
        std::cerr << "error: run " << r.id << " failed: " << r.error << '\n';
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"machwatch: machining-center telemetry, anomaly criteria, tree models and risk attribution"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    std::string data_dir;
    app.add_option("--data-dir", data_dir, "Data directory (default: $MACHWATCH_DATA_DIR or ./machwatch-data)");

    auto* sim_cmd = app.add_subcommand("simulate", "Generate a catalog or file-defined scenario as day CSVs");
    std::string scenario, scenario_file, out_dir;
    std::uint64_t sim_seed = 1;
    bool list = false;
    sim_cmd->add_option("--scenario", scenario, "Catalog scenario name");
    sim_cmd->add_option("--scenario-file", scenario_file, "Scenario in key = value form");
    sim_cmd->add_option("--seed", sim_seed, "Noise and schedule seed");
    sim_cmd->add_option("--out", out_dir, "Output directory");
    sim_cmd->add_flag("--list", list, "List catalog scenarios");

    auto* ingest_cmd = app.add_subcommand("ingest", "Append CSV files to the store");
    std::vector<std::string> files;
    std::vector<std::string> annotation_files;
    ingest_cmd->add_option("files", files, "Ingest-schema CSV files");
    ingest_cmd->add_option("--annotations", annotation_files, "Annotation CSV files, applied after the samples");

    auto* crit_cmd = app.add_subcommand("criteria", "Evaluate the ten criteria over windows");
    RunArgs crit_args;
    int crit_window = 30;
    add_pipeline(crit_cmd, crit_args);
    crit_cmd->add_option("--window", crit_window, "Window duration in seconds");

    RunArgs label_args, train_args, detect_args, attr_args;
    auto* label_cmd = app.add_subcommand("label", "Derive labels for annotated windows");
    add_pipeline(label_cmd, label_args);
    auto* train_cmd = app.add_subcommand("train", "Full pipeline: label, cross-validate, select, train, detect, attribute");
    add_pipeline(train_cmd, train_args);
    auto* detect_cmd = app.add_subcommand("detect", "Predict every window with a trained model");
    add_pipeline(detect_cmd, detect_args);
    detect_cmd->add_option("--model", detect_args.model, "Train run providing the model (default: newest)");
    auto* attr_cmd = app.add_subcommand("attribute", "Map criteria firings to risks");
    add_pipeline(attr_cmd, attr_args);

    auto* matrix_cmd = app.add_subcommand("matrix", "Show or load the criteria-risk matrix");
    bool render = false;
    std::string load_path;
    matrix_cmd->add_flag("--render", render, "Print the matrix");
    matrix_cmd->add_option("--load", load_path, "Validate a matrix file; stored when --data-dir is given");

    auto* dot_cmd = app.add_subcommand("export-dot", "Graphviz export of one tree");
    std::string dot_model;
    std::size_t dot_tree = 0;
    dot_cmd->add_option("--model", dot_model, "Train run id (default: newest)");
    dot_cmd->add_option("--tree", dot_tree, "Tree index");

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
    RunArgs serve_args;
    std::string listen;
    serve_cmd->add_option("--listen", listen, "host:port (default: $MACHWATCH_LISTEN or 127.0.0.1:8080)");
    serve_cmd->add_option("--config", serve_args.config, "Pipeline config file");
    serve_cmd->add_option("--seed", serve_args.seed, "Default pipeline seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*sim_cmd) {
            if (list) {
                for (const auto& n : sim::scenario_names()) std::cout << n << '\n';
                return 0;
            }
            if (scenario.empty() == scenario_file.empty()) throw CLI::ValidationError("give exactly one of --scenario, --scenario-file");
            if (out_dir.empty()) throw CLI::ValidationError("--out is required");
            auto spec = scenario.empty() ? sim::ScenarioSpec::from_kv(KvConfig::load(scenario_file)) : sim::make_scenario(scenario, sim_seed);
            if (!scenario.empty() || sim_cmd->count("--seed")) spec.seed = sim_seed;
            const auto result = sim::simulate(spec);
            const auto written = sim::write_simulation(result, out_dir);
            nlohmann::json j{{"scenario", spec.name}, {"seed", spec.seed}, {"samples", result.samples.size()},
                             {"injections", result.truth.size()}, {"annotations", result.annotations.size()}, {"files", written.size()}};
            std::cout << j.dump() << '\n';
            return 0;
        }
        if (*matrix_cmd && data_dir.empty()) {
            if (!load_path.empty()) {
                std::ifstream f(load_path, std::ios::binary);
                if (!f) throw DataError("cannot read " + load_path);
                std::cout << render_matrix(load_matrix(std::string(std::istreambuf_iterator<char>(f), {})));
            } else {
                std::cout << render_matrix(default_matrix());
            }
            return 0;
        }

        const RunArgs* args = &serve_args;
        for (auto* p : {&crit_args, &label_args, &train_args, &detect_args, &attr_args})
            if ((p == &crit_args && *crit_cmd) || (p == &label_args && *label_cmd) || (p == &train_args && *train_cmd) ||
                (p == &detect_args && *detect_cmd) || (p == &attr_args && *attr_cmd))
                args = p;
        auto cfg = service_config(data_dir, *args);
        if (*serve_cmd && !listen.empty()) cfg.set_listen(listen);
        Service svc(cfg);

        if (*ingest_cmd) {
            IngestReport total;
            for (const auto& path : files) {
                std::ifstream f(path, std::ios::binary);
                if (!f) throw DataError("cannot read " + path);
                const auto r = svc.store().ingest_csv(f);
                total.accepted += r.accepted;
                total.duplicates += r.duplicates;
                for (const auto& e : r.errors) total.reject(e.line, path + ": " + e.message);
            }
            std::size_t annotated = 0;
            for (const auto& path : annotation_files) {
                std::ifstream f(path, std::ios::binary);
                if (!f) throw DataError("cannot read " + path);
                for (auto& a : parse_annotations_csv(f)) {
                    svc.store().upsert_annotation(std::move(a));
                    ++annotated;
                }
            }
            auto report = to_json(total);
            report["annotations"] = annotated;
            std::cout << report.dump() << '\n';
            if (total.rejected > 0) {
                std::cerr << "error: " << total.rejected << " rows rejected; first: " << total.first_error->message << '\n';
                return 2;
            }
            return 0;
        }
        if (*crit_cmd) {
            auto pc = svc.pipeline_config();
            const auto range = svc.resolve_range(range_of(crit_args));
            if (!svc.store().has_data(range)) throw DataError("no data in range");
            const auto history = QuantileStore::build(svc.store().query_series(range));
            std::cout << "window_start,window_end,criterion,score\n";
            for (const auto& w : svc.store().segment_windows(range, crit_window, crit_window, pc.coverage_floor)) {
                if (w.empty()) continue;
                for (const auto& f : evaluate_all(w, pc.criteria, history).firings)
                    std::cout << w.interval().start << ',' << w.interval().end << ',' << to_string(f.criterion) << ','
                              << text::format_double(f.score) << '\n';
            }
            return 0;
        }
        if (*label_cmd) return print_run(svc.run_now(RunKind::Label, range_of(label_args), svc.pipeline_config()));
        if (*train_cmd) return print_run(svc.run_now(RunKind::Train, range_of(train_args), svc.pipeline_config()));
        if (*detect_cmd) return print_run(svc.run_now(RunKind::Detect, range_of(detect_args), svc.pipeline_config(), detect_args.model));
        if (*attr_cmd) return print_run(svc.run_now(RunKind::Attribute, range_of(attr_args), svc.pipeline_config()));
        if (*matrix_cmd) {
            if (!load_path.empty()) {
                std::ifstream f(load_path, std::ios::binary);
                if (!f) throw DataError("cannot read " + load_path);
                svc.put_matrix(std::string(std::istreambuf_iterator<char>(f), {}));
            }
            std::cout << render_matrix(svc.matrix());
            return 0;
        }
        if (*dot_cmd) {
            const auto run = svc.model_source(dot_model).id;
            std::cout << export_tree_dot(svc.load_model(run), dot_tree);
            return 0;
        }
        if (*serve_cmd) {
            httplib::Server srv;
            svc.install(srv);
            g_server = &srv;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            if (!srv.bind_to_port(cfg.host, cfg.port)) throw Error("cannot listen on " + cfg.host + ":" + std::to_string(cfg.port));
            std::cerr << "machwatch " << kVersion << " listening on " << cfg.host << ':' << cfg.port << ", data in "
                      << cfg.data_dir.string() << '\n';
            srv.listen_after_bind();
            svc.wait_idle();
            return 0;
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n' << app.help();
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
    return 1;
}
