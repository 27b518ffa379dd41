#ifndef MACHWATCH_SERVICE_SERVER_HPP
#define MACHWATCH_SERVICE_SERVER_HPP

#include "machwatch/civil_time.hpp"
#include "machwatch/service/runs.hpp"
#include "machwatch/version.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace machwatch {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path data_dir = "machwatch-data";
    std::optional<std::filesystem::path> config_path;
    std::optional<std::uint64_t> seed;

    /// "host:port" or ":port".
    void set_listen(std::string_view v) {
        const auto colon = v.rfind(':');
        if (colon == std::string_view::npos) throw DataError("listen address must be host:port, got '" + std::string(v) + "'");
        const auto port_v = text::parse_int(v.substr(colon + 1));
        if (port_v < 0 || port_v > 65535) throw DataError("listen port out of range");
        port = static_cast<int>(port_v);
        if (colon > 0) host = std::string(v.substr(0, colon));
    }

    /// MACHWATCH_LISTEN, MACHWATCH_DATA_DIR, MACHWATCH_CONFIG, MACHWATCH_SEED.
    static ServiceConfig from_env() {
        ServiceConfig c;
        if (const char* v = std::getenv("MACHWATCH_LISTEN"); v && *v) c.set_listen(v);
        if (const char* v = std::getenv("MACHWATCH_DATA_DIR"); v && *v) c.data_dir = v;
        if (const char* v = std::getenv("MACHWATCH_CONFIG"); v && *v) c.config_path = v;
        if (const char* v = std::getenv("MACHWATCH_SEED"); v && *v) c.seed = static_cast<std::uint64_t>(text::parse_int(v));
        return c;
    }
};

inline nlohmann::json to_json(const IngestReport& r) {
    auto errors = nlohmann::json::array();
    for (const auto& e : r.errors) errors.push_back({{"line", e.line}, {"message", e.message}});
    return {{"accepted", r.accepted},
            {"rejected", r.rejected},
            {"duplicates", r.duplicates},
            {"first_error", r.first_error ? nlohmann::json{{"line", r.first_error->line}, {"message", r.first_error->message}}
                                          : nlohmann::json(nullptr)},
            {"errors", std::move(errors)}};
}

inline nlohmann::json samples_json(std::span<const SensorSample> samples) {
    auto arr = nlohmann::json::array();
    for (const auto& s : samples)
        arr.push_back({{"ts", s.ts},
                       {"temp_c", s.temp},
                       {"i_r_a", s.i_r},
                       {"i_s_a", s.i_s},
                       {"i_t_a", s.i_t},
                       {"acc_x_g", s.acc_x},
                       {"acc_y_g", s.acc_y},
                       {"acc_z_g", s.acc_z},
                       {"operation", std::string(to_string(s.ctx.operation))},
                       {"tool", s.ctx.tool},
                       {"material", std::string(to_string(s.ctx.material))},
                       {"access", std::string(to_string(s.ctx.access))}});
    return arr;
}

/// Store, runs, matrix and pipeline defaults behind the /v1 API. Also the
/// engine the command line drives directly.
class Service {
public:
    explicit Service(ServiceConfig cfg) : cfg_(std::move(cfg)), store_(cfg_.data_dir), runs_(cfg_.data_dir) {
        KvConfig kv;
        if (cfg_.config_path) kv = KvConfig::load(*cfg_.config_path);
        if (cfg_.seed) kv.set("pipeline.seed", std::to_string(*cfg_.seed));
        pipeline_ = PipelineConfig::from_kv(kv);
        matrix_path_ = cfg_.data_dir / "matrix.txt";
        if (std::filesystem::exists(matrix_path_)) {
            std::ifstream f(matrix_path_, std::ios::binary);
            matrix_ = load_matrix(std::string(std::istreambuf_iterator<char>(f), {}));
        }
    }

    [[nodiscard]] SeriesStore& store() noexcept { return store_; }
    [[nodiscard]] RunStore& runs() noexcept { return runs_; }
    [[nodiscard]] const ServiceConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const PipelineConfig& pipeline_config() const noexcept { return pipeline_; }

    [[nodiscard]] RiskMatrix matrix() const {
        std::lock_guard lock(matrix_mu_);
        return matrix_;
    }

    RiskMatrix put_matrix(std::string_view text) {
        auto m = load_matrix(text);
        std::lock_guard lock(matrix_mu_);
        write_atomically(matrix_path_, render_matrix(m));
        matrix_ = m;
        return m;
    }

    /// Whole store extent when `range` is unset.
    [[nodiscard]] Interval resolve_range(std::optional<Interval> range) const {
        if (range) return *range;
        if (auto e = store_.extent()) return *e;
        return {};
    }

    /// Train run to take the model from: `model_run`, or the newest one.
    [[nodiscard]] RunRecord model_source(const std::string& model_run) const {
        if (!model_run.empty()) {
            auto r = runs_.get(model_run);
            if (r.status != RunStatus::Done || !r.artifact("model.json")) throw DataError("no model in run " + model_run);
            return r;
        }
        auto r = runs_.latest({RunKind::Train}, "model.json");
        if (!r) throw DataError("no model: run train first");
        return *r;
    }

    [[nodiscard]] TreeModel load_model(const std::string& run_id) const {
        return TreeModel::deserialize(runs_.artifact(run_id, "model.json"));
    }

    /// Creates the record; Detect resolves its model up front.
    RunRecord create_run(RunKind kind, std::optional<Interval> range, const PipelineConfig& cfg, const std::string& model_run = {}) {
        std::string source;
        if (kind == RunKind::Detect) source = model_source(model_run).id;
        auto r = runs_.create(kind, cfg, resolve_range(range));
        r.model_run = source;
        runs_.save(r);
        return r;
    }

    void execute(RunRecord& r, const PipelineConfig& cfg) {
        r.status = RunStatus::Running;
        runs_.save(r);
        PipelineResult res;
        try {
            std::optional<TreeModel> model;
            if (r.kind == RunKind::Detect) model = load_model(r.model_run);
            res = run_pipeline(store_, r.range, cfg, r.kind, matrix(), model ? &*model : nullptr);
        } catch (const std::exception& e) {
            res.status = RunStatus::Failed;
            res.error = std::string("setup: ") + e.what();
        }
        runs_.finish(r, res);
    }

    /// Synchronous run, used by the command line.
    RunRecord run_now(RunKind kind, std::optional<Interval> range, const PipelineConfig& cfg, const std::string& model_run = {}) {
        auto r = create_run(kind, range, cfg, model_run);
        execute(r, cfg);
        return r;
    }

    /// Queued run; returns the Pending record.
    RunRecord submit(RunKind kind, std::optional<Interval> range, const PipelineConfig& cfg, const std::string& model_run = {}) {
        auto r = create_run(kind, range, cfg, model_run);
        queue().submit([this, r, cfg]() mutable { execute(r, cfg); });
        return r;
    }

    void wait_idle() {
        if (queue_) queue_->wait_idle();
    }

    /// Registers every /v1 route on `srv`.
    void install(httplib::Server& srv) {
        auto guard = [](auto handler) {
            return [handler](const httplib::Request& req, httplib::Response& res) {
                try {
                    handler(req, res);
                } catch (const NotFound& e) {
                    fail(res, 404, e.what());
                } catch (const DataError& e) {
                    fail(res, 400, e.what());
                } catch (const nlohmann::json::exception& e) {
                    fail(res, 400, std::string("bad json: ") + e.what());
                } catch (const std::exception& e) {
                    fail(res, 500, e.what());
                }
            };
        };

        srv.Get("/v1/health", guard([](const httplib::Request&, httplib::Response& res) {
            json(res, {{"status", "ok"}, {"service", "machwatch"}, {"version", kVersion}});
        }));

        srv.Post("/v1/ingest", guard([this](const httplib::Request& req, httplib::Response& res) {
            json(res, to_json(store_.ingest_csv_text(req.body)));
        }));

        srv.Get("/v1/days", guard([this](const httplib::Request&, httplib::Response& res) { json(res, store_.days()); }));

        srv.Get("/v1/series", guard([this](const httplib::Request& req, httplib::Response& res) {
            SeriesFilter f;
            if (req.has_param("operation")) f.operation = parse_operation(req.get_param_value("operation"));
            if (req.has_param("tool")) f.tool = req.get_param_value("tool");
            if (req.has_param("material")) f.material = parse_material(req.get_param_value("material"));
            if (req.has_param("access")) f.access = parse_access(req.get_param_value("access"));
            if (req.has_param("day")) f.day = req.get_param_value("day");
            Interval range = query_range(req).value_or(Interval{std::numeric_limits<Seconds>::min() / 2, std::numeric_limits<Seconds>::max() / 2});
            if (f.day && !query_range(req)) {
                range.start = civil::parse_day(*f.day);
                range.end = range.start + civil::kDay;
            }
            const auto rows = store_.query_series(range, f);
            if (req.get_param_value("format") == "csv") {
                std::ostringstream out;
                write_ingest_csv(out, rows);
                res.set_content(out.str(), "text/csv");
            } else {
                json(res, samples_json(rows));
            }
        }));

        srv.Post("/v1/annotations", guard([this](const httplib::Request& req, httplib::Response& res) {
            Annotation a = nlohmann::json::parse(req.body).get<Annotation>();
            const auto id = store_.upsert_annotation(a);
            res.status = 201;
            json(res, {{"id", id}});
        }));
        srv.Get("/v1/annotations", guard([this](const httplib::Request& req, httplib::Response& res) {
            const auto range = query_range(req);
            json(res, nlohmann::json(range ? store_.list_annotations(*range) : store_.all_annotations()));
        }));
        srv.Delete(R"(/v1/annotations/([^/]+))", guard([this](const httplib::Request& req, httplib::Response& res) {
            store_.delete_annotation(req.matches[1]);
            res.status = 204;
        }));
        srv.Delete("/v1/annotations", guard([this](const httplib::Request& req, httplib::Response& res) {
            if (!req.has_param("id")) throw DataError("missing id");
            store_.delete_annotation(req.get_param_value("id"));
            res.status = 204;
        }));

        srv.Post("/v1/runs", guard([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = req.body.empty() ? nlohmann::json::object() : nlohmann::json::parse(req.body);
            const auto kind = parse_run_kind(body.value("kind", std::string("Train")));
            std::optional<Interval> range;
            if (body.contains("from") || body.contains("to")) {
                if (!body.contains("from") || !body.contains("to")) throw DataError("range needs both from and to");
                range = Interval{time_of(body.at("from")), time_of(body.at("to"))};
            }
            PipelineConfig cfg = pipeline_;
            if (body.contains("config")) {
                auto kv = KvConfig::parse(body.at("config").get<std::string>());
                if (cfg_.seed && !kv.has("pipeline.seed")) kv.set("pipeline.seed", std::to_string(*cfg_.seed));
                cfg = PipelineConfig::from_kv(kv);
            }
            const auto r = submit(kind, range, cfg, body.value("model", std::string()));
            res.status = 202;
            json(res, to_json(r));
        }));
        srv.Get("/v1/runs", guard([this](const httplib::Request&, httplib::Response& res) {
            auto arr = nlohmann::json::array();
            for (const auto& r : runs_.list()) arr.push_back(to_json(r));
            json(res, arr);
        }));
        srv.Get(R"(/v1/runs/([^/]+))", guard([this](const httplib::Request& req, httplib::Response& res) {
            json(res, to_json(runs_.get(req.matches[1])));
        }));
        srv.Get(R"(/v1/runs/([^/]+)/artifacts/([^/]+))", guard([this](const httplib::Request& req, httplib::Response& res) {
            const std::string name = req.matches[2];
            res.set_content(runs_.artifact(req.matches[1], name), content_type(name));
        }));

        srv.Get("/v1/detections", guard([this](const httplib::Request& req, httplib::Response& res) {
            const auto run = pick_run(req, "detections.csv");
            std::istringstream in(runs_.artifact(run, "detections.csv"));
            auto rows = parse_detections_csv(in);
            if (const auto range = query_range(req))
                std::erase_if(rows, [&](const Detection& d) { return !d.window.intersects(*range); });
            res.set_content(detections_csv(rows), "text/csv");
        }));
        srv.Get("/v1/assessments", guard([this](const httplib::Request& req, httplib::Response& res) {
            const auto run = pick_run(req, "assessments.json");
            auto all = nlohmann::json::parse(runs_.artifact(run, "assessments.json"));
            auto out = nlohmann::json::array();
            const auto range = query_range(req);
            for (auto& a : all) {
                const Interval w{a.at("window_start").get<Seconds>(), a.at("window_end").get<Seconds>()};
                if (!range || w.intersects(*range)) out.push_back(std::move(a));
            }
            json(res, out);
        }));

        srv.Get("/v1/matrix", guard([this](const httplib::Request&, httplib::Response& res) {
            res.set_content(render_matrix(matrix()), "text/plain");
        }));
        srv.Put("/v1/matrix", guard([this](const httplib::Request& req, httplib::Response& res) {
            res.set_content(render_matrix(put_matrix(req.body)), "text/plain");
        }));

        srv.Get(R"(/v1/models/([^/]+)/trees/(\d+)\.dot)", guard([this](const httplib::Request& req, httplib::Response& res) {
            const auto model = load_model(req.matches[1]);
            res.set_content(export_tree_dot(model, static_cast<std::size_t>(std::stoull(req.matches[2]))), "text/vnd.graphviz");
        }));
    }

private:
    static void json(httplib::Response& res, const nlohmann::json& body) { res.set_content(body.dump() + "\n", "application/json"); }

    static void fail(httplib::Response& res, int status, const std::string& message) {
        res.status = status;
        json(res, {{"error", message}});
    }

    static std::string content_type(std::string_view name) {
        if (name.ends_with(".csv")) return "text/csv";
        if (name.ends_with(".json")) return "application/json";
        return "application/octet-stream";
    }

    static Seconds time_of(const nlohmann::json& v) {
        if (v.is_number_integer()) return v.get<Seconds>();
        return civil::parse_time(v.get<std::string>());
    }

    static std::optional<Interval> query_range(const httplib::Request& req) {
        const bool f = req.has_param("from"), t = req.has_param("to");
        if (!f && !t) return std::nullopt;
        if (!f || !t) throw DataError("range needs both from and to");
        return Interval{civil::parse_time(req.get_param_value("from")), civil::parse_time(req.get_param_value("to"))};
    }

    [[nodiscard]] std::string pick_run(const httplib::Request& req, std::string_view artifact) const {
        if (req.has_param("run")) return req.get_param_value("run");
        auto r = runs_.latest({RunKind::Train, RunKind::Detect, RunKind::Attribute}, artifact);
        if (!r) throw NotFound("no finished run provides " + std::string(artifact));
        return r->id;
    }

    RunQueue& queue() {
        std::lock_guard lock(queue_mu_);
        if (!queue_) queue_ = std::make_unique<RunQueue>();
        return *queue_;
    }

    ServiceConfig cfg_;
    SeriesStore store_;
    RunStore runs_;
    PipelineConfig pipeline_;
    RiskMatrix matrix_ = default_matrix();
    std::filesystem::path matrix_path_;
    mutable std::mutex matrix_mu_;
    std::mutex queue_mu_;
    std::unique_ptr<RunQueue> queue_;  // declared last: drains before the stores go away
};

}  // namespace machwatch

#endif  // MACHWATCH_SERVICE_SERVER_HPP
