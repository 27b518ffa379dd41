#ifndef MACHWATCH_SERVICE_RUNS_HPP
#define MACHWATCH_SERVICE_RUNS_HPP

#include "machwatch/service/pipeline.hpp"

#include <json.hpp>

#include <condition_variable>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace machwatch {

struct ArtifactRef {
    std::string name;
    std::string digest;  // sha256 hex
    std::size_t bytes = 0;

    friend bool operator==(const ArtifactRef&, const ArtifactRef&) = default;
};

struct RunRecord {
    std::string id;
    RunKind kind = RunKind::Train;
    std::string config;  // rendered PipelineConfig, frozen at creation
    Interval range;
    RunStatus status = RunStatus::Pending;
    std::vector<ArtifactRef> artifacts;
    std::string error;
    std::string model_run;    // Detect: run whose model was used
    double wall_seconds = 0;  // metadata, not part of any artifact

    [[nodiscard]] const ArtifactRef* artifact(std::string_view name) const {
        for (const auto& a : artifacts)
            if (a.name == name) return &a;
        return nullptr;
    }
};

inline nlohmann::json to_json(const RunRecord& r) {
    auto arts = nlohmann::json::array();
    for (const auto& a : r.artifacts) arts.push_back({{"name", a.name}, {"digest", a.digest}, {"bytes", a.bytes}});
    return {{"id", r.id},
            {"kind", std::string(to_string(r.kind))},
            {"config", r.config},
            {"range", {{"from", r.range.start}, {"to", r.range.end}}},
            {"status", std::string(to_string(r.status))},
            {"artifacts", std::move(arts)},
            {"error", r.error},
            {"model_run", r.model_run},
            {"wall_seconds", r.wall_seconds}};
}

inline RunRecord run_from_json(const nlohmann::json& j) {
    try {
        RunRecord r;
        r.id = j.at("id").get<std::string>();
        r.kind = parse_run_kind(j.at("kind").get<std::string>());
        r.config = j.at("config").get<std::string>();
        r.range = {j.at("range").at("from").get<Seconds>(), j.at("range").at("to").get<Seconds>()};
        r.status = parse_run_status(j.at("status").get<std::string>());
        for (const auto& a : j.at("artifacts"))
            r.artifacts.push_back({a.at("name").get<std::string>(), a.at("digest").get<std::string>(), a.at("bytes").get<std::size_t>()});
        r.error = j.value("error", "");
        r.model_run = j.value("model_run", "");
        r.wall_seconds = j.value("wall_seconds", 0.0);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed run record: ") + e.what());
    }
}

/// Writes `content` to a sibling temp file and renames it over `path`, so
/// readers see either the old file or the complete new one.
inline void write_atomically(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        f.flush();
        if (!f) throw Error("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

/// Run records under <data_dir>/runs/<id>/. Artifacts land before the
/// record turns Done and never change afterwards.
class RunStore {
public:
    explicit RunStore(std::filesystem::path data_dir) : root_(std::move(data_dir) / "runs") {
        std::filesystem::create_directories(root_);
        for (const auto& e : std::filesystem::directory_iterator(root_)) {
            const auto name = e.path().filename().string();
            if (name.rfind("run-", 0) == 0) seq_ = std::max(seq_, static_cast<std::uint64_t>(std::stoull(name.substr(4))));
        }
    }

    RunRecord create(RunKind kind, const PipelineConfig& cfg, Interval range) {
        std::lock_guard lock(mu_);
        RunRecord r;
        char buf[32];
        std::snprintf(buf, sizeof buf, "run-%06llu", static_cast<unsigned long long>(++seq_));
        r.id = buf;
        r.kind = kind;
        r.config = cfg.to_kv().render();
        r.range = range;
        std::filesystem::create_directories(root_ / r.id);
        save_locked(r);
        return r;
    }

    void save(const RunRecord& r) {
        std::lock_guard lock(mu_);
        save_locked(r);
    }

    /// Persists the artifacts, then the record with their digests.
    void finish(RunRecord& r, const PipelineResult& res) {
        std::lock_guard lock(mu_);
        const auto existing = load_locked(r.id);
        if (existing.status == RunStatus::Done || existing.status == RunStatus::Failed)
            throw Error("run " + r.id + " is already finished");
        r.status = res.status;
        r.error = res.error;
        r.wall_seconds = res.wall_seconds;
        r.artifacts.clear();
        if (res.status == RunStatus::Done) {
            for (const auto& a : res.artifacts) {
                write_atomically(root_ / r.id / a.name, a.content);
                r.artifacts.push_back({a.name, sha256_hex(a.content), a.content.size()});
            }
            for (const auto& want : declared_artifacts(r.kind))
                if (!r.artifact(want)) throw Error("run " + r.id + " lacks artifact " + want);
        }
        save_locked(r);
    }

    [[nodiscard]] RunRecord get(const std::string& id) const {
        std::lock_guard lock(mu_);
        return load_locked(id);
    }

    /// All runs in creation order.
    [[nodiscard]] std::vector<RunRecord> list() const {
        std::lock_guard lock(mu_);
        std::vector<std::string> ids;
        for (const auto& e : std::filesystem::directory_iterator(root_))
            if (std::filesystem::exists(e.path() / "run.json")) ids.push_back(e.path().filename().string());
        std::sort(ids.begin(), ids.end());
        std::vector<RunRecord> out;
        for (const auto& id : ids) out.push_back(load_locked(id));
        return out;
    }

    /// Latest Done run of `kind` that carries `artifact`.
    [[nodiscard]] std::optional<RunRecord> latest(std::initializer_list<RunKind> kinds, std::string_view artifact) const {
        auto all = list();
        for (auto it = all.rbegin(); it != all.rend(); ++it)
            if (it->status == RunStatus::Done && it->artifact(artifact) &&
                std::find(kinds.begin(), kinds.end(), it->kind) != kinds.end())
                return *it;
        return std::nullopt;
    }

    [[nodiscard]] std::string artifact(const std::string& id, const std::string& name) const {
        const auto r = get(id);
        if (r.status != RunStatus::Done || !r.artifact(name)) throw NotFound("run " + id + " has no artifact '" + name + "'");
        std::ifstream f(root_ / id / name, std::ios::binary);
        if (!f) throw NotFound("artifact file missing for run " + id + ": " + name);
        return {std::istreambuf_iterator<char>(f), {}};
    }

    [[nodiscard]] const std::filesystem::path& root() const noexcept { return root_; }

private:
    void save_locked(const RunRecord& r) { write_atomically(root_ / r.id / "run.json", to_json(r).dump(1) + "\n"); }

    [[nodiscard]] RunRecord load_locked(const std::string& id) const {
        if (id.empty() || id.find('/') != std::string::npos || id.find("..") != std::string::npos)
            throw NotFound("no run '" + id + "'");
        std::ifstream f(root_ / id / "run.json", std::ios::binary);
        if (!f) throw NotFound("no run '" + id + "'");
        try {
            return run_from_json(nlohmann::json::parse(f));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("corrupt run record " + id + ": " + e.what());
        }
    }

    std::filesystem::path root_;
    mutable std::mutex mu_;
    std::uint64_t seq_ = 0;
};

/// Executes runs one at a time on a worker thread, in submission order.
class RunQueue {
public:
    using Job = std::function<void()>;

    RunQueue() : worker_([this] { loop(); }) {}
    ~RunQueue() {
        {
            std::lock_guard lock(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        worker_.join();
    }
    RunQueue(const RunQueue&) = delete;
    RunQueue& operator=(const RunQueue&) = delete;

    void submit(Job job) {
        {
            std::lock_guard lock(mu_);
            jobs_.push_back(std::move(job));
        }
        cv_.notify_all();
    }

    /// Blocks until every submitted job has finished.
    void wait_idle() {
        std::unique_lock lock(mu_);
        idle_cv_.wait(lock, [this] { return jobs_.empty() && !busy_; });
    }

private:
    void loop() {
        std::unique_lock lock(mu_);
        for (;;) {
            cv_.wait(lock, [this] { return stop_ || !jobs_.empty(); });
            if (jobs_.empty()) return;
            auto job = std::move(jobs_.front());
            jobs_.pop_front();
            busy_ = true;
            lock.unlock();
            job();
            lock.lock();
            busy_ = false;
            idle_cv_.notify_all();
        }
    }

    std::mutex mu_;
    std::condition_variable cv_, idle_cv_;
    std::deque<Job> jobs_;
    bool busy_ = false;
    bool stop_ = false;
    std::thread worker_;
};

}  // namespace machwatch

#endif  // MACHWATCH_SERVICE_RUNS_HPP
