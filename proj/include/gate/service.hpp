#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "gate/cli_io.hpp"
#include "gate/params.hpp"
#include "gate/planner.hpp"

namespace httplib {
class Server;
}

namespace gate::service {

namespace fs = std::filesystem;

struct ServiceConfig {
    std::string bind = "127.0.0.1";
    int port = 8731;
    fs::path dataDir = "gate_data";
    unsigned workers = 0;  // 0: hardware concurrency
    SolverSettings solver;
};

enum class JobStatus { Queued, Running, Done, Failed };
std::string to_string(JobStatus s);

struct Job {
    std::string id;
    ParameterSet params;
    SolveMode mode = SolveMode::Deterministic;
    SolverSettings solver;
    JobStatus status = JobStatus::Queued;
    std::string reason;
    std::string startedAt;
    std::vector<IterationRecord> progress;
    std::optional<Solution> solution;
    nlohmann::json manifest;
};

struct SavedScenario {
    std::string name;
    nlohmann::json manifest;
    io::TrajectoryTable table;
};

/// Job registry, worker pool and persisted scenario store behind the HTTP API.
class Session {
public:
    explicit Session(ServiceConfig cfg);
    ~Session();
    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    const std::string& id() const { return id_; }
    const ServiceConfig& config() const { return cfg_; }

    std::string submit(const ParameterSet& p, SolveMode mode, const SolverSettings& s);
    /// Snapshot of a job's status document; nullopt when unknown.
    std::optional<nlohmann::json> job_status(const std::string& id) const;
    nlohmann::json job_list() const;

    /// Progress records from `from` on; blocks up to `wait` for new ones.
    /// `finished` is set once the job is done or failed and no more will come.
    std::optional<std::vector<IterationRecord>> progress_since(const std::string& id, std::size_t from,
                                                               std::chrono::milliseconds wait, bool& finished) const;

    enum class Lookup { Ok, NotFound, NotReady, Failed };
    Lookup trajectory(const std::string& id, nlohmann::json& out) const;

    enum class SaveResult { Ok, UnknownJob, JobNotDone, DuplicateName, BadName };
    SaveResult save_scenario(const std::string& name, const std::string& jobId);
    nlohmann::json scenario_list() const;
    std::optional<nlohmann::json> scenario_document(const std::string& name) const;
    /// nullopt with `missing` set when a name is unknown.
    std::optional<nlohmann::json> compare(const std::vector<std::string>& names, std::string& missing) const;

    /// Blocks until the job leaves the queue/running states.
    bool wait(const std::string& id, std::chrono::milliseconds timeout) const;

private:
    void worker_loop();
    void run_job(const std::shared_ptr<Job>& job);
    void load_store();

    ServiceConfig cfg_;
    std::string id_;
    mutable std::mutex mu_;
    mutable std::condition_variable cv_;
    std::map<std::string, std::shared_ptr<Job>> jobs_;
    std::deque<std::shared_ptr<Job>> queue_;
    std::map<std::string, SavedScenario> scenarios_;
    std::uint64_t nextJob_ = 1;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

/// Installs every /api/v1 route on `server`.
void register_routes(httplib::Server& server, Session& session);

/// Entry point of the service binary.
int server_main(int argc, char** argv);

} // namespace gate::service
