#include "gate/service.hpp"

#include <csignal>
#include <cstdio>
#include <regex>

#include <CLI11.hpp>
#include <httplib.h>
#include <spdlog/spdlog.h>

namespace gate::service {

using nlohmann::json;

std::string to_string(JobStatus s) {
    switch (s) {
    case JobStatus::Queued: return "queued";
    case JobStatus::Running: return "running";
    case JobStatus::Done: return "done";
    case JobStatus::Failed: return "failed";
    }
    return "failed";
}

namespace {

json violations_json(const std::vector<Violation>& v) {
    json out = json::array();
    for (const auto& x : v) out.push_back({{"field", x.field}, {"message", x.message}});
    return out;
}

json status_json(const Job& j) {
    json s{{"id", j.id}, {"status", to_string(j.status)}, {"mode", to_string(j.mode)}};
    if (!j.progress.empty()) {
        const auto& r = j.progress.back();
        s["iteration"] = r.iteration;
        s["V"] = r.V;
        s["grad_norm"] = r.gradNorm;
    }
    if (j.status == JobStatus::Failed) s["reason"] = j.reason;
    if (j.status == JobStatus::Done && j.solution) {
        s["converged"] = j.solution->diag.converged;
        s["iterations"] = j.solution->diag.iterations;
        s["V"] = j.solution->diag.V;
        s["grad_norm"] = j.solution->diag.gradNorm;
    }
    return s;
}

bool valid_name(const std::string& n) {
    static const std::regex re("[A-Za-z0-9_.-]{1,64}");
    return std::regex_match(n, re) && n != "." && n != "..";
}

} // namespace

Session::Session(ServiceConfig cfg) : cfg_(std::move(cfg)) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "session-%016llx",
                  static_cast<unsigned long long>(io::fnv1a64(cfg_.dataDir.string() + io::utc_timestamp())));
    id_ = buf;
    fs::create_directories(cfg_.dataDir / "scenarios");
    load_store();
    unsigned n = cfg_.workers ? cfg_.workers : std::max(1u, std::thread::hardware_concurrency());
    for (unsigned i = 0; i < n; ++i) workers_.emplace_back([this] { worker_loop(); });
}

Session::~Session() {
    {
        std::lock_guard lk(mu_);
        stopping_ = true;
    }
    cv_.notify_all();
    for (auto& t : workers_) t.join();
}

void Session::load_store() {
    for (const auto& e : fs::directory_iterator(cfg_.dataDir / "scenarios")) {
        if (!e.is_directory()) continue;
        try {
            io::RunData r = io::load_run(e.path());
            scenarios_[r.name] = {r.name, r.manifest, r.table};
        } catch (const std::exception& ex) {
            spdlog::warn("skipping unreadable scenario {}: {}", e.path().string(), ex.what());
        }
    }
}

std::string Session::submit(const ParameterSet& p, SolveMode mode, const SolverSettings& s) {
    auto job = std::make_shared<Job>();
    job->params = p;
    job->mode = mode;
    job->solver = s;
    {
        std::lock_guard lk(mu_);
        char buf[32];
        std::snprintf(buf, sizeof buf, "job-%06llu", static_cast<unsigned long long>(nextJob_++));
        job->id = buf;
        jobs_[job->id] = job;
        queue_.push_back(job);
    }
    cv_.notify_all();
    return job->id;
}

void Session::worker_loop() {
    for (;;) {
        std::shared_ptr<Job> job;
        {
            std::unique_lock lk(mu_);
            cv_.wait(lk, [&] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            job = queue_.front();
            queue_.pop_front();
            job->status = JobStatus::Running;
            job->startedAt = io::utc_timestamp();
        }
        cv_.notify_all();
        run_job(job);
    }
}

void Session::run_job(const std::shared_ptr<Job>& job) {
    try {
        Solution sol = solve(job->params, job->mode, job->solver, [&](const IterationRecord& r) {
            {
                std::lock_guard lk(mu_);
                job->progress.push_back(r);
                if (stopping_) return false;
            }
            cv_.notify_all();
            return true;
        });
        std::lock_guard lk(mu_);
        if (sol.diag.nanAbort || sol.diag.termination == "cancelled") {
            job->status = JobStatus::Failed;
            job->reason = sol.diag.termination;
        } else {
            job->manifest = io::make_manifest(job->params, job->mode, job->solver, sol, job->startedAt,
                                              io::utc_timestamp());
            job->solution = std::move(sol);
            job->status = JobStatus::Done;
        }
    } catch (const std::exception& e) {
        std::lock_guard lk(mu_);
        job->status = JobStatus::Failed;
        job->reason = e.what();
    }
    cv_.notify_all();
    spdlog::info("{} finished: {}", job->id, to_string(job->status));
}

std::optional<json> Session::job_status(const std::string& id) const {
    std::lock_guard lk(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    return status_json(*it->second);
}

json Session::job_list() const {
    std::lock_guard lk(mu_);
    json out = json::array();
    for (const auto& [id, j] : jobs_) out.push_back(status_json(*j));
    return out;
}

std::optional<std::vector<IterationRecord>> Session::progress_since(const std::string& id, std::size_t from,
                                                                    std::chrono::milliseconds wait,
                                                                    bool& finished) const {
    std::unique_lock lk(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return std::nullopt;
    const Job& j = *it->second;
    auto terminal = [&] { return j.status == JobStatus::Done || j.status == JobStatus::Failed; };
    cv_.wait_for(lk, wait, [&] { return j.progress.size() > from || terminal() || stopping_; });
    std::vector<IterationRecord> out;
    for (std::size_t i = from; i < j.progress.size(); ++i) out.push_back(j.progress[i]);
    finished = terminal() || stopping_;
    return out;
}

Session::Lookup Session::trajectory(const std::string& id, json& out) const {
    std::lock_guard lk(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return Lookup::NotFound;
    const Job& j = *it->second;
    if (j.status == JobStatus::Failed) return Lookup::Failed;
    if (j.status != JobStatus::Done) return Lookup::NotReady;
    out = io::table_json(io::table_from(j.solution->plan()));
    out["manifest"] = j.manifest;
    return Lookup::Ok;
}

Session::SaveResult Session::save_scenario(const std::string& name, const std::string& jobId) {
    if (!valid_name(name)) return SaveResult::BadName;
    std::shared_ptr<Job> job;
    {
        std::lock_guard lk(mu_);
        auto it = jobs_.find(jobId);
        if (it == jobs_.end()) return SaveResult::UnknownJob;
        job = it->second;
        if (job->status != JobStatus::Done) return SaveResult::JobNotDone;
        if (scenarios_.count(name)) return SaveResult::DuplicateName;
        // Reserve the name while files are written.
        scenarios_[name] = {name, json(), {}};
    }
    const fs::path dir = cfg_.dataDir / "scenarios" / name;
    try {
        io::write_run(dir, job->params, job->mode, job->solver, *job->solution, job->startedAt);
        io::RunData r = io::load_run(dir);
        std::lock_guard lk(mu_);
        scenarios_[name] = {name, r.manifest, r.table};
    } catch (...) {
        std::lock_guard lk(mu_);
        scenarios_.erase(name);
        throw;
    }
    return SaveResult::Ok;
}

json Session::scenario_list() const {
    std::lock_guard lk(mu_);
    json out = json::array();
    for (const auto& [name, s] : scenarios_) {
        if (s.manifest.is_null()) continue;
        out.push_back({{"name", name},
                       {"run_id", s.manifest.value("run_id", "")},
                       {"mode", s.manifest.value("mode", "")},
                       {"params_hash", s.manifest.value("params_hash", "")}});
    }
    return out;
}

std::optional<json> Session::scenario_document(const std::string& name) const {
    std::lock_guard lk(mu_);
    auto it = scenarios_.find(name);
    if (it == scenarios_.end() || it->second.manifest.is_null()) return std::nullopt;
    return json{{"name", name}, {"manifest", it->second.manifest}, {"trajectory", io::table_json(it->second.table)}};
}

std::optional<json> Session::compare(const std::vector<std::string>& names, std::string& missing) const {
    std::vector<io::RunData> runs;
    {
        std::lock_guard lk(mu_);
        for (const auto& n : names) {
            auto it = scenarios_.find(n);
            if (it == scenarios_.end() || it->second.manifest.is_null()) {
                missing = n;
                return std::nullopt;
            }
            runs.push_back({n, it->second.manifest, it->second.table});
        }
    }
    return io::comparison_json(io::compare_runs(runs));
}

bool Session::wait(const std::string& id, std::chrono::milliseconds timeout) const {
    std::unique_lock lk(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) return false;
    const Job& j = *it->second;
    return cv_.wait_for(lk, timeout, [&] { return j.status == JobStatus::Done || j.status == JobStatus::Failed; });
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& msg) {
    send_json(res, status, {{"error", msg}});
}

std::vector<std::string> split_names(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t comma = s.find(',', start);
        const std::string part = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!part.empty()) out.push_back(part);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

} // namespace

void register_routes(httplib::Server& server, Session& session) {
    server.Get("/api/v1/schema", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, schema_json());
    });

    server.Get("/api/v1/session", [&session](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"session_id", session.id()}, {"data_dir", session.config().dataDir.string()}});
    });

    server.Get(R"(/api/v1/presets/([^/]+))", [](const httplib::Request& req, httplib::Response& res) {
        const auto p = preset(req.matches[1].str());
        if (!p) return send_error(res, 404, "unknown preset");
        send_json(res, 200, to_json(*p));
    });

    server.Post("/api/v1/solve", [&session](const httplib::Request& req, httplib::Response& res) {
        json body;
        try {
            body = req.body.empty() ? json::object() : json::parse(req.body);
        } catch (const std::exception& e) {
            return send_error(res, 400, std::string("malformed JSON: ") + e.what());
        }
        if (!body.is_object()) return send_error(res, 400, "request body must be a JSON object");
        SolveMode mode = SolveMode::Deterministic;
        if (body.contains("mode")) {
            const auto m = body["mode"].is_string() ? solve_mode_from_string(body["mode"].get<std::string>())
                                                    : std::nullopt;
            if (!m) return send_json(res, 422, {{"error", "validation failed"},
                                                {"violations", json::array({{{"field", "mode"},
                                                                             {"message", "mode must be det, ext or unc"}}})}});
            mode = *m;
        }
        json params = body.value("params", json::object());
        if (body.contains("preset")) params["preset"] = body["preset"];
        std::vector<Violation> problems;
        const ParameterSet p = io::load_config(params, problems);
        std::vector<Violation> fatal, warnings;
        for (auto& v : problems) (v.message.rfind("unknown key", 0) == 0 ? warnings : fatal).push_back(v);
        for (auto& v : validate(p, ValidationMode::Permissive)) fatal.push_back(v);
        for (auto& v : validate(p, ValidationMode::Strict)) {
            bool seen = false;
            for (const auto& f : fatal) seen = seen || f.message == v.message;
            if (!seen) warnings.push_back(v);
        }
        if (!fatal.empty())
            return send_json(res, 422, {{"error", "validation failed"}, {"violations", violations_json(fatal)},
                                        {"warnings", violations_json(warnings)}});
        SolverSettings s = session.config().solver;
        if (body.contains("solver") && body["solver"].is_object()) {
            const json& so = body["solver"];
            s.maxIterations = so.value("max_iterations", s.maxIterations);
            s.relGradTol = so.value("rel_grad_tol", s.relGradTol);
            s.multiStart = so.value("multi_start", s.multiStart);
            if (so.value("method", std::string("lbfgs")) == "gd") s.method = SolverSettings::Method::GradientAscent;
        }
        const std::string id = session.submit(p, mode, s);
        send_json(res, 202, {{"job_id", id}, {"warnings", violations_json(warnings)}});
    });

    server.Get("/api/v1/jobs", [&session](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, session.job_list());
    });

    server.Get(R"(/api/v1/jobs/([^/]+))", [&session](const httplib::Request& req, httplib::Response& res) {
        const auto s = session.job_status(req.matches[1].str());
        if (!s) return send_error(res, 404, "unknown job");
        send_json(res, 200, *s);
    });

    server.Get(R"(/api/v1/jobs/([^/]+)/trajectory)", [&session](const httplib::Request& req, httplib::Response& res) {
        json out;
        switch (session.trajectory(req.matches[1].str(), out)) {
        case Session::Lookup::Ok: return send_json(res, 200, out);
        case Session::Lookup::NotFound: return send_error(res, 404, "unknown job");
        case Session::Lookup::NotReady: return send_error(res, 409, "job has not finished");
        case Session::Lookup::Failed: return send_error(res, 409, "job failed");
        }
    });

    server.Get(R"(/api/v1/jobs/([^/]+)/progress)", [&session](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1].str();
        if (!session.job_status(id)) return send_error(res, 404, "unknown job");
        auto offset = std::make_shared<std::size_t>(0);
        res.set_chunked_content_provider(
            "application/x-ndjson", [&session, id, offset](std::size_t, httplib::DataSink& sink) {
                bool finished = false;
                const auto recs = session.progress_since(id, *offset, std::chrono::milliseconds(250), finished);
                if (!recs) {
                    sink.done();
                    return true;
                }
                for (const auto& r : *recs) {
                    const std::string line =
                        json{{"iteration", r.iteration}, {"V", r.V}, {"grad_norm", r.gradNorm}, {"step", r.step}}
                            .dump() +
                        "\n";
                    if (!sink.write(line.data(), line.size())) return false;
                }
                *offset += recs->size();
                if (finished) sink.done();
                return true;
            });
    });

    server.Post("/api/v1/scenarios", [&session](const httplib::Request& req, httplib::Response& res) {
        json body;
        try {
            body = json::parse(req.body);
        } catch (const std::exception& e) {
            return send_error(res, 400, std::string("malformed JSON: ") + e.what());
        }
        if (!body.is_object() || !body.contains("name") || !body.contains("job_id") || !body["name"].is_string() ||
            !body["job_id"].is_string())
            return send_error(res, 400, "expected {\"name\": string, \"job_id\": string}");
        const std::string name = body["name"].get<std::string>();
        try {
            switch (session.save_scenario(name, body["job_id"].get<std::string>())) {
            case Session::SaveResult::Ok: return send_json(res, 201, {{"name", name}});
            case Session::SaveResult::UnknownJob: return send_error(res, 404, "unknown job");
            case Session::SaveResult::JobNotDone: return send_error(res, 409, "job has not finished");
            case Session::SaveResult::DuplicateName: return send_error(res, 409, "scenario name already exists");
            case Session::SaveResult::BadName: return send_error(res, 400, "scenario names use [A-Za-z0-9_.-]");
            }
        } catch (const std::exception& e) {
            return send_error(res, 500, e.what());
        }
    });

    server.Get("/api/v1/scenarios", [&session](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, session.scenario_list());
    });

    server.Get(R"(/api/v1/scenarios/([^/]+))", [&session](const httplib::Request& req, httplib::Response& res) {
        const auto doc = session.scenario_document(req.matches[1].str());
        if (!doc) return send_error(res, 404, "unknown scenario");
        send_json(res, 200, *doc);
    });

    server.Get("/api/v1/compare", [&session](const httplib::Request& req, httplib::Response& res) {
        const auto names = split_names(req.get_param_value("names"));
        if (names.size() < 2) return send_error(res, 400, "names must list at least two scenarios");
        std::string missing;
        const auto doc = session.compare(names, missing);
        if (!doc) return send_error(res, 404, "unknown scenario " + missing);
        send_json(res, 200, *doc);
    });
}

namespace {
httplib::Server* g_server = nullptr;
extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}
} // namespace

int server_main(int argc, char** argv) {
    io::configure_logging();
    CLI::App app{"gate-server: local HTTP API for the sandbox UI"};
    ServiceConfig cfg;
    std::string dataDir = cfg.dataDir.string();
    app.add_option("--bind", cfg.bind, "bind address");
    app.add_option("--port", cfg.port, "port");
    app.add_option("--data-dir", dataDir, "scenario store directory");
    app.add_option("--workers", cfg.workers, "solver worker threads (0: core count)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    cfg.dataDir = dataDir;
    Session session(cfg);
    httplib::Server server;
    register_routes(server, session);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    spdlog::info("listening on {}:{} ({}), data in {}", cfg.bind, cfg.port, session.id(), cfg.dataDir.string());
    if (!server.listen(cfg.bind, cfg.port)) {
        spdlog::error("cannot listen on {}:{}", cfg.bind, cfg.port);
        return 1;
    }
    return 0;
}

} // namespace gate::service
