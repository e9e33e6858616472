#include <gtest/gtest.h>

#include <httplib.h>

#include <chrono>
#include <sstream>
#include <thread>

#include "gate/service.hpp"

using namespace gate;
using namespace gate::service;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

json short_params(json extra = json::object()) {
    json p{{"tau_plan", 5}, {"tau_optim", 10}};
    for (auto& [k, v] : extra.items()) p[k] = v;
    return p;
}

json solve_body(json params, const std::string& mode = "det") {
    return {{"preset", "desk"}, {"mode", mode}, {"params", std::move(params)}};
}

class Api : public ::testing::Test {
protected:
    void SetUp() override {
        dataDir = fs::temp_directory_path() /
                  ("gate_svc_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dataDir);
        start();
    }
    void TearDown() override {
        stop();
        fs::remove_all(dataDir);
    }

    void start(unsigned workers = 2) {
        ServiceConfig cfg;
        cfg.dataDir = dataDir;
        cfg.workers = workers;
        session = std::make_unique<Session>(cfg);
        server = std::make_unique<httplib::Server>();
        register_routes(*server, *session);
        port = server->bind_to_any_port("127.0.0.1");
        ASSERT_GT(port, 0);
        thread = std::thread([this] { server->listen_after_bind(); });
        server->wait_until_ready();
        client = std::make_unique<httplib::Client>("127.0.0.1", port);
        client->set_read_timeout(600, 0);
    }
    void stop() {
        client.reset();
        if (server) server->stop();
        if (thread.joinable()) thread.join();
        server.reset();
        session.reset();
    }

    httplib::Result post(const std::string& path, const json& body) {
        return client->Post(path, body.dump(), "application/json");
    }
    std::string submit(const json& body) {
        auto r = post("/api/v1/solve", body);
        EXPECT_TRUE(r);
        EXPECT_EQ(r->status, 202) << r->body;
        return json::parse(r->body)["job_id"].get<std::string>();
    }
    json get_json(const std::string& path, int expect = 200) {
        auto r = client->Get(path);
        EXPECT_TRUE(r);
        EXPECT_EQ(r->status, expect) << path << " " << r->body;
        return json::parse(r->body);
    }
    json wait_done(const std::string& id) {
        EXPECT_TRUE(session->wait(id, 600s));
        return get_json("/api/v1/jobs/" + id);
    }

    fs::path dataDir;
    std::unique_ptr<Session> session;
    std::unique_ptr<httplib::Server> server;
    std::unique_ptr<httplib::Client> client;
    std::thread thread;
    int port = 0;
};

} // namespace

TEST_F(Api, SchemaAndPresets) {
    EXPECT_EQ(get_json("/api/v1/schema"), schema_json());
    EXPECT_EQ(get_json("/api/v1/presets/default"), to_json(default_preset()));
    EXPECT_EQ(get_json("/api/v1/presets/desk"), to_json(desk_preset()));
    get_json("/api/v1/presets/other", 404);
    EXPECT_EQ(get_json("/api/v1/session")["session_id"], session->id());
}

TEST_F(Api, DefaultDocumentAccepted) {
    auto r = post("/api/v1/solve", json::object());
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 202);
    const json doc = json::parse(r->body);
    EXPECT_TRUE(doc["job_id"].is_string());
    const std::string status = get_json("/api/v1/jobs/" + doc["job_id"].get<std::string>())["status"];
    EXPECT_TRUE(status == "queued" || status == "running" || status == "done") << status;
}

TEST_F(Api, InvalidDocumentRejected) {
    auto r = post("/api/v1/solve", {{"params", {{"rho", 0.5}}}});
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 422);
    const json doc = json::parse(r->body);
    bool named = false;
    for (const auto& v : doc["violations"]) named = named || v["field"] == "rho";
    EXPECT_TRUE(named) << r->body;
    EXPECT_EQ(post("/api/v1/solve", {{"mode", "sideways"}})->status, 422);
    EXPECT_EQ(client->Post("/api/v1/solve", "{oops", "application/json")->status, 400);
}

TEST_F(Api, StrictViolationsBecomeWarnings) {
    auto r = post("/api/v1/solve", solve_body(short_params({{"alpha", 0.9}})));
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 202);
    const json doc = json::parse(r->body);
    ASSERT_FALSE(doc["warnings"].empty());
    EXPECT_EQ(doc["warnings"][0]["field"], "alpha");
}

TEST_F(Api, UnknownJob) {
    get_json("/api/v1/jobs/job-999999", 404);
    get_json("/api/v1/jobs/job-999999/trajectory", 404);
    EXPECT_EQ(client->Get("/api/v1/jobs/job-999999/progress")->status, 404);
}

TEST_F(Api, TrajectoryBeforeDoneConflicts) {
    stop();
    start(1);
    const std::string blocker = submit(json::object());
    const std::string queued = submit(solve_body(short_params()));
    EXPECT_EQ(get_json("/api/v1/jobs/" + queued)["status"], "queued");
    get_json("/api/v1/jobs/" + queued + "/trajectory", 409);
    EXPECT_EQ(post("/api/v1/scenarios", {{"name", "early"}, {"job_id", queued}})->status, 409);
    (void)blocker;
}

TEST_F(Api, ConcurrentSubmissionsDistinctAndBothFinish) {
    std::vector<std::string> ids(4);
    std::vector<std::thread> ts;
    for (std::size_t k = 0; k < ids.size(); ++k)
        ts.emplace_back([&, k] {
            httplib::Client c("127.0.0.1", port);
            auto r = c.Post("/api/v1/solve", solve_body(short_params({{"rho", -0.5 - 0.05 * k}})).dump(),
                            "application/json");
            if (r && r->status == 202) ids[k] = json::parse(r->body)["job_id"];
        });
    for (auto& t : ts) t.join();
    std::set<std::string> unique(ids.begin(), ids.end());
    EXPECT_EQ(unique.size(), ids.size());
    EXPECT_FALSE(unique.count(""));
    for (const auto& id : ids) {
        const json s = wait_done(id);
        EXPECT_EQ(s["status"], "done") << s.dump();
        EXPECT_GT(s["iterations"].get<int>(), 0);
    }
    EXPECT_EQ(get_json("/api/v1/jobs").size(), ids.size());
}

TEST_F(Api, TrajectoryRowsPerScenario) {
    const json beliefs = json::array({{{"zeta", 0.5}, {"prob", 0.25}}, {{"zeta", 1.0}, {"prob", 0.75}}});
    const std::string det = submit(solve_body(short_params()));
    const std::string unc = submit(solve_body(short_params({{"belief_spec", beliefs}}), "unc"));
    EXPECT_EQ(wait_done(det)["status"], "done");
    EXPECT_EQ(wait_done(unc)["status"], "done");
    const json a = get_json("/api/v1/jobs/" + det + "/trajectory");
    const json b = get_json("/api/v1/jobs/" + unc + "/trajectory");
    const io::TrajectoryTable ta = io::table_from_json(a), tb = io::table_from_json(b);
    EXPECT_EQ(ta.rows.size(), 5u);
    EXPECT_EQ(tb.rows.size(), 10u);
    EXPECT_EQ(tb.scenario_count(), 2u);
    EXPECT_EQ(ta.columns, io::trajectory_columns());
    EXPECT_EQ(a["manifest"]["mode"], "det");
    EXPECT_EQ(get_json("/api/v1/jobs/" + det + "/trajectory"), a);
}

TEST_F(Api, ProgressStreamIsMonotone) {
    const std::string id = submit(solve_body(short_params()));
    std::string body;
    auto r = client->Get("/api/v1/jobs/" + id + "/progress", [&](const char* data, std::size_t n) {
        body.append(data, n);
        return true;
    });
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    std::stringstream ss(body);
    std::string line;
    std::vector<json> recs;
    while (std::getline(ss, line))
        if (!line.empty()) recs.push_back(json::parse(line));
    ASSERT_GT(recs.size(), 2u);
    for (std::size_t k = 1; k < recs.size(); ++k) {
        EXPECT_GE(recs[k]["V"].get<double>(), recs[k - 1]["V"].get<double>());
        EXPECT_GT(recs[k]["iteration"].get<int>(), recs[k - 1]["iteration"].get<int>());
    }
    const json s = get_json("/api/v1/jobs/" + id);
    EXPECT_EQ(s["status"], "done");
    EXPECT_GE(s["V"].get<double>(), recs.back()["V"].get<double>());
}

TEST_F(Api, ScenarioStore) {
    const std::string id = submit(solve_body(short_params()));
    wait_done(id);
    EXPECT_EQ(post("/api/v1/scenarios", {{"name", "base"}, {"job_id", id}})->status, 201);
    const json list = get_json("/api/v1/scenarios");
    ASSERT_EQ(list.size(), 1u);
    EXPECT_EQ(list[0]["name"], "base");
    EXPECT_EQ(post("/api/v1/scenarios", {{"name", "base"}, {"job_id", id}})->status, 409);
    EXPECT_EQ(post("/api/v1/scenarios", {{"name", "other"}, {"job_id", "job-424242"}})->status, 404);
    EXPECT_EQ(post("/api/v1/scenarios", {{"name", "../up"}, {"job_id", id}})->status, 400);
    get_json("/api/v1/scenarios/missing", 404);
    get_json("/api/v1/compare?names=base,missing", 404);
    const json doc = get_json("/api/v1/scenarios/base");
    EXPECT_EQ(io::table_from_json(doc["trajectory"]).rows,
              io::table_from_json(get_json("/api/v1/jobs/" + id + "/trajectory")).rows);
}

TEST_F(Api, CompareWithItselfIsZero) {
    const std::string id = submit(solve_body(short_params()));
    wait_done(id);
    ASSERT_EQ(post("/api/v1/scenarios", {{"name", "a"}, {"job_id", id}})->status, 201);
    const json c = get_json("/api/v1/compare?names=a,a");
    EXPECT_EQ(c["years"].size(), 5u);
    for (const auto& [name, s] : c["series"].items()) {
        ASSERT_EQ(s["diffs"].size(), 1u);
        for (const auto& v : s["diffs"][0]["values"]) EXPECT_EQ(v.get<double>(), 0.0) << name;
    }
}

TEST_F(Api, CompareAcrossModes) {
    const std::string det = submit(solve_body(short_params({{"xi", 8.0}})));
    const std::string ext = submit(solve_body(short_params({{"xi", 8.0}}), "ext"));
    wait_done(det);
    wait_done(ext);
    ASSERT_EQ(post("/api/v1/scenarios", {{"name", "det"}, {"job_id", det}})->status, 201);
    ASSERT_EQ(post("/api/v1/scenarios", {{"name", "ext"}, {"job_id", ext}})->status, 201);
    const json a = get_json("/api/v1/scenarios/det"), b = get_json("/api/v1/scenarios/ext");
    EXPECT_EQ(a["trajectory"]["columns"], b["trajectory"]["columns"]);
    EXPECT_EQ(a["trajectory"]["rows"].size(), b["trajectory"]["rows"].size());
    const json c = get_json("/api/v1/compare?names=det,ext");
    double maxDiff = 0.0;
    for (const auto& [name, s] : c["series"].items())
        for (const auto& v : s["diffs"][0]["values"]) maxDiff = std::max(maxDiff, std::abs(v.get<double>()));
    EXPECT_GT(maxDiff, 0.0);
    const json d = get_json("/api/v1/compare?names=det,det");
    std::vector<std::string> ka, kb;
    for (const auto& [k, v] : c["series"].items()) ka.push_back(k);
    for (const auto& [k, v] : d["series"].items()) kb.push_back(k);
    EXPECT_EQ(ka, kb);
    EXPECT_EQ(c["years"], d["years"]);
}

TEST_F(Api, StoreSurvivesRestart) {
    const std::string id = submit(solve_body(short_params()));
    wait_done(id);
    ASSERT_EQ(post("/api/v1/scenarios", {{"name", "kept"}, {"job_id", id}})->status, 201);
    const json before = get_json("/api/v1/scenarios/kept");
    const json list = get_json("/api/v1/scenarios");
    stop();
    start();
    EXPECT_EQ(get_json("/api/v1/scenarios/kept"), before);
    EXPECT_EQ(get_json("/api/v1/scenarios"), list);
    get_json("/api/v1/jobs/" + id, 404);
}
