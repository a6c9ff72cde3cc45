#include <doctest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "jslight/bench.hpp"
#include "jslight/cli.hpp"
#include "jslight/corpus.hpp"
#include "jslight/digest.hpp"
#include "jslight/error.hpp"
#include "jslight/features.hpp"
#include "jslight/label_service.hpp"
#include "jslight/model_io.hpp"
#include "jslight/proxy.hpp"
#include "support.hpp"

#include "net_util.hpp"

using namespace jslight;
using jslight::testing::FixtureServer;

namespace {

struct ServiceFixture {
    FixtureServer site;
    std::shared_ptr<LabelStore> store = std::make_shared<LabelStore>();
    std::int64_t clock = 1'800'000'000;
    std::unique_ptr<LabelService> service;

    explicit ServiceFixture(ServiceOptions opts = {}) {
        opts.clock = [this] { return clock; };
        StoreConfig sc;
        sc.clock = [this] { return clock; };
        store = std::make_shared<LabelStore>(sc);
        service = std::make_unique<LabelService>(store, testing::marker_model(), std::make_shared<HttpFetcher>(),
                                                 nullptr, opts);
    }
};

std::string classify_body(const std::string& url, const std::optional<std::string>& source) {
    nlohmann::json j{{"url", url}};
    if (source) j["source"] = base64_encode(*source);
    return j.dump();
}

int run_cli(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
    args.insert(args.begin(), "jslight");
    std::ostringstream o, e;
    const int rc = run(args, o, e);
    if (out) *out = o.str();
    if (err) *err = e.str();
    return rc;
}

}  // namespace

TEST_SUITE("service") {

TEST_CASE("page list parsing") {
    CHECK(parse_page_list("# header\nhttps://a.test/\n\n  https://b.test/x  \n#x\n") ==
          std::vector<std::string>{"https://a.test/", "https://b.test/x"});
    CHECK(parse_page_list("").empty());
    CHECK_THROWS_AS(load_page_list("/nonexistent/pages.txt"), Error);
}

TEST_CASE("refresh: fixture site") {
    ServiceFixture f;
    const auto r = f.service->refresh({f.site.page_url()});
    CHECK(r.pages == 1);
    CHECK(r.scripts_seen == 23);
    CHECK(r.newly_labeled == 23);
    CHECK(r.failures.empty());
    CHECK(f.store->size() == 23);
    std::size_t noncritical = 0;
    for (const auto& s : f.site.site().scripts) {
        const auto e = f.store->peek(f.site.url(s.path));
        REQUIRE(e);
        CHECK(e->category == s.category);
        CHECK(e->confidence > 0.5);
        CHECK(e->domain == "127.0.0.1");
        CHECK(e->labeled_at == f.clock);
        noncritical += decide_criticality(e->category, Policy::defaults()) == Criticality::noncritical;
    }
    CHECK(noncritical == 18);

    // Idempotent on an unchanged site.
    f.clock += 10;
    const auto again = f.service->refresh({f.site.page_url()});
    CHECK(again.scripts_seen == 23);
    CHECK(again.newly_labeled == 0);
    CHECK(again.unchanged == 23);

    // A changed script is relabeled.
    const auto& s0 = f.site.site().scripts[0];
    f.site.set_script(s0.path, testing::fixture_script(Category::content, 2000, 5));
    const auto changed = f.service->refresh({f.site.page_url()});
    CHECK(changed.newly_labeled == 1);
    CHECK(f.store->peek(f.site.url(s0.path))->category == Category::content);
}

TEST_CASE("refresh: empty list, inline scripts, failures") {
    ServiceFixture f;
    const auto empty = f.service->refresh({});
    CHECK(empty.pages == 0);
    CHECK(empty.scripts_seen == 0);
    CHECK(empty.newly_labeled == 0);

    const auto inl = f.service->refresh({f.site.url("/inline.html")});
    CHECK(inl.scripts_seen == 2);
    CHECK(inl.newly_labeled == 2);
    const auto snap = f.store->snapshot_since(0);
    REQUIRE(snap.size() == 2);
    for (const auto& e : snap) {
        CHECK(e.key.starts_with("hash:"));
        CHECK(e.domain.empty());
    }

    const auto bad = f.service->refresh({"http://127.0.0.1:1/", f.site.url("/nothing.html")});
    CHECK(bad.failures.size() == 2);
    CHECK(bad.scripts_seen == 0);
}

TEST_CASE("refresh: entity matches win over the model") {
    FixtureServer site;
    auto store = std::make_shared<LabelStore>();
    auto repo = std::make_shared<EntityRepository>(
        std::vector<Entity>{{"Loopback Video", {"127.0.0.1"}, Category::video}});
    LabelService svc(store, testing::marker_model(), std::make_shared<HttpFetcher>(), repo);
    CHECK(svc.refresh({site.page_url()}).newly_labeled == 23);
    for (const auto& e : store->snapshot_since(0)) {
        CHECK(e.category == Category::video);
        CHECK(e.confidence == 1.0);
    }
}

TEST_CASE("classify_remote") {
    ServiceFixture f;
    const auto& ad = f.site.site().scripts[1];
    REQUIRE(ad.category == Category::advertising);

    auto r = f.service->classify_remote("https://new.test/ad.js", std::string("x.adSlot(1)"));
    CHECK(r.category == Category::advertising);
    CHECK(r.confidence > 0.5);
    CHECK(f.store->peek("https://new.test/ad.js"));

    r = f.service->classify_remote(f.site.url(ad.path), std::nullopt);
    CHECK(r.category == Category::advertising);
    CHECK(f.site.hits(ad.path) == 1);
    r = f.service->classify_remote(f.site.url(ad.path), std::nullopt);
    CHECK(f.site.hits(ad.path) == 1);

    r = f.service->classify_remote("https://new.test/plain.js", std::string("nothing()"));
    CHECK(r.category == Category::unassigned);
    CHECK(r.confidence <= 0.5);

    CHECK_THROWS_AS(f.service->classify_remote("not-a-url", std::nullopt), ServiceError);
    const auto before = f.store->size();
    try {
        f.service->classify_remote(f.site.url("/static/missing.js"), std::nullopt);
        FAIL("expected a fetch failure");
    } catch (const ServiceError& e) {
        CHECK(e.status() == 502);
    }
    CHECK(f.store->size() == before);

    ServiceOptions off;
    off.allow_miss_classification = false;
    ServiceFixture g(off);
    try {
        g.service->classify_remote("https://new.test/x.js", std::string("x"));
        FAIL("expected refusal");
    } catch (const ServiceError& e) {
        CHECK(e.status() == 403);
        CHECK(std::string(e.what()) == "miss classification disabled");
    }
}

TEST_CASE("classify_remote never returns a category at or below the threshold") {
    ServiceOptions opts;
    opts.threshold = 0.9;
    ServiceFixture f(opts);
    for (int m = 0; m < 4; ++m) {
        std::string src;
        for (int i = 0; i < m; ++i) src += "a.adSlot(); b.sendBeacon(); ";
        const auto r = f.service->classify_remote("https://t.test/" + std::to_string(m) + ".js", src);
        if (is_assigned(r.category)) CHECK(r.confidence > 0.9);
    }
}

TEST_CASE("HTTP endpoints") {
    ServiceFixture f;
    for (int i = 0; i < 5; ++i) {
        LabelEntry e;
        e.key = "https://l.test/" + std::to_string(i) + ".js";
        e.domain = "l.test";
        e.category = Category::analytics;
        e.confidence = 0.8;
        e.labeled_at = 100 + i;
        f.store->put(e);
    }
    f.service->start("127.0.0.1", 0);
    httplib::Client cli("127.0.0.1", f.service->port());

    auto r = cli.Get("/v1/labels?since=0");
    REQUIRE(r);
    CHECK(r->status == 200);
    CHECK(r->get_header_value("Content-Type") == "application/x-ndjson");
    std::istringstream lines(r->body);
    std::string line;
    std::vector<LabelEntry> served;
    while (std::getline(lines, line)) served.push_back(entry_from_jsonl(line));
    CHECK(served.size() == 5);
    auto expected = f.store->snapshot_since(0);
    for (auto& e : expected) e.last_used = 0;  // not part of the wire format
    CHECK(served == expected);

    for (std::int64_t since : {99, 100, 102, 104, 200}) {
        r = cli.Get("/v1/labels?since=" + std::to_string(since));
        REQUIRE(r);
        std::string expected;
        for (const auto& e : f.store->snapshot_since(since)) expected += entry_to_jsonl(e) + "\n";
        CHECK(r->body == expected);
    }
    r = cli.Get("/v1/labels?since=abc");
    REQUIRE(r);
    CHECK(r->status == 400);

    r = cli.Post("/v1/classify", classify_body("https://n.test/a.js", "w.adSlot(1); w.adSlot(2);"), "application/json");
    REQUIRE(r);
    CHECK(r->status == 200);
    auto j = nlohmann::json::parse(r->body);
    CHECK(j["category"] == "advertising");
    CHECK(j["confidence"].get<double>() > 0.5);

    r = cli.Post("/v1/classify", "{not json", "application/json");
    REQUIRE(r);
    CHECK(r->status == 400);
    CHECK(nlohmann::json::parse(r->body).contains("error"));
    r = cli.Post("/v1/classify", R"({"url":"https://n.test/b.js","source":"***"})", "application/json");
    REQUIRE(r);
    CHECK(r->status == 400);
    r = cli.Post("/v1/classify", R"({"source":"eA=="})", "application/json");
    REQUIRE(r);
    CHECK(r->status == 400);

    r = cli.Get("/v1/health");
    REQUIRE(r);
    CHECK(r->status == 200);
    j = nlohmann::json::parse(r->body);
    CHECK(j["store_entries"] == 6);
    CHECK(j["model_version"] == f.service->model_version());
    f.service->stop();
}

TEST_CASE("periodic refresh runs immediately and stops cleanly") {
    ServiceFixture f;
    std::atomic<int> calls{0};
    f.service->start_periodic_refresh(
        [&] {
            ++calls;
            return std::vector<std::string>{f.site.page_url()};
        },
        std::chrono::seconds(3600));
    for (int i = 0; i < 100 && f.store->size() < 23; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(20));
    CHECK(f.store->size() == 23);
    f.service->stop();
    CHECK(calls == 1);
    CHECK_THROWS_AS(f.service->start_periodic_refresh([] { return std::vector<std::string>{}; }, std::chrono::seconds(0)),
                    Error);
}

TEST_CASE("bench: fixture through the proxy") {
    FixtureServer site;
    auto store = std::make_shared<LabelStore>();
    for (const auto& e : site.labels()) store->put(e);

    SUBCASE("default policy") {
        ProxyConfig cfg;
        cfg.listen_port = 0;
        cfg.store = store;
        ProxyServer proxy(cfg);
        proxy.start();
        const auto r = bench(site.page_url(), {"127.0.0.1", proxy.port()});
        CHECK(r.direct.requests_total == 24);
        CHECK(r.direct.scripts_fetched == 23);
        CHECK(r.proxied.scripts_fetched == 5);
        CHECK(r.proxied.requests_blocked == 18);
        CHECK(r.proxied.scripts_fetched + r.proxied.requests_blocked == r.proxied.scripts_total);
        CHECK(r.direct.bytes_total == site.site().total_bytes());
        const double expected = testing::FixtureSite::kNoncriticalBytes;
        CHECK(std::abs(r.bytes_saved - expected) / expected < 0.01);
        const auto j = nlohmann::json::parse(bench_report_to_json(r));
        CHECK(j["requests_blocked"] == 18);
        CHECK(j["scripts_fetched"] == 5);
    }

    SUBCASE("empty policy saves nothing") {
        ProxyConfig cfg;
        cfg.listen_port = 0;
        cfg.store = store;
        cfg.policy = Policy::allow_all();
        ProxyServer proxy(cfg);
        proxy.start();
        const auto r = bench(site.page_url(), {"127.0.0.1", proxy.port()});
        CHECK(r.proxied.requests_blocked == 0);
        CHECK(r.proxied.scripts_fetched == 23);
        CHECK(r.bytes_saved == 0);
    }

    SUBCASE("unreachable page") {
        CHECK_THROWS_AS(bench("http://127.0.0.1:1/", {"127.0.0.1", 1}), Error);
    }
}

TEST_CASE("fixture site shape") {
    const auto site = testing::FixtureSite::generate();
    CHECK(site.scripts.size() == 23);
    std::size_t nc = 0, nc_bytes = 0;
    for (const auto& s : site.scripts) {
        if (s.noncritical) {
            ++nc;
            nc_bytes += s.body.size();
        }
    }
    CHECK(nc == 18);
    CHECK(nc_bytes == 700 * 1024);
    CHECK(site.total_bytes() == 1300 * 1024);
    const double remaining = static_cast<double>(site.total_bytes() - nc_bytes) / site.total_bytes();
    CHECK(remaining == doctest::Approx(0.46).epsilon(0.01));
}

TEST_CASE("cli: usage and errors") {
    std::string out, err;
    CHECK(run_cli({}, &out, &err) == 2);
    CHECK(err.find("Usage") != std::string::npos);
    CHECK(run_cli({"frobnicate"}) == 2);
    CHECK(run_cli({"classify", "--bogus-flag"}) == 2);
    CHECK(run_cli({"classify", "--model", "/nonexistent.json", "--file", "x.js"}) == 2);
    testing::TempDir tmp;
    testing::write_text(tmp / "bad.json", "{}");
    testing::write_text(tmp / "a.js", "x");
    CHECK(run_cli({"classify", "--model", (tmp / "bad.json").string(), "--file", (tmp / "a.js").string()}, &out,
                  &err) == 1);
    CHECK(nlohmann::json::parse(err).contains("error"));
    CHECK(parse_host_port("127.0.0.1:8080") == std::make_pair(std::string("127.0.0.1"), 8080));
    CHECK(parse_host_port("9000") == std::make_pair(std::string("127.0.0.1"), 9000));
    CHECK(parse_host_port("[::1]:81") == std::make_pair(std::string("::1"), 81));
    CHECK_THROWS_AS(parse_host_port("host:port"), Error);
}

TEST_CASE("cli: classify and eval with the fixture model") {
    testing::TempDir tmp;
    save_model(testing::marker_model(), tmp / "m.json");
    testing::write_text(tmp / "ad.js", testing::fixture_script(Category::advertising, 500, 1));
    std::string out;
    REQUIRE(run_cli({"classify", "--model", (tmp / "m.json").string(), "--file", (tmp / "ad.js").string()}, &out) == 0);
    auto j = nlohmann::json::parse(out);
    CHECK(j["category"] == "advertising");
    CHECK(j["confidence"].get<double>() > 0.5);

    const auto vocab = testing::marker_vocabulary();
    std::vector<FeatureRow> rows;
    for (std::size_t c = 0; c < kCategoryCount; ++c) {
        const auto cat = category_from_index(c);
        rows.push_back({"k" + std::to_string(c), cat, extract_features(testing::fixture_script(cat, 400, c), vocab)});
    }
    {
        std::ofstream o(tmp / "d.jsonl");
        write_feature_rows(o, rows);
    }
    REQUIRE(run_cli({"eval", "--model", (tmp / "m.json").string(), "--dataset", (tmp / "d.jsonl").string()}, &out) == 0);
    j = nlohmann::json::parse(out);
    CHECK(j["weighted"]["f1"] == 1.0);
}

TEST_CASE("cli: features, dataset, rfe and train pipeline") {
    testing::TempDir tmp;
    testing::write_text(tmp / "a.js", "document.getElementById('x'); document.getElementById('y');");
    std::string out;
    REQUIRE(run_cli({"features", "extract", "--file", (tmp / "a.js").string()}, &out) == 0);
    const auto row = feature_row_from_json(out.substr(0, out.find('\n')));
    const auto catalog = load_api_catalog(testing::data_path("api_catalog.txt"));
    CHECK(row.features.counts[*catalog.index_of("getElementById")] == 2);
    CHECK(!row.label);

    // A corpus whose scripts come from known entity domains.
    std::vector<ScriptRecord> records;
    const std::vector<std::pair<std::string, std::string>> sources = {
        {"https://www.google-analytics.com/", "navigator.sendBeacon(u); performance.now();"},
        {"https://securepubads.g.doubleclick.net/", "document.createElement('iframe'); el.appendChild(f);"},
    };
    for (int i = 0; i < 40; ++i) {
        const auto& [base, body] = sources[i % 2];
        records.push_back(make_script_record(base + std::to_string(i) + ".js", body + " // " + std::to_string(i),
                                             "https://p.test/", 1));
    }
    records.push_back(make_script_record("https://first.test/x.js", "local();", "https://p.test/", 1));
    write_corpus_dir(tmp / "corpus", records);

    REQUIRE(run_cli({"dataset", "build", "--corpus", (tmp / "corpus").string(), "--out", (tmp / "ds.jsonl").string(),
                     "--unlabeled-out", (tmp / "un.jsonl").string()},
                    &out) == 0);
    auto j = nlohmann::json::parse(out);
    CHECK(j["unlabeled"] == 1);
    CHECK(j["per_category"]["analytics"].get<int>() + j["per_category"]["advertising"].get<int>() == j["rows"].get<int>());

    REQUIRE(run_cli({"rfe", "--dataset", (tmp / "ds.jsonl").string(), "--k", "20", "--out", (tmp / "sel.txt").string(),
                     "--dataset-out", (tmp / "ds20.jsonl").string(), "--seed", "3", "--epochs", "5"},
                    &out) == 0);
    CHECK(nlohmann::json::parse(out)["selected"] == 20);
    CHECK(load_api_catalog(tmp / "sel.txt").size() == 20);

    REQUIRE(run_cli({"train", "--dataset", (tmp / "ds20.jsonl").string(), "--catalog", (tmp / "sel.txt").string(),
                     "--out", (tmp / "m.json").string(), "--epochs", "30", "--hidden", "16", "8"},
                    &out) == 0);
    j = nlohmann::json::parse(out);
    CHECK(j["train_accuracy"].get<double>() == 1.0);
    REQUIRE(run_cli({"eval", "--model", (tmp / "m.json").string(), "--dataset", (tmp / "ds.jsonl").string()}, &out) == 0);
    CHECK(nlohmann::json::parse(out)["accuracy"] == 1.0);

    // Same inputs, same outputs.
    REQUIRE(run_cli({"train", "--dataset", (tmp / "ds20.jsonl").string(), "--catalog", (tmp / "sel.txt").string(),
                     "--out", (tmp / "m2.json").string(), "--epochs", "30", "--hidden", "16", "8"}) == 0);
    CHECK(testing::read_text(tmp / "m.json") == testing::read_text(tmp / "m2.json"));
}

}
