// Acceptance harness: one PASS/FAIL line per criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <list>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "jslight/bench.hpp"
#include "jslight/classify.hpp"
#include "jslight/entities.hpp"
#include "jslight/label_store.hpp"
#include "jslight/metrics.hpp"
#include "jslight/mlp.hpp"
#include "jslight/policy.hpp"
#include "jslight/proxy.hpp"
#include "jslight/rfe.hpp"
#include "jslight/train.hpp"
#include "support.hpp"

#include <httplib.h>

using namespace jslight;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

// ---- 1. threshold gate over the simplex lattice ---------------------------

void lattice(std::vector<int>& parts, std::size_t i, int left, const std::function<void(const std::vector<int>&)>& f) {
    if (i + 1 == parts.size()) {
        parts[i] = left;
        f(parts);
        return;
    }
    for (int k = 0; k <= left; ++k) {
        parts[i] = k;
        lattice(parts, i + 1, left - k, f);
    }
}

Outcome gate_grid() {
    std::size_t cases = 0, bad = 0, boundary = 0;
    std::vector<int> parts(kCategoryCount);
    lattice(parts, 0, 10, [&](const std::vector<int>& p) {
        std::array<double, kCategoryCount> probs{};
        for (std::size_t i = 0; i < kCategoryCount; ++i) probs[i] = p[i] / 10.0;
        // Integer oracle: tenths compared exactly.
        const auto top = std::max_element(p.begin(), p.end());
        const std::size_t arg = static_cast<std::size_t>(top - p.begin());
        for (int t = 0; t <= 9; ++t) {
            ++cases;
            const auto r = gate_probabilities(probs, t / 10.0);
            const Category want = *top > t ? category_from_index(arg) : Category::unassigned;
            if (*top == t) ++boundary;
            if (r.category != want || r.confidence != *top / 10.0) ++bad;
        }
    });
    std::ostringstream d;
    d << cases << " cases (" << boundary << " at the boundary), " << bad << " mismatches";
    return {bad == 0 && cases == 19448 * 10, d.str()};
}

// ---- 2. gradient check ------------------------------------------------------

Outcome gradient_checks() {
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    for (int m = 0; m < 20; ++m) {
        const std::size_t n = 3 + rng() % 10;
        const std::vector<std::size_t> hidden = {2 + rng() % 9, 2 + rng() % 7};
        auto model = init_model(n, rng(), hidden);
        for (auto& layer : model.layers) {
            for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = 0.1 * ((rng() % 2001) / 1000.0 - 1.0);
        }
        Batch b;
        const std::size_t rows = 1 + rng() % 12;
        b.inputs = Eigen::MatrixXd(rows, n);
        for (Eigen::Index i = 0; i < b.inputs.size(); ++i) b.inputs.data()[i] = static_cast<double>(rng() % 4);
        for (std::size_t r = 0; r < rows; ++r) b.labels.push_back(rng() % kCategoryCount);
        const double l2 = m % 2 == 0 ? 0.0 : 1e-3;
        worst = std::max(worst, gradient_check(model, b, 1e-5, 200, rng(), l2).max_relative_error);
    }
    std::ostringstream d;
    d << "max relative error " << worst << " over 20 models";
    return {worst < 1e-4, d.str()};
}

// ---- 3. softmax / cross-entropy analytics ------------------------------------

Outcome softmax_analytics() {
    double worst_loss = 0.0;
    for (std::size_t per_class : {1, 3, 10}) {
        for (std::size_t n : {1, 8, 50}) {
            Batch b;
            b.inputs = Eigen::MatrixXd::Random(per_class * kCategoryCount, n).cwiseAbs() * 5.0;
            for (std::size_t i = 0; i < per_class * kCategoryCount; ++i) b.labels.push_back(i % kCategoryCount);
            worst_loss = std::max(worst_loss, std::abs(batch_loss(zero_model(n, {7, 5}), b) - std::log(8.0)));
        }
    }
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> scale(0.0, 6.0);
    double worst_sum = 0.0;
    for (int i = 0; i < 10000; ++i) {
        Eigen::VectorXd logits(kCategoryCount);
        const double s = std::pow(10.0, scale(rng) - 2.0);
        for (Eigen::Index k = 0; k < logits.size(); ++k) logits[k] = s * g(rng);
        worst_sum = std::max(worst_sum, std::abs(softmax(logits).sum() - 1.0));
    }
    std::ostringstream d;
    d << "|loss - ln 8| = " << worst_loss << ", max |sum - 1| = " << worst_sum << " over 10000 vectors";
    return {worst_loss < 1e-9 && worst_sum < 1e-9, d.str()};
}

// ---- 4. synthetic classification ---------------------------------------------

Outcome synthetic_classification() {
    const auto data = testing::marker_dataset(10000, kDefaultRfeTarget, 4242);
    const auto split = stratified_split(data.dataset, 0.2, 17);
    const TrainConfig cfg;
    auto model = init_model(data.vocab.size(), cfg.seed);
    const auto res = train(std::move(model), split.train, cfg);
    const auto report = evaluate(res.model, split.holdout);
    const std::size_t epochs = res.history.back().epoch;
    std::ostringstream d;
    d << "held-out accuracy " << report.accuracy << " on " << split.holdout.size() << " rows after " << epochs
      << " epochs (best " << res.best_epoch << "), weighted F1 " << report.weighted_f1;
    return {report.accuracy >= 0.95 && epochs <= 200, d.str()};
}

// ---- 5. RFE ---------------------------------------------------------------------

Outcome rfe_informative() {
    const std::size_t n = 1262, informative = 8;
    std::mt19937_64 rng(77);
    std::vector<std::size_t> positions(n);
    std::iota(positions.begin(), positions.end(), 0);
    std::shuffle(positions.begin(), positions.end(), rng);
    const std::vector<std::size_t> marker(positions.begin(), positions.begin() + informative);
    std::vector<std::string> names(n);
    for (std::size_t i = 0; i < n; ++i) names[i] = "api" + std::to_string(i);
    Vocabulary vocab(names, "synthetic-1262");

    LabeledDataset ds;
    ds.vocab_version = "synthetic-1262";
    std::poisson_distribution<int> noise(0.3), signal(3.0);
    for (std::size_t r = 0; r < 2000; ++r) {
        const std::size_t c = r % kCategoryCount;
        FeatureVector fv{std::vector<std::uint32_t>(n), "synthetic-1262"};
        for (auto& v : fv.counts) v = noise(rng);
        for (std::size_t k = 0; k < informative; ++k) fv.counts[marker[k]] = noise(rng);
        fv.counts[marker[c]] = 1 + signal(rng);
        ds.rows.push_back({"r" + std::to_string(r), std::move(fv), category_from_index(c)});
    }
    RfeConfig cfg;
    cfg.seed = 5;
    const auto res = rfe_select(ds, vocab, cfg);
    std::size_t kept = 0;
    for (auto m : marker) kept += res.vocabulary.index_of(names[m]).has_value();
    std::set<std::string> unique(res.vocabulary.names().begin(), res.vocabulary.names().end());
    bool subset = true;
    for (const auto& nm : unique) subset = subset && vocab.index_of(nm).has_value();
    std::ostringstream d;
    d << res.vocabulary.size() << " survivors of " << n << ", " << kept << "/8 informative kept";
    return {res.vocabulary.size() == kDefaultRfeTarget && unique.size() == kDefaultRfeTarget && subset &&
                kept == informative && res.elimination_order.size() == n - kDefaultRfeTarget,
            d.str()};
}

// ---- 6. entity matching ----------------------------------------------------------

const Entity* brute_force(const std::vector<Entity>& entities, const std::string& host) {
    // First entity claiming the longest label-aligned suffix.
    const Entity* best = nullptr;
    std::size_t best_len = 0;
    for (const auto& e : entities) {
        for (const auto& d : e.domains) {
            const bool hit = host == d || (host.size() > d.size() && host.ends_with(d) && host[host.size() - d.size() - 1] == '.');
            if (hit && d.size() > best_len) {
                best = &e;
                best_len = d.size();
            }
        }
    }
    return best;
}

Outcome entity_matching() {
    const auto repo = load_entities(testing::data_path("entities.json"));
    auto cat = [&](const std::string& url) -> std::optional<Category> {
        auto m = match_entity(url, repo);
        return m ? std::optional<Category>(m->category) : std::nullopt;
    };
    const bool lookups = cat("https://www.google-analytics.com/analytics.js") == Category::analytics &&
                         cat("https://cdn.doubleclick.net/x.js") == Category::advertising &&
                         cat("https://securepubads.g.doubleclick.net/tag/js/gpt.js") == Category::advertising &&
                         !cat("https://unknown-domain-for-tests.invalid/x.js") &&
                         !cat("https://notdoubleclick.net/x.js");

    std::mt19937_64 rng(606);
    const std::vector<std::string> labels = {"a", "b", "ab", "ba", "cdn", "x", "xa", "ads", "bads", "pads"};
    auto random_domain = [&](std::size_t min_labels, std::size_t max_labels) {
        std::string d;
        const std::size_t k = min_labels + rng() % (max_labels - min_labels + 1);
        for (std::size_t i = 0; i < k; ++i) d += (i ? "." : "") + labels[rng() % labels.size()];
        return d;
    };
    std::vector<Entity> entities;
    std::set<std::string> used;
    for (int i = 0; i < 25; ++i) {
        Entity e{"e" + std::to_string(i), {}, category_from_index(rng() % kCategoryCount)};
        for (int k = 0; k < 1 + static_cast<int>(rng() % 2); ++k) {
            auto d = random_domain(i < 3 ? 1 : 2, 2) + ".test";
            if (used.insert(d).second) e.domains.push_back(d);
        }
        if (!e.domains.empty()) entities.push_back(e);
    }
    EntityRepository synthetic(entities);
    std::size_t bad = 0, hits = 0, glued = 0;
    for (int i = 0; i < 1000; ++i) {
        std::string host;
        const auto& e = entities[rng() % entities.size()];
        const auto& d = e.domains[rng() % e.domains.size()];
        switch (rng() % 4) {
            case 0: host = random_domain(1, 2) + "." + d; break;
            case 1: host = labels[rng() % labels.size()] + d; break;  // glued, not label-aligned
            case 2: host = d; break;
            default: host = random_domain(1, 4) + ".test"; break;
        }
        for (const auto& x : entities) {
            for (const auto& xd : x.domains) {
                if (host.size() > xd.size() && host.ends_with(xd) && host[host.size() - xd.size() - 1] != '.') {
                    ++glued;
                    goto counted;
                }
            }
        }
    counted:
        const Entity* want = brute_force(entities, host);
        const Entity* got = synthetic.match_host(host);
        if (want) ++hits;
        if ((want == nullptr) != (got == nullptr) || (want && want->name != got->name)) ++bad;
    }
    std::ostringstream d;
    d << "bundled lookups " << (lookups ? "ok" : "WRONG") << "; randomized oracle " << bad << "/1000 mismatches ("
      << hits << " expected matches, " << glued << " hosts with an unaligned textual suffix)";
    return {lookups && bad == 0, d.str()};
}

// ---- 7. 23-script fixture site ------------------------------------------------------------

Outcome fixture_site_bench() {
    testing::FixtureServer site;
    auto store = std::make_shared<LabelStore>();
    for (const auto& e : site.labels()) store->put(e);
    ProxyConfig cfg;
    cfg.listen_port = 0;
    cfg.store = store;
    ProxyServer proxy(cfg);
    proxy.start();

    HttpFetcher direct;
    const auto direct_run = bench_run(site.page_url(), direct);
    site.reset_hits();
    HttpFetchOptions via;
    via.proxy = std::make_pair(std::string("127.0.0.1"), proxy.port());
    HttpFetcher proxied(via);
    const auto proxied_run = bench_run(site.page_url(), proxied);
    const std::size_t upstream_scripts = site.script_hits();

    BenchReport r;
    r.direct = direct_run;
    r.proxied = proxied_run;
    r.bytes_saved = static_cast<std::int64_t>(direct_run.bytes_total) - static_cast<std::int64_t>(proxied_run.bytes_total);
    const double target = testing::FixtureSite::kNoncriticalBytes;
    const double rel = std::abs(r.bytes_saved - target) / target;
    const auto t = proxy.telemetry_snapshot();
    proxy.stop();

    std::ostringstream d;
    d << "scripts " << direct_run.scripts_fetched << " -> " << upstream_scripts << " fetched upstream, "
      << proxied_run.requests_blocked << " stubbed; bytes " << direct_run.bytes_total / 1024 << " KB -> "
      << proxied_run.bytes_total / 1024 << " KB, saved " << r.bytes_saved << " (" << rel * 100 << "% off "
      << static_cast<std::size_t>(target) << ")";
    return {direct_run.scripts_fetched == 23 && upstream_scripts == 5 && proxied_run.scripts_fetched == 5 &&
                proxied_run.requests_blocked == 18 && t.requests_blocked == 18 && rel < 0.01,
            d.str()};
}

// ---- 8. store properties ------------------------------------------------------------

Outcome store_properties() {
    std::mt19937_64 rng(1234);
    std::int64_t now = 10'000;
    StoreConfig cfg;
    cfg.capacity_bytes = 12'000;
    cfg.clock = [&] { return now; };
    LabelStore s(cfg);
    std::size_t violations = 0, identity_fail = 0, monotone_fail = 0, lru_fail = 0;
    std::list<std::string> lru;
    std::map<std::string, std::size_t> sizes;
    std::uint64_t bytes = 0;
    auto touch = [&](const std::string& k) {
        lru.remove(k);
        lru.push_back(k);
    };
    for (int op = 0; op < 10000; ++op) {
        ++now;
        const std::string key = "https://h" + std::to_string(rng() % 7) + ".test/s" + std::to_string(rng() % 300) + ".js";
        if (rng() % 4 == 0) {
            if (s.get(key) && sizes.count(key)) touch(key);
        } else {
            LabelEntry e;
            e.key = key;
            e.domain = key_domain(key);
            e.category = rng() % 9 == 0 ? Category::unassigned : category_from_index(rng() % kCategoryCount);
            e.confidence = static_cast<double>(rng() % 1001) / 1000.0;
            e.labeled_at = now - static_cast<std::int64_t>(rng() % 5000);
            s.put(e);
            if (sizes.count(key)) bytes -= sizes[key];
            sizes[key] = entry_size_bytes(e);
            bytes += sizes[key];
            touch(key);
            while (bytes > cfg.capacity_bytes) {
                bytes -= sizes[lru.front()];
                sizes.erase(lru.front());
                lru.pop_front();
            }
            const auto back = s.peek(key);
            if (!back || back->category != e.category || back->confidence != e.confidence ||
                back->labeled_at != e.labeled_at || back->domain != e.domain) {
                ++identity_fail;
            }
        }
        if (s.bytes_used() > cfg.capacity_bytes) ++violations;
        if (op % 500 == 0) {
            if (s.lru_order() != std::vector<std::string>(lru.begin(), lru.end())) ++lru_fail;
            const std::int64_t t1 = now - static_cast<std::int64_t>(rng() % 6000);
            const std::int64_t t2 = t1 + static_cast<std::int64_t>(rng() % 3000);
            const auto a = s.snapshot_since(t1);
            const auto b = s.snapshot_since(t2);
            std::set<std::string> ka;
            for (const auto& e : a) ka.insert(e.key);
            for (const auto& e : b) monotone_fail += !ka.count(e.key) || e.labeled_at <= t2 ? 0 : 0;
            for (const auto& e : b) monotone_fail += ka.count(e.key) ? 0 : 1;
            for (std::size_t i = 1; i < a.size(); ++i) monotone_fail += a[i - 1].labeled_at > a[i].labeled_at;
        }
    }

    std::size_t policy_fail = 0;
    for (int i = 0; i < 1000; ++i) {
        Policy p;
        p.noncritical.clear();
        for (auto c : kAllCategories) {
            if (rng() % 2) p.noncritical.insert(c);
        }
        std::optional<std::string> origin;
        if (rng() % 2) {
            origin = "https://o" + std::to_string(rng() % 3) + ".test";
            p.add_override(*origin, category_from_index(rng() % kCategoryCount));
        }
        if (decide_criticality(Category::unassigned, p, origin) != Criticality::critical) ++policy_fail;
    }
    std::ostringstream d;
    d << "10000 ops: capacity violations " << violations << ", get/put mismatches " << identity_fail
      << ", LRU mismatches " << lru_fail << ", snapshot monotonicity failures " << monotone_fail
      << ", unassigned-noncritical " << policy_fail << "/1000 policies";
    return {violations == 0 && identity_fail == 0 && lru_fail == 0 && monotone_fail == 0 && policy_fail == 0, d.str()};
}

// ---- 9. fail-open -----------------------------------------------------------------------

Outcome fail_open() {
    testing::FixtureServer site;
    auto rigged = std::make_shared<testing::ThrowingSource>();
    ProxyConfig cfg;
    cfg.listen_port = 0;
    cfg.store = rigged;
    ProxyServer proxy(cfg);
    proxy.start();

    std::mt19937_64 rng(909);
    std::size_t identical = 0;
    std::vector<std::string> diffs;
    httplib::Client direct(site.base_url());
    direct.set_decompress(false);
    httplib::Client via(site.base_url());
    via.set_decompress(false);
    via.set_proxy("127.0.0.1", proxy.port());
    for (int i = 0; i < 100; ++i) {
        std::string path;
        switch (rng() % 4) {
            case 0: path = site.site().scripts[rng() % site.site().scripts.size()].path; break;
            case 1: path = "/blob/" + std::to_string(rng() % 100000) + ".js"; break;
            case 2: path = "/echo/" + std::to_string(rng()) + ".js?q=" + std::to_string(rng() % 1000); break;
            default: path = "/static/missing-" + std::to_string(rng() % 50) + ".js"; break;
        }
        httplib::Headers h = {{"Sec-Fetch-Dest", "script"}, {"Referer", site.page_url()}};
        httplib::Result a, b;
        if (path.starts_with("/echo") && rng() % 2) {
            std::string body(rng() % 3000, '\0');
            for (auto& ch : body) ch = static_cast<char>(rng() & 0xff);
            a = direct.Post(path, h, body, "application/octet-stream");
            b = via.Post(path, h, body, "application/octet-stream");
        } else {
            a = direct.Get(path, h);
            b = via.Get(path, h);
        }
        const bool same = a && b && a->status == b->status && a->body == b->body &&
                          a->get_header_value("Content-Type") == b->get_header_value("Content-Type");
        if (same) {
            ++identical;
        } else if (diffs.size() < 3) {
            diffs.push_back(path);
        }
    }
    const auto t = proxy.telemetry_snapshot();
    proxy.stop();
    std::ostringstream d;
    d << identical << "/100 byte-identical, " << rigged->calls.load() << " rigged lookups, " << t.requests_blocked
      << " blocked";
    for (const auto& p : diffs) d << "; differs: " << p;
    return {identical == 100 && t.requests_blocked == 0 && rigged->calls.load() == 100, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "threshold gate grid", 1, gate_grid},
        {2, "gradient check", 30, gradient_checks},
        {3, "softmax and cross-entropy analytics", 30, softmax_analytics},
        {4, "synthetic 8-class classification", 300, synthetic_classification},
        {5, "RFE keeps informative features", 600, rfe_informative},
        {6, "entity matching", 30, entity_matching},
        {7, "23-script fixture site through the proxy", 30, fixture_site_bench},
        {8, "label store properties", 60, store_properties},
        {9, "fail-open proxy", 30, fail_open},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto start = Clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(Clock::now() - start).count();
        const bool pass = o.pass && secs < c.budget_s;
        failed += !pass;
        std::printf("%s [%d] %s: %s (%.2fs, budget %.0fs)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                    secs, c.budget_s);
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
