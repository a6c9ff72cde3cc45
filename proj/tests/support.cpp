#include "support.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "jslight/error.hpp"
#include "jslight/url.hpp"

namespace fs = std::filesystem;

namespace jslight::testing {

const std::array<std::string, kCategoryCount>& marker_names() {
    static const std::array<std::string, kCategoryCount> names = {
        "adSlot", "sendBeacon", "shareButton", "HTMLVideoElement",
        "chatWidget", "querySelector", "serviceWorker", "innerHTML",
    };
    return names;
}

Vocabulary marker_vocabulary() {
    return Vocabulary({marker_names().begin(), marker_names().end()}, "fixture-markers-v1");
}

ModelParameters marker_model() {
    auto m = zero_model(kCategoryCount, {kCategoryCount, kCategoryCount});
    m.layers[0].weights = 10.0 * Eigen::MatrixXd::Identity(8, 8);
    m.layers[1].weights = Eigen::MatrixXd::Identity(8, 8);
    m.layers[2].weights = Eigen::MatrixXd::Identity(8, 8);
    m.vocab_version = "fixture-markers-v1";
    m.vocabulary = {marker_names().begin(), marker_names().end()};
    m.threshold_default = 0.5;
    return m;
}

std::string fixture_script(Category c, std::size_t size, std::uint64_t salt) {
    std::string s = "(function () {\n  var w = window;\n";
    for (int i = 0; i < 3; ++i) s += "  w." + marker_names()[index_of(c)] + "(" + std::to_string(salt + i) + ");\n";
    s += "})();\n";
    const std::string open = "/*", close = "*/\n";
    if (s.size() + open.size() + close.size() > size) throw Error("fixture script size too small");
    const std::size_t pad = size - s.size() - open.size() - close.size();
    std::string filler;
    filler.reserve(pad);
    std::mt19937_64 rng(salt);
    static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789 \n";
    for (std::size_t i = 0; i < pad; ++i) filler += alphabet[rng() % (sizeof(alphabet) - 1)];
    return s + open + filler + close;
}

FixtureSite FixtureSite::generate() {
    FixtureSite site;
    const std::array<Category, 5> critical = {Category::utility, Category::hosting, Category::content,
                                              Category::social, Category::video};
    std::size_t nc = 0, cr = 0;
    for (std::size_t i = 0; i < kScripts; ++i) {
        FixtureScript s;
        if (i % 5 == 0 && cr < critical.size()) {
            s.category = critical[cr++];
        } else {
            s.category = nc % 2 == 0 ? Category::advertising : Category::analytics;
            s.noncritical = true;
            ++nc;
        }
        char name[64];
        std::snprintf(name, sizeof name, "/static/%s-%02zu.js", std::string(to_string(s.category)).c_str(), i);
        s.path = name;
        site.scripts.push_back(std::move(s));
    }

    site.html = "<!doctype html>\n<html><head><title>Fixture</title>\n";
    for (const auto& s : site.scripts) site.html += "<script src=\"" + s.path + "\"></script>\n";
    site.html += "</head><body><p>fixture page</p></body></html>\n";

    std::size_t k = 0;
    std::size_t nc_used = 0;
    const std::size_t crit_total = kCriticalBytes - site.html.size();
    const std::array<double, 4> crit_share = {0.30, 0.25, 0.20, 0.15};
    std::size_t crit_used = 0, c = 0;
    for (auto& s : site.scripts) {
        std::size_t size = 0;
        if (s.noncritical) {
            size = k + 1 < kNoncritical ? 30000 + 1024 * k : kNoncriticalBytes - nc_used;
            nc_used += size;
            ++k;
        } else {
            size = c < crit_share.size() ? static_cast<std::size_t>(crit_share[c] * crit_total) : crit_total - crit_used;
            crit_used += size;
            ++c;
        }
        s.body = fixture_script(s.category, size, 1000 + (&s - site.scripts.data()));
    }

    site.inline_html =
        "<!doctype html>\n<html><head>\n<script>window.querySelector('#a');</script>\n"
        "<script type=\"text/javascript\">navigator.sendBeacon('/b');</script>\n</head><body></body></html>\n";
    return site;
}

std::size_t FixtureSite::total_bytes() const {
    std::size_t n = html.size();
    for (const auto& s : scripts) n += s.body.size();
    return n;
}

std::string blob_body(std::uint64_t n) {
    std::mt19937_64 rng(n * 0x9E3779B97F4A7C15ULL + 1);
    const std::size_t len = rng() % 20000;
    std::string out(len, '\0');
    for (auto& ch : out) ch = static_cast<char>(rng() & 0xff);
    return out;
}

FixtureServer::FixtureServer(FixtureSite site) : site_(std::move(site)), server_(std::make_unique<httplib::Server>()) {
    auto& srv = *server_;
    auto count = [this](const std::string& path) {
        std::lock_guard lock(mu_);
        ++hits_[path];
    };
    srv.Get("/", [this, count](const httplib::Request&, httplib::Response& res) {
        count("/");
        res.set_content(site_.html, "text/html; charset=utf-8");
    });
    srv.Get("/inline.html", [this, count](const httplib::Request&, httplib::Response& res) {
        count("/inline.html");
        res.set_content(site_.inline_html, "text/html; charset=utf-8");
    });
    srv.Get(R"(/static/(.+))", [this, count](const httplib::Request& req, httplib::Response& res) {
        count(req.path);
        std::lock_guard lock(mu_);
        for (const auto& s : site_.scripts) {
            if (s.path == req.path) {
                ++script_hits_;
                res.set_content(s.body, "application/javascript");
                return;
            }
        }
        res.status = 404;
        res.set_content("missing\n", "text/plain");
    });
    auto echo = [count](const httplib::Request& req, httplib::Response& res) {
        count(req.path);
        std::string target = req.target.empty() ? req.path : req.target;
        res.set_header("X-Echo-Method", req.method);
        res.set_content(req.method + " " + target + "\n" + req.body, "text/plain; charset=utf-8");
    };
    srv.Get(R"(/echo.*)", echo);
    srv.Post(R"(/echo.*)", echo);
    srv.Put(R"(/echo.*)", echo);
    srv.Delete(R"(/echo.*)", echo);
    srv.Get(R"(/blob/(\d+)\.js)", [count](const httplib::Request& req, httplib::Response& res) {
        count(req.path);
        res.set_content(blob_body(std::stoull(req.matches[1])), "application/javascript");
    });

    port_ = srv.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw Error("fixture server cannot bind");
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

FixtureServer::~FixtureServer() {
    server_->stop();
    if (thread_.joinable()) thread_.join();
}

std::string FixtureServer::base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

std::size_t FixtureServer::hits(const std::string& path) const {
    std::lock_guard lock(mu_);
    auto it = hits_.find(path);
    return it == hits_.end() ? 0 : it->second;
}

void FixtureServer::reset_hits() {
    std::lock_guard lock(mu_);
    hits_.clear();
    script_hits_ = 0;
}

std::vector<LabelEntry> FixtureServer::labels(std::int64_t labeled_at) const {
    std::vector<LabelEntry> out;
    for (const auto& s : site_.scripts) {
        LabelEntry e;
        e.key = url(s.path);
        e.domain = "127.0.0.1";
        e.category = s.category;
        e.confidence = 0.97;
        e.labeled_at = labeled_at;
        out.push_back(e);
    }
    return out;
}

void FixtureServer::set_script(const std::string& path, std::string body) {
    std::lock_guard lock(mu_);
    for (auto& s : site_.scripts) {
        if (s.path == path) {
            s.body = std::move(body);
            return;
        }
    }
    throw Error("no fixture script " + path);
}

std::optional<LabelEntry> ThrowingSource::get(std::string_view key) {
    ++calls;
    throw Error("rigged store failure for " + std::string(key));
}

MarkerData marker_dataset(std::size_t rows, std::size_t n_features, std::uint64_t seed) {
    if (n_features < kCategoryCount) throw Error("need at least 8 features");
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> positions(n_features);
    for (std::size_t i = 0; i < n_features; ++i) positions[i] = i;
    std::shuffle(positions.begin(), positions.end(), rng);
    std::vector<std::size_t> markers(positions.begin(), positions.begin() + kCategoryCount);

    std::vector<std::string> names(n_features);
    for (std::size_t i = 0; i < n_features; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "api%05zu", i);
        names[i] = buf;
    }
    for (std::size_t c = 0; c < kCategoryCount; ++c) names[markers[c]] = "marker_" + std::string(to_string(category_from_index(c)));
    const std::string version = "synthetic-" + std::to_string(n_features) + "-" + std::to_string(seed);
    Vocabulary vocab(names, version);

    LabeledDataset ds;
    ds.vocab_version = version;
    std::poisson_distribution<int> extra(1.5);
    std::bernoulli_distribution confuse(0.05);
    std::uniform_int_distribution<std::size_t> pick(0, n_features - 1);
    std::uniform_int_distribution<int> noise_count(1, 3);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t c = r % kCategoryCount;
        FeatureVector fv{std::vector<std::uint32_t>(n_features, 0), version};
        for (int k = 0; k < 15; ++k) {
            const auto j = pick(rng);
            if (std::find(markers.begin(), markers.end(), j) != markers.end()) continue;
            fv.counts[j] += noise_count(rng);
        }
        for (std::size_t o = 0; o < kCategoryCount; ++o) {
            if (o != c && confuse(rng)) fv.counts[markers[o]] = 1;
        }
        fv.counts[markers[c]] = 2 + extra(rng);
        ds.rows.push_back({"row" + std::to_string(r), std::move(fv), category_from_index(c)});
    }
    std::shuffle(ds.rows.begin(), ds.rows.end(), rng);
    return {std::move(vocab), std::move(ds), std::move(markers)};
}

LabeledDataset random_dataset(std::size_t rows, std::size_t n_features, std::uint64_t seed,
                              const std::string& version) {
    std::mt19937_64 rng(seed);
    std::poisson_distribution<int> count(1.0);
    std::uniform_int_distribution<std::size_t> label(0, kCategoryCount - 1);
    LabeledDataset ds;
    ds.vocab_version = version;
    for (std::size_t r = 0; r < rows; ++r) {
        FeatureVector fv{std::vector<std::uint32_t>(n_features), version};
        for (auto& v : fv.counts) v = count(rng);
        ds.rows.push_back({"r" + std::to_string(r), std::move(fv), category_from_index(label(rng))});
    }
    return ds;
}

TempDir::TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "jslight-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw Error("mkdtemp failed");
    path_ = tmpl;
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out.flush()) throw Error("cannot write " + p.string());
}

fs::path data_path(const std::string& name) { return fs::path(JSLIGHT_DATA_DIR) / name; }

}  // namespace jslight::testing
