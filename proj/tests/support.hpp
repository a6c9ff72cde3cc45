#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "jslight/category.hpp"
#include "jslight/dataset.hpp"
#include "jslight/label_entry.hpp"
#include "jslight/label_store.hpp"
#include "jslight/mlp.hpp"
#include "jslight/vocabulary.hpp"

namespace httplib {
class Server;
}

namespace jslight::testing {

// Marker token per category; the fixture model keys on these.
const std::array<std::string, kCategoryCount>& marker_names();

// Vocabulary of the eight markers, in category order.
Vocabulary marker_vocabulary();

// Hand-set [8, 8, 8, 8] network: identity-like layers with gain 10, so a
// script whose only marker is category c gets p(c) > 0.999.
ModelParameters marker_model();

// JavaScript source of exactly `size` bytes mentioning `c`'s marker.
std::string fixture_script(Category c, std::size_t size, std::uint64_t salt);

struct FixtureScript {
    std::string path;  // "/static/<name>.js"
    Category category;
    bool noncritical = false;
    std::string body;
};

// The 23-script page used by the proxy and bench tests. 18 scripts are
// advertising/analytics and total exactly kNoncriticalBytes; the page and
// the 5 remaining scripts total kCriticalBytes.
struct FixtureSite {
    static constexpr std::size_t kScripts = 23;
    static constexpr std::size_t kNoncritical = 18;
    static constexpr std::size_t kNoncriticalBytes = 700 * 1024;
    static constexpr std::size_t kCriticalBytes = 600 * 1024;

    std::string html;
    std::string inline_html;  // page with two inline scripts only
    std::vector<FixtureScript> scripts;

    static FixtureSite generate();
    std::size_t total_bytes() const;
};

// Serves a FixtureSite on 127.0.0.1 with an ephemeral port:
//   /             the 23-script page
//   /inline.html  the inline-only page
//   /static/*.js  scripts
//   /echo...      deterministic reflection of method, target and body
//   /blob/<n>.js  pseudo-random bytes derived from n
class FixtureServer {
public:
    explicit FixtureServer(FixtureSite site = FixtureSite::generate());
    ~FixtureServer();

    const FixtureSite& site() const { return site_; }
    int port() const { return port_; }
    std::string base_url() const;
    std::string page_url() const { return base_url() + "/"; }
    std::string url(const std::string& path) const { return base_url() + path; }

    std::size_t script_hits() const { return script_hits_.load(); }
    std::size_t hits(const std::string& path) const;
    void reset_hits();

    // Fixture labels: one LabelEntry per script, keyed by its full URL.
    std::vector<LabelEntry> labels(std::int64_t labeled_at = 1'700'000'000) const;

    // Replaces one script body (content-change tests).
    void set_script(const std::string& path, std::string body);

private:
    FixtureSite site_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<std::size_t> script_hits_{0};
    mutable std::mutex mu_;
    std::map<std::string, std::size_t> hits_;
};

std::string blob_body(std::uint64_t n);

// A label source whose every lookup throws.
class ThrowingSource : public LabelSource {
public:
    std::optional<LabelEntry> get(std::string_view key) override;
    std::atomic<std::size_t> calls{0};
};

// 8-class marker dataset: each row has its class marker at count >= 2,
// occasional single-count confuser markers and sparse noise.
struct MarkerData {
    Vocabulary vocab;
    LabeledDataset dataset;
    std::vector<std::size_t> marker_index;  // per category
};
MarkerData marker_dataset(std::size_t rows, std::size_t n_features, std::uint64_t seed);

// Random labeled dataset of the given shape (no signal).
LabeledDataset random_dataset(std::size_t rows, std::size_t n_features, std::uint64_t seed,
                              const std::string& version = "rand");

// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

std::string read_text(const std::filesystem::path& p);
void write_text(const std::filesystem::path& p, const std::string& text);

// Path of a bundled data file.
std::filesystem::path data_path(const std::string& name);

}  // namespace jslight::testing
