#include "jslight/label_store.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <mutex>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "jslight/error.hpp"

namespace jslight {

namespace fs = std::filesystem;

namespace {

std::int64_t system_now() {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

// Log lines are snapshot lines, plus {"evict": key} tombstones.
std::string tombstone(std::string_view key) {
    nlohmann::json j;
    j["evict"] = key;
    return j.dump();
}

}  // namespace

LabelStore::LabelStore(StoreConfig config)
    : capacity_(config.capacity_bytes), path_(std::move(config.path)), clock_(std::move(config.clock)) {
    if (capacity_ == 0) throw Error("store capacity must be positive");
    if (!clock_) clock_ = system_now;
    if (!path_.empty()) {
        if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
        replay_log();
        log_.open(path_, std::ios::binary | std::ios::app);
        if (!log_) throw Error("cannot open label store " + path_.string());
        maybe_compact();
    }
}

LabelStore::~LabelStore() = default;

std::int64_t LabelStore::now() const { return clock_(); }

void LabelStore::replay_log() {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;
    std::string line;
    std::size_t bad = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++log_lines_;
        try {
            auto j = nlohmann::json::parse(line);
            if (j.is_object() && j.contains("evict")) {
                if (auto it = entries_.find(j["evict"].get<std::string>()); it != entries_.end()) {
                    erase_locked(it, false);
                }
                continue;
            }
            auto e = entry_from_jsonl(line);
            e.last_used = now();
            put_locked(std::move(e), false);
        } catch (const std::exception&) {
            ++bad;
        }
    }
    if (bad > 0) spdlog::warn("label store {}: skipped {} unreadable log lines", path_.string(), bad);
}

void LabelStore::append_log(const std::string& line) {
    if (path_.empty()) return;
    log_ << line << '\n';
    log_.flush();
    if (!log_) throw Error("write failed for label store " + path_.string());
    ++log_lines_;
}

void LabelStore::maybe_compact() {
    if (path_.empty() || log_lines_ < 1024 || log_lines_ < 2 * entries_.size()) return;
    const fs::path tmp = path_.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        for (const auto& key : lru_) out << entry_to_jsonl(entries_.at(key).entry) << '\n';
        if (!out) throw Error("write failed for " + tmp.string());
    }
    log_.close();
    fs::rename(tmp, path_);
    log_.open(path_, std::ios::binary | std::ios::app);
    if (!log_) throw Error("cannot reopen label store " + path_.string());
    log_lines_ = entries_.size();
}

void LabelStore::index_domain(const LabelEntry& e, int delta) {
    if (e.domain.empty()) return;
    auto& counts = domains_[e.domain];
    auto& c = counts[static_cast<std::size_t>(e.category)];
    c = delta > 0 ? c + 1 : c - 1;
    if (std::all_of(counts.begin(), counts.end(), [](std::size_t n) { return n == 0; })) domains_.erase(e.domain);
}

void LabelStore::erase_locked(std::unordered_map<std::string, Slot>::iterator it, bool log) {
    if (log) append_log(tombstone(it->first));
    index_domain(it->second.entry, -1);
    bytes_ -= it->second.bytes;
    lru_.erase(it->second.lru);
    entries_.erase(it);
}

void LabelStore::put_locked(LabelEntry entry, bool log) {
    const std::size_t bytes = entry_size_bytes(entry);
    if (bytes > capacity_) {
        throw Error("label entry of " + std::to_string(bytes) + " bytes exceeds the store capacity");
    }
    if (log) append_log(entry_to_jsonl(entry));
    if (auto it = entries_.find(entry.key); it != entries_.end()) erase_locked(it, false);

    lru_.push_back(entry.key);
    index_domain(entry, +1);
    bytes_ += bytes;
    const std::string key = entry.key;
    entries_.emplace(key, Slot{std::move(entry), bytes, std::prev(lru_.end())});

    while (bytes_ > capacity_) erase_locked(entries_.find(lru_.front()), log);
}

void LabelStore::put(LabelEntry entry) {
    if (entry.key.empty()) throw Error("label key must not be empty");
    if (!(entry.confidence >= 0.0 && entry.confidence <= 1.0)) throw Error("label confidence outside [0, 1]");
    const auto t = now();
    if (entry.labeled_at > t) throw Error("label timestamp is in the future");
    entry.inferred = false;
    entry.last_used = t;
    std::unique_lock lock(mu_);
    put_locked(std::move(entry), true);
    maybe_compact();
}

std::optional<LabelEntry> LabelStore::get(std::string_view key) {
    const auto t = now();
    std::unique_lock lock(mu_);
    if (auto it = entries_.find(std::string(key)); it != entries_.end()) {
        it->second.entry.last_used = t;
        lru_.splice(lru_.end(), lru_, it->second.lru);
        return it->second.entry;
    }

    const auto domain = key_domain(key);
    if (domain.empty()) return std::nullopt;
    const auto d = domains_.find(domain);
    if (d == domains_.end()) return std::nullopt;
    std::optional<std::size_t> only;
    for (std::size_t c = 0; c < d->second.size(); ++c) {
        if (d->second[c] == 0) continue;
        if (only) return std::nullopt;  // labels on this domain disagree
        only = c;
    }
    if (!only) return std::nullopt;

    LabelEntry synth;
    synth.key = std::string(key);
    synth.domain = domain;
    synth.category = static_cast<Category>(*only);
    synth.confidence = 1.0;
    synth.labeled_at = 0;
    synth.last_used = t;
    synth.inferred = true;
    for (const auto& [k, slot] : entries_) {
        if (slot.entry.domain != domain) continue;
        synth.confidence = std::min(synth.confidence, slot.entry.confidence);
        synth.labeled_at = std::max(synth.labeled_at, slot.entry.labeled_at);
    }
    return synth;
}

std::optional<LabelEntry> LabelStore::peek(std::string_view key) const {
    std::shared_lock lock(mu_);
    if (auto it = entries_.find(std::string(key)); it != entries_.end()) return it->second.entry;
    return std::nullopt;
}

bool LabelStore::erase(std::string_view key) {
    std::unique_lock lock(mu_);
    auto it = entries_.find(std::string(key));
    if (it == entries_.end()) return false;
    erase_locked(it, true);
    return true;
}

std::vector<LabelEntry> LabelStore::snapshot_since(std::int64_t ts) const {
    std::vector<LabelEntry> out;
    {
        std::shared_lock lock(mu_);
        for (const auto& [k, slot] : entries_) {
            if (slot.entry.labeled_at > ts) out.push_back(slot.entry);
        }
    }
    std::sort(out.begin(), out.end(), [](const LabelEntry& a, const LabelEntry& b) {
        return a.labeled_at != b.labeled_at ? a.labeled_at < b.labeled_at : a.key < b.key;
    });
    return out;
}

std::size_t LabelStore::size() const {
    std::shared_lock lock(mu_);
    return entries_.size();
}

std::uint64_t LabelStore::bytes_used() const {
    std::shared_lock lock(mu_);
    return bytes_;
}

std::vector<std::string> LabelStore::lru_order() const {
    std::shared_lock lock(mu_);
    return {lru_.begin(), lru_.end()};
}

std::size_t LabelStore::export_jsonl(const fs::path& path) const {
    const auto entries = snapshot_since(std::numeric_limits<std::int64_t>::min());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& e : entries) out << entry_to_jsonl(e) << '\n';
    if (!out) throw Error("write failed for " + path.string());
    return entries.size();
}

ImportResult LabelStore::import_jsonl(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return import_jsonl_text(buf.str());
}

ImportResult LabelStore::import_jsonl_text(std::string_view text) {
    ImportResult res;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        const auto line = text.substr(pos, nl - pos);
        pos = nl + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        LabelEntry e;
        try {
            e = entry_from_jsonl(line);
        } catch (const Error&) {
            ++res.skipped;
            continue;
        }
        if (e.labeled_at > now()) {
            ++res.skipped;
            continue;
        }
        put(std::move(e));
        ++res.imported;
    }
    return res;
}

}  // namespace jslight
