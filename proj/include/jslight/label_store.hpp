#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <list>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "jslight/label_entry.hpp"

namespace jslight {

inline constexpr std::uint64_t kDefaultStoreCapacity = 50ULL * 1024 * 1024;

// Read side of the store as the proxy sees it.
class LabelSource {
public:
    virtual ~LabelSource() = default;
    // Exact key first, then domain consensus. May throw; callers that must
    // not fail treat a throw as a miss.
    virtual std::optional<LabelEntry> get(std::string_view key) = 0;
};

struct StoreConfig {
    std::uint64_t capacity_bytes = kDefaultStoreCapacity;
    // Append-only log backing the store; empty keeps everything in memory.
    std::filesystem::path path;
    // Unix seconds; defaults to the system clock.
    std::function<std::int64_t()> clock;
};

struct ImportResult {
    std::size_t imported = 0;
    std::size_t skipped = 0;
};

// Capacity-bounded label database with LRU eviction. The capacity counts
// entry_size_bytes() of every live entry. Thread-safe: lookups that touch
// the LRU order and all writes take an exclusive lock; snapshot and export
// share a lock and see a consistent view.
class LabelStore : public LabelSource {
public:
    // Replays the log at config.path when it exists. Throws jslight::Error on
    // a zero capacity or an unreadable/unwritable log.
    explicit LabelStore(StoreConfig config = {});
    ~LabelStore() override;

    LabelStore(const LabelStore&) = delete;
    LabelStore& operator=(const LabelStore&) = delete;

    // Inserts or replaces by key, marks it most recently used, then evicts
    // least-recently-used entries until the store fits. Throws on an invalid
    // entry (empty key, labeled_at in the future, confidence outside [0, 1]),
    // an entry larger than the whole capacity, or a log write failure.
    void put(LabelEntry entry);

    // Exact hit: refreshes last_used. Miss: if every stored label on the
    // key's hostname has the same category, returns a synthetic entry with
    // inferred = true (lowest confidence, newest labeled_at of the group).
    std::optional<LabelEntry> get(std::string_view key) override;

    // Exact lookup without touching the LRU order.
    std::optional<LabelEntry> peek(std::string_view key) const;

    bool erase(std::string_view key);

    // Entries with labeled_at > ts, ordered by labeled_at then key.
    std::vector<LabelEntry> snapshot_since(std::int64_t ts) const;

    std::size_t size() const;
    std::uint64_t bytes_used() const;
    std::uint64_t capacity_bytes() const { return capacity_; }

    // Keys from least to most recently used.
    std::vector<std::string> lru_order() const;

    // Writes every entry as a snapshot line; returns the count.
    std::size_t export_jsonl(const std::filesystem::path& path) const;

    // Puts every well-formed line (last_used reset to now); malformed lines
    // are counted and skipped. Throws when the file cannot be read.
    ImportResult import_jsonl(const std::filesystem::path& path);
    ImportResult import_jsonl_text(std::string_view text);

private:
    struct Slot {
        LabelEntry entry;
        std::size_t bytes = 0;
        std::list<std::string>::iterator lru;
    };

    std::int64_t now() const;
    void put_locked(LabelEntry entry, bool log);
    void erase_locked(std::unordered_map<std::string, Slot>::iterator it, bool log);
    void index_domain(const LabelEntry& e, int delta);
    void append_log(const std::string& line);
    void replay_log();
    void maybe_compact();

    std::uint64_t capacity_;
    std::filesystem::path path_;
    std::function<std::int64_t()> clock_;

    mutable std::shared_mutex mu_;
    std::unordered_map<std::string, Slot> entries_;
    std::list<std::string> lru_;  // front = least recently used
    std::uint64_t bytes_ = 0;
    std::unordered_map<std::string, std::array<std::size_t, 9>> domains_;
    std::ofstream log_;
    std::size_t log_lines_ = 0;
};

}  // namespace jslight
