#include "jslight/cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "jslight/bench.hpp"
#include "jslight/classify.hpp"
#include "jslight/corpus.hpp"
#include "jslight/dataset.hpp"
#include "jslight/entities.hpp"
#include "jslight/error.hpp"
#include "jslight/features.hpp"
#include "jslight/fetch.hpp"
#include "jslight/label_service.hpp"
#include "jslight/label_store.hpp"
#include "jslight/metrics.hpp"
#include "jslight/mitm.hpp"
#include "jslight/model_io.hpp"
#include "jslight/policy.hpp"
#include "jslight/proxy.hpp"
#include "jslight/rfe.hpp"
#include "jslight/train.hpp"
#include "jslight/vocabulary.hpp"

namespace fs = std::filesystem;

namespace jslight {

namespace {

const std::string kDataDir = JSLIGHT_DATA_DIR;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<FeatureRow> read_rows(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    return read_feature_rows(in);
}

void write_rows(const fs::path& path, const std::vector<FeatureRow>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    write_feature_rows(out, rows);
    if (!out.flush()) throw Error("cannot write " + path.string());
}

// To `path`, or stdout when it is empty or "-".
void emit_rows(const std::string& path, const std::vector<FeatureRow>& rows, std::ostream& out) {
    if (path.empty() || path == "-") {
        write_feature_rows(out, rows);
    } else {
        write_rows(path, rows);
    }
}

nlohmann::ordered_json counts_json(const std::map<Category, std::size_t>& counts) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [c, n] : counts) j[std::string(to_string(c))] = n;
    return j;
}

std::shared_ptr<LabelStore> open_store(const std::string& path, double capacity_mb) {
    StoreConfig cfg;
    cfg.path = path;
    cfg.capacity_bytes = static_cast<std::uint64_t>(capacity_mb * 1024 * 1024);
    return std::make_shared<LabelStore>(std::move(cfg));
}

// Blocks SIGINT/SIGTERM for every thread started afterwards, so the caller
// can wait for them with sigwait().
sigset_t block_shutdown_signals() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    return set;
}

void wait_for_shutdown(const sigset_t& set) {
    int sig = 0;
    sigwait(&set, &sig);
    spdlog::info("signal {}, shutting down", sig);
}

void ensure_logger() {
    static const bool once = [] {
        auto logger = spdlog::stderr_color_mt("jslight");
        spdlog::set_default_logger(logger);
        spdlog::set_level(spdlog::level::warn);
        return true;
    }();
    (void)once;
}

}  // namespace

std::pair<std::string, int> parse_host_port(const std::string& text) {
    std::string host = "127.0.0.1";
    std::string port = text;
    if (const auto colon = text.rfind(':'); colon != std::string::npos) {
        host = text.substr(0, colon);
        port = text.substr(colon + 1);
        if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
        if (host.empty()) throw Error("missing host in " + text);
    }
    int p = -1;
    try {
        std::size_t used = 0;
        p = std::stoi(port, &used);
        if (used != port.size()) p = -1;
    } catch (const std::exception&) {
        p = -1;
    }
    if (p < 0 || p > 65535) throw Error("bad port in " + text);
    return {host, p};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    ensure_logger();
    CLI::App app{"JavaScript criticality classifier, label service and blocking proxy", "jslight"};
    app.require_subcommand(1);
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

    // features extract
    auto* features = app.add_subcommand("features", "Feature extraction");
    features->require_subcommand(1);
    auto* fx = features->add_subcommand("extract", "Count catalog API tokens in scripts");
    std::string fx_catalog = kDataDir + "/api_catalog.txt";
    std::vector<std::string> fx_files;
    std::string fx_corpus, fx_out;
    fx->add_option("--catalog", fx_catalog, "API catalog")->check(CLI::ExistingFile);
    fx->add_option("--file", fx_files, "Script file (repeatable)")->check(CLI::ExistingFile);
    fx->add_option("--corpus", fx_corpus, "Corpus directory")->check(CLI::ExistingDirectory);
    fx->add_option("--out", fx_out, "Output JSONL (default stdout)");

    // dataset build
    auto* dataset = app.add_subcommand("dataset", "Labeled dataset construction");
    dataset->require_subcommand(1);
    auto* db = dataset->add_subcommand("build", "Label a corpus via entity matching and extract features");
    std::string db_corpus, db_pages, db_corpus_out, db_out, db_unlabeled;
    std::string db_catalog = kDataDir + "/api_catalog.txt";
    std::string db_entities = kDataDir + "/entities.json";
    db->add_option("--corpus", db_corpus, "Corpus directory to read")->check(CLI::ExistingDirectory);
    db->add_option("--pages", db_pages, "Page list to crawl instead")->check(CLI::ExistingFile);
    db->add_option("--corpus-out", db_corpus_out, "Where to save the crawled corpus");
    db->add_option("--catalog", db_catalog, "API catalog")->check(CLI::ExistingFile);
    db->add_option("--entities", db_entities, "Entity snapshot")->check(CLI::ExistingFile);
    db->add_option("--out", db_out, "Labeled dataset JSONL")->required();
    db->add_option("--unlabeled-out", db_unlabeled, "Unlabeled rows JSONL");

    // rfe
    auto* rfe = app.add_subcommand("rfe", "Recursive feature elimination");
    std::string rfe_dataset, rfe_out, rfe_dataset_out;
    std::string rfe_catalog = kDataDir + "/api_catalog.txt";
    RfeConfig rfe_cfg;
    std::size_t rfe_step = 0;
    rfe->add_option("--dataset", rfe_dataset, "Labeled dataset JSONL")->required()->check(CLI::ExistingFile);
    rfe->add_option("--catalog", rfe_catalog, "Catalog the dataset was built with")->check(CLI::ExistingFile);
    rfe->add_option("--k", rfe_cfg.target_k, "Features to keep");
    rfe->add_option("--step", rfe_step, "Features removed per round (default 5% of the remaining)");
    rfe->add_option("--seed", rfe_cfg.seed, "Random seed");
    rfe->add_option("--epochs", rfe_cfg.trainer_epochs, "Ranking trainer epochs per round");
    rfe->add_option("--out", rfe_out, "Selected catalog")->required();
    rfe->add_option("--dataset-out", rfe_dataset_out, "Dataset projected onto the selection");

    // train
    auto* tr = app.add_subcommand("train", "Train the classifier");
    std::string tr_dataset, tr_out;
    std::string tr_catalog = kDataDir + "/api_catalog.txt";
    TrainConfig tr_cfg;
    std::vector<std::size_t> tr_hidden = {kDefaultHidden1, kDefaultHidden2};
    double tr_threshold = kDefaultThreshold;
    bool tr_verbose = false;
    tr->add_option("--dataset", tr_dataset, "Labeled dataset JSONL")->required()->check(CLI::ExistingFile);
    tr->add_option("--catalog", tr_catalog, "Catalog matching the dataset")->check(CLI::ExistingFile);
    tr->add_option("--out", tr_out, "Model file")->required();
    tr->add_option("--lr", tr_cfg.learning_rate, "Learning rate");
    tr->add_option("--batch", tr_cfg.batch_size, "Batch size");
    tr->add_option("--epochs", tr_cfg.epochs, "Maximum epochs");
    tr->add_option("--seed", tr_cfg.seed, "Random seed");
    tr->add_option("--l2", tr_cfg.l2_penalty, "L2 penalty on weights");
    tr->add_option("--patience", tr_cfg.early_stop_patience, "Early stopping patience (0 disables)");
    tr->add_option("--validation-fraction", tr_cfg.validation_fraction, "Validation share per category");
    tr->add_option("--hidden", tr_hidden, "Hidden layer widths");
    tr->add_option("--threshold", tr_threshold, "Default gate threshold stored with the model");
    tr->add_flag("--verbose", tr_verbose, "Print one JSON line per epoch");

    // eval
    auto* ev = app.add_subcommand("eval", "Evaluate a model on a labeled dataset");
    std::string ev_model, ev_dataset;
    ev->add_option("--model", ev_model, "Model file")->required()->check(CLI::ExistingFile);
    ev->add_option("--dataset", ev_dataset, "Labeled dataset JSONL")->required()->check(CLI::ExistingFile);

    // classify
    auto* cl = app.add_subcommand("classify", "Classify one script");
    std::string cl_model, cl_file, cl_url, cl_entities;
    std::optional<double> cl_threshold;
    cl->add_option("--model", cl_model, "Model file")->required()->check(CLI::ExistingFile);
    cl->add_option("--file", cl_file, "Script file, - for stdin")->required();
    cl->add_option("--threshold", cl_threshold, "Gate threshold (default: the model's)");
    cl->add_option("--url", cl_url, "Script URL, for entity matching");
    cl->add_option("--entities", cl_entities, "Entity snapshot used with --url")->check(CLI::ExistingFile);

    // serve
    auto* sv = app.add_subcommand("serve", "Run the label service");
    std::string sv_listen = "127.0.0.1:8090", sv_store, sv_model, sv_pages, sv_entities;
    double sv_capacity_mb = 50;
    std::int64_t sv_period = 86400;
    bool sv_no_miss = false;
    std::optional<double> sv_threshold;
    sv->add_option("--listen", sv_listen, "host:port");
    sv->add_option("--store", sv_store, "Label store log")->required();
    sv->add_option("--model", sv_model, "Model file")->required()->check(CLI::ExistingFile);
    sv->add_option("--pages", sv_pages, "Page list to refresh from")->check(CLI::ExistingFile);
    sv->add_option("--entities", sv_entities, "Entity snapshot")->check(CLI::ExistingFile);
    sv->add_option("--refresh-period", sv_period, "Seconds between refreshes")->check(CLI::PositiveNumber);
    sv->add_option("--capacity-mb", sv_capacity_mb, "Store capacity in MiB")->check(CLI::PositiveNumber);
    sv->add_option("--threshold", sv_threshold, "Gate threshold (default: the model's)");
    sv->add_flag("--no-miss-classification", sv_no_miss, "Reject /v1/classify for unknown scripts");

    // proxy
    auto* px = app.add_subcommand("proxy", "Run the blocking proxy");
    std::string px_listen = "127.0.0.1:8080", px_store, px_policy, px_ca, px_admin, px_sync;
    double px_capacity_mb = 50;
    std::int64_t px_sync_period = 3600;
    bool px_insecure = false;
    px->add_option("--listen", px_listen, "host:port");
    px->add_option("--store", px_store, "Label store log or snapshot");
    px->add_option("--policy", px_policy, "Policy JSON")->check(CLI::ExistingFile);
    px->add_option("--mitm-ca", px_ca, "PEM with CA certificate and key; enables TLS interception")
        ->check(CLI::ExistingFile);
    px->add_option("--admin-listen", px_admin, "host:port for GET /telemetry");
    px->add_option("--sync", px_sync, "Label service base URL to pull labels from");
    px->add_option("--sync-period", px_sync_period, "Seconds between pulls")->check(CLI::PositiveNumber);
    px->add_option("--capacity-mb", px_capacity_mb, "Store capacity in MiB")->check(CLI::PositiveNumber);
    px->add_flag("--insecure-upstream", px_insecure, "Skip upstream certificate checks when intercepting");

    // bench
    auto* bn = app.add_subcommand("bench", "Compare direct and proxied page fetches");
    std::string bn_page, bn_proxy;
    bn->add_option("--page", bn_page, "Page URL")->required();
    bn->add_option("--proxy", bn_proxy, "Proxy host:port")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        spdlog::set_level(spdlog::level::from_str(log_level));

        if (*fx) {
            if (fx_files.empty() == fx_corpus.empty()) throw Error("give either --file or --corpus");
            const auto vocab = load_api_catalog(fx_catalog);
            std::vector<FeatureRow> rows;
            if (!fx_corpus.empty()) {
                rows = unlabeled_rows(load_corpus_dir(fx_corpus), vocab);
            } else {
                for (const auto& f : fx_files) rows.push_back({f, std::nullopt, extract_features(read_file(f), vocab)});
            }
            emit_rows(fx_out, rows, out);
            return 0;
        }

        if (*db) {
            if (db_corpus.empty() == db_pages.empty()) throw Error("give either --corpus or --pages");
            const auto vocab = load_api_catalog(db_catalog);
            const auto repo = load_entities(db_entities);
            std::vector<ScriptRecord> records;
            std::size_t crawl_failures = 0;
            if (!db_corpus.empty()) {
                records = load_corpus_dir(db_corpus);
            } else {
                HttpFetcher fetcher;
                const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                                     std::chrono::system_clock::now().time_since_epoch())
                                     .count();
                auto crawl = crawl_pages(load_page_list(db_pages), fetcher, now);
                for (const auto& f : crawl.failures) spdlog::warn("crawl: {}", f);
                crawl_failures = crawl.failures.size();
                records = std::move(crawl.scripts);
                if (!db_corpus_out.empty()) write_corpus_dir(db_corpus_out, records);
            }
            const auto build = build_dataset(records, repo, vocab);
            write_rows(db_out, dataset_to_rows(build.dataset));
            if (!db_unlabeled.empty()) write_rows(db_unlabeled, unlabeled_rows(build.unlabeled, vocab));
            nlohmann::ordered_json j;
            j["rows"] = build.dataset.size();
            j["unlabeled"] = build.unlabeled.size();
            j["duplicates_dropped"] = build.duplicates_dropped;
            j["crawl_failures"] = crawl_failures;
            j["vocab_version"] = vocab.version();
            j["per_category"] = counts_json(build.per_category);
            out << j.dump() << "\n";
            return 0;
        }

        if (*rfe) {
            const auto vocab = load_api_catalog(rfe_catalog);
            const auto ds = dataset_from_rows(read_rows(rfe_dataset));
            if (rfe_step > 0) rfe_cfg.step = rfe_step;
            const auto res = rfe_select(ds, vocab, rfe_cfg);
            save_api_catalog(res.vocabulary, rfe_out);
            if (!rfe_dataset_out.empty()) write_rows(rfe_dataset_out, dataset_to_rows(project_dataset(ds, vocab, res.vocabulary)));
            nlohmann::ordered_json j;
            j["selected"] = res.vocabulary.size();
            j["eliminated"] = res.elimination_order.size();
            j["vocab_version"] = res.vocabulary.version();
            out << j.dump() << "\n";
            return 0;
        }

        if (*tr) {
            const auto vocab = load_api_catalog(tr_catalog);
            const auto ds = dataset_from_rows(read_rows(tr_dataset));
            if (ds.vocab_version != vocab.version()) {
                throw Error("dataset vocabulary " + ds.vocab_version + " does not match catalog " + vocab.version());
            }
            if (!(tr_threshold >= 0.0 && tr_threshold < 1.0)) throw Error("threshold must lie in [0, 1)");
            auto model = init_model(vocab.size(), tr_cfg.seed, tr_hidden);
            model.vocab_version = vocab.version();
            model.vocabulary = vocab.names();
            model.threshold_default = tr_threshold;
            EpochCallback cb;
            if (tr_verbose) {
                cb = [&out](const EpochStats& s) {
                    nlohmann::ordered_json j;
                    j["epoch"] = s.epoch;
                    j["train_loss"] = s.train_loss;
                    j["validation_loss"] = s.validation_loss ? nlohmann::ordered_json(*s.validation_loss) : nlohmann::ordered_json();
                    out << j.dump() << "\n";
                };
            }
            const auto res = train(std::move(model), ds, tr_cfg, cb);
            save_model(res.model, tr_out);
            nlohmann::ordered_json j;
            j["epochs_run"] = res.history.empty() ? 0 : res.history.back().epoch;
            j["best_epoch"] = res.best_epoch;
            j["final_train_loss"] = res.history.empty() ? 0.0 : res.history.back().train_loss;
            j["train_accuracy"] = evaluate(res.model, ds).accuracy;
            out << j.dump() << "\n";
            return 0;
        }

        if (*ev) {
            const auto model = load_model(ev_model);
            auto ds = dataset_from_rows(read_rows(ev_dataset));
            if (ds.vocab_version != model.vocab_version) {
                if (model.vocabulary.empty()) throw Error("dataset vocabulary does not match the model");
                // Rows built against the full catalog: re-express them by name.
                const auto full = load_api_catalog(kDataDir + "/api_catalog.txt");
                if (full.version() != ds.vocab_version) throw Error("dataset vocabulary does not match the model");
                ds = project_dataset(ds, full, Vocabulary(model.vocabulary, model.vocab_version));
            }
            out << eval_report_to_json(evaluate(model, ds)) << "\n";
            return 0;
        }

        if (*cl) {
            const auto model = load_model(cl_model);
            if (model.vocabulary.empty()) throw Error("model has no embedded vocabulary");
            const Vocabulary vocab(model.vocabulary, model.vocab_version);
            std::string source;
            if (cl_file == "-") {
                std::ostringstream ss;
                ss << std::cin.rdbuf();
                source = ss.str();
            } else {
                source = read_file(cl_file);
            }
            ClassificationResult r;
            std::optional<EntityMatch> match;
            if (!cl_url.empty() && !cl_entities.empty()) match = match_entity(cl_url, load_entities(cl_entities));
            if (match) {
                r.category = match->category;
                r.confidence = 1.0;
            } else {
                r = assign_category(model, extract_features(source, vocab),
                                    cl_threshold.value_or(model.threshold_default));
            }
            nlohmann::ordered_json j;
            j["category"] = to_string(r.category);
            j["confidence"] = r.confidence;
            out << j.dump() << "\n";
            return 0;
        }

        if (*sv) {
            const auto [host, port] = parse_host_port(sv_listen);
            auto store = open_store(sv_store, sv_capacity_mb);
            std::shared_ptr<const EntityRepository> repo;
            if (!sv_entities.empty()) repo = std::make_shared<EntityRepository>(load_entities(sv_entities));
            ServiceOptions opts;
            opts.threshold = sv_threshold;
            opts.allow_miss_classification = !sv_no_miss;
            const auto signals = block_shutdown_signals();
            LabelService service(store, load_model(sv_model), std::make_shared<HttpFetcher>(), repo, opts);
            service.start(host, port);
            if (!sv_pages.empty()) {
                service.start_periodic_refresh([p = sv_pages] { return load_page_list(p); },
                                               std::chrono::seconds(sv_period));
            }
            nlohmann::ordered_json j;
            j["listening"] = host + ":" + std::to_string(service.port());
            j["model_version"] = service.model_version();
            j["store_entries"] = store->size();
            out << j.dump() << std::endl;
            wait_for_shutdown(signals);
            service.stop();
            return 0;
        }

        if (*px) {
            ProxyConfig cfg;
            std::tie(cfg.listen_host, cfg.listen_port) = parse_host_port(px_listen);
            auto store = open_store(px_store, px_capacity_mb);
            cfg.store = store;
            cfg.policy = px_policy.empty() ? Policy::defaults() : load_policy(px_policy);
            if (!px_ca.empty()) cfg.mitm_ca = std::make_shared<CertificateAuthority>(CertificateAuthority::load(px_ca));
            if (!px_admin.empty()) cfg.admin_listen = parse_host_port(px_admin);
            cfg.verify_upstream_tls = !px_insecure;

            const auto signals = block_shutdown_signals();
            ProxyServer server(cfg);
            server.start();

            std::mutex sync_mu;
            std::condition_variable sync_cv;
            bool stopping = false;
            std::thread syncer;
            if (!px_sync.empty()) {
                std::string base = px_sync;
                while (!base.empty() && base.back() == '/') base.pop_back();
                syncer = std::thread([&, base] {
                    HttpFetcher fetcher;
                    std::int64_t since = 0;
                    for (;;) {
                        const auto res = fetcher.fetch(base + "/v1/labels?since=" + std::to_string(since));
                        if (res.ok()) {
                            const auto imported = store->import_jsonl_text(res.body);
                            for (const auto& e : store->snapshot_since(since)) since = std::max(since, e.labeled_at);
                            spdlog::info("sync: {} labels imported", imported.imported);
                        } else {
                            spdlog::warn("sync failed: {}", res.error.empty() ? std::to_string(res.status) : res.error);
                        }
                        std::unique_lock lock(sync_mu);
                        if (sync_cv.wait_for(lock, std::chrono::seconds(px_sync_period), [&] { return stopping; })) return;
                    }
                });
            }

            nlohmann::ordered_json j;
            j["listening"] = cfg.listen_host + ":" + std::to_string(server.port());
            if (server.admin_port()) j["admin"] = cfg.admin_listen->first + ":" + std::to_string(*server.admin_port());
            j["store_entries"] = store->size();
            j["mitm"] = cfg.mitm_ca != nullptr;
            out << j.dump() << std::endl;
            wait_for_shutdown(signals);
            {
                std::lock_guard lock(sync_mu);
                stopping = true;
            }
            sync_cv.notify_all();
            if (syncer.joinable()) syncer.join();
            server.stop();
            out << telemetry_to_json(server.telemetry_snapshot()) << "\n";
            return 0;
        }

        if (*bn) {
            out << bench_report_to_json(bench(bn_page, parse_host_port(bn_proxy))) << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        err << nlohmann::json{{"error", e.what()}}.dump() << "\n";
        return 1;
    }
    err << app.help();
    return 2;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace jslight
