// fslsim: scenario runner, verification suites, and ledger report tool.
#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <random>
#include <unordered_set>
#include <sstream>

#include "fslsim/actors.hpp"
#include "fslsim/config.hpp"

using namespace fslsim;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "fslsim 1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitProtocol = 1;
constexpr int kExitConfig = 2;
constexpr int kExitVerify = 3;

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string store_dir(const std::string& flag_value, const fs::path& out_dir) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("FSLSIM_STORE_DIR"); env && *env)
        return env;
    return (out_dir / "store").string();
}

// ---------------------------------------------------------------------------
// run

int cmd_run(const std::string& config_path, const std::string& out,
            const std::string& store_flag,
            const std::vector<std::string>& overrides) {
    ScenarioConfig cfg;
    try {
        ConfigMap kv = parse_config_file(config_path);
        for (const auto& o : overrides) {
            size_t eq = o.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("--set expects section.key=value");
            kv[o.substr(0, eq)] = o.substr(eq + 1);
        }
        cfg = scenario_from_config(kv);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        fs::path out_dir = out;
        fs::create_directories(out_dir);
        BlobStore store(store_dir(store_flag, out_dir));

        std::ostringstream manifest;
        manifest << "# run manifest\n"
                 << "version = " << kVersion << "\n"
                 << "seed = " << cfg.train.seed << "\n"
                 << "run_id = run-seed" << cfg.train.seed << "\n"
                 << "metrics = " << (out_dir / "metrics.csv").string() << "\n"
                 << "ledger = " << (out_dir / "ledger.export").string() << "\n"
                 << "ledger_metrics = "
                 << (out_dir / "ledger_metrics.csv").string() << "\n"
                 << "store = " << store_dir(store_flag, out_dir) << "\n\n"
                 << scenario_to_text(cfg);
        write_file(out_dir / "manifest.txt", manifest.str());

        Simulation sim(cfg, store);
        RunResult result = sim.run_training();

        write_file(out_dir / "metrics.csv", result.metrics_csv);
        write_file(out_dir / "ledger.export", sim.ledger().export_records());
        write_file(out_dir / "ledger_metrics.csv",
                   sim.ledger().export_metrics_csv());

        std::ostringstream summary;
        summary << "final_round = " << result.final_model.round_id << "\n"
                << "final_global_cid = " << result.final_model.global_hash.text
                << "\n";
        if (!result.epochs.empty()) {
            summary << "final_accuracy = " << result.epochs.back().accuracy << "\n"
                    << "final_loss = " << result.epochs.back().loss << "\n";
        }
        write_file(out_dir / "result.txt", summary.str());
        std::cout << summary.str();
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "protocol failure: " << e.what() << "\n";
        return kExitProtocol;
    }
}

// ---------------------------------------------------------------------------
// verify suites

struct VerifyReport {
    bool ok = true;
    std::ostringstream out;

    void check(bool pass, const std::string& what,
               const std::string& detail = "") {
        out << (pass ? "PASS" : "FAIL") << "  " << what;
        if (!detail.empty()) out << "  (" << detail << ")";
        out << "\n";
        ok = ok && pass;
    }
};

// Full-network monolithic step used as the split-training oracle.
struct MonolithicGrad {
    double loss;
    ParamVector fc;
    ParamVector fs;
};

MonolithicGrad monolithic_gradients(const SplitModel& model,
                                    const ParamVector& fc, const ParamVector& fs,
                                    const Matrix& x, const std::vector<int>& y) {
    Matrix act = forward_client(model, fc, x);
    auto [loss, probs] = forward_server(model, fs, act, y);
    auto [grad_fs, grad_act] = backward_server(model, fs, act, y);
    ParamVector grad_fc = backward_client(model, fc, x, grad_act);
    return {loss, std::move(grad_fc), std::move(grad_fs)};
}

int verify_gradients(VerifyReport& rep) {
    // central finite differences on a 2 -> 4 -> 3 network
    auto built = build_mlp({2, 4, 3}, 1, 7);
    const SplitModel& model = built.model;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix x(5, 2);
    for (double& v : x.data) v = dist(rng);
    std::vector<int> y = {0, 1, 2, 0, 1};

    auto loss_at = [&](const ParamVector& fc, const ParamVector& fs) {
        Matrix act = forward_client(model, fc, x);
        return forward_server(model, fs, act, y).first;
    };

    auto g = monolithic_gradients(model, built.fc_params, built.fs_params, x, y);
    const double h = 1e-5;
    double max_rel = 0.0;
    auto sweep = [&](ParamVector& params, const ParamVector& analytic,
                     bool is_fc) {
        for (size_t i = 0; i < params.values.size(); ++i) {
            double keep = params.values[i];
            params.values[i] = keep + h;
            double up = is_fc ? loss_at(params, built.fs_params)
                              : loss_at(built.fc_params, params);
            params.values[i] = keep - h;
            double down = is_fc ? loss_at(params, built.fs_params)
                                : loss_at(built.fc_params, params);
            params.values[i] = keep;
            double fd = (up - down) / (2 * h);
            double denom = std::max({std::fabs(fd), std::fabs(analytic.values[i]),
                                     1e-8});
            max_rel = std::max(max_rel,
                               std::fabs(fd - analytic.values[i]) / denom);
        }
    };
    sweep(built.fc_params, g.fc, true);
    sweep(built.fs_params, g.fs, false);

    std::ostringstream d;
    d << "max rel. err " << max_rel;
    rep.check(max_rel < 1e-4, "finite differences agree with backprop", d.str());
    return rep.ok ? kExitOk : kExitVerify;
}

int verify_equivalence(VerifyReport& rep) {
    // split forward/backward equals the same network evaluated in one piece
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> dist(-1.5, 1.5);
    double max_diff = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        auto split = build_model("tiny-mlp", 100 + trial);
        auto mono = build_mlp({2, 16, 16, 3}, 0, 100 + trial);  // all server side

        Matrix x(8, 2);
        for (double& v : x.data) v = dist(rng);
        std::vector<int> y(8);
        for (int& l : y) l = int(rng() % 3);

        auto gs = monolithic_gradients(split.model, split.fc_params,
                                       split.fs_params, x, y);
        // same seed => mono.fs_params is the concatenation of split fc|fs
        auto [loss_m, probs_m] = forward_server(mono.model, mono.fs_params, x, y);
        auto [grad_m, ga] = backward_server(mono.model, mono.fs_params, x, y);
        (void)probs_m;
        (void)ga;

        max_diff = std::max(max_diff, std::fabs(gs.loss - loss_m));
        for (size_t i = 0; i < gs.fc.values.size(); ++i)
            max_diff = std::max(max_diff,
                                std::fabs(gs.fc.values[i] - grad_m.values[i]));
        size_t off = gs.fc.values.size();
        for (size_t i = 0; i < gs.fs.values.size(); ++i)
            max_diff = std::max(
                max_diff, std::fabs(gs.fs.values[i] - grad_m.values[off + i]));
    }
    std::ostringstream d;
    d << "max abs diff " << max_diff << " over 100 draws";
    rep.check(max_diff < 1e-9, "split == monolithic loss and gradients", d.str());
    return rep.ok ? kExitOk : kExitVerify;
}

// Drives the contract with c identical submissions out of P members.
bool consensus_commits(size_t participants, size_t identical) {
    BlobStore store;
    NetworkConfig net;
    for (size_t i = 1; i <= participants; ++i)
        net.client_msps.push_back({"Client" + std::to_string(i) + "MSP"});
    net.server_msp = {"ServerMSP"};
    net.admin_msp = {"AdminMSP"};
    auto ledger = bootstrap_network(net, store);
    Identity admin{net.admin_msp, "admin", Role::Admin};

    auto submit = [&](const Identity& who, const std::string& fn,
                      std::vector<std::string> args,
                      std::map<std::string, Bytes> transient = {},
                      std::set<MspId> endorsements = {}) {
        TransactionProposal p;
        p.submitter = who;
        p.function = fn;
        for (auto& a : args) p.args.push_back(to_bytes(a));
        p.transient = std::move(transient);
        p.endorsements = std::move(endorsements);
        auto rec = ledger->submit_transaction(p);
        if (rec.status != TxStatus::Committed)
            throw std::runtime_error(fn + " rejected: " + rec.error);
    };

    Bytes genesis = to_bytes("genesis-params");
    Cid genesis_cid = store.put(genesis);
    submit(admin, "setGenesisModel", {genesis_cid.text});

    std::vector<Identity> clients;
    for (size_t i = 1; i <= participants; ++i) {
        Identity id{net.client_msps[i - 1], "client" + std::to_string(i),
                    Role::Client};
        submit(id, "registerClient", {id.actor_id, "100"});
        clients.push_back(id);
    }

    const std::string agg = "agg-1";
    for (size_t i = 0; i < participants; ++i) {
        Bytes blob = to_bytes("update-" + clients[i].actor_id);
        Cid cid = store.put(blob);
        submit(clients[i], "submitClientModelHash",
               {"1", agg, cid.text, ""}, {{"data", blob}});
    }
    submit(admin, "triggerClientAggregation", {agg});

    Bytes agreed = to_bytes("agreed-global");
    Cid agreed_cid = store.put(agreed);
    for (size_t i = 0; i < identical; ++i)
        submit(clients[i], "commitGlobalModelHash", {agg, "1", agreed_cid.text});
    // every peer endorses the close-out: they all execute the same tally
    std::set<MspId> endorsers(net.client_msps.begin(), net.client_msps.end());
    submit(admin, "endGlobalModel", {agg, "1"}, {}, endorsers);

    auto task = get_aggregation_task(*ledger, agg);
    bool committed = task && task->status == AggStatus::Committed;
    auto current = get_current_global_model(*ledger);
    if (committed && current.global_hash != agreed_cid)
        throw std::runtime_error("committed but wrong global hash");
    if (!committed && current.global_hash != genesis_cid)
        throw std::runtime_error("failed cycle must keep the prior global");
    return committed;
}

int verify_consensus(VerifyReport& rep) {
    size_t mismatches = 0;
    std::ostringstream detail;
    for (size_t p = 1; p <= 15; ++p) {
        for (size_t c = 0; c <= p; ++c) {
            bool got = consensus_commits(p, c);
            bool want = 3 * c > 2 * p;  // strictly more than two-thirds
            if (got != want) {
                ++mismatches;
                detail << " P=" << p << ",c=" << c << " got "
                       << (got ? "commit" : "fail");
            }
        }
    }
    rep.check(mismatches == 0, "consensus predicate matches brute force",
              mismatches ? detail.str() : "P in [1,15], all c");
    return rep.ok ? kExitOk : kExitVerify;
}

size_t count_leaks(const std::string& exported,
                   const std::vector<Bytes>& blobs) {
    // Scan both the export text and the decoded records for any 9-byte
    // window of a sensitive blob. Window hashes index the haystack so the
    // scan stays linear.
    std::string haystack = exported;
    std::istringstream in(exported);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) {
            Bytes raw = base64_decode(line);
            haystack.append(raw.begin(), raw.end());
        }

    auto window_hash = [](const char* p) {
        uint64_t h = 1469598103934665603ull;
        for (int i = 0; i < 9; ++i)
            h = (h ^ uint8_t(p[i])) * 1099511628211ull;
        return h;
    };
    std::unordered_set<uint64_t> index;
    index.reserve(haystack.size());
    for (size_t off = 0; off + 9 <= haystack.size(); ++off)
        index.insert(window_hash(haystack.data() + off));

    // Only distinctive windows count: runs of zeros / length prefixes occur
    // in any length-prefixed encoding and would flag structurally, not
    // because payload bytes leaked.
    auto distinctive = [](const char* p) {
        std::set<char> uniq(p, p + 9);
        return uniq.size() >= 5;
    };

    size_t leaks = 0;
    for (const auto& blob : blobs) {
        if (blob.size() < 9) continue;
        bool leaked = false;
        for (size_t off = 0; off + 9 <= blob.size() && !leaked; ++off) {
            const char* p = reinterpret_cast<const char*>(blob.data()) + off;
            if (!distinctive(p) || !index.count(window_hash(p))) continue;
            // hash hit: confirm before flagging
            if (haystack.find(std::string_view(p, 9)) != std::string::npos)
                leaked = true;
        }
        if (leaked) ++leaks;
    }
    return leaks;
}

int verify_privacy(VerifyReport& rep) {
    BlobStore store;
    ScenarioConfig cfg;
    cfg.n_clients = 10;
    cfg.train.epochs = 2;
    Simulation sim(cfg, store);
    sim.run_training();

    std::string exported = sim.ledger().export_records();
    size_t leaks = count_leaks(exported, sim.sensitive_blobs());
    std::ostringstream d;
    d << sim.sensitive_blobs().size() << " blobs scanned, " << leaks << " leaks";
    rep.check(leaks == 0, "no activation/gradient/parameter bytes on the ledger",
              d.str());

    size_t bad_pdc = 0;
    for (const auto& [collection, entries] : sim.ledger().pdc_contents())
        for (const auto& [key, value] : entries)
            if (!Cid::valid(fslsim::to_string(value.first))) ++bad_pdc;
    rep.check(bad_pdc == 0, "private collections hold only 46-char CIDs");
    return rep.ok ? kExitOk : kExitVerify;
}

int cmd_verify(const std::string& suite) {
    VerifyReport rep;
    int rc;
    try {
        if (suite == "gradients") rc = verify_gradients(rep);
        else if (suite == "equivalence") rc = verify_equivalence(rep);
        else if (suite == "consensus") rc = verify_consensus(rep);
        else if (suite == "privacy") rc = verify_privacy(rep);
        else {
            std::cerr << "unknown suite: " << suite
                      << " (expected privacy|consensus|gradients|equivalence)\n";
            return kExitConfig;
        }
    } catch (const std::exception& e) {
        std::cerr << "verification error: " << e.what() << "\n";
        return kExitVerify;
    }
    std::cout << rep.out.str();
    return rc;
}

// ---------------------------------------------------------------------------
// report: recomputed purely from the exported ledger file

int cmd_report(const std::string& run_dir) {
    fs::path dir = run_dir;
    fs::path ledger_path = dir / "ledger.export";
    if (!fs::exists(ledger_path)) {
        std::cerr << "missing artifact: " << ledger_path.string() << "\n";
        return kExitConfig;
    }

    uint64_t height = 0, committed = 0, rejected = 0;
    uint64_t ledger_bytes = 0, reference_bytes = 0;
    std::map<std::string, uint64_t> events_by_type;

    std::istringstream in(read_file(ledger_path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        Bytes raw = base64_decode(line);
        TransactionRecord rec = TransactionRecord::deserialize(raw);
        if (rec.status == TxStatus::Committed) {
            ++committed;
            height = std::max(height, rec.height);
            ledger_bytes += raw.size();
            for (const auto& ev : rec.events) {
                events_by_type[ev.name]++;
                if (ev.name == "IntermediateDataAdded" ||
                    ev.name == "GradientAdded")
                    reference_bytes += Cid::kLength;
            }
        } else {
            ++rejected;
        }
    }

    std::cout << "ledger height: " << height << "\n"
              << "committed transactions: " << committed << "\n"
              << "rejected transactions: " << rejected << "\n"
              << "ledger bytes: " << ledger_bytes << "\n"
              << "events by type:\n";
    for (const auto& [name, count] : events_by_type)
        std::cout << "  " << name << ": " << count << "\n";
    uint64_t per_type = events_by_type["IntermediateDataAdded"];
    std::cout << "reference bytes (explicit count, 46 per activation/gradient "
                 "event): "
              << reference_bytes << "\n"
              << "reference bytes (doubled event-count variant, 2 x 2 x "
              << per_type << " x 46): " << 4 * per_type * 46 << "\n";

    fs::path metrics_path = dir / "metrics.csv";
    if (fs::exists(metrics_path)) {
        std::istringstream m(read_file(metrics_path));
        std::string row, last;
        std::getline(m, row);  // header
        size_t rows = 0;
        while (std::getline(m, row))
            if (!row.empty()) {
                last = row;
                ++rows;
            }
        std::cout << "accuracy curve: " << rows << " epochs";
        if (!last.empty()) {
            // columns 3 and 4 are accuracy and loss
            std::istringstream cells(last);
            std::string cell;
            std::vector<std::string> cols;
            while (std::getline(cells, cell, ',')) cols.push_back(cell);
            if (cols.size() > 3)
                std::cout << ", final acc " << cols[2] << ", final loss "
                          << cols[3];
        }
        std::cout << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// partition histograms

int cmd_partition(const std::string& config_path,
                  const std::vector<std::string>& overrides) {
    ScenarioConfig cfg;
    try {
        ConfigMap kv = parse_config_file(config_path);
        for (const auto& o : overrides) {
            size_t eq = o.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("--set expects section.key=value");
            kv[o.substr(0, eq)] = o.substr(eq + 1);
        }
        cfg = scenario_from_config(kv);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        Dataset data =
            cfg.data_source == "mnist"
                ? load_idx(cfg.mnist_dir + "/train-images-idx3-ubyte",
                           cfg.mnist_dir + "/train-labels-idx1-ubyte")
                : make_synthetic(cfg.classes, cfg.dim, cfg.n_train,
                                 cfg.train.seed * 2 + 1);
        DatasetPartition part =
            cfg.partition == PartitionMode::Iid
                ? partition_iid(data, cfg.n_clients, cfg.train.seed)
                : partition_dirichlet(data, cfg.n_clients, cfg.alpha,
                                      cfg.train.seed);
        int num_classes = 0;
        for (int l : data.labels) num_classes = std::max(num_classes, l + 1);

        std::cout << "client,class,count\n";
        for (const auto& [client, indices] : part) {
            std::vector<uint64_t> hist(num_classes, 0);
            for (size_t i : indices) hist[data.labels[i]]++;
            for (int c = 0; c < num_classes; ++c)
                std::cout << client << "," << c << "," << hist[c] << "\n";
        }
        return kExitOk;
    } catch (const std::exception& e) {
        std::cerr << "partition failure: " << e.what() << "\n";
        return kExitProtocol;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fslsim: ledger-backed federated split learning simulator"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", store_flag, suite, run_dir;
    std::vector<std::string> overrides;

    auto* run = app.add_subcommand("run", "execute a training scenario");
    run->add_option("config", config_path, "scenario config file")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--store", store_flag,
                    "off-chain store directory (default $FSLSIM_STORE_DIR)");
    run->add_option("--set", overrides,
                    "override a config value, section.key=value");

    auto* verify = app.add_subcommand("verify", "run a verification suite");
    verify->add_option("suite", suite,
                       "privacy | consensus | gradients | equivalence")
        ->required();

    auto* report = app.add_subcommand("report", "summarize a completed run");
    report->add_option("run_dir", run_dir, "run output directory")->required();

    auto* partition =
        app.add_subcommand("partition", "emit partition histogram CSV");
    partition->add_option("config", config_path, "scenario config file")
        ->required();
    partition->add_option("--set", overrides,
                          "override a config value, section.key=value");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    if (run->parsed()) return cmd_run(config_path, out_dir, store_flag, overrides);
    if (verify->parsed()) return cmd_verify(suite);
    if (report->parsed()) return cmd_report(run_dir);
    if (partition->parsed()) return cmd_partition(config_path, overrides);
    return kExitConfig;
}
