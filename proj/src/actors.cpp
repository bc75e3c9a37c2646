#include "fslsim/actors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace fslsim {

namespace {

Bytes encode_activation_blob(const Matrix& z, const std::vector<int>& labels) {
    ByteWriter w;
    w.bytes(serialize_matrix(z));
    w.u64(labels.size());
    for (int l : labels) w.u64(uint64_t(l));
    return w.take();
}

std::pair<Matrix, std::vector<int>> decode_activation_blob(const Bytes& blob) {
    ByteReader r(blob);
    Matrix z = deserialize_matrix(r.bytes());
    std::vector<int> labels(r.u64());
    for (int& l : labels) l = int(r.u64());
    return {std::move(z), std::move(labels)};
}

double now_seconds() {
    auto t = std::chrono::steady_clock::now().time_since_epoch();
    return std::chrono::duration<double>(t).count();
}

}  // namespace

std::string metrics_csv_header() {
    return "epoch,round,global_acc,global_loss,client_fc_fwd_s,client_fc_bwd_s,"
           "server_batch_s,agg_compute_s,events_intermediate,events_gradient,"
           "ledger_bytes,reference_bytes";
}

Simulation::Simulation(ScenarioConfig config, BlobStore& store)
    : cfg_(std::move(config)), store_(store) {
    if (cfg_.n_clients < 1) throw std::invalid_argument("need at least one client");
    bootstrap();
}

void Simulation::bootstrap() {
    if (cfg_.data_source == "synthetic") {
        train_ = make_synthetic(cfg_.classes, cfg_.dim, cfg_.n_train,
                                cfg_.train.seed * 2 + 1);
        test_ = make_synthetic(cfg_.classes, cfg_.dim, cfg_.n_test,
                               cfg_.train.seed * 2 + 2);
    } else if (cfg_.data_source == "mnist") {
        train_ = load_idx(cfg_.mnist_dir + "/train-images-idx3-ubyte",
                          cfg_.mnist_dir + "/train-labels-idx1-ubyte");
        test_ = load_idx(cfg_.mnist_dir + "/t10k-images-idx3-ubyte",
                         cfg_.mnist_dir + "/t10k-labels-idx1-ubyte");
    } else {
        throw std::invalid_argument("unknown data source: " + cfg_.data_source);
    }

    if (cfg_.partition == PartitionMode::Iid)
        partition_ = partition_iid(train_, cfg_.n_clients, cfg_.train.seed);
    else
        partition_ = partition_dirichlet(train_, cfg_.n_clients, cfg_.alpha,
                                         cfg_.train.seed);

    model_ = build_model(cfg_.model_spec, cfg_.train.seed);
    fs_params_ = model_.fs_params;

    NetworkConfig net;
    for (size_t i = 1; i <= cfg_.n_clients; ++i)
        net.client_msps.push_back({"Client" + std::to_string(i) + "MSP"});
    net.server_msp = {"ServerMSP"};
    net.admin_msp = {"AdminMSP"};
    net.consensus_endorsement_threshold = cfg_.consensus_threshold_override;
    ledger_ = bootstrap_network(net, store_);
    client_msps_ = {net.client_msps.begin(), net.client_msps.end()};

    server_id_ = {net.server_msp, "server1", Role::ServerEntity};
    admin_id_ = {net.admin_msp, "admin", Role::Admin};

    auto submit = [&](const Identity& who, const std::string& fn,
                      std::vector<std::string> args,
                      std::map<std::string, Bytes> transient = {}) {
        TransactionProposal p;
        p.submitter = who;
        p.function = fn;
        for (auto& a : args) p.args.push_back(to_bytes(a));
        p.transient = std::move(transient);
        auto rec = ledger_->submit_transaction(p);
        if (rec.status != TxStatus::Committed)
            throw std::runtime_error("bootstrap tx rejected: " + rec.error);
    };

    submit(server_id_, "registerServer", {"server1", "fs-host"});

    auto ids = client_ids(cfg_.n_clients);
    for (size_t i = 0; i < cfg_.n_clients; ++i) {
        ClientActor c;
        c.identity = {net.client_msps[i], ids[i], Role::Client};
        c.id = ids[i];
        c.shard = train_.subset(partition_.at(ids[i]));
        c.order.resize(c.shard.size());
        std::iota(c.order.begin(), c.order.end(), 0);
        c.fc = model_.fc_params;
        submit(c.identity, "registerClient",
               {c.id, std::to_string(c.shard.size())});
        clients_.push_back(std::move(c));
    }

    // Model publication: architecture descriptors off-chain, hashes on-chain.
    Cid fc_spec = store_.put(to_bytes("spec:" + cfg_.model_spec + ":fc"));
    Cid fs_spec = store_.put(to_bytes("spec:" + cfg_.model_spec + ":fs"));
    submit(clients_[0].identity, "publishModel",
           {cfg_.model_spec, fc_spec.text, fs_spec.text,
            "layer" + std::to_string(model_.model.split_index)});

    // Genesis global model: the initial f_c parameters, round 0.
    Bytes genesis = serialize_params(model_.fc_params);
    Cid genesis_cid = push_blob(genesis, /*sensitive=*/true);
    submit(admin_id_, "setGenesisModel", {genesis_cid.text});

    server_events_ = ledger_->subscribe("IntermediateDataAdded", server_id_);
    for (auto& c : clients_) {
        c.grad_events = ledger_->subscribe("GradientAdded", c.identity);
        c.agg_events = ledger_->subscribe("AggregationTaskStart", c.identity);
    }
}

Cid Simulation::push_blob(const Bytes& blob, bool sensitive) {
    Cid cid = store_.put(blob);
    if (sensitive) {
        static std::mutex mu;
        std::lock_guard lock(mu);
        sensitive_.push_back(blob);
    }
    return cid;
}

TransactionProposal Simulation::make_submission(const Identity& who,
                                                const std::string& function,
                                                std::vector<Bytes> args,
                                                const Bytes& blob,
                                                const Cid& cid) const {
    TransactionProposal p;
    p.submitter = who;
    p.function = function;
    p.args = std::move(args);
    if (blob.size() <= cfg_.transient_max_bytes)
        p.transient["data"] = blob;
    else
        p.transient["cid"] = to_bytes(cid.text);
    return p;
}

size_t Simulation::rounds_per_epoch() const {
    size_t r = 0;
    for (const auto& c : clients_) {
        if (c.dropped) continue;
        r = std::max(r, (c.shard.size() + cfg_.train.batch - 1) / cfg_.train.batch);
    }
    return r;
}

void Simulation::start_epoch(size_t epoch) {
    current_epoch_ = epoch;
    for (size_t i = 0; i < clients_.size(); ++i) {
        auto& c = clients_[i];
        c.order.resize(c.shard.size());
        std::iota(c.order.begin(), c.order.end(), 0);
        std::seed_seq seq{cfg_.train.seed, uint64_t(epoch), uint64_t(i)};
        std::mt19937_64 rng(seq);
        std::shuffle(c.order.begin(), c.order.end(), rng);
        c.cursor = 0;
        c.awaiting_gradient = false;
    }
}

void Simulation::client_step(ClientActor& c, uint64_t t, RoundTrace& trace) {
    if (c.dropped || c.cursor >= c.shard.size()) return;
    size_t count = std::min(cfg_.train.batch, c.shard.size() - c.cursor);

    Matrix x(count, c.shard.features.cols);
    std::vector<int> y(count);
    for (size_t r = 0; r < count; ++r) {
        size_t src = c.order[c.cursor + r];
        for (size_t col = 0; col < x.cols; ++col)
            x.at(r, col) = c.shard.features.at(src, col);
        y[r] = c.shard.labels[src];
    }
    c.cursor += count;

    bool det = cfg_.scheduler == SchedulerMode::Deterministic;
    double t0 = det ? 0.0 : now_seconds();
    Matrix z = forward_client(model_.model, c.fc, x);
    trace.client_fc_fwd_s += det ? 1.0 : now_seconds() - t0;

    Bytes blob = encode_activation_blob(z, y);
    Cid cid = push_blob(blob, /*sensitive=*/true);
    trace.offchain_bytes += blob.size();

    auto proposal = make_submission(
        c.identity, "addIntermediateData",
        {to_bytes(std::to_string(t)), to_bytes(cid.text),
         to_bytes("b=" + std::to_string(count))},
        blob, cid);
    auto rec = ledger_->submit_transaction(proposal);
    if (rec.status != TxStatus::Committed)
        throw std::runtime_error("addIntermediateData rejected: " + rec.error);
    trace.events_intermediate++;

    c.last_inputs = std::move(x);
    c.pending_round = t;
    c.awaiting_gradient = true;
}

void Simulation::server_step(uint64_t t, RoundTrace& trace) {
    ParamVector grad_sum = fs_params_;
    std::fill(grad_sum.values.begin(), grad_sum.values.end(), 0.0);
    bool any = false;
    bool det = cfg_.scheduler == SchedulerMode::Deterministic;

    // Drain pending activation events in commit order.
    for (auto events = server_events_->drain(); const auto& ev : events) {
        ByteReader r(ev.payload);
        Cid data_hash(r.str());
        uint64_t round = r.u64();
        std::string client_id = r.str();
        if (round != t) continue;

        auto [z, labels] = decode_activation_blob(store_.get(data_hash));

        double t0 = det ? 0.0 : now_seconds();
        auto [grad_fs, grad_act] =
            backward_server(model_.model, fs_params_, z, labels);
        trace.server_batch_s += det ? 1.0 : now_seconds() - t0;

        for (size_t i = 0; i < grad_sum.values.size(); ++i)
            grad_sum.values[i] += grad_fs.values[i];
        any = true;

        Bytes gblob = serialize_matrix(grad_act);
        Cid gcid = push_blob(gblob, /*sensitive=*/true);
        trace.offchain_bytes += gblob.size();

        auto proposal = make_submission(
            server_id_, "addGradients",
            {to_bytes(client_id), to_bytes(std::to_string(t)),
             to_bytes(gcid.text), to_bytes("")},
            gblob, gcid);
        auto rec = ledger_->submit_transaction(proposal);
        if (rec.status != TxStatus::Committed)
            throw std::runtime_error("addGradients rejected: " + rec.error);
        trace.events_gradient++;
    }
    // w_s update: one step with the summed per-client gradients.
    if (any) sgd_step(fs_params_, grad_sum, cfg_.train.eta_s);
}

void Simulation::client_apply_gradients(ClientActor& c, RoundTrace& trace) {
    if (c.dropped || !c.awaiting_gradient) return;
    bool det = cfg_.scheduler == SchedulerMode::Deterministic;
    for (auto events = c.grad_events->drain(); const auto& ev : events) {
        ByteReader r(ev.payload);
        Cid grad_hash(r.str());
        uint64_t round = r.u64();
        std::string client_id = r.str();
        if (client_id != c.id || round != c.pending_round) continue;

        Matrix grad_act = deserialize_matrix(store_.get(grad_hash));
        double t0 = det ? 0.0 : now_seconds();
        ParamVector grad_fc =
            backward_client(model_.model, c.fc, c.last_inputs, grad_act);
        trace.client_fc_bwd_s += det ? 1.0 : now_seconds() - t0;
        sgd_step(c.fc, grad_fc, cfg_.train.eta_c);
        c.awaiting_gradient = false;
    }
}

RoundTrace Simulation::run_round(uint64_t t) {
    RoundTrace trace;
    trace.round_id = t;

    if (cfg_.scheduler == SchedulerMode::Concurrent) {
        std::vector<std::thread> threads;
        std::vector<RoundTrace> parts(clients_.size());
        for (size_t i = 0; i < clients_.size(); ++i)
            threads.emplace_back([&, i] { client_step(clients_[i], t, parts[i]); });
        for (auto& th : threads) th.join();
        threads.clear();
        server_step(t, trace);
        for (size_t i = 0; i < clients_.size(); ++i)
            threads.emplace_back(
                [&, i] { client_apply_gradients(clients_[i], parts[i]); });
        for (auto& th : threads) th.join();
        for (const auto& p : parts) {
            trace.client_fc_fwd_s += p.client_fc_fwd_s;
            trace.client_fc_bwd_s += p.client_fc_bwd_s;
            trace.events_intermediate += p.events_intermediate;
            trace.offchain_bytes += p.offchain_bytes;
        }
    } else {
        // round-robin by client_id on one logical thread
        for (auto& c : clients_) client_step(c, t, trace);
        server_step(t, trace);
        for (auto& c : clients_) client_apply_gradients(c, trace);
    }
    return trace;
}

void Simulation::adopt_global(const GlobalModelRecord& rec) {
    ParamVector global = deserialize_params(store_.get(rec.global_hash));
    for (auto& c : clients_) c.fc = global;
}

std::optional<GlobalModelRecord> Simulation::run_aggregation(
    const std::string& aggregation_id, uint64_t t, RoundTrace* trace) {
    bool det = cfg_.scheduler == SchedulerMode::Deterministic;

    // Each participating client stores its updated parameters off-chain and
    // submits the hash.
    for (auto& c : clients_) {
        if (c.dropped) continue;
        Bytes blob = serialize_params(c.fc);
        Cid cid = push_blob(blob, /*sensitive=*/true);
        auto proposal = make_submission(
            c.identity, "submitClientModelHash",
            {to_bytes(std::to_string(t)), to_bytes(aggregation_id),
             to_bytes(cid.text), to_bytes("")},
            blob, cid);
        auto rec = ledger_->submit_transaction(proposal);
        if (rec.status != TxStatus::Committed)
            throw std::runtime_error("submitClientModelHash rejected: " +
                                     rec.error);
    }

    if (unauthorized_read_fault_) {
        try {
            ledger_->read_private(kClientModelCollection,
                                  "aggsub/" + aggregation_id + "/client1",
                                  server_id_);
            if (trace) trace->notes.push_back("unauthorized read NOT denied");
        } catch (const std::exception& e) {
            if (trace)
                trace->notes.push_back(std::string("access denied: ") + e.what());
        }
    }

    TransactionProposal trig;
    trig.submitter = admin_id_;
    trig.function = "triggerClientAggregation";
    trig.args = {to_bytes(aggregation_id)};
    auto trig_rec = ledger_->submit_transaction(trig);
    if (trig_rec.status != TxStatus::Committed)
        throw std::runtime_error("triggerClientAggregation rejected: " +
                                 trig_rec.error);

    // Each client independently computes FedAvg over the announced member
    // list (already in canonical client_id order) and submits its hash.
    for (auto& c : clients_) {
        if (c.dropped) continue;
        std::vector<MemberHash> members;
        for (auto events = c.agg_events->drain(); const auto& ev : events)
            members = decode_member_hash_list(ev.payload);
        if (members.empty()) continue;

        std::vector<std::pair<ParamVector, double>> updates;
        for (const auto& m : members)
            updates.emplace_back(deserialize_params(store_.get(m.param_hash)),
                                 double(m.dataset_size));
        double t0 = det ? 0.0 : now_seconds();
        ParamVector global = fedavg(updates);
        if (trace) trace->agg_compute_s += det ? 1.0 : now_seconds() - t0;

        Bytes blob = serialize_params(global);
        if (c.corrupt && !blob.empty()) blob.back() ^= 0xFF;  // fault injection
        Cid cid = push_blob(blob, /*sensitive=*/true);

        TransactionProposal p;
        p.submitter = c.identity;
        p.function = "commitGlobalModelHash";
        p.args = {to_bytes(aggregation_id), to_bytes(std::to_string(t)),
                  to_bytes(cid.text)};
        auto rec = ledger_->submit_transaction(p);
        if (rec.status != TxStatus::Committed)
            throw std::runtime_error("commitGlobalModelHash rejected: " +
                                     rec.error);
    }

    TransactionProposal end;
    end.submitter = admin_id_;
    end.function = "endGlobalModel";
    end.args = {to_bytes(aggregation_id), to_bytes(std::to_string(t))};
    for (const auto& c : clients_)
        if (!c.dropped) end.endorsements.insert(c.identity.msp);
    auto end_rec = ledger_->submit_transaction(end);
    if (end_rec.status != TxStatus::Committed)
        throw std::runtime_error("endGlobalModel rejected: " + end_rec.error);

    auto task = get_aggregation_task(*ledger_, aggregation_id);
    if (task && task->status == AggStatus::Committed) {
        auto rec = get_current_global_model(*ledger_);
        adopt_global(rec);
        return rec;
    }
    // Consensus failed: everyone falls back to the previous global model.
    adopt_global(get_current_global_model(*ledger_));
    return std::nullopt;
}

ParamVector Simulation::current_global_params() const {
    auto rec = get_current_global_model(*ledger_);
    return deserialize_params(store_.get(rec.global_hash));
}

const ParamVector& Simulation::client_params(const std::string& client_id) const {
    for (const auto& c : clients_)
        if (c.id == client_id) return c.fc;
    throw std::invalid_argument("unknown client: " + client_id);
}

void Simulation::inject_fault(const std::string& kind, const std::string& target) {
    if (kind == "unauthorized_read") {
        unauthorized_read_fault_ = true;
        return;
    }
    for (auto& c : clients_) {
        if (c.id != target) continue;
        if (kind == "corrupt_aggregation") {
            c.corrupt = true;
            return;
        }
        if (kind == "drop_client") {
            c.dropped = true;
            return;
        }
        throw std::invalid_argument("unknown fault kind: " + kind);
    }
    throw std::invalid_argument("unknown target: " + target);
}

RunResult Simulation::run_training() {
    RunResult result;
    std::ostringstream csv;
    csv << metrics_csv_header() << "\n";

    uint64_t round = 0;
    for (size_t epoch = 1; epoch <= cfg_.train.epochs; ++epoch) {
        start_epoch(epoch);
        EpochStats stats;
        stats.epoch = epoch;

        size_t rounds = rounds_per_epoch();
        for (size_t r = 0; r < rounds; ++r) {
            ++round;
            RoundTrace t = run_round(round);
            stats.totals.client_fc_fwd_s += t.client_fc_fwd_s;
            stats.totals.client_fc_bwd_s += t.client_fc_bwd_s;
            stats.totals.server_batch_s += t.server_batch_s;
            stats.totals.events_intermediate += t.events_intermediate;
            stats.totals.events_gradient += t.events_gradient;
            stats.totals.offchain_bytes += t.offchain_bytes;
            if (cfg_.train.aggregation_every > 0 &&
                round % cfg_.train.aggregation_every == 0) {
                run_aggregation("agg-r" + std::to_string(round), round,
                                &stats.totals);
            }
        }
        if (cfg_.train.aggregation_every == 0)
            run_aggregation("agg-e" + std::to_string(epoch), round, &stats.totals);

        ParamVector global_fc = current_global_params();
        auto [acc, loss] = evaluate(model_.model, global_fc, fs_params_, test_);
        stats.accuracy = acc;
        stats.loss = loss;
        stats.last_round = round;
        auto m = ledger_->metrics();
        stats.ledger_bytes = m.ledger_bytes;
        stats.reference_bytes = m.reference_bytes;

        char row[512];
        std::snprintf(row, sizeof(row),
                      "%zu,%llu,%.6f,%.6f,%.3f,%.3f,%.3f,%.3f,%llu,%llu,%llu,%llu",
                      stats.epoch, (unsigned long long)stats.last_round,
                      stats.accuracy, stats.loss, stats.totals.client_fc_fwd_s,
                      stats.totals.client_fc_bwd_s, stats.totals.server_batch_s,
                      stats.totals.agg_compute_s,
                      (unsigned long long)stats.totals.events_intermediate,
                      (unsigned long long)stats.totals.events_gradient,
                      (unsigned long long)stats.ledger_bytes,
                      (unsigned long long)stats.reference_bytes);
        csv << row << "\n";
        result.epochs.push_back(stats);
    }

    result.final_model = get_current_global_model(*ledger_);
    result.metrics_csv = csv.str();
    return result;
}

}  // namespace fslsim
