#include "fslsim/contract.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace fslsim {

// ---------------------------------------------------------------------------
// Record encodings (canonical: fixed field order, LE64, length-prefixed).

Bytes ModelMeta::serialize() const {
    ByteWriter w;
    w.str(model_id);
    w.str(fc_spec_hash.text);
    w.str(fs_spec_hash.text);
    w.str(split_point_label);
    w.str(publisher_msp);
    return w.take();
}

ModelMeta ModelMeta::deserialize(const Bytes& b) {
    ByteReader r(b);
    ModelMeta m;
    m.model_id = r.str();
    m.fc_spec_hash = Cid(r.str());
    m.fs_spec_hash = Cid(r.str());
    m.split_point_label = r.str();
    m.publisher_msp = r.str();
    return m;
}

Bytes AggregationTask::serialize() const {
    ByteWriter w;
    w.str(aggregation_id);
    w.u64(round_id);
    w.u8(uint8_t(status));
    w.u64(member_hashes.size());
    for (const auto& m : member_hashes) {
        w.str(m.client_id);
        w.str(m.param_hash.text);
        w.u64(m.dataset_size);
    }
    w.u64(submissions.size());
    for (const auto& [cid_, hash] : submissions) {
        w.str(cid_);
        w.str(hash.text);
    }
    return w.take();
}

AggregationTask AggregationTask::deserialize(const Bytes& b) {
    ByteReader r(b);
    AggregationTask t;
    t.aggregation_id = r.str();
    t.round_id = r.u64();
    t.status = AggStatus(r.u8());
    uint64_t n = r.u64();
    for (uint64_t i = 0; i < n; ++i) {
        MemberHash m;
        m.client_id = r.str();
        m.param_hash = Cid(r.str());
        m.dataset_size = r.u64();
        t.member_hashes.push_back(std::move(m));
    }
    n = r.u64();
    for (uint64_t i = 0; i < n; ++i) {
        std::string id = r.str();
        t.submissions.emplace_back(id, Cid(r.str()));
    }
    return t;
}

Bytes GlobalModelRecord::serialize() const {
    ByteWriter w;
    w.u64(round_id);
    w.str(global_hash.text);
    w.u64(committed_at_height);
    return w.take();
}

GlobalModelRecord GlobalModelRecord::deserialize(const Bytes& b) {
    ByteReader r(b);
    GlobalModelRecord g;
    g.round_id = r.u64();
    g.global_hash = Cid(r.str());
    g.committed_at_height = r.u64();
    return g;
}

static Bytes encode_client_record(const ClientRecord& c) {
    ByteWriter w;
    w.str(c.client_id);
    w.str(c.msp.name);
    w.u64(c.dataset_size);
    return w.take();
}

static ClientRecord decode_client_record(const Bytes& b) {
    ByteReader r(b);
    ClientRecord c;
    c.client_id = r.str();
    c.msp.name = r.str();
    c.dataset_size = r.u64();
    return c;
}

Bytes encode_intermediate_event(const Cid& data_hash, uint64_t round_id,
                                const std::string& client_id,
                                const std::string& tx_id) {
    ByteWriter w;
    w.str(data_hash.text);
    w.u64(round_id);
    w.str(client_id);
    w.str(tx_id);
    return w.take();
}

Bytes encode_member_hash_list(const std::vector<MemberHash>& members) {
    ByteWriter w;
    w.u64(members.size());
    for (const auto& m : members) {
        w.str(m.client_id);
        w.str(m.param_hash.text);
        w.u64(m.dataset_size);
    }
    return w.take();
}

std::vector<MemberHash> decode_member_hash_list(const Bytes& payload) {
    ByteReader r(payload);
    std::vector<MemberHash> out;
    uint64_t n = r.u64();
    for (uint64_t i = 0; i < n; ++i) {
        MemberHash m;
        m.client_id = r.str();
        m.param_hash = Cid(r.str());
        m.dataset_size = r.u64();
        out.push_back(std::move(m));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Handlers

namespace {

void require_role(ChaincodeContext& ctx, Role role) {
    if (ctx.caller().role != role)
        ctx.fail("role mismatch: " + role_name(ctx.caller().role) +
                 " may not call this function");
}

// Verifies the transient payload against the claimed hash. Raw bytes travel
// under "data"; oversized blobs travel by reference under "cid".
void verify_transient_hash(ChaincodeContext& ctx, const Cid& claimed,
                           const BlobStore& store) {
    if (ctx.has_transient("data")) {
        Bytes data = ctx.get_transient("data");
        if (cid_from_bytes(data) != claimed) ctx.fail("hash verification failed");
    } else if (ctx.has_transient("cid")) {
        std::string text = to_string(ctx.get_transient("cid"));
        if (!Cid::valid(text) || Cid(text) != claimed)
            ctx.fail("hash verification failed");
        if (!store.contains(claimed)) ctx.fail("dangling reference: " + claimed.text);
    } else {
        ctx.fail("transient key missing: data");
    }
}

void register_server(ChaincodeContext& ctx) {
    require_role(ctx, Role::ServerEntity);
    std::string server_id = ctx.arg_str(0);
    std::string key = "server/" + server_id;
    if (ctx.get_state(key)) ctx.fail("exists: " + server_id);
    ByteWriter w;
    w.str(server_id);
    w.str(ctx.caller().msp.name);
    w.str(ctx.arg_str(1));
    ctx.put_state(key, w.take());
}

void register_client(ChaincodeContext& ctx) {
    require_role(ctx, Role::Client);
    std::string client_id = ctx.arg_str(0);
    uint64_t dataset_size = ctx.arg_u64(1);
    if (dataset_size == 0) ctx.fail("empty dataset");
    std::string key = "client/" + client_id;
    if (ctx.get_state(key)) ctx.fail("exists: " + client_id);
    ctx.put_state(key, encode_client_record(
                           {client_id, ctx.caller().msp, dataset_size}));
}

void publish_model(const BlobStore& store, ChaincodeContext& ctx) {
    std::string model_id = ctx.arg_str(0);
    Cid fc_hash(ctx.arg_str(1));
    Cid fs_hash(ctx.arg_str(2));
    if (!store.contains(fc_hash)) ctx.fail("dangling reference: " + fc_hash.text);
    if (!store.contains(fs_hash)) ctx.fail("dangling reference: " + fs_hash.text);
    std::string key = "model/" + model_id;
    if (ctx.get_state(key)) ctx.fail("exists: " + model_id);
    ModelMeta meta{model_id, fc_hash, fs_hash, ctx.arg_str(3),
                   ctx.caller().msp.name};
    ctx.put_state(key, meta.serialize());
    ByteWriter w;
    w.str(model_id);
    ctx.emit_event("ModelPublished", w.take());
}

void set_genesis_model(ChaincodeContext& ctx) {
    require_role(ctx, Role::Admin);
    if (ctx.get_state("global/current")) ctx.fail("genesis already set");
    Cid hash(ctx.arg_str(0));
    GlobalModelRecord rec{0, hash, ctx.pending_height()};
    ctx.put_state("global/current", rec.serialize());
    ctx.put_private(kGlobalModelCollection, "genesis", to_bytes(hash.text));
}

void add_intermediate_data(const BlobStore& store, ChaincodeContext& ctx) {
    require_role(ctx, Role::Client);
    uint64_t round_id = ctx.arg_u64(0);
    Cid data_hash(ctx.arg_str(1));
    std::string metadata = ctx.arg_str(2);
    verify_transient_hash(ctx, data_hash, store);

    const std::string& client_id = ctx.caller().actor_id;
    std::string ref_key = "ref/" + std::to_string(round_id) + "/" + client_id +
                          "/Activation";
    ctx.put_private(kIntermediateCollection, ref_key, to_bytes(data_hash.text));
    ctx.put_state(ref_key, to_bytes(metadata));
    ctx.emit_event("IntermediateDataAdded",
                   encode_intermediate_event(data_hash, round_id, client_id,
                                             ctx.tx_id()),
                   Cid::kLength);
}

void add_gradients(const BlobStore& store, ChaincodeContext& ctx) {
    require_role(ctx, Role::ServerEntity);
    std::string client_id = ctx.arg_str(0);
    uint64_t round_id = ctx.arg_u64(1);
    Cid grad_hash(ctx.arg_str(2));
    std::string metadata = ctx.arg_str(3);

    std::string act_key = "ref/" + std::to_string(round_id) + "/" + client_id +
                          "/Activation";
    if (!ctx.get_state(act_key)) ctx.fail("no pending activation");
    verify_transient_hash(ctx, grad_hash, store);

    std::string ref_key = "ref/" + std::to_string(round_id) + "/" + client_id +
                          "/Gradient";
    ctx.put_private(kIntermediateCollection, ref_key, to_bytes(grad_hash.text));
    ctx.put_state(ref_key, to_bytes(metadata));
    ctx.emit_event("GradientAdded",
                   encode_intermediate_event(grad_hash, round_id, client_id,
                                             ctx.tx_id()),
                   Cid::kLength);
}

void submit_client_model_hash(const BlobStore& store, ChaincodeContext& ctx) {
    require_role(ctx, Role::Client);
    uint64_t round_id = ctx.arg_u64(0);
    std::string aggregation_id = ctx.arg_str(1);
    Cid param_hash(ctx.arg_str(2));
    if (!store.contains(param_hash))
        ctx.fail("dangling reference: " + param_hash.text);

    const std::string& client_id = ctx.caller().actor_id;
    auto reg = ctx.get_state("client/" + client_id);
    if (!reg) ctx.fail("client not registered: " + client_id);
    ClientRecord record = decode_client_record(*reg);

    std::string sub_key = "aggsub/" + aggregation_id + "/" + client_id;
    if (ctx.get_state(sub_key)) ctx.fail("already submitted");

    ctx.put_private(kClientModelCollection, sub_key, to_bytes(param_hash.text));
    ByteWriter w;
    w.str(param_hash.text);
    w.u64(round_id);
    w.u64(record.dataset_size);
    ctx.put_state(sub_key, w.take());
}

void trigger_client_aggregation(ChaincodeContext& ctx) {
    std::string aggregation_id = ctx.arg_str(0);
    std::string task_key = "agg/" + aggregation_id;
    if (ctx.get_state(task_key)) ctx.fail("task open");

    auto subs = ctx.get_state_by_prefix("aggsub/" + aggregation_id + "/");
    if (subs.empty()) ctx.fail("nothing to aggregate");

    AggregationTask task;
    task.aggregation_id = aggregation_id;
    std::string prefix = "aggsub/" + aggregation_id + "/";
    for (const auto& [key, value] : subs) {
        ByteReader r(value);
        MemberHash m;
        m.client_id = key.substr(prefix.size());
        m.param_hash = Cid(r.str());
        task.round_id = std::max(task.round_id, r.u64());
        m.dataset_size = r.u64();
        task.member_hashes.push_back(std::move(m));
    }
    // prefix scan is already sorted by key, hence by client_id
    ctx.put_state(task_key, task.serialize());
    ctx.emit_event("AggregationTaskStart",
                   encode_member_hash_list(task.member_hashes));
}

void commit_global_model_hash(ChaincodeContext& ctx) {
    require_role(ctx, Role::Client);
    std::string aggregation_id = ctx.arg_str(0);
    Cid global_hash(ctx.arg_str(2));

    auto raw = ctx.get_state("agg/" + aggregation_id);
    if (!raw) ctx.fail("unknown aggregation: " + aggregation_id);
    AggregationTask task = AggregationTask::deserialize(*raw);
    if (task.status != AggStatus::Open) ctx.fail("task closed");

    const std::string& client_id = ctx.caller().actor_id;
    bool member = std::any_of(task.member_hashes.begin(), task.member_hashes.end(),
                              [&](const MemberHash& m) {
                                  return m.client_id == client_id;
                              });
    if (!member) ctx.fail("not an aggregation member: " + client_id);
    for (const auto& [id, _] : task.submissions)
        if (id == client_id) ctx.fail("already submitted");

    task.submissions.emplace_back(client_id, global_hash);
    ctx.put_state("agg/" + aggregation_id, task.serialize());
}

void end_global_model(ChaincodeContext& ctx) {
    std::string aggregation_id = ctx.arg_str(0);
    uint64_t round_id = ctx.arg_u64(1);

    auto raw = ctx.get_state("agg/" + aggregation_id);
    if (!raw) ctx.fail("unknown aggregation: " + aggregation_id);
    AggregationTask task = AggregationTask::deserialize(*raw);
    if (task.status != AggStatus::Open) ctx.fail("task closed");

    // Consensus rule: commit iff the most common submitted hash was submitted
    // by strictly more than two thirds of the participants.
    size_t participants = task.member_hashes.size();
    std::map<Cid, size_t> tally;
    for (const auto& [_, hash] : task.submissions) tally[hash]++;
    Cid winner;
    size_t top = 0;
    for (const auto& [hash, count] : tally) {
        if (count > top) {
            top = count;
            winner = hash;
        }
    }

    if (3 * top > 2 * participants) {
        task.status = AggStatus::Committed;
        ctx.put_state("agg/" + aggregation_id, task.serialize());
        ctx.put_private(kGlobalModelCollection, "agg/" + aggregation_id,
                        to_bytes(winner.text));
        GlobalModelRecord rec{round_id, winner, ctx.pending_height()};
        ctx.put_state("global/current", rec.serialize());
        ByteWriter w;
        w.u64(round_id);
        w.str(winner.text);
        ctx.emit_event("GlobalModelUpdated", w.take());
    } else {
        task.status = AggStatus::Failed;
        ctx.put_state("agg/" + aggregation_id, task.serialize());
        ByteWriter w;
        w.u64(round_id);
        ctx.emit_event("AggregationFailed", w.take());
    }
}

}  // namespace

std::unique_ptr<Ledger> bootstrap_network(const NetworkConfig& config,
                                          BlobStore& store) {
    if (config.client_msps.empty()) throw std::invalid_argument("no members");
    if (config.server_msp.name.empty() || config.admin_msp.name.empty())
        throw std::invalid_argument("server and admin MSPs required");

    std::vector<MspId> members = config.client_msps;
    members.push_back(config.server_msp);
    members.push_back(config.admin_msp);

    std::set<MspId> all(members.begin(), members.end());
    std::set<MspId> clients(config.client_msps.begin(), config.client_msps.end());
    std::set<MspId> clients_admin = clients;
    clients_admin.insert(config.admin_msp);

    std::vector<PdcDefinition> pdcs;
    // OR(Client, Server, Admin): every channel member may touch the
    // activation/gradient hash collection.
    pdcs.push_back({kIntermediateCollection, all, all});
    // Submitting client org + admin only.
    PdcDefinition client_model{kClientModelCollection, clients_admin, clients_admin};
    client_model.owner_scoped = true;
    client_model.admin_override = {config.admin_msp};
    pdcs.push_back(std::move(client_model));
    // All client orgs + admin; writes additionally gated by endorsement.
    pdcs.push_back({kGlobalModelCollection, clients_admin, clients_admin});

    size_t n = config.client_msps.size();
    size_t threshold = config.consensus_endorsement_threshold
                           ? config.consensus_endorsement_threshold
                           : (2 * n + 2) / 3;  // ceil(2N/3)
    std::map<std::string, EndorsementPolicy> policies;
    policies["commitGlobalModelHash"] =
        EndorsementPolicy{EndorsementPolicy::Kind::AnyOf, clients, 1};
    policies["endGlobalModel"] =
        EndorsementPolicy{EndorsementPolicy::Kind::MOfN, clients, threshold};

    auto ledger = std::make_unique<Ledger>(members, pdcs, policies);

    ledger->register_function("registerServer", register_server);
    ledger->register_function("registerClient", register_client);
    ledger->register_function("publishModel", [&store](ChaincodeContext& ctx) {
        publish_model(store, ctx);
    });
    ledger->register_function("setGenesisModel", set_genesis_model);
    ledger->register_function("addIntermediateData",
                              [&store](ChaincodeContext& ctx) {
                                  add_intermediate_data(store, ctx);
                              });
    ledger->register_function("addGradients", [&store](ChaincodeContext& ctx) {
        add_gradients(store, ctx);
    });
    ledger->register_function("submitClientModelHash",
                              [&store](ChaincodeContext& ctx) {
                                  submit_client_model_hash(store, ctx);
                              });
    ledger->register_function("triggerClientAggregation",
                              trigger_client_aggregation);
    ledger->register_function("commitGlobalModelHash", commit_global_model_hash);
    ledger->register_function("endGlobalModel", end_global_model);
    return ledger;
}

// ---------------------------------------------------------------------------
// Queries

static void require_member(const Ledger& ledger, const Identity& caller) {
    if (!ledger.is_member(caller.msp))
        throw std::runtime_error("not a channel member");
}

std::vector<ModelMeta> get_available_models(const Ledger& ledger,
                                            const Identity& caller) {
    require_member(ledger, caller);
    std::vector<ModelMeta> out;
    for (const auto& [_, v] : ledger.query_state_by_prefix("model/"))
        out.push_back(ModelMeta::deserialize(v));
    return out;  // sorted by model_id via key order
}

ModelMeta get_model(const Ledger& ledger, const Identity& caller,
                    const std::string& model_id) {
    require_member(ledger, caller);
    auto v = ledger.query_state("model/" + model_id);
    if (!v) throw std::runtime_error("unknown model: " + model_id);
    return ModelMeta::deserialize(*v);
}

Bytes query_client_model_hashes_payload(const Ledger& ledger,
                                        const Identity& caller,
                                        const std::string& aggregation_id) {
    require_member(ledger, caller);
    if (caller.role == Role::ServerEntity)
        throw std::runtime_error("role mismatch: ServerEntity may not query "
                                 "client model hashes");
    auto raw = ledger.query_state("agg/" + aggregation_id);
    if (!raw) throw std::runtime_error("unknown aggregation: " + aggregation_id);
    AggregationTask task = AggregationTask::deserialize(*raw);
    return encode_member_hash_list(task.member_hashes);
}

std::vector<MemberHash> query_client_model_hashes(
    const Ledger& ledger, const Identity& caller,
    const std::string& aggregation_id) {
    return decode_member_hash_list(
        query_client_model_hashes_payload(ledger, caller, aggregation_id));
}

GlobalModelRecord get_current_global_model(const Ledger& ledger) {
    auto raw = ledger.query_state("global/current");
    if (!raw) throw std::runtime_error("no global model");
    return GlobalModelRecord::deserialize(*raw);
}

std::optional<AggregationTask> get_aggregation_task(
    const Ledger& ledger, const std::string& aggregation_id) {
    auto raw = ledger.query_state("agg/" + aggregation_id);
    if (!raw) return std::nullopt;
    return AggregationTask::deserialize(*raw);
}

std::optional<ClientRecord> get_client_record(const Ledger& ledger,
                                              const std::string& client_id) {
    auto raw = ledger.query_state("client/" + client_id);
    if (!raw) return std::nullopt;
    return decode_client_record(*raw);
}

}  // namespace fslsim
