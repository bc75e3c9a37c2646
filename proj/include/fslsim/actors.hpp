#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fslsim/blobstore.hpp"
#include "fslsim/contract.hpp"
#include "fslsim/data.hpp"
#include "fslsim/ledger.hpp"
#include "fslsim/model.hpp"

namespace fslsim {

struct TrainConfig {
    double eta_c = 0.05;
    double eta_s = 0.05;
    size_t batch = 32;
    size_t epochs = 20;
    size_t aggregation_every = 0;  // rounds; 0 = aggregate at end of each epoch
    uint64_t seed = 1;
};

enum class PartitionMode { Iid, Dirichlet };
enum class SchedulerMode { Deterministic, Concurrent };

struct ScenarioConfig {
    size_t n_clients = 10;
    std::string model_spec = "tiny-mlp";
    TrainConfig train;
    PartitionMode partition = PartitionMode::Iid;
    double alpha = 0.5;
    SchedulerMode scheduler = SchedulerMode::Deterministic;
    size_t consensus_threshold_override = 0;

    std::string data_source = "synthetic";  // "synthetic" or "mnist"
    size_t classes = 3;
    size_t dim = 2;
    size_t n_train = 3000;
    size_t n_test = 600;
    std::string mnist_dir;

    // blobs up to this size travel in the transient field; larger ones go to
    // the store with only the CID in the transient map
    size_t transient_max_bytes = 512 * 1024;
};

struct RoundTrace {
    uint64_t round_id = 0;
    double client_fc_fwd_s = 0;
    double client_fc_bwd_s = 0;
    double server_batch_s = 0;
    double agg_compute_s = 0;
    uint64_t events_intermediate = 0;
    uint64_t events_gradient = 0;
    uint64_t offchain_bytes = 0;
    std::vector<std::string> notes;
};

struct EpochStats {
    size_t epoch = 0;
    uint64_t last_round = 0;
    double accuracy = 0;
    double loss = 0;
    RoundTrace totals;
    uint64_t ledger_bytes = 0;
    uint64_t reference_bytes = 0;
};

struct RunResult {
    std::vector<EpochStats> epochs;
    GlobalModelRecord final_model;
    std::string metrics_csv;
};

// Executes the training workflow against the simulated network: clients
// compute f_c and push activation references, the server entity processes
// batches and returns gradient references, and clients run the federated
// aggregation with consensus commit.
class Simulation {
public:
    Simulation(ScenarioConfig config, BlobStore& store);

    RoundTrace run_round(uint64_t t);
    std::optional<GlobalModelRecord> run_aggregation(
        const std::string& aggregation_id, uint64_t t, RoundTrace* trace = nullptr);
    RunResult run_training();

    // kind: corrupt_aggregation | drop_client | unauthorized_read
    void inject_fault(const std::string& kind, const std::string& target);

    Ledger& ledger() { return *ledger_; }
    BlobStore& store() { return store_; }
    const SplitModel& model() const { return model_.model; }
    const ParamVector& server_params() const { return fs_params_; }
    const ParamVector& client_params(const std::string& client_id) const;
    ParamVector current_global_params() const;
    const Dataset& test_set() const { return test_; }
    const DatasetPartition& partition() const { return partition_; }
    size_t rounds_per_epoch() const;

    // All activation/gradient/parameter blob bytes that ever existed in this
    // run; the privacy scan checks none of them leaked into the ledger.
    const std::vector<Bytes>& sensitive_blobs() const { return sensitive_; }

private:
    struct ClientActor {
        Identity identity;
        std::string id;
        Dataset shard;
        std::vector<size_t> order;  // epoch shuffle of shard rows
        size_t cursor = 0;
        ParamVector fc;
        std::shared_ptr<EventStream> grad_events;
        std::shared_ptr<EventStream> agg_events;
        bool dropped = false;
        bool corrupt = false;
        Matrix last_inputs;  // batch awaiting the gradient round-trip
        uint64_t pending_round = 0;
        bool awaiting_gradient = false;
    };

    void bootstrap();
    void start_epoch(size_t epoch);
    Cid push_blob(const Bytes& blob, bool sensitive);
    TransactionProposal make_submission(const Identity& who,
                                        const std::string& function,
                                        std::vector<Bytes> args, const Bytes& blob,
                                        const Cid& cid) const;
    void client_step(ClientActor& c, uint64_t t, RoundTrace& trace);
    void server_step(uint64_t t, RoundTrace& trace);
    void client_apply_gradients(ClientActor& c, RoundTrace& trace);
    void adopt_global(const GlobalModelRecord& rec);

    ScenarioConfig cfg_;
    BlobStore& store_;
    std::unique_ptr<Ledger> ledger_;
    BuiltModel model_;
    ParamVector fs_params_;
    Dataset train_;
    Dataset test_;
    DatasetPartition partition_;
    std::vector<ClientActor> clients_;
    Identity server_id_;
    Identity admin_id_;
    std::shared_ptr<EventStream> server_events_;
    std::set<MspId> client_msps_;
    std::vector<Bytes> sensitive_;
    bool unauthorized_read_fault_ = false;
    size_t current_epoch_ = 0;
};

std::string metrics_csv_header();

}  // namespace fslsim
