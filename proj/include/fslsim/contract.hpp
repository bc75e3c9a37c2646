#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fslsim/blobstore.hpp"
#include "fslsim/cid.hpp"
#include "fslsim/ledger.hpp"

namespace fslsim {

// Collection names fixed at network bootstrap.
inline const std::string kIntermediateCollection = "intermediateDataHashCollection";
inline const std::string kClientModelCollection = "clientModelHashCollection";
inline const std::string kGlobalModelCollection = "globalModelHashCollection";

struct ServerRecord {
    std::string server_id;
    MspId msp;
    std::string capabilities;
};

struct ClientRecord {
    std::string client_id;
    MspId msp;
    uint64_t dataset_size = 0;
};

struct ModelMeta {
    std::string model_id;
    Cid fc_spec_hash;
    Cid fs_spec_hash;
    std::string split_point_label;
    std::string publisher_msp;

    Bytes serialize() const;
    static ModelMeta deserialize(const Bytes& b);
};

struct MemberHash {
    std::string client_id;
    Cid param_hash;
    uint64_t dataset_size = 0;
};

enum class AggStatus { Open, Committed, Failed };

struct AggregationTask {
    std::string aggregation_id;
    uint64_t round_id = 0;
    AggStatus status = AggStatus::Open;
    std::vector<MemberHash> member_hashes;               // sorted by client_id
    std::vector<std::pair<std::string, Cid>> submissions;  // client_id -> hash

    Bytes serialize() const;
    static AggregationTask deserialize(const Bytes& b);
};

struct GlobalModelRecord {
    uint64_t round_id = 0;
    Cid global_hash;
    uint64_t committed_at_height = 0;

    Bytes serialize() const;
    static GlobalModelRecord deserialize(const Bytes& b);
};

struct NetworkConfig {
    std::vector<MspId> client_msps;
    MspId server_msp;
    MspId admin_msp;
    // M-of-N threshold for committing a global model; 0 = ceil(2N/3).
    size_t consensus_endorsement_threshold = 0;
};

// Builds the channel with the three collections and the per-function
// endorsement policies, and installs the contract handlers.
std::unique_ptr<Ledger> bootstrap_network(const NetworkConfig& config,
                                          BlobStore& store);

// Query surface (read-only, no commit). Role checks mirror the handlers.
std::vector<ModelMeta> get_available_models(const Ledger& ledger,
                                            const Identity& caller);
ModelMeta get_model(const Ledger& ledger, const Identity& caller,
                    const std::string& model_id);
Bytes query_client_model_hashes_payload(const Ledger& ledger,
                                        const Identity& caller,
                                        const std::string& aggregation_id);
std::vector<MemberHash> query_client_model_hashes(const Ledger& ledger,
                                                  const Identity& caller,
                                                  const std::string& aggregation_id);
GlobalModelRecord get_current_global_model(const Ledger& ledger);
std::optional<AggregationTask> get_aggregation_task(
    const Ledger& ledger, const std::string& aggregation_id);
std::optional<ClientRecord> get_client_record(const Ledger& ledger,
                                              const std::string& client_id);

// Canonical event payload layouts.
Bytes encode_intermediate_event(const Cid& data_hash, uint64_t round_id,
                                const std::string& client_id,
                                const std::string& tx_id);
Bytes encode_member_hash_list(const std::vector<MemberHash>& members);
std::vector<MemberHash> decode_member_hash_list(const Bytes& payload);

}  // namespace fslsim
