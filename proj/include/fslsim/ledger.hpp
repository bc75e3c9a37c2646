#pragma once

#include <array>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fslsim/bytes.hpp"
#include "fslsim/cid.hpp"

namespace fslsim {

struct MspId {
    std::string name;

    bool operator==(const MspId&) const = default;
    auto operator<=>(const MspId&) const = default;
};

enum class Role { Client, ServerEntity, Admin };

std::string role_name(Role r);

struct Identity {
    MspId msp;
    std::string actor_id;
    Role role = Role::Client;
};

// Private data collection definition. When owner_scoped is set, reads and
// writes of a key are additionally restricted to the MSP that first wrote it
// (plus any MSP in admin_override), modeling per-org collections such as the
// client model hash collection.
struct PdcDefinition {
    std::string name;
    std::set<MspId> read_policy;
    std::set<MspId> write_policy;
    bool owner_scoped = false;
    std::set<MspId> admin_override;
};

struct EndorsementPolicy {
    enum class Kind { AnyOf, MOfN };
    Kind kind = Kind::AnyOf;
    std::set<MspId> members;
    size_t threshold = 1;  // MOfN only

    bool satisfied(const std::set<MspId>& endorsers) const;
};

struct TransactionProposal {
    Identity submitter;
    std::string function;
    std::vector<Bytes> args;
    std::map<std::string, Bytes> transient;
    // Simulated endorsement: the orgs whose peers endorsed this proposal.
    // The submitter's own MSP always counts as an endorser.
    std::set<MspId> endorsements;
};

struct Event {
    std::string name;
    Bytes payload;
    std::string tx_id;
};

enum class TxStatus { Committed, Rejected };

struct WriteSetEntry {
    std::string key;
    std::array<uint8_t, 32> value_digest;
    Bytes value;  // public payload, stored raw alongside its digest
};

struct TransactionRecord {
    std::string tx_id;
    uint64_t height = 0;  // 0 for rejected records
    MspId submitter_msp;
    std::string function;
    std::vector<Bytes> public_args;
    std::vector<WriteSetEntry> write_set;
    std::vector<Event> events;
    TxStatus status = TxStatus::Committed;
    std::string error;  // rejection reason, empty when committed

    Bytes serialize() const;
    static TransactionRecord deserialize(const Bytes& data);
};

struct LedgerMetrics {
    uint64_t committed_tx_count = 0;
    uint64_t rejected_tx_count = 0;
    uint64_t ledger_bytes = 0;     // sum of committed serialized record sizes
    uint64_t reference_bytes = 0;  // sum of CID-string payload bytes in events
    std::map<std::string, uint64_t> pdc_bytes_by_collection;
};

class Ledger;

// Chaincode execution context: staged read/write view over world state and
// PDCs, transient access, and event emission. Valid only for the duration of
// one handler invocation.
class ChaincodeContext {
public:
    const Identity& caller() const { return proposal_->submitter; }
    const std::vector<Bytes>& args() const { return proposal_->args; }
    const std::string& tx_id() const { return tx_id_; }

    std::string arg_str(size_t i) const;
    uint64_t arg_u64(size_t i) const;

    void put_state(const std::string& key, const Bytes& value);
    std::optional<Bytes> get_state(const std::string& key) const;
    std::vector<std::pair<std::string, Bytes>> get_state_by_prefix(
        const std::string& prefix) const;

    void put_private(const std::string& collection, const std::string& key,
                     const Bytes& value);
    Bytes get_private(const std::string& collection, const std::string& key) const;
    bool has_private(const std::string& collection, const std::string& key) const;

    Bytes get_transient(const std::string& key) const;
    bool has_transient(const std::string& key) const;

    // Height this transaction will commit at if it succeeds.
    uint64_t pending_height() const;

    // cid_reference_bytes: size of the CID strings this event carries that
    // count toward the ledger's reference-byte accounting.
    void emit_event(const std::string& name, Bytes payload,
                    uint64_t cid_reference_bytes = 0);

    [[noreturn]] void fail(const std::string& reason) const;

private:
    friend class Ledger;
    ChaincodeContext(Ledger& ledger, const TransactionProposal& proposal,
                     std::string tx_id);

    Ledger& ledger_;
    const TransactionProposal* proposal_;
    std::string tx_id_;
    std::map<std::string, Bytes> staged_state_;
    std::set<std::string> staged_deletes_;
    // (collection, key) -> (value, writer msp)
    std::map<std::pair<std::string, std::string>, std::pair<Bytes, MspId>>
        staged_private_;
    std::vector<Event> events_;
    uint64_t reference_bytes_ = 0;
};

class EventStream {
public:
    std::optional<Event> poll();
    std::vector<Event> drain();
    size_t pending() const;

private:
    friend class Ledger;
    mutable std::mutex mu_;
    std::deque<Event> queue_;
};

using ChaincodeHandler = std::function<void(ChaincodeContext&)>;

// In-process permissioned ledger: world state, PDCs, events, endorsement,
// totally ordered commits. A single sequencer serializes all handler
// executions; submission is safe from any thread.
class Ledger {
public:
    Ledger(std::vector<MspId> channel_members, std::vector<PdcDefinition> pdcs,
           std::map<std::string, EndorsementPolicy> policies);

    void register_function(const std::string& name, ChaincodeHandler handler);
    void set_policy(const std::string& function, EndorsementPolicy policy);

    TransactionRecord submit_transaction(const TransactionProposal& proposal);

    // Direct PDC access from off-ledger actors (peer-side read/write path).
    // Enforces collection policies; throws on denial.
    Bytes read_private(const std::string& collection, const std::string& key,
                       const Identity& caller) const;
    void write_private(const std::string& collection, const std::string& key,
                       const Bytes& value, const Identity& caller);

    std::optional<Bytes> query_state(const std::string& key) const;
    std::vector<std::pair<std::string, Bytes>> query_state_by_prefix(
        const std::string& prefix) const;

    std::shared_ptr<EventStream> subscribe(const std::string& name_pattern,
                                           const Identity& subscriber);

    LedgerMetrics metrics() const;
    uint64_t height() const;

    const std::vector<TransactionRecord>& committed_log() const { return log_; }
    const std::vector<TransactionRecord>& rejected_log() const { return rejected_; }

    // One base64-encoded serialized record per line, committed then rejected.
    std::string export_records() const;
    std::string export_metrics_csv() const;

    bool is_member(const MspId& msp) const;
    const std::vector<MspId>& members() const { return members_; }

    // Rebuilds a world state map from a committed record log.
    static std::map<std::string, Bytes> replay(
        const std::vector<TransactionRecord>& log);

    const std::map<std::string, Bytes>& world_state() const { return state_; }
    const std::map<std::string, std::map<std::string, std::pair<Bytes, MspId>>>&
    pdc_contents() const { return pdc_data_; }

private:
    friend class ChaincodeContext;

    bool check_private_access(const PdcDefinition& pdc, const MspId& caller,
                              const std::string& key, bool write) const;
    const PdcDefinition& find_pdc(const std::string& collection) const;
    std::string next_tx_id();

    mutable std::mutex mu_;
    std::vector<MspId> members_;
    std::map<std::string, PdcDefinition> pdcs_;
    std::map<std::string, EndorsementPolicy> policies_;
    std::map<std::string, ChaincodeHandler> handlers_;

    std::map<std::string, Bytes> state_;
    // collection -> key -> (value, writer msp)
    std::map<std::string, std::map<std::string, std::pair<Bytes, MspId>>> pdc_data_;

    std::vector<TransactionRecord> log_;
    std::vector<TransactionRecord> rejected_;
    uint64_t tx_counter_ = 0;
    LedgerMetrics metrics_;

    struct Subscription {
        std::string pattern;
        std::shared_ptr<EventStream> stream;
    };
    std::vector<Subscription> subs_;
};

}  // namespace fslsim
