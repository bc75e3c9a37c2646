#include "fslsim/ledger.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "fslsim/sha256.hpp"

namespace fslsim {

std::string role_name(Role r) {
    switch (r) {
        case Role::Client: return "Client";
        case Role::ServerEntity: return "ServerEntity";
        case Role::Admin: return "Admin";
    }
    return "?";
}

bool EndorsementPolicy::satisfied(const std::set<MspId>& endorsers) const {
    size_t hits = 0;
    for (const auto& m : members)
        if (endorsers.count(m)) ++hits;
    if (kind == Kind::AnyOf) return hits >= 1;
    return hits >= threshold;
}

// ---------------------------------------------------------------------------
// TransactionRecord serialization: length-prefixed fields, LE64 integers.

Bytes TransactionRecord::serialize() const {
    ByteWriter w;
    w.str(tx_id);
    w.u64(height);
    w.str(submitter_msp.name);
    w.str(function);
    w.u64(public_args.size());
    for (const auto& a : public_args) w.bytes(a);
    w.u64(write_set.size());
    for (const auto& e : write_set) {
        w.str(e.key);
        w.raw(e.value_digest.data(), e.value_digest.size());
        w.bytes(e.value);
    }
    w.u64(events.size());
    for (const auto& ev : events) {
        w.str(ev.name);
        w.bytes(ev.payload);
        w.str(ev.tx_id);
    }
    w.u8(status == TxStatus::Committed ? 1 : 0);
    w.str(error);
    return w.take();
}

TransactionRecord TransactionRecord::deserialize(const Bytes& data) {
    ByteReader r(data);
    TransactionRecord rec;
    rec.tx_id = r.str();
    rec.height = r.u64();
    rec.submitter_msp.name = r.str();
    rec.function = r.str();
    uint64_t n = r.u64();
    for (uint64_t i = 0; i < n; ++i) rec.public_args.push_back(r.bytes());
    n = r.u64();
    for (uint64_t i = 0; i < n; ++i) {
        WriteSetEntry e;
        e.key = r.str();
        for (auto& b : e.value_digest) b = r.u8();
        e.value = r.bytes();
        rec.write_set.push_back(std::move(e));
    }
    n = r.u64();
    for (uint64_t i = 0; i < n; ++i) {
        Event ev;
        ev.name = r.str();
        ev.payload = r.bytes();
        ev.tx_id = r.str();
        rec.events.push_back(std::move(ev));
    }
    rec.status = r.u8() ? TxStatus::Committed : TxStatus::Rejected;
    rec.error = r.str();
    return rec;
}

// ---------------------------------------------------------------------------
// ChaincodeContext

ChaincodeContext::ChaincodeContext(Ledger& ledger,
                                   const TransactionProposal& proposal,
                                   std::string tx_id)
    : ledger_(ledger), proposal_(&proposal), tx_id_(std::move(tx_id)) {}

std::string ChaincodeContext::arg_str(size_t i) const {
    if (i >= proposal_->args.size()) fail("missing argument");
    return to_string(proposal_->args[i]);
}

uint64_t ChaincodeContext::arg_u64(size_t i) const {
    std::string s = arg_str(i);
    try {
        return std::stoull(s);
    } catch (const std::exception&) {
        fail("argument not an integer: " + s);
    }
}

void ChaincodeContext::put_state(const std::string& key, const Bytes& value) {
    staged_state_[key] = value;
    staged_deletes_.erase(key);
}

std::optional<Bytes> ChaincodeContext::get_state(const std::string& key) const {
    if (staged_deletes_.count(key)) return std::nullopt;
    auto it = staged_state_.find(key);
    if (it != staged_state_.end()) return it->second;
    auto st = ledger_.state_.find(key);
    if (st != ledger_.state_.end()) return st->second;
    return std::nullopt;
}

std::vector<std::pair<std::string, Bytes>> ChaincodeContext::get_state_by_prefix(
    const std::string& prefix) const {
    std::map<std::string, Bytes> merged;
    for (auto it = ledger_.state_.lower_bound(prefix);
         it != ledger_.state_.end() && it->first.starts_with(prefix); ++it)
        merged[it->first] = it->second;
    for (const auto& [k, v] : staged_state_)
        if (k.starts_with(prefix)) merged[k] = v;
    for (const auto& k : staged_deletes_) merged.erase(k);
    return {merged.begin(), merged.end()};
}

void ChaincodeContext::put_private(const std::string& collection,
                                   const std::string& key, const Bytes& value) {
    const PdcDefinition& pdc = ledger_.find_pdc(collection);
    if (!ledger_.check_private_access(pdc, caller().msp, key, /*write=*/true))
        fail("access denied to collection " + collection);
    staged_private_[{collection, key}] = {value, caller().msp};
}

Bytes ChaincodeContext::get_private(const std::string& collection,
                                    const std::string& key) const {
    const PdcDefinition& pdc = ledger_.find_pdc(collection);
    if (!ledger_.check_private_access(pdc, caller().msp, key, /*write=*/false))
        fail("access denied to collection " + collection);
    auto it = staged_private_.find({collection, key});
    if (it != staged_private_.end()) return it->second.first;
    auto col = ledger_.pdc_data_.find(collection);
    if (col != ledger_.pdc_data_.end()) {
        auto kv = col->second.find(key);
        if (kv != col->second.end()) return kv->second.first;
    }
    fail("private key not found: " + collection + "/" + key);
}

bool ChaincodeContext::has_private(const std::string& collection,
                                   const std::string& key) const {
    if (staged_private_.count({collection, key})) return true;
    auto col = ledger_.pdc_data_.find(collection);
    return col != ledger_.pdc_data_.end() && col->second.count(key) > 0;
}

Bytes ChaincodeContext::get_transient(const std::string& key) const {
    auto it = proposal_->transient.find(key);
    if (it == proposal_->transient.end()) fail("transient key missing: " + key);
    return it->second;
}

bool ChaincodeContext::has_transient(const std::string& key) const {
    return proposal_->transient.count(key) > 0;
}

uint64_t ChaincodeContext::pending_height() const {
    return ledger_.log_.size() + 1;
}

void ChaincodeContext::emit_event(const std::string& name, Bytes payload,
                                  uint64_t cid_reference_bytes) {
    events_.push_back(Event{name, std::move(payload), tx_id_});
    reference_bytes_ += cid_reference_bytes;
}

void ChaincodeContext::fail(const std::string& reason) const {
    throw std::runtime_error(reason);
}

// ---------------------------------------------------------------------------
// EventStream

std::optional<Event> EventStream::poll() {
    std::lock_guard lock(mu_);
    if (queue_.empty()) return std::nullopt;
    Event e = std::move(queue_.front());
    queue_.pop_front();
    return e;
}

std::vector<Event> EventStream::drain() {
    std::lock_guard lock(mu_);
    std::vector<Event> out(queue_.begin(), queue_.end());
    queue_.clear();
    return out;
}

size_t EventStream::pending() const {
    std::lock_guard lock(mu_);
    return queue_.size();
}

// ---------------------------------------------------------------------------
// Ledger

Ledger::Ledger(std::vector<MspId> channel_members, std::vector<PdcDefinition> pdcs,
               std::map<std::string, EndorsementPolicy> policies)
    : members_(std::move(channel_members)), policies_(std::move(policies)) {
    if (members_.empty()) throw std::invalid_argument("no members");
    std::set<std::string> seen;
    for (const auto& m : members_)
        if (!seen.insert(m.name).second)
            throw std::invalid_argument("duplicate MSP: " + m.name);
    for (auto& p : pdcs) {
        if (p.read_policy.empty() || p.write_policy.empty())
            throw std::invalid_argument("empty policy for collection " + p.name);
        std::string name = p.name;
        if (!pdcs_.emplace(name, std::move(p)).second)
            throw std::invalid_argument("collection exists: " + name);
    }
}

void Ledger::register_function(const std::string& name, ChaincodeHandler handler) {
    std::lock_guard lock(mu_);
    handlers_[name] = std::move(handler);
}

void Ledger::set_policy(const std::string& function, EndorsementPolicy policy) {
    std::lock_guard lock(mu_);
    policies_[function] = std::move(policy);
}

bool Ledger::is_member(const MspId& msp) const {
    return std::find(members_.begin(), members_.end(), msp) != members_.end();
}

const PdcDefinition& Ledger::find_pdc(const std::string& collection) const {
    auto it = pdcs_.find(collection);
    if (it == pdcs_.end())
        throw std::runtime_error("unknown collection: " + collection);
    return it->second;
}

bool Ledger::check_private_access(const PdcDefinition& pdc, const MspId& caller,
                                  const std::string& key, bool write) const {
    const auto& policy = write ? pdc.write_policy : pdc.read_policy;
    if (!policy.count(caller)) return false;
    if (pdc.owner_scoped && !pdc.admin_override.count(caller)) {
        auto col = pdc_data_.find(pdc.name);
        if (col != pdc_data_.end()) {
            auto kv = col->second.find(key);
            if (kv != col->second.end() && kv->second.second != caller) return false;
        }
    }
    return true;
}

std::string Ledger::next_tx_id() {
    std::ostringstream os;
    os << "tx" << std::setw(8) << std::setfill('0') << tx_counter_++;
    return os.str();
}

TransactionRecord Ledger::submit_transaction(const TransactionProposal& proposal) {
    std::lock_guard lock(mu_);

    TransactionRecord rec;
    rec.tx_id = next_tx_id();
    rec.submitter_msp = proposal.submitter.msp;
    rec.function = proposal.function;
    rec.public_args = proposal.args;

    auto reject = [&](const std::string& why) {
        rec.status = TxStatus::Rejected;
        rec.height = 0;
        rec.write_set.clear();
        rec.events.clear();
        rec.error = why;
        rejected_.push_back(rec);
        metrics_.rejected_tx_count++;
        return rec;
    };

    if (!is_member(proposal.submitter.msp)) return reject("not a channel member");
    auto handler = handlers_.find(proposal.function);
    if (handler == handlers_.end())
        return reject("unknown function: " + proposal.function);

    std::set<MspId> endorsers = proposal.endorsements;
    endorsers.insert(proposal.submitter.msp);
    auto pol = policies_.find(proposal.function);
    if (pol != policies_.end() && !pol->second.satisfied(endorsers))
        return reject("endorsement policy unsatisfied");

    ChaincodeContext ctx(*this, proposal, rec.tx_id);
    try {
        handler->second(ctx);
    } catch (const std::exception& e) {
        return reject(e.what());
    }

    // Commit: apply staged writes at the next height.
    rec.height = log_.size() + 1;
    rec.status = TxStatus::Committed;
    for (const auto& [key, value] : ctx.staged_state_) {
        WriteSetEntry e;
        e.key = key;
        e.value = value;
        e.value_digest = sha256(value);
        rec.write_set.push_back(std::move(e));
        state_[key] = value;
    }
    for (const auto& [ck, vw] : ctx.staged_private_) {
        auto& slot = pdc_data_[ck.first][ck.second];
        int64_t delta = int64_t(vw.first.size()) - int64_t(slot.first.size());
        slot = vw;
        metrics_.pdc_bytes_by_collection[ck.first] =
            uint64_t(int64_t(metrics_.pdc_bytes_by_collection[ck.first]) + delta);
    }
    rec.events = ctx.events_;

    metrics_.committed_tx_count++;
    metrics_.ledger_bytes += rec.serialize().size();
    metrics_.reference_bytes += ctx.reference_bytes_;
    log_.push_back(rec);

    // Deliver events in commit order to matching subscribers.
    for (const auto& ev : rec.events) {
        for (auto& sub : subs_) {
            bool match = sub.pattern == "*" || sub.pattern == ev.name ||
                         (sub.pattern.ends_with("*") &&
                          ev.name.starts_with(
                              sub.pattern.substr(0, sub.pattern.size() - 1)));
            if (match) {
                std::lock_guard slock(sub.stream->mu_);
                sub.stream->queue_.push_back(ev);
            }
        }
    }
    return rec;
}

Bytes Ledger::read_private(const std::string& collection, const std::string& key,
                           const Identity& caller) const {
    std::lock_guard lock(mu_);
    const PdcDefinition& pdc = find_pdc(collection);
    if (!check_private_access(pdc, caller.msp, key, /*write=*/false))
        throw std::runtime_error("access denied to collection " + collection);
    auto col = pdc_data_.find(collection);
    if (col != pdc_data_.end()) {
        auto kv = col->second.find(key);
        if (kv != col->second.end()) return kv->second.first;
    }
    throw std::runtime_error("private key not found: " + collection + "/" + key);
}

void Ledger::write_private(const std::string& collection, const std::string& key,
                           const Bytes& value, const Identity& caller) {
    std::lock_guard lock(mu_);
    const PdcDefinition& pdc = find_pdc(collection);
    if (!check_private_access(pdc, caller.msp, key, /*write=*/true))
        throw std::runtime_error("access denied to collection " + collection);
    auto& slot = pdc_data_[collection][key];
    int64_t delta = int64_t(value.size()) - int64_t(slot.first.size());
    slot = {value, caller.msp};
    metrics_.pdc_bytes_by_collection[collection] =
        uint64_t(int64_t(metrics_.pdc_bytes_by_collection[collection]) + delta);
}

std::optional<Bytes> Ledger::query_state(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = state_.find(key);
    if (it == state_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::pair<std::string, Bytes>> Ledger::query_state_by_prefix(
    const std::string& prefix) const {
    std::lock_guard lock(mu_);
    std::vector<std::pair<std::string, Bytes>> out;
    for (auto it = state_.lower_bound(prefix);
         it != state_.end() && it->first.starts_with(prefix); ++it)
        out.emplace_back(it->first, it->second);
    return out;
}

std::shared_ptr<EventStream> Ledger::subscribe(const std::string& name_pattern,
                                               const Identity& subscriber) {
    std::lock_guard lock(mu_);
    if (!is_member(subscriber.msp))
        throw std::runtime_error("not a channel member");
    auto stream = std::make_shared<EventStream>();
    subs_.push_back({name_pattern, stream});
    return stream;
}

LedgerMetrics Ledger::metrics() const {
    std::lock_guard lock(mu_);
    return metrics_;
}

uint64_t Ledger::height() const {
    std::lock_guard lock(mu_);
    return log_.size();
}

std::string Ledger::export_records() const {
    std::lock_guard lock(mu_);
    std::string out;
    for (const auto& rec : log_) out += base64_encode(rec.serialize()) + "\n";
    for (const auto& rec : rejected_) out += base64_encode(rec.serialize()) + "\n";
    return out;
}

std::string Ledger::export_metrics_csv() const {
    std::lock_guard lock(mu_);
    uint64_t pdc_total = 0;
    for (const auto& [_, v] : metrics_.pdc_bytes_by_collection) pdc_total += v;
    std::ostringstream os;
    os << "height,tx_count,ledger_bytes,reference_bytes,pdc_bytes_total\n";
    os << log_.size() << "," << metrics_.committed_tx_count << ","
       << metrics_.ledger_bytes << "," << metrics_.reference_bytes << ","
       << pdc_total << "\n";
    return os.str();
}

std::map<std::string, Bytes> Ledger::replay(
    const std::vector<TransactionRecord>& log) {
    std::map<std::string, Bytes> state;
    for (const auto& rec : log) {
        if (rec.status != TxStatus::Committed) continue;
        for (const auto& e : rec.write_set) state[e.key] = e.value;
    }
    return state;
}

}  // namespace fslsim
