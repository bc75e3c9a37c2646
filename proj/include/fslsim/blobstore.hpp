#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>

#include "fslsim/bytes.hpp"
#include "fslsim/cid.hpp"

namespace fslsim {

// Local content-addressed store standing in for IPFS / client-managed storage.
// In-memory by default; when given a directory, blobs are mirrored to
// <dir>/<first-2-chars-of-cid>/<cid> as raw bytes.
class BlobStore {
public:
    BlobStore() = default;
    explicit BlobStore(std::string directory);

    Cid put(const Bytes& blob);
    Bytes get(const Cid& cid) const;
    bool contains(const Cid& cid) const;
    size_t size() const;

    // Removes every blob not in live_set; returns number removed.
    // Caller must guarantee no concurrent access.
    size_t gc(const std::set<Cid>& live_set);

private:
    std::string blob_path(const Cid& cid) const;

    mutable std::mutex mu_;
    std::map<Cid, Bytes> blobs_;
    std::string dir_;
};

}  // namespace fslsim
