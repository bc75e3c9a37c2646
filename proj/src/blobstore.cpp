#include "fslsim/blobstore.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fslsim {

namespace fs = std::filesystem;

BlobStore::BlobStore(std::string directory) : dir_(std::move(directory)) {
    fs::create_directories(dir_);
    for (const auto& shard : fs::directory_iterator(dir_)) {
        if (!shard.is_directory()) continue;
        for (const auto& entry : fs::directory_iterator(shard.path())) {
            std::string name = entry.path().filename().string();
            if (!Cid::valid(name)) continue;
            std::ifstream in(entry.path(), std::ios::binary);
            Bytes data((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
            blobs_.emplace(Cid(name), std::move(data));
        }
    }
}

std::string BlobStore::blob_path(const Cid& cid) const {
    return dir_ + "/" + cid.text.substr(0, 2) + "/" + cid.text;
}

Cid BlobStore::put(const Bytes& blob) {
    Cid cid = cid_from_bytes(blob);
    std::lock_guard lock(mu_);
    auto [it, inserted] = blobs_.emplace(cid, blob);
    if (inserted && !dir_.empty()) {
        fs::path p = blob_path(cid);
        fs::create_directories(p.parent_path());
        std::ofstream out(p, std::ios::binary);
        out.write(reinterpret_cast<const char*>(blob.data()),
                  std::streamsize(blob.size()));
    }
    return cid;
}

Bytes BlobStore::get(const Cid& cid) const {
    std::lock_guard lock(mu_);
    auto it = blobs_.find(cid);
    if (it == blobs_.end()) throw std::runtime_error("blob not found: " + cid.text);
    return it->second;
}

bool BlobStore::contains(const Cid& cid) const {
    std::lock_guard lock(mu_);
    return blobs_.count(cid) > 0;
}

size_t BlobStore::size() const {
    std::lock_guard lock(mu_);
    return blobs_.size();
}

size_t BlobStore::gc(const std::set<Cid>& live_set) {
    std::lock_guard lock(mu_);
    size_t removed = 0;
    for (auto it = blobs_.begin(); it != blobs_.end();) {
        if (live_set.count(it->first) == 0) {
            if (!dir_.empty()) fs::remove(blob_path(it->first));
            it = blobs_.erase(it);
            ++removed;
        } else {
            ++it;
        }
    }
    return removed;
}

}  // namespace fslsim
