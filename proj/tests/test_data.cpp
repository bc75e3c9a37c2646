#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "fslsim/data.hpp"

using namespace fslsim;
namespace fs = std::filesystem;

namespace {

// every index appears exactly once across all clients
void check_exact_cover(const DatasetPartition& part, size_t n) {
    std::vector<int> seen(n, 0);
    for (const auto& [_, indices] : part)
        for (size_t i : indices) {
            REQUIRE(i < n);
            seen[i]++;
        }
    for (size_t i = 0; i < n; ++i) CHECK(seen[i] == 1);
}

}  // namespace

TEST_CASE("synthetic dataset") {
    Dataset a = make_synthetic(3, 2, 300, 9);
    Dataset b = make_synthetic(3, 2, 300, 9);
    Dataset c = make_synthetic(3, 2, 300, 10);
    CHECK(a.size() == 300);
    CHECK(a.features.cols == 2);
    CHECK(a.features.data == b.features.data);
    CHECK(a.labels == b.labels);
    CHECK(a.features.data != c.features.data);
    for (int l : a.labels) {
        CHECK(l >= 0);
        CHECK(l < 3);
    }
    // balanced classes
    std::vector<int> hist(3, 0);
    for (int l : a.labels) hist[l]++;
    CHECK(hist[0] == 100);
    CHECK(hist[1] == 100);
    CHECK(hist[2] == 100);

    CHECK_THROWS(make_synthetic(1, 2, 100, 1));
    CHECK_THROWS(make_synthetic(3, 0, 100, 1));
    CHECK_THROWS(make_synthetic(5, 2, 3, 1));
}

TEST_CASE("subset and batches") {
    Dataset d = make_synthetic(3, 2, 30, 1);
    Dataset s = d.subset({5, 10, 15});
    CHECK(s.size() == 3);
    CHECK(s.labels[0] == d.labels[5]);
    CHECK(s.features.at(1, 0) == d.features.at(10, 0));
    CHECK(s.features.at(2, 1) == d.features.at(15, 1));

    Matrix bx = d.batch_features(4, 3);
    auto by = d.batch_labels(4, 3);
    CHECK(bx.rows == 3);
    CHECK(by.size() == 3);
    CHECK(bx.at(0, 1) == d.features.at(4, 1));
    CHECK(by[2] == d.labels[6]);
}

TEST_CASE("client ids") {
    auto ids = client_ids(3);
    CHECK(ids == std::vector<std::string>{"client1", "client2", "client3"});
}

TEST_CASE("iid partition") {
    Dataset d = make_synthetic(3, 2, 1000, 4);
    auto part = partition_iid(d, 7, 42);
    CHECK(part.size() == 7);
    check_exact_cover(part, 1000);

    // near-equal shard sizes
    size_t mn = SIZE_MAX, mx = 0;
    for (const auto& [_, v] : part) {
        mn = std::min(mn, v.size());
        mx = std::max(mx, v.size());
    }
    CHECK(mx - mn <= 1);

    // deterministic in the seed
    auto again = partition_iid(d, 7, 42);
    CHECK(part == again);
    auto different = partition_iid(d, 7, 43);
    CHECK(part != different);

    CHECK_THROWS(partition_iid(d, 0, 1));
    CHECK_THROWS(partition_iid(make_synthetic(3, 2, 5, 1), 6, 1));
}

TEST_CASE("dirichlet partition") {
    Dataset d = make_synthetic(3, 2, 3000, 8);
    for (double alpha : {0.1, 0.5, 5.0}) {
        auto part = partition_dirichlet(d, 10, alpha, 31);
        CHECK(part.size() == 10);
        check_exact_cover(part, 3000);
        for (const auto& [_, v] : part) CHECK_FALSE(v.empty());
    }

    // determinism
    CHECK(partition_dirichlet(d, 10, 0.3, 7) == partition_dirichlet(d, 10, 0.3, 7));

    // smaller alpha concentrates classes: compare per-client label entropy
    auto skewed = partition_dirichlet(d, 10, 0.05, 11);
    auto smooth = partition_dirichlet(d, 10, 50.0, 11);
    auto mean_entropy = [&](const DatasetPartition& p) {
        double total = 0.0;
        for (const auto& [_, idx] : p) {
            std::vector<double> hist(3, 0.0);
            for (size_t i : idx) hist[d.labels[i]] += 1.0;
            double h = 0.0;
            for (double c : hist)
                if (c > 0) {
                    double q = c / double(idx.size());
                    h -= q * std::log(q);
                }
            total += h;
        }
        return total / double(p.size());
    };
    CHECK(mean_entropy(skewed) < mean_entropy(smooth));

    CHECK_THROWS_WITH(partition_dirichlet(d, 10, 0.0, 1), "alpha must be positive");
    CHECK_THROWS(partition_dirichlet(d, 10, -0.5, 1));
    CHECK_THROWS(partition_dirichlet(d, 0, 0.5, 1));
    // 10 clients cannot all be nonempty with 6 samples
    Dataset tiny = make_synthetic(3, 2, 6, 1);
    CHECK_THROWS_WITH(partition_dirichlet(tiny, 10, 0.5, 1),
                      "degenerate partition");
}

TEST_CASE("idx loader") {
    fs::path dir = fs::temp_directory_path() / "fslsim-idx-test";
    fs::create_directories(dir);
    fs::path img_path = dir / "images";
    fs::path lab_path = dir / "labels";

    auto be32 = [](std::ofstream& f, uint32_t v) {
        for (int i = 3; i >= 0; --i) f.put(char((v >> (8 * i)) & 0xFF));
    };
    {
        std::ofstream img(img_path, std::ios::binary);
        be32(img, 0x803);
        be32(img, 2);  // 2 images
        be32(img, 2);  // 2x3
        be32(img, 3);
        for (int i = 0; i < 12; ++i) img.put(char(i * 20));
        std::ofstream lab(lab_path, std::ios::binary);
        be32(lab, 0x801);
        be32(lab, 2);
        lab.put(char(7));
        lab.put(char(0));
    }

    Dataset d = load_idx(img_path.string(), lab_path.string());
    CHECK(d.size() == 2);
    CHECK(d.features.cols == 6);
    CHECK(d.labels == std::vector<int>{7, 0});
    CHECK(d.features.at(0, 0) == doctest::Approx(0.0));
    CHECK(d.features.at(0, 1) == doctest::Approx(20.0 / 255.0));
    CHECK(d.features.at(1, 5) == doctest::Approx(220.0 / 255.0));

    CHECK_THROWS(load_idx((dir / "missing").string(), lab_path.string()));
    CHECK_THROWS(load_idx(lab_path.string(), lab_path.string()));  // bad magic
    fs::remove_all(dir);
}

TEST_CASE("evaluate") {
    Dataset train = make_synthetic(3, 2, 600, 2);
    auto built = build_model("tiny-mlp", 2);
    auto [acc, loss] = evaluate(built.model, built.fc_params, built.fs_params,
                                train);
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
    CHECK(std::isfinite(loss));
    // untrained model is near chance on a 3-class task
    CHECK(loss > 0.5);

    Dataset empty;
    CHECK_THROWS(evaluate(built.model, built.fc_params, built.fs_params, empty));
}
