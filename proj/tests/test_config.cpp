#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fslsim/config.hpp"

using namespace fslsim;

TEST_CASE("ini parsing") {
    ConfigMap kv = parse_config_text(
        "# leading comment\n"
        "[scenario]\n"
        "clients = 5\n"
        "model = tiny-mlp   # trailing comment\n"
        "data = \"synthetic\"\n"
        "; another comment\n"
        "\n"
        "[train]\n"
        "batch = 16 ; also stripped\n");
    CHECK(kv.at("scenario.clients") == "5");
    CHECK(kv.at("scenario.model") == "tiny-mlp");
    CHECK(kv.at("scenario.data") == "synthetic");
    CHECK(kv.at("train.batch") == "16");
    CHECK(kv.size() == 4);

    // a # without preceding whitespace stays part of the value
    ConfigMap hash = parse_config_text("[scenario]\nmodel = tiny#mlp\n");
    CHECK(hash.at("scenario.model") == "tiny#mlp");
}

TEST_CASE("ini errors carry line numbers") {
    CHECK_THROWS_WITH(parse_config_text("[scenario\nclients = 5\n"),
                      "config line 1: malformed section header");
    CHECK_THROWS_WITH(parse_config_text("[scenario]\nno equals here\n"),
                      "config line 2: expected key = value");
}

TEST_CASE("scenario mapping") {
    ConfigMap kv = parse_config_text(
        "[scenario]\n"
        "clients = 4\n"
        "partition = dirichlet\n"
        "alpha = 0.3\n"
        "scheduler = concurrent\n"
        "[train]\n"
        "epochs = 7\n"
        "seed = 42\n");
    ScenarioConfig cfg = scenario_from_config(kv);
    CHECK(cfg.n_clients == 4);
    CHECK(cfg.partition == PartitionMode::Dirichlet);
    CHECK(cfg.alpha == doctest::Approx(0.3));
    CHECK(cfg.scheduler == SchedulerMode::Concurrent);
    CHECK(cfg.train.epochs == 7);
    CHECK(cfg.train.seed == 42);

    // defaults survive when keys are absent
    CHECK(cfg.train.batch == 32);
    CHECK(cfg.model_spec == "tiny-mlp");
}

TEST_CASE("scenario validation") {
    auto with = [](const std::string& body) {
        return scenario_from_config(parse_config_text(body));
    };
    CHECK_THROWS(with("[scenario]\nwarp_speed = 9\n"));  // unknown key
    CHECK_THROWS(with("[scenario]\npartition = pie\n"));
    CHECK_THROWS(with("[scenario]\nscheduler = chaotic\n"));
    CHECK_THROWS(with("[scenario]\nclients = many\n"));
    CHECK_THROWS_WITH(with("[scenario]\npartition = dirichlet\nalpha = 0\n"),
                      "alpha must be positive");
    // alpha is only validated when the dirichlet partitioner is selected
    CHECK_NOTHROW(with("[scenario]\npartition = iid\nalpha = 0\n"));
}

TEST_CASE("config echo roundtrips") {
    ScenarioConfig cfg;
    cfg.n_clients = 6;
    cfg.partition = PartitionMode::Dirichlet;
    cfg.alpha = 0.7;
    cfg.train.epochs = 9;
    ScenarioConfig again =
        scenario_from_config(parse_config_text(scenario_to_text(cfg)));
    CHECK(again.n_clients == 6);
    CHECK(again.partition == PartitionMode::Dirichlet);
    CHECK(again.alpha == doctest::Approx(0.7));
    CHECK(again.train.epochs == 9);
}
