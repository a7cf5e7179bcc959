#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "segclass/pipeline.hpp"
#include "synthetic.hpp"

using namespace segclass;

namespace {

const std::filesystem::path kFixtures = SEGCLASS_FIXTURE_DIR;

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::size_t line_count(const std::filesystem::path& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) ++n;
    }
    return n;
}

std::filesystem::path fresh_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Small but trainable settings for pipeline round-trips.
nlohmann::json pipeline_config(const std::filesystem::path& corpus,
                               const std::filesystem::path& out_dir) {
    return nlohmann::json{
        {"seed", 5},
        {"corpus", {{"path", corpus.string()}}},
        {"split", {{"ratios", {0.6, 0.2, 0.2}}}},
        {"encoder", {{"hidden_size", 32}, {"max_len", 64}}},
        {"head", {{"filters_per_width", 8}, {"dense_dim", 16}}},
        {"train",
         {{"epochs", 3},
          {"batch_size", 4},
          {"head_step_size", 0.01},
          {"smooth_class_weights", true}}},
        {"output", {{"dir", out_dir.string()}}},
    };
}

} // namespace

TEST_CASE("run config resolution") {
    SUBCASE("defaults fill in and the base seed propagates") {
        const auto config = resolve_run_config(nlohmann::json{{"seed", 99}}, {}, false);
        CHECK(config.base_seed == 99);
        CHECK(config.split_seed == 99);
        CHECK(config.encoder.seed == 99);
        CHECK(config.head.seed == 99);
        CHECK(config.train.seed == 99);
        CHECK(config.head.segment_count == 5);
        CHECK(config.head.hidden_size == 768);
        CHECK(config.head.n_labels == 18);
        CHECK(config.train.decision_threshold == 0.5);
    }
    SUBCASE("explicit component seeds win over the base seed") {
        const auto config = resolve_run_config(
            nlohmann::json{{"seed", 99}, {"split", {{"seed", 3}}}}, {}, false);
        CHECK(config.split_seed == 3);
        CHECK(config.train.seed == 99);
    }
    SUBCASE("dotted overrides apply after the file") {
        const auto config = resolve_run_config(nlohmann::json{{"train", {{"epochs", 2}}}},
                                               {"train.epochs=7", "head.dense_dim=42"}, false);
        CHECK(config.train.epochs == 7);
        CHECK(config.head.dense_dim == 42);
    }
    SUBCASE("unknown keys are rejected") {
        CHECK_THROWS_WITH_AS(resolve_run_config(nlohmann::json{{"trian", {{"epochs", 2}}}}, {}, false),
                             doctest::Contains("trian"), ConfigError);
        CHECK_THROWS_AS(
            resolve_run_config(nlohmann::json{{"train", {{"epoch", 2}}}}, {}, false),
            ConfigError);
        CHECK_THROWS_AS(resolve_run_config({}, {"train.epoch=2"}, false), ConfigError);
        CHECK_THROWS_AS(resolve_run_config({}, {"train.epochs"}, false), ConfigError);
    }
    SUBCASE("sixth-segment option widens the head input") {
        const auto config = resolve_run_config(
            nlohmann::json{{"segmenter", {{"keywords_as_sixth_segment", true}}}}, {}, false);
        CHECK(config.head.segment_count == 6);
    }
    SUBCASE("environment overrides between file and flags") {
        setenv("SEGCLASS_TRAIN_EPOCHS", "11", 1);
        const auto config = resolve_run_config({}, {}, true);
        CHECK(config.train.epochs == 11);
        const auto flag_wins = resolve_run_config({}, {"train.epochs=12"}, true);
        CHECK(flag_wins.train.epochs == 12);
        unsetenv("SEGCLASS_TRAIN_EPOCHS");

        setenv("SEGCLASS_TRAIN_NO_SUCH_KEY", "1", 1);
        CHECK_THROWS_AS(resolve_run_config({}, {}, true), ConfigError);
        unsetenv("SEGCLASS_TRAIN_NO_SUCH_KEY");
    }
    SUBCASE("split ratios must be a triple") {
        CHECK_THROWS_AS(
            resolve_run_config(nlohmann::json{{"split", {{"ratios", {0.5, 0.5}}}}}, {}, false),
            ConfigError);
    }
    SUBCASE("unknown adapter ids fail at resolve time") {
        CHECK_THROWS_AS(resolve_run_config(
                            nlohmann::json{{"encoder", {{"encoder_id", "no-such-encoder"}}}}, {},
                            false),
                        ConfigError);
        CHECK_THROWS_AS(resolve_run_config(
                            nlohmann::json{{"segmenter", {{"provider", "no-such-provider"}}}}, {},
                            false),
                        ConfigError);
    }
}

TEST_CASE("prepare lays out splits, bundles, label space and weights") {
    const auto out = fresh_dir("segclass_prepare_test");
    auto doc = pipeline_config(kFixtures / "tiny_corpus.jsonl", out);
    doc["split"]["ratios"] = {0.8, 0.1, 0.1}; // 3 records all land in train
    const auto config = resolve_run_config(doc, {}, false);

    run_prepare(config);

    CHECK(line_count(RunPaths(out).bundle_file("train")) == 3);
    CHECK(line_count(RunPaths(out).split_file("train")) == 3);
    CHECK(line_count(RunPaths(out).split_file("validation")) == 0);
    CHECK(std::filesystem::exists(RunPaths(out).resolved_config_file()));
    CHECK(std::filesystem::exists(RunPaths(out).meta_file()));
    CHECK(std::filesystem::exists(RunPaths(out).rejections_file()));

    const auto space_doc = nlohmann::json::parse(slurp(RunPaths(out).label_space_file()));
    CHECK(space_doc.at("consolidated_codes").size() == 18);

    const auto weights_doc = nlohmann::json::parse(slurp(RunPaths(out).class_weights_file()));
    double weight_sum = 0.0;
    for (const auto& [label, w] : weights_doc.at("weights").items()) weight_sum += w.get<double>();
    CHECK(weight_sum == doctest::Approx(1.0).epsilon(1e-9));

    std::filesystem::remove_all(out);
}

TEST_CASE("full prepare-train-evaluate-report round trip") {
    const auto out = fresh_dir("segclass_e2e_test");
    const auto corpus_path = out / "corpus.jsonl";
    const std::vector<std::set<std::string>> label_sets = {
        {"AGRI"}, {"BIOC"}, {"MEDI"}, {"AGRI", "BIOC"}, {"SOCI"},
    };
    write_corpus(corpus_path, synthetic::memorization_corpus(40, label_sets, 123));
    const auto config = resolve_run_config(pipeline_config(corpus_path, out), {}, false);

    run_prepare(config);
    run_train(config);
    CHECK(std::filesystem::exists(RunPaths(out).checkpoint_dir() / "params.bin"));
    CHECK(std::filesystem::exists(RunPaths(out).checkpoint_dir() / "history.csv"));
    CHECK(std::filesystem::exists(out / "cache" / "train_embeddings.bin"));

    run_evaluate(config);
    const auto first_report = slurp(RunPaths(out).reports_dir() / "report.json");
    run_evaluate(config); // second pass reads the embedding cache
    CHECK(slurp(RunPaths(out).reports_dir() / "report.json") == first_report);
    const auto report_doc =
        nlohmann::json::parse(slurp(RunPaths(out).reports_dir() / "report.json"));
    CHECK(report_doc.at("per_label").size() == 18);
    CHECK(report_doc.at("n_samples").get<int>() == 8);
    CHECK(report_doc.at("threshold").get<double>() == 0.5);

    const std::string markdown = run_report(config);
    CHECK(markdown.find("| Label |") != std::string::npos);
    CHECK(std::filesystem::exists(RunPaths(out).reports_dir() / "report.md"));

    std::filesystem::remove_all(out);
}

TEST_CASE("evaluate on frozen predictions reproduces the golden per-label file") {
    // Hand-computed golden: over the six fixture docs,
    //   AGRI: truths g1 g2 g5, predicted g1 g2 g5 -> TP=3 FP=0 FN=0 -> 1, 1, 1
    //   BIOC: truths g2 g3 g6, predicted g6       -> TP=1 FP=0 FN=2 -> 1, 1/3, 1/2
    //   MEDI: truths g4 g5,    predicted g3 g5    -> TP=1 FP=1 FN=1 -> 1/2, 1/2, 1/2
    // and every other label has no truth and no prediction.
    const auto out = fresh_dir("segclass_golden_test");
    auto doc = pipeline_config(kFixtures / "eval_docs.jsonl", out);
    doc["split"]["ratios"] = {0.0, 0.0, 1.0}; // everything into the test split
    doc["eval"] = {{"predictions", (kFixtures / "eval_predictions.jsonl").string()}};
    const auto config = resolve_run_config(doc, {}, false);

    run_prepare(config);
    run_evaluate(config);

    CHECK(slurp(RunPaths(out).reports_dir() / "per_label.csv") ==
          slurp(kFixtures / "golden_per_label.csv"));

    // Independent check of the golden numbers: double-loop confusion counts
    // over the fixture predictions thresholded at 0.5.
    {
        const auto& space = LabelSpace::standard();
        const auto docs = load_corpus(kFixtures / "eval_docs.jsonl", space).records;
        LabelSets preds, truths;
        std::ifstream in(kFixtures / "eval_predictions.jsonl");
        std::string line;
        std::size_t row = 0;
        while (std::getline(in, line)) {
            const auto doc = nlohmann::json::parse(line);
            REQUIRE(doc.at("doc_id") == docs[row].doc_id);
            std::set<std::string> pred;
            const auto probs = doc.at("probabilities").get<std::vector<double>>();
            for (std::size_t i = 0; i < probs.size(); ++i) {
                if (probs[i] >= 0.5) pred.insert(space.consolidated_codes()[i]);
            }
            preds.push_back(pred);
            truths.push_back(decode_labels(encode_labels(docs[row].subject_areas, space), space));
            ++row;
        }
        const auto counts = oracle::confusion(preds, truths, space.consolidated_codes());
        CHECK(counts.at("AGRI").tp == 3);
        CHECK(counts.at("AGRI").fp == 0);
        CHECK(counts.at("AGRI").fn == 0);
        CHECK(counts.at("BIOC").tp == 1);
        CHECK(counts.at("BIOC").fn == 2);
        CHECK(counts.at("MEDI").tp == 1);
        CHECK(counts.at("MEDI").fp == 1);
        CHECK(counts.at("MEDI").fn == 1);
        const auto golden_bioc = oracle::prf1(1, 0, 2);
        CHECK(golden_bioc.r == doctest::Approx(1.0 / 3.0));
        CHECK(golden_bioc.f1 == doctest::Approx(0.5));
    }

    // The no-label sample g4 is visible in the scalars.
    const auto report_doc =
        nlohmann::json::parse(slurp(RunPaths(out).reports_dir() / "report.json"));
    CHECK(report_doc.at("no_label_count").get<int>() == 1);

    std::filesystem::remove_all(out);
}

TEST_CASE("predict with an all-zero head emits 0.5 everywhere and all labels") {
    const auto out = fresh_dir("segclass_predict_test");

    TrainedModel model;
    model.encoder.hidden_size = 32;
    model.encoder.max_len = 64;
    model.head_config.segment_count = 5;
    model.head_config.hidden_size = 32;
    model.head_config.filters_per_width = 8;
    model.head_config.dense_dim = 16;
    model.params = HeadParameters::zeros(model.head_config);
    std::map<std::string, std::int64_t> freq;
    for (const auto& code : LabelSpace::standard().consolidated_codes()) freq[code] = 1;
    model.weights = class_weights_from_frequencies(freq);
    model.history.push_back({1, 0.5, std::numeric_limits<double>::quiet_NaN()});
    save_checkpoint(model, RunPaths(out).checkpoint_dir());

    auto doc = pipeline_config(kFixtures / "tiny_corpus.jsonl", out);
    const auto config = resolve_run_config(doc, {}, false);
    const auto predictions_path = out / "predictions.jsonl";
    run_predict(config, kFixtures / "tiny_corpus.jsonl", predictions_path);

    std::ifstream in(predictions_path);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        const auto row = nlohmann::json::parse(line);
        ++rows;
        for (const auto& p : row.at("probabilities")) CHECK(p.get<double>() == 0.5);
        CHECK(row.at("predicted_labels").size() == 18); // threshold comparison is inclusive
    }
    CHECK(rows == 3);

    std::filesystem::remove_all(out);
}

TEST_CASE("pipeline failure modes carry one-line diagnostics") {
    const auto out = fresh_dir("segclass_fail_test");
    const auto config = resolve_run_config(pipeline_config(out / "missing.jsonl", out), {}, false);

    CHECK_THROWS_AS(run_prepare(config), IoError);           // unreadable corpus
    CHECK_THROWS_AS(run_train(config), IoError);             // prepare has not run
    CHECK_THROWS_AS(run_evaluate(config), CheckpointError);  // no checkpoint
    CHECK_THROWS_AS(run_report(config), IoError);            // no report yet

    std::filesystem::remove_all(out);
}
