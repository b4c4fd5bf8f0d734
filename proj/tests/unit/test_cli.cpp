#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "addrparse/cli.hpp"
#include "addrparse/report.hpp"

using namespace addrparse;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("addrparse-cli-" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& f) const { return (path / f).string(); }
};

const char* kConfig = R"({
  "seed": 4,
  "samples_per_country": 12,
  "lexicons": {"l": {"script": "latin", "synthetic_seed": 7, "pool_size": 8}},
  "countries": [
    {"code": "AA", "patterns": [1], "lexicon": "l"},
    {"code": "AB", "patterns": [2], "lexicon": "l"}
  ]
})";

std::vector<std::string> tiny_train_args(const TempDir& d, const std::string& variant, const std::string& out) {
    return {"train", "--train", d / "train.tsv", "--val", d / "val.tsv", "--out-dir", d / out,
            "--variant", variant, "--subword-dim", "4", "--composer-hidden", "5", "--fixed-word-dim", "5",
            "--hidden", "6", "--hash-buckets", "32", "--bpe-merges", "20", "--epochs-max", "2",
            "--batch-size", "4", "--seeds", "1,2"};
}

}  // namespace

TEST_CASE("generate is deterministic and replayable") {
    TempDir d("gen");
    write_text_file(d / "cfg.json", kConfig);
    auto r = cli({"generate", "--config", d / "cfg.json", "--out", d / "a.tsv"});
    REQUIRE(r.code == 0);
    REQUIRE(cli({"generate", "--config", d / "cfg.json", "--out", d / "b.tsv"}).code == 0);
    CHECK(slurp(d / "a.tsv") == slurp(d / "b.tsv"));
    const auto manifest = read_json_file(d / "a.tsv.manifest.json");
    CHECK(manifest["format"] == "addrparse-manifest 1");
    CHECK(manifest["subcommand"] == "generate");
    CHECK(manifest["parameters"]["out"] == d / "a.tsv");

    const auto before = slurp(d / "a.tsv");
    fs::remove(d / "a.tsv");
    REQUIRE(cli({"replay", d / "a.tsv.manifest.json"}).code == 0);
    CHECK(slurp(d / "a.tsv") == before);
}

TEST_CASE("error exit codes") {
    TempDir d("err");
    write_text_file(d / "bad.json", R"({"seed": 1, "samples_per_country": 0, "lexicons": {}, "countries": []})");
    auto r = cli({"generate", "--config", d / "bad.json", "--out", d / "x.tsv"});
    CHECK(r.code == 2);
    CHECK(r.err.find("samples_per_country") != std::string::npos);

    CHECK(cli({"frobnicate"}).code == 1);
    CHECK(cli({"generate"}).code == 1);
    CHECK(cli({"--help"}).code == 0);
    CHECK(cli({"train", "--train", "a", "--val", "b", "--out-dir", "c", "--variant", "bogus"}).code == 1);
    CHECK(cli({"train", "--train", "a", "--val", "b", "--out-dir", "c", "--precision", "half"}).code == 1);
    r = cli({"parse", "--model", d / "missing.model", "--address", "1 main"});
    CHECK(r.code != 0);
    CHECK(r.err.find("missing.model") != std::string::npos);
    CHECK(cli({"eval", "--models", d / "missing.model", "--corpus", d / "c.tsv", "--out", d / "e.json"}).code == 2);
}

TEST_CASE("train, eval, zstat, parse, reorder-study end to end") {
    TempDir d("e2e");
    write_text_file(d / "cfg.json", kConfig);
    REQUIRE(cli({"generate", "--config", d / "cfg.json", "--out", d / "all.tsv"}).code == 0);
    REQUIRE(cli({"split", "--in", d / "all.tsv", "--train-out", d / "train.tsv", "--val-out", d / "val.tsv",
                 "--fraction", "0.75", "--seed", "3"})
                .code == 0);

    auto r = cli(tiny_train_args(d, "composed", "composed"));
    REQUIRE(r.code == 0);
    CHECK(fs::exists(d / "composed/seed-1.model"));
    CHECK(fs::exists(d / "composed/seed-2.history.json"));
    auto fixed_args = tiny_train_args(d, "fixed", "fixed");
    fixed_args.insert(fixed_args.end(), {"--precision", "double"});
    REQUIRE(cli(fixed_args).code == 0);
    CHECK(read_json_file(d / "fixed/manifest.json")["parameters"]["precision"] == "double");

    // Training replays to identical model bytes.
    const auto model_bytes = slurp(d / "composed/seed-1.model");
    fs::remove(d / "composed/seed-1.model");
    REQUIRE(cli({"replay", d / "composed/manifest.json"}).code == 0);
    CHECK(slurp(d / "composed/seed-1.model") == model_bytes);

    r = cli({"eval", "--models", d / "composed/seed-1.model", d / "composed/seed-2.model", "--corpus",
             d / "val.tsv", "--out", d / "ec.json", "--text", d / "ec.txt"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("ALL") != std::string::npos);
    REQUIRE(cli({"eval", "--models", d / "fixed/seed-1.model", d / "fixed/seed-2.model", "--corpus",
                 d / "val.tsv", "--out", d / "ef.json"})
                .code == 0);
    const auto report = report_from_json(read_json_file(d / "ec.json"));
    CHECK(report.seeds == std::vector<std::uint64_t>{1, 2});
    CHECK(report.countries.size() == 2);

    r = cli({"zstat", "--a", d / "ec.json", "--b", d / "ef.json", "--out", d / "z.json"});
    REQUIRE(r.code == 0);
    CHECK(read_json_file(d / "z.json")["format"] == "addrparse-zstat 1");

    const auto eval_bytes = slurp(d / "ec.json");
    const auto z_bytes = slurp(d / "z.json");
    fs::remove(d / "ec.json");
    fs::remove(d / "z.json");
    REQUIRE(cli({"replay", d / "ec.json.manifest.json"}).code == 0);
    REQUIRE(cli({"replay", d / "z.json.manifest.json"}).code == 0);
    CHECK(slurp(d / "ec.json") == eval_bytes);
    CHECK(slurp(d / "z.json") == z_bytes);

    r = cli({"parse", "--model", d / "composed/seed-1.model", "--address", "12 Foo Bar", "--manifest",
             d / "p.manifest.json"});
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    int n = 0;
    for (std::string line; std::getline(lines, line); ++n) CHECK(line.find('\t') != std::string::npos);
    CHECK(n == 3);

    write_text_file(d / "addrs.txt", "1 a b\n\n2 c\n");
    REQUIRE(cli({"parse", "--model", d / "fixed/seed-1.model", "--file", d / "addrs.txt", "--out",
                 d / "tags.txt"})
                .code == 0);
    CHECK(slurp(d / "tags.txt").find("\n\n") != std::string::npos);

    REQUIRE(cli({"reorder-study", "--model", d / "composed/seed-1.model", "--corpus", d / "val.tsv",
                 "--targets", "1,2", "--seed", "1", "--out", d / "ro.json"})
                .code == 0);
    CHECK(read_json_file(d / "ro.json").contains("drop"));
}
