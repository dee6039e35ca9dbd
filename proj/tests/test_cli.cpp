#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace fs = std::filesystem;

namespace {

std::string bin() {
    const char* b = std::getenv("FLOWRECT_BIN");
    REQUIRE(b != nullptr);
    return b;
}

struct RunResult {
    int code;
    std::string output;
};

RunResult run(const std::string& args) {
    const fs::path log = fs::temp_directory_path() / "flowrect_cli_out.txt";
    const std::string cmd = bin() + " " + args + " > " + log.string() + " 2>&1";
    const int raw = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WEXITSTATUS(raw), ss.str()};
}

fs::path work_dir() {
    auto d = fs::temp_directory_path() / "flowrect_cli_test";
    fs::create_directories(d);
    return d;
}

nlohmann::json manifest(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    return nlohmann::json::parse(in);
}

// shared tiny fixture: dataset + short-trained checkpoint
struct Fixture {
    fs::path dir = work_dir();
    fs::path data = dir / "data";
    fs::path ckpt = dir / "model.frcm";

    Fixture() {
        if (fs::exists(data / "manifest.json") && fs::exists(ckpt)) return;
        REQUIRE(run("gen-data --out " + data.string() +
                    " --size 12 --frames 4 --classes 4 --count 3 --data-seed 1")
                    .code == 0);
        REQUIRE(run("train --data-dir " + data.string() +
                    " --hidden 8 --time-features 4 --steps 25 --batch 1 --seed 2 --out " +
                    ckpt.string())
                    .code == 0);
    }

    std::string edit_base(const std::string& out_name, bool with_steps = true) const {
        return "edit --ckpt " + ckpt.string() + " --src " + (data / "clip_000.frct").string() +
               " --edit-frame " + (data / "clip_000_edit.frct").string() + " --out " +
               (dir / out_name).string() + (with_steps ? " --steps 6" : "");
    }
};

}  // namespace

TEST_CASE("usage errors exit with code 2") {
    CHECK(run("--help").code == 0);
    CHECK(run("definitely-not-a-command").code == 2);
    CHECK(run("edit").code == 2);  // missing required flags
    auto r = run("edit --ckpt x --src y");
    CHECK(r.code == 2);
}

TEST_CASE("gen-data digests are stable across reruns") {
    auto dir = work_dir();
    auto a = dir / "gen_a", b = dir / "gen_b";
    const std::string flags = " --size 12 --frames 4 --classes 4 --count 2 --data-seed 9";
    REQUIRE(run("gen-data --out " + a.string() + flags).code == 0);
    REQUIRE(run("gen-data --out " + b.string() + flags).code == 0);
    auto ma = manifest(a / "manifest.json"), mb = manifest(b / "manifest.json");
    CHECK(ma["outputs"]["clip_000"]["digest"] == mb["outputs"]["clip_000"]["digest"]);
    CHECK(ma["outputs"]["dataset_csv"]["digest"] == mb["outputs"]["dataset_csv"]["digest"]);
    CHECK(ma["outputs"]["clip_001_flow"]["digest"] == mb["outputs"]["clip_001_flow"]["digest"]);
}

TEST_CASE("train --data-dir conflicts with inline dataset flags") {
    Fixture f;
    auto r = run("train --data-dir " + f.data.string() + " --motion translate --steps 1 --out " +
                 (f.dir / "x.frcm").string());
    CHECK(r.code == 2);
    CHECK(r.output.find("--data-dir") != std::string::npos);
    CHECK(r.output.find("--motion") != std::string::npos);
}

TEST_CASE("edit with cache off evaluates the source branch every step") {
    Fixture f;
    auto r = run(f.edit_base("off.frct") + " --delta off --trace " + (f.dir / "off.csv").string());
    REQUIRE(r.code == 0);
    std::ifstream in(f.dir / "off.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "step,t,dt,cache_hit,d_cum,src_evals,tar_evals");
    int src_total = 0, rows = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto last_two = line.rfind(',');
        const auto prev = line.rfind(',', last_two - 1);
        src_total += std::stoi(line.substr(prev + 1, last_two - prev - 1));
        rows++;
    }
    CHECK(rows == 6);
    CHECK(src_total == 6);
}

TEST_CASE("lambda 0 and 1 share the noise stream but not the output") {
    Fixture f;
    REQUIRE(run(f.edit_base("l0.frct") + " --lambda 0 --seed 5").code == 0);
    REQUIRE(run(f.edit_base("l1.frct") + " --lambda 1 --seed 5").code == 0);
    auto m0 = manifest(f.dir / "l0.frct.manifest.json");
    auto m1 = manifest(f.dir / "l1.frct.manifest.json");
    CHECK(m0["noise_digest"] == m1["noise_digest"]);
    CHECK(m0["outputs"]["out"]["digest"] != m1["outputs"]["out"]["digest"]);
}

TEST_CASE("edit rerun with identical flags reproduces the output digest") {
    Fixture f;
    REQUIRE(run(f.edit_base("r1.frct") + " --seed 11").code == 0);
    REQUIRE(run(f.edit_base("r2.frct") + " --seed 11").code == 0);
    auto m1 = manifest(f.dir / "r1.frct.manifest.json");
    auto m2 = manifest(f.dir / "r2.frct.manifest.json");
    CHECK(m1["outputs"]["out"]["digest"] == m2["outputs"]["out"]["digest"]);
}

TEST_CASE("config file values apply and flags override them, per key") {
    Fixture f;
    struct KeyCase {
        std::string key, file_value, flag, flag_value;
    };
    const std::vector<KeyCase> cases = {
        {"lambda", "0.25", "--lambda", "0.75"},
        {"guidance", "2", "--guidance", "3"},
        {"t-max", "0.9", "--t-max", "0.8"},
        {"beta", "0.01", "--beta", "0.02"},
        {"alpha", "0.5", "--alpha", "0.25"},
        {"delta", "0.2", "--delta", "0.3"},
        {"steps", "5", "--steps", "7"},
        {"solver", "heun", "--solver", "euler"},
        {"seed", "21", "--seed", "22"},
    };
    auto manifest_key = [](std::string k) {
        for (auto& ch : k)
            if (ch == '-') ch = '_';
        return k;
    };
    for (const auto& c : cases) {
        const fs::path cfg_path = f.dir / "edit.cfg";
        {
            std::ofstream cfg(cfg_path);
            cfg << "[edit]\n" << c.key << " = " << c.file_value << "\n";
        }
        const bool with_steps = c.key != "steps";
        auto r1 = run(f.edit_base("cfg1.frct", with_steps) + " --config " + cfg_path.string());
        REQUIRE(r1.code == 0);
        auto m1 = manifest(f.dir / "cfg1.frct.manifest.json");
        {
            const auto got = m1["config"][manifest_key(c.key)];
            const std::string gs = got.is_string() ? got.get<std::string>() : got.dump();
            CHECK(gs.find(c.file_value) != std::string::npos);
        }
        auto r2 = run(f.edit_base("cfg2.frct", with_steps) + " --config " + cfg_path.string() +
                      " " + c.flag + " " + c.flag_value);
        REQUIRE(r2.code == 0);
        auto m2 = manifest(f.dir / "cfg2.frct.manifest.json");
        const auto got2 = m2["config"][manifest_key(c.key)];
        const std::string gs2 = got2.is_string() ? got2.get<std::string>() : got2.dump();
        CHECK(gs2.find(c.flag_value) != std::string::npos);
    }
}

TEST_CASE("divergence exits with code 4") {
    Fixture f;
    auto r = run(f.edit_base("blow.frct") + " --lambda 1e9");
    CHECK(r.code == 4);
    CHECK(r.output.find("lambda") != std::string::npos);
}

TEST_CASE("io errors exit with code 3") {
    Fixture f;
    auto r = run("edit --ckpt /nonexistent.frcm --src " + (f.data / "clip_000.frct").string() +
                 " --edit-frame " + (f.data / "clip_000_edit.frct").string() + " --out " +
                 (f.dir / "x.frct").string());
    CHECK(r.code == 3);
}

TEST_CASE("eval writes the metrics csv") {
    Fixture f;
    REQUIRE(run(f.edit_base("ev.frct") + " --seed 3").code == 0);
    auto r = run("eval --video " + (f.dir / "ev.frct").string() + " --src " +
                 (f.data / "clip_000.frct").string() + " --edit-frame " +
                 (f.data / "clip_000_edit.frct").string() + " --out " +
                 (f.dir / "metrics.csv").string());
    REQUIRE(r.code == 0);
    std::ifstream in(f.dir / "metrics.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "tc,efc,ovc,aec,mse");
}

TEST_CASE("ablate produces the six-row table") {
    Fixture f;
    auto r = run("ablate --ckpt " + f.ckpt.string() + " --data " + f.data.string() + " --out " +
                 (f.dir / "abl").string() + " --steps 4 --max-clips 2");
    REQUIRE(r.code == 0);
    std::ifstream in(f.dir / "abl" / "ablation.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "setting,tc,efc,ovc,aec,mse,src_evals,tar_evals");
    std::vector<std::string> settings;
    while (std::getline(in, line))
        if (!line.empty()) settings.push_back(line.substr(0, line.find(',')));
    CHECK(settings ==
          std::vector<std::string>{"i2v", "i2v_init", "no_vfr_sd", "no_smpi", "no_dcache", "full"});
    CHECK(fs::exists(f.dir / "abl" / "ablation_timing.csv"));
}

TEST_CASE("ot-bench rerun digests match") {
    auto dir = work_dir();
    const std::string flags = " --steps-list 10,20 --lambda-list 1 --solver-list euler";
    REQUIRE(run("ot-bench --out " + (dir / "ot1.csv").string() + flags).code == 0);
    REQUIRE(run("ot-bench --out " + (dir / "ot2.csv").string() + flags).code == 0);
    CHECK(manifest(dir / "ot1.csv.manifest.json")["outputs"]["table"]["digest"] ==
          manifest(dir / "ot2.csv.manifest.json")["outputs"]["table"]["digest"]);
}
