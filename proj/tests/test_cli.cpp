#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const std::string cli = RAN_CLI_PATH;

struct Result {
    int exit_code;
    std::string out;
};

Result run(const std::string& args) {
    const std::string out_file = "cli_stdout.txt";
    const std::string cmd = cli + " " + args + " > " + out_file + " 2>&1";
    const int raw = std::system(cmd.c_str());
    Result r;
    r.exit_code = WEXITSTATUS(raw);
    std::ifstream f(out_file);
    std::stringstream ss;
    ss << f.rdbuf();
    r.out = ss.str();
    return r;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct WorkDir {
    fs::path dir;
    explicit WorkDir(const std::string& name) : dir(fs::path("cli_work") / name) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    std::string operator/(const std::string& p) const {
        return (dir / p).string();
    }
};

}  // namespace

TEST_CASE("cli: usage errors exit 2") {
    CHECK(run("train --train no_such_manifest.csv").exit_code == 2);
    CHECK(run("eval --checkpoint missing.bin --data missing.csv").exit_code == 2);
    CHECK(run("crop --image nope.pgm").exit_code == 2);
    CHECK(run("nonsense").exit_code == 2);
}

TEST_CASE("cli: synth then crop emits the fixed-crop geometry") {
    WorkDir wd("crop");
    auto synth = run("synth --out " + (wd / "ds") +
                     " --train-count 2 --test-count 1 --seed 3");
    REQUIRE(synth.exit_code == 0);

    auto crop = run("crop --image " + (wd / "ds/images/train_0.pgm") +
                    " --scheme fixed --out " + (wd / "crops"));
    REQUIRE(crop.exit_code == 0);
    const std::string csv = slurp(wd / "crops/crops.csv");
    CHECK(csv == "index,scheme,x,y,w,h\n"
                 "1,fixed,0,0,48,48\n"
                 "2,fixed,16,0,48,48\n"
                 "3,fixed,8,16,48,48\n"
                 "4,fixed,3,3,57,57\n"
                 "5,fixed,5,5,54,54\n");
    CHECK(fs::exists(wd / "crops/resolved_config.txt"));

    auto rnd = run("crop --image " + (wd / "ds/images/train_0.pgm") +
                   " --scheme random --n 7 --seed 5 --out " + (wd / "rcrops"));
    REQUIRE(rnd.exit_code == 0);
    // 7 rows + header
    std::istringstream lines(slurp(wd / "rcrops/crops.csv"));
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) ++count;
    CHECK(count == 8);
}

TEST_CASE("cli: train determinism, eval reproduces test metrics") {
    WorkDir wd("train");
    REQUIRE(run("synth --out " + (wd / "ds") +
                " --train-count 40 --test-count 12 --seed 1")
                .exit_code == 0);
    const std::string base_flags =
        " --train " + (wd / "ds/train.csv") + " --test " +
        (wd / "ds/test.csv") +
        " --epochs 3 --seed 7 --hidden-dim 6 --feature-dim 8 --threads 1";

    REQUIRE(run("train --out " + (wd / "r1") + base_flags).exit_code == 0);
    REQUIRE(run("train --out " + (wd / "r2") + base_flags).exit_code == 0);
    CHECK(slurp(wd / "r1/checkpoint.bin") == slurp(wd / "r2/checkpoint.bin"));
    CHECK(slurp(wd / "r1/epoch_log.csv") == slurp(wd / "r2/epoch_log.csv"));
    CHECK(slurp(wd / "r1/test_metrics.json") ==
          slurp(wd / "r2/test_metrics.json"));

    auto eval = run("eval --checkpoint " + (wd / "r1/checkpoint.bin") +
                    " --data " + (wd / "ds/test.csv") + " --out " +
                    (wd / "ev"));
    REQUIRE(eval.exit_code == 0);
    CHECK(slurp(wd / "ev/metrics.json") == slurp(wd / "r1/test_metrics.json"));
    CHECK(fs::exists(wd / "ev/confusion.csv"));
    CHECK(fs::exists(wd / "ev/attention.csv"));
}

TEST_CASE("cli: config file merge, flag precedence, unknown keys") {
    WorkDir wd("config");
    REQUIRE(run("synth --out " + (wd / "ds") +
                " --train-count 8 --test-count 4 --seed 2")
                .exit_code == 0);
    {
        std::ofstream f(wd / "train.cfg");
        f << "# config file\n"
          << "alpha = 0.04\n"
          << "total_epochs = 1\n"
          << "hidden_dim = 6\n"
          << "feature_dim = 8\n";
    }
    auto r = run("train --config " + (wd / "train.cfg") + " --train " +
                 (wd / "ds/train.csv") + " --alpha 0.06 --out " + (wd / "t"));
    REQUIRE(r.exit_code == 0);
    const std::string resolved = slurp(wd / "t/resolved_config.txt");
    CHECK(resolved.find("alpha=0.06") != std::string::npos);  // flag wins
    CHECK(resolved.find("total_epochs=1") != std::string::npos);
    CHECK(resolved.find("command=train") != std::string::npos);

    {
        std::ofstream f(wd / "bad.cfg");
        f << "no_such_key = 1\n";
    }
    auto bad = run("train --config " + (wd / "bad.cfg") + " --train " +
                   (wd / "ds/train.csv") + " --out " + (wd / "t2"));
    CHECK(bad.exit_code == 2);
    CHECK(bad.out.find("no_such_key") != std::string::npos);
}

TEST_CASE("cli: subset and stats") {
    WorkDir wd("subset");
    {
        std::ofstream f(wd / "man.csv");
        f << "sample_id,image_path,label,pitch,yaw,roll,occlusions,landmarks\n"
          << "a,x.pgm,0,10,35,0,,\n"
          << "b,x.pgm,1,0,0,0,upper|bottom,\n"
          << "c,x.pgm,2,-50,0,0,glasses_mask,\n";
    }
    auto pose = run("subset --manifest " + (wd / "man.csv") +
                    " --kind pose --threshold 30 --out " + (wd / "p"));
    REQUIRE(pose.exit_code == 0);
    CHECK(pose.out.find("kept 2 of 3") != std::string::npos);

    auto occ = run("subset --manifest " + (wd / "man.csv") +
                   " --kind occlusion --out " + (wd / "o"));
    REQUIRE(occ.exit_code == 0);
    CHECK(occ.out.find("kept 2 of 3") != std::string::npos);

    auto stats = run("stats --manifest " + (wd / "man.csv") + " --out " +
                     (wd / "s"));
    REQUIRE(stats.exit_code == 0);
    CHECK(fs::exists(wd / "s/stats.json"));
    CHECK(stats.out.find("upper") != std::string::npos);
    const std::string json = slurp(wd / "s/stats.json");
    CHECK(json.find("\"over_30\": 2") != std::string::npos);
    CHECK(json.find("\"over_45\": 1") != std::string::npos);
}

TEST_CASE("cli: gradcheck exits zero on success") {
    WorkDir wd("gc");
    auto r = run("gradcheck --trials 2 --seed 1 --out " + (wd / "g"));
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("gradcheck passed") != std::string::npos);
}

TEST_CASE("cli: margin sweep emits one row per alpha") {
    WorkDir wd("sweep");
    REQUIRE(run("synth --out " + (wd / "ds") +
                " --train-count 12 --test-count 6 --seed 4")
                .exit_code == 0);
    auto r = run("sweep --kind margin --train " + (wd / "ds/train.csv") +
                 " --test " + (wd / "ds/test.csv") +
                 " --alphas 0,0.02 --epochs 1 --hidden-dim 6 --feature-dim 8" +
                 " --threads 2 --out " + (wd / "sw"));
    REQUIRE(r.exit_code == 0);
    std::istringstream lines(slurp(wd / "sw/sweep.csv"));
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) ++count;
    CHECK(count == 3);  // header + 2 alphas

    auto f = run("sweep --kind fusion --train " + (wd / "ds/train.csv") +
                 " --test " + (wd / "ds/test.csv") +
                 " --epochs 1 --hidden-dim 6 --feature-dim 8 --out " +
                 (wd / "fu"));
    REQUIRE(f.exit_code == 0);
    CHECK(fs::exists(wd / "fu/metrics_ran.json"));
    CHECK(fs::exists(wd / "fu/metrics_avgpool.json"));
    CHECK(fs::exists(wd / "fu/metrics_concat.json"));
    CHECK(fs::exists(wd / "fu/metrics_score_fusion.json"));
}

TEST_CASE("cli: feature store training path") {
    WorkDir wd("feat");
    {
        std::ofstream f(wd / "store.csv");
        f << "dim=4\n";
        for (int s = 0; s < 12; ++s)
            for (int r = 0; r < 3; ++r) {
                const double base = (s % 2 == 0) ? 1.0 : -1.0;
                f << "fs_" << s << "," << r << "," << base << ",0.1,0.2,"
                  << -base << "\n";
            }
    }
    {
        std::ofstream f(wd / "man.csv");
        f << "sample_id,image_path,label,pitch,yaw,roll,occlusions,landmarks\n";
        for (int s = 0; s < 12; ++s)
            f << "fs_" << s << ",," << (s % 2) << ",,,,,\n";
    }
    auto r = run("train --train " + (wd / "man.csv") + " --features " +
                 (wd / "store.csv") + " --test " + (wd / "man.csv") +
                 " --epochs 8 --out " + (wd / "t"));
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("test accuracy 1.0000") != std::string::npos);

    auto ev = run("eval --checkpoint " + (wd / "t/checkpoint.bin") +
                  " --data " + (wd / "man.csv") + " --features " +
                  (wd / "store.csv") + " --out " + (wd / "e"));
    CHECK(ev.exit_code == 0);
}
