#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <pgd/records.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kDir = "cli_work";

// Runs the CLI with stdout/stderr captured into files; returns the exit code.
int run_cli(const std::string& args) {
    const std::string cmd = std::string(PGD_CLI_PATH) + " " + args + " > " +
                            (kDir / "stdout.txt").string() + " 2> " +
                            (kDir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) { return pgd::read_text_file(path.string()); }

std::string out_text() { return slurp(kDir / "stdout.txt"); }

long pred_count(const fs::path& path) {
    long n = 0;
    for (const pgd::ObjectRecord& r : pgd::read_records(path.string()).objects) {
        n += r.kind == pgd::RecordKind::Prediction;
    }
    return n;
}

long data_rows(const std::string& text) {
    long rows = 0;
    bool content = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '\n') {
            rows += content;
            content = false;
        } else if (!content && text[i] != '#') {
            content = true;
        } else if (text[i] == '#' && (i == 0 || text[i - 1] == '\n')) {
            // comment line, skip until newline
            while (i < text.size() && text[i] != '\n') ++i;
            if (i < text.size()) content = false;
        }
    }
    return rows;
}

struct Workspace {
    Workspace() {
        fs::remove_all(kDir);
        fs::create_directories(kDir);
    }
};

std::string p(const char* name) { return (kDir / name).string(); }

}  // namespace

TEST_CASE("cli end-to-end pipeline with reproducible outputs") {
    Workspace ws;
    const std::string common = "--set sim.seed=5 --set scene.frames=5";

    CHECK(run_cli("simulate " + common + " --gt-out " + p("gt.txt") + " --pred-out " +
                  p("pred.txt")) == 0);
    CHECK(run_cli("simulate " + common + " --gt-out " + p("gt2.txt") + " --pred-out " +
                  p("pred2.txt")) == 0);
    CHECK(slurp(p("gt.txt")) == slurp(p("gt2.txt")));
    CHECK(slurp(p("pred.txt")) == slurp(p("pred2.txt")));
    const long count = pred_count(p("pred.txt"));
    CHECK(count >= 5);

    CHECK(run_cli("decode --in " + p("pred.txt") + " --out " + p("dec.txt")) == 0);
    CHECK(run_cli("decode --in " + p("pred.txt") + " --out " + p("dec2.txt")) == 0);
    CHECK(slurp(p("dec.txt")) == slurp(p("dec2.txt")));
    CHECK(slurp(p("dec.txt")) != slurp(p("pred.txt")));

    CHECK(run_cli("propagate --in " + p("dec.txt") + " --out " + p("fused.txt") +
                  " --edges " + p("edges.txt")) == 0);
    CHECK(run_cli("propagate --in " + p("dec.txt") + " --out " + p("fused2.txt") +
                  " --edges " + p("edges2.txt")) == 0);
    CHECK(slurp(p("fused.txt")) == slurp(p("fused2.txt")));
    CHECK(slurp(p("edges.txt")) == slurp(p("edges2.txt")));
    CHECK(slurp(p("edges.txt")).find("# pgd edges") == 0);

    CHECK(run_cli("evaluate --gt " + p("gt.txt") + " --pred " + p("fused.txt") + " --out " +
                  p("report.txt")) == 0);
    CHECK(run_cli("evaluate --gt " + p("gt.txt") + " --pred " + p("fused.txt") + " --out " +
                  p("report2.txt")) == 0);
    CHECK(slurp(p("report.txt")) == slurp(p("report2.txt")));
    CHECK(slurp(p("report.txt")).find("nuscenes.map ") != std::string::npos);

    CHECK(run_cli("evaluate --gt " + p("gt.txt") + " --pred " + p("fused.txt") +
                  " --json --out " + p("report.json")) == 0);
    const std::string json = slurp(p("report.json"));
    CHECK(json.front() == '{');
    CHECK(json.find("\"values\"") != std::string::npos);

    CHECK(run_cli("evaluate --gt " + p("gt.txt") + " --pred " + p("fused.txt")) == 0);
    CHECK(out_text().find("nuscenes.nds ") != std::string::npos);

    CHECK(run_cli("oracle --gt " + p("gt.txt") + " --pred " + p("fused.txt") +
                  " --subset none --subset depth --subset all --out " + p("oracle.txt")) == 0);
    const std::string table = slurp(p("oracle.txt"));
    CHECK(data_rows(table) == 3);
    CHECK(table.find("none ") != std::string::npos);
    CHECK(table.find("all ") != std::string::npos);

    CHECK(run_cli("plot-data --kind pr --in " + p("fused.txt") + " --gt " + p("gt.txt") +
                  " --out " + p("pr.txt")) == 0);
    CHECK(data_rows(slurp(p("pr.txt"))) == count + 1);
    CHECK(run_cli("plot-data --kind weights-hist --in " + p("fused.txt") + " --out " +
                  p("hist.txt")) == 0);
    long hist_total = 0;
    {
        std::ifstream in(p("hist.txt"));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            double lo = 0.0, hi = 0.0;
            long n = 0;
            REQUIRE(std::sscanf(line.c_str(), "%lf %lf %ld", &lo, &hi, &n) == 3);
            hist_total += n;
        }
    }
    CHECK(hist_total == count);
    CHECK(run_cli("plot-data --kind weights-scatter --in " + p("fused.txt") + " --out " +
                  p("scatter.txt")) == 0);
    CHECK(data_rows(slurp(p("scatter.txt"))) == count);
    CHECK(run_cli("plot-data --kind depth-error-vs-depth --in " + p("fused.txt") + " --gt " +
                  p("gt.txt") + " --out " + p("deverr.txt")) == 0);
    CHECK(data_rows(slurp(p("deverr.txt"))) == count);

    fs::remove_all(kDir);
}

TEST_CASE("cli version, help and argument errors") {
    Workspace ws;
    CHECK(run_cli("--version") == 0);
    CHECK(out_text().find('.') != std::string::npos);
    CHECK(run_cli("--help") == 0);
    CHECK(out_text().find("simulate") != std::string::npos);
    CHECK(run_cli("") == 2);
    CHECK(run_cli("transmogrify") == 2);
    CHECK(run_cli("decode --in missing.txt") == 2);  // missing required --out
    fs::remove_all(kDir);
}

TEST_CASE("cli maps parse and domain failures onto exit codes") {
    Workspace ws;
    CHECK(run_cli("decode --in " + p("absent.txt") + " --out " + p("x.txt")) == 2);

    std::ofstream(p("bogus.txt")) << "bogus line\n";
    CHECK(run_cli("decode --in " + p("bogus.txt") + " --out " + p("x.txt")) == 2);
    CHECK(slurp(kDir / "stderr.txt").find("pgd: error:") != std::string::npos);

    CHECK(run_cli("simulate --set scene.frames --gt-out " + p("g.txt") + " --pred-out " +
                  p("q.txt")) == 2);
    CHECK(run_cli("simulate --set scene.bogus=1 --gt-out " + p("g.txt") + " --pred-out " +
                  p("q.txt")) == 2);
    CHECK(run_cli("simulate --set scene.n_min=9 --set scene.n_max=3 --gt-out " + p("g.txt") +
                  " --pred-out " + p("q.txt")) == 2);

    // A satisfiable config whose placement cannot succeed is a domain error.
    CHECK(run_cli("simulate --set scene.n_min=60 --set scene.n_max=60"
                  " --set scene.depth_min=5 --set scene.depth_max=7"
                  " --set scene.lateral_extent=2 --gt-out " +
                  p("g.txt") + " --pred-out " + p("q.txt")) == 3);
    CHECK(slurp(kDir / "stderr.txt").find("infeasible_spec") != std::string::npos);

    // Propagation without a prior decode is an input error.
    const std::string common = "--set sim.seed=5 --set scene.frames=1";
    CHECK(run_cli("simulate " + common + " --gt-out " + p("gt.txt") + " --pred-out " +
                  p("pred.txt")) == 0);
    CHECK(run_cli("propagate --in " + p("pred.txt") + " --out " + p("x.txt")) == 2);
    CHECK(slurp(kDir / "stderr.txt").find("run decode first") != std::string::npos);
    fs::remove_all(kDir);
}
