// Command-line front end. Talks to the library through the C interface only.

#include <CLI11.hpp>

#include "pgd.h"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace {

struct ConfigDeleter {
    void operator()(pgd_config* p) const { pgd_config_free(p); }
};
struct RecordsDeleter {
    void operator()(pgd_records* p) const { pgd_records_free(p); }
};
struct ReportDeleter {
    void operator()(pgd_report* p) const { pgd_report_free(p); }
};
struct StringDeleter {
    void operator()(char* p) const { pgd_string_free(p); }
};

using ConfigPtr = std::unique_ptr<pgd_config, ConfigDeleter>;
using RecordsPtr = std::unique_ptr<pgd_records, RecordsDeleter>;
using ReportPtr = std::unique_ptr<pgd_report, ReportDeleter>;
using StringPtr = std::unique_ptr<char, StringDeleter>;

struct CommonOptions {
    std::vector<std::string> config_files;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_files, "configuration file, repeatable");
    cmd->add_option("--set", opts.overrides,
                    "single override as section.key=value, repeatable");
}

int fail(pgd_status status) {
    std::fprintf(stderr, "pgd: error: %s\n", pgd_last_error());
    return static_cast<int>(status);
}

int build_config(const CommonOptions& opts, ConfigPtr& cfg) {
    cfg.reset(pgd_config_create());
    if (!cfg) {
        std::fprintf(stderr, "pgd: error: out of memory\n");
        return 3;
    }
    for (const std::string& path : opts.config_files) {
        if (pgd_status s = pgd_config_load(cfg.get(), path.c_str())) return fail(s);
    }
    for (const std::string& kv : opts.overrides) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "pgd: error: --set expects section.key=value, got '%s'\n",
                         kv.c_str());
            return 2;
        }
        if (pgd_status s = pgd_config_set(cfg.get(), kv.substr(0, eq).c_str(),
                                          kv.substr(eq + 1).c_str())) {
            return fail(s);
        }
    }
    return 0;
}

int read_records(const std::string& path, RecordsPtr& out) {
    pgd_records* raw = nullptr;
    if (pgd_status s = pgd_records_read(path.c_str(), &raw)) return fail(s);
    out.reset(raw);
    return 0;
}

int write_records(const RecordsPtr& records, const std::string& path) {
    if (pgd_status s = pgd_records_write(records.get(), path.c_str())) return fail(s);
    return 0;
}

// Empty path or "-" selects stdout.
int emit_text(const std::string& path, const char* text) {
    if (path.empty() || path == "-") {
        std::fwrite(text, 1, std::strlen(text), stdout);
        return 0;
    }
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        std::fprintf(stderr, "pgd: error: cannot write '%s'\n", path.c_str());
        return 2;
    }
    return 0;
}

int run_simulate(const CommonOptions& opts, const std::string& gt_path,
                 const std::string& pred_path) {
    ConfigPtr cfg;
    if (int rc = build_config(opts, cfg)) return rc;
    pgd_records* gt_raw = nullptr;
    pgd_records* pred_raw = nullptr;
    if (pgd_status s = pgd_simulate(cfg.get(), &gt_raw, &pred_raw)) return fail(s);
    RecordsPtr gt(gt_raw);
    RecordsPtr pred(pred_raw);
    if (int rc = write_records(gt, gt_path)) return rc;
    return write_records(pred, pred_path);
}

int run_decode(const CommonOptions& opts, const std::string& in_path,
               const std::string& out_path) {
    ConfigPtr cfg;
    if (int rc = build_config(opts, cfg)) return rc;
    RecordsPtr records;
    if (int rc = read_records(in_path, records)) return rc;
    if (pgd_status s = pgd_decode(records.get(), cfg.get())) return fail(s);
    return write_records(records, out_path);
}

int run_propagate(const CommonOptions& opts, const std::string& in_path,
                  const std::string& out_path, const std::string& edges_path) {
    ConfigPtr cfg;
    if (int rc = build_config(opts, cfg)) return rc;
    RecordsPtr records;
    if (int rc = read_records(in_path, records)) return rc;
    char* dump_raw = nullptr;
    const pgd_status s =
        pgd_propagate(records.get(), cfg.get(), edges_path.empty() ? nullptr : &dump_raw);
    if (s) return fail(s);
    StringPtr dump(dump_raw);
    if (!edges_path.empty()) {
        if (int rc = emit_text(edges_path, dump.get())) return rc;
    }
    return write_records(records, out_path);
}

int run_evaluate(const CommonOptions& opts, const std::string& gt_path,
                 const std::string& pred_path, bool json, const std::string& out_path) {
    ConfigPtr cfg;
    if (int rc = build_config(opts, cfg)) return rc;
    RecordsPtr gt;
    if (int rc = read_records(gt_path, gt)) return rc;
    RecordsPtr pred;
    if (int rc = read_records(pred_path, pred)) return rc;
    pgd_report* report_raw = nullptr;
    if (pgd_status s = pgd_evaluate(gt.get(), pred.get(), cfg.get(), &report_raw)) {
        return fail(s);
    }
    ReportPtr report(report_raw);
    char* text_raw = nullptr;
    const pgd_status s = json ? pgd_report_json(report.get(), &text_raw)
                              : pgd_report_text(report.get(), &text_raw);
    if (s) return fail(s);
    StringPtr text(text_raw);
    return emit_text(out_path, text.get());
}

int run_oracle(const CommonOptions& opts, const std::string& gt_path,
               const std::string& pred_path, const std::vector<std::string>& subsets,
               const std::string& out_path) {
    ConfigPtr cfg;
    if (int rc = build_config(opts, cfg)) return rc;
    RecordsPtr gt;
    if (int rc = read_records(gt_path, gt)) return rc;
    RecordsPtr pred;
    if (int rc = read_records(pred_path, pred)) return rc;
    std::vector<const char*> names;
    names.reserve(subsets.size());
    for (const std::string& s : subsets) names.push_back(s.c_str());
    char* text_raw = nullptr;
    if (pgd_status s = pgd_oracle_table(gt.get(), pred.get(), cfg.get(), names.data(),
                                        static_cast<int>(names.size()), &text_raw)) {
        return fail(s);
    }
    StringPtr text(text_raw);
    return emit_text(out_path, text.get());
}

int run_plot_data(const CommonOptions& opts, const std::string& kind,
                  const std::string& in_path, const std::string& gt_path,
                  const std::string& out_path) {
    ConfigPtr cfg;
    if (int rc = build_config(opts, cfg)) return rc;
    RecordsPtr records;
    if (int rc = read_records(in_path, records)) return rc;
    RecordsPtr gt;
    if (!gt_path.empty()) {
        if (int rc = read_records(gt_path, gt)) return rc;
    }
    char* text_raw = nullptr;
    if (pgd_status s =
            pgd_plot_data(gt.get(), records.get(), cfg.get(), kind.c_str(), &text_raw)) {
        return fail(s);
    }
    StringPtr text(text_raw);
    return emit_text(out_path, text.get());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PGD instance-depth pipeline"};
    app.set_version_flag("--version", []() { return std::string(pgd_version()); });
    app.require_subcommand(1);

    int rc = 0;

    CommonOptions sim_opts;
    std::string sim_gt, sim_pred;
    CLI::App* sim = app.add_subcommand("simulate", "draw a synthetic scene set");
    add_common(sim, sim_opts);
    sim->add_option("--gt-out", sim_gt, "output path of the ground-truth records")
        ->required();
    sim->add_option("--pred-out", sim_pred, "output path of the prediction records")
        ->required();
    sim->callback([&] { rc = run_simulate(sim_opts, sim_gt, sim_pred); });

    CommonOptions dec_opts;
    std::string dec_in, dec_out;
    CLI::App* dec = app.add_subcommand("decode", "probabilistic depth decode");
    add_common(dec, dec_opts);
    dec->add_option("--in", dec_in, "prediction records to decode")->required();
    dec->add_option("--out", dec_out, "output path of the decoded records")->required();
    dec->callback([&] { rc = run_decode(dec_opts, dec_in, dec_out); });

    CommonOptions prop_opts;
    std::string prop_in, prop_out, prop_edges;
    CLI::App* prop = app.add_subcommand("propagate", "geometric propagation and fusion");
    add_common(prop, prop_opts);
    prop->add_option("--in", prop_in, "decoded records to propagate")->required();
    prop->add_option("--out", prop_out, "output path of the fused records")->required();
    prop->add_option("--edges", prop_edges, "optional path of the edge diagnostics table");
    prop->callback([&] { rc = run_propagate(prop_opts, prop_in, prop_out, prop_edges); });

    CommonOptions eval_opts;
    std::string eval_gt, eval_pred, eval_out;
    bool eval_json = false;
    CLI::App* eval = app.add_subcommand("evaluate", "detection metrics");
    add_common(eval, eval_opts);
    eval->add_option("--gt", eval_gt, "ground-truth records")->required();
    eval->add_option("--pred", eval_pred, "prediction records")->required();
    eval->add_flag("--json", eval_json, "emit JSON instead of the text report");
    eval->add_option("--out", eval_out, "output path, stdout when omitted");
    eval->callback([&] { rc = run_evaluate(eval_opts, eval_gt, eval_pred, eval_json, eval_out); });

    CommonOptions ora_opts;
    std::string ora_gt, ora_pred, ora_out;
    std::vector<std::string> ora_subsets;
    CLI::App* ora = app.add_subcommand("oracle", "oracle replacement analysis");
    add_common(ora, ora_opts);
    ora->add_option("--gt", ora_gt, "ground-truth records")->required();
    ora->add_option("--pred", ora_pred, "prediction records")->required();
    ora->add_option("--subset", ora_subsets,
                    "oracle subset such as none, depth, depth+size or all, repeatable")
        ->required();
    ora->add_option("--out", ora_out, "output path, stdout when omitted");
    ora->callback([&] { rc = run_oracle(ora_opts, ora_gt, ora_pred, ora_subsets, ora_out); });

    CommonOptions plot_opts;
    std::string plot_kind, plot_in, plot_gt, plot_out;
    CLI::App* plot = app.add_subcommand("plot-data", "plot-ready tables");
    add_common(plot, plot_opts);
    plot->add_option("--kind", plot_kind,
                     "pr, weights-hist, weights-scatter or depth-error-vs-depth")
        ->required();
    plot->add_option("--in", plot_in, "prediction records")->required();
    plot->add_option("--gt", plot_gt, "ground-truth records, needed by pr and depth error");
    plot->add_option("--out", plot_out, "output path, stdout when omitted");
    plot->callback(
        [&] { rc = run_plot_data(plot_opts, plot_kind, plot_in, plot_gt, plot_out); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return rc;
}
