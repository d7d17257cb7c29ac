#include "pgd.h"

#include "pgd/camera.hpp"
#include "pgd/config.hpp"
#include "pgd/errors.hpp"
#include "pgd/metrics.hpp"
#include "pgd/pipeline.hpp"
#include "pgd/records.hpp"
#include "pgd/scene_sim.hpp"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <string>
#include <utility>
#include <vector>

struct pgd_config {
    pgd::RunConfig cfg;
};

struct pgd_records {
    pgd::RecordFile file;
};

struct pgd_report {
    pgd::EvalReport report;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

pgd_status usage_error(const char* message) {
    g_last_error = message;
    return PGD_ERR_USAGE;
}

template <typename Fn>
pgd_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return PGD_OK;
    } catch (const pgd::Error& e) {
        g_last_error = e.what();
        return e.kind() == pgd::Error::Kind::Parse ? PGD_ERR_PARSE : PGD_ERR_DOMAIN;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return PGD_ERR_DOMAIN;
    } catch (...) {
        g_last_error = "unknown error";
        return PGD_ERR_DOMAIN;
    }
}

} // namespace

extern "C" {

const char* pgd_version(void) { return "1.0.0"; }

const char* pgd_last_error(void) { return g_last_error.c_str(); }

void pgd_string_free(char* text) { std::free(text); }

pgd_config* pgd_config_create(void) {
    try {
        return new pgd_config{};
    } catch (...) {
        return nullptr;
    }
}

void pgd_config_free(pgd_config* cfg) { delete cfg; }

pgd_status pgd_config_load(pgd_config* cfg, const char* path) {
    if (!cfg || !path) return usage_error("pgd_config_load: null argument");
    return guarded([&] { pgd::merge_config_file(cfg->cfg, path); });
}

pgd_status pgd_config_set(pgd_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) return usage_error("pgd_config_set: null argument");
    return guarded([&] { pgd::apply_config_value(cfg->cfg, key, value); });
}

pgd_status pgd_config_get(const pgd_config* cfg, const char* key, char** out) {
    if (!cfg || !key || !out) return usage_error("pgd_config_get: null argument");
    return guarded([&] { *out = dup_string(pgd::get_config_value(cfg->cfg, key)); });
}

pgd_status pgd_config_dump(const pgd_config* cfg, char** out) {
    if (!cfg || !out) return usage_error("pgd_config_dump: null argument");
    return guarded([&] { *out = dup_string(pgd::dump_config(cfg->cfg)); });
}

pgd_status pgd_records_read(const char* path, pgd_records** out) {
    if (!path || !out) return usage_error("pgd_records_read: null argument");
    return guarded([&] {
        auto handle = std::make_unique<pgd_records>();
        handle->file = pgd::read_records(path);
        *out = handle.release();
    });
}

pgd_status pgd_records_parse(const char* text, pgd_records** out) {
    if (!text || !out) return usage_error("pgd_records_parse: null argument");
    return guarded([&] {
        auto handle = std::make_unique<pgd_records>();
        handle->file = pgd::parse_records(text);
        *out = handle.release();
    });
}

pgd_status pgd_records_write(const pgd_records* records, const char* path) {
    if (!records || !path) return usage_error("pgd_records_write: null argument");
    return guarded([&] { pgd::write_records_file(records->file, path); });
}

pgd_status pgd_records_to_text(const pgd_records* records, char** out) {
    if (!records || !out) return usage_error("pgd_records_to_text: null argument");
    return guarded([&] { *out = dup_string(pgd::write_records(records->file)); });
}

pgd_records* pgd_records_clone(const pgd_records* records) {
    if (!records) return nullptr;
    try {
        return new pgd_records{records->file};
    } catch (...) {
        return nullptr;
    }
}

void pgd_records_free(pgd_records* records) { delete records; }

long pgd_records_count(const pgd_records* records) {
    if (!records) return -1;
    return static_cast<long>(records->file.objects.size());
}

pgd_status pgd_simulate(const pgd_config* cfg, pgd_records** gt_out, pgd_records** pred_out) {
    if (!cfg || !gt_out || !pred_out) return usage_error("pgd_simulate: null argument");
    return guarded([&] {
        auto [gt, pred] = pgd::simulate_records(cfg->cfg);
        auto gt_handle = std::make_unique<pgd_records>();
        gt_handle->file = std::move(gt);
        auto pred_handle = std::make_unique<pgd_records>();
        pred_handle->file = std::move(pred);
        *gt_out = gt_handle.release();
        *pred_out = pred_handle.release();
    });
}

pgd_status pgd_decode(pgd_records* records, const pgd_config* cfg) {
    if (!records || !cfg) return usage_error("pgd_decode: null argument");
    return guarded([&] { pgd::decode_records(records->file, cfg->cfg); });
}

pgd_status pgd_propagate(pgd_records* records, const pgd_config* cfg, char** edge_dump_out) {
    if (!records || !cfg) return usage_error("pgd_propagate: null argument");
    return guarded([&] {
        std::string dump;
        pgd::propagate_records(records->file, cfg->cfg, edge_dump_out ? &dump : nullptr);
        if (edge_dump_out) *edge_dump_out = dup_string(dump);
    });
}

pgd_status pgd_evaluate(const pgd_records* gt, const pgd_records* pred, const pgd_config* cfg,
                        pgd_report** out) {
    if (!gt || !pred || !cfg || !out) return usage_error("pgd_evaluate: null argument");
    return guarded([&] {
        auto handle = std::make_unique<pgd_report>();
        handle->report = pgd::evaluate_records(gt->file, pred->file, cfg->cfg);
        *out = handle.release();
    });
}

pgd_status pgd_apply_oracles(pgd_records* pred, const pgd_records* gt, const char* subset) {
    if (!pred || !gt || !subset) return usage_error("pgd_apply_oracles: null argument");
    return guarded([&] {
        const pgd::OracleSpec spec = pgd::parse_oracle_spec(subset);
        pgd::apply_oracles(pred->file.objects, gt->file.objects, pred->file.header.cam,
                           pred->file.header.quantizer, spec);
    });
}

pgd_status pgd_oracle_table(const pgd_records* gt, const pgd_records* pred,
                            const pgd_config* cfg, const char* const* subsets,
                            int subset_count, char** out) {
    if (!gt || !pred || !cfg || !out || (subset_count > 0 && !subsets)) {
        return usage_error("pgd_oracle_table: null argument");
    }
    if (subset_count < 0) return usage_error("pgd_oracle_table: negative subset count");
    return guarded([&] {
        std::vector<std::string> names;
        names.reserve(static_cast<std::size_t>(subset_count));
        for (int i = 0; i < subset_count; ++i) {
            if (!subsets[i]) pgd::throw_parse("oracle subset " + std::to_string(i) + " is null");
            names.emplace_back(subsets[i]);
        }
        *out = dup_string(pgd::oracle_table(gt->file, pred->file, cfg->cfg, names));
    });
}

pgd_status pgd_plot_data(const pgd_records* gt, const pgd_records* records,
                         const pgd_config* cfg, const char* kind, char** out) {
    if (!records || !cfg || !kind || !out) return usage_error("pgd_plot_data: null argument");
    return guarded([&] {
        *out = dup_string(
            pgd::plot_data(gt ? &gt->file : nullptr, records->file, cfg->cfg, kind));
    });
}

pgd_status pgd_report_text(const pgd_report* report, char** out) {
    if (!report || !out) return usage_error("pgd_report_text: null argument");
    return guarded([&] { *out = dup_string(pgd::report_text(report->report)); });
}

pgd_status pgd_report_json(const pgd_report* report, char** out) {
    if (!report || !out) return usage_error("pgd_report_json: null argument");
    return guarded([&] { *out = dup_string(pgd::report_json(report->report)); });
}

pgd_status pgd_report_value(const pgd_report* report, const char* key, double* out) {
    if (!report || !key || !out) return usage_error("pgd_report_value: null argument");
    return guarded([&] {
        const auto it = report->report.values.find(key);
        if (it == report->report.values.end()) {
            pgd::throw_parse(std::string("unknown report key '") + key + "'");
        }
        *out = it->second;
    });
}

void pgd_report_free(pgd_report* report) { delete report; }

pgd_status pgd_nds(double mean_ap, double ate, double ase, double aoe, double ave, double aae,
                   double* out) {
    if (!out) return usage_error("pgd_nds: null argument");
    return guarded([&] { *out = pgd::nds(mean_ap, ate, ase, aoe, ave, aae); });
}

pgd_status pgd_error_bound(double f, double v2, double delta, double* out) {
    if (!out) return usage_error("pgd_error_bound: null argument");
    return guarded([&] { *out = pgd::propagation_error_bound(f, v2, delta); });
}

} // extern "C"
