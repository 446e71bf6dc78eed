#include "sdrnet/experiment.hpp"

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sdrnet/checkpoint.hpp"
#include "sdrnet/errors.hpp"
#include "sdrnet/mnist.hpp"
#include "sdrnet/rng.hpp"

namespace sdrnet {

namespace {

using json = nlohmann::ordered_json;

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof buf, format, args);
    va_end(args);
    return buf;
}

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& text) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError("cannot open " + tmp.string() + " for writing");
        }
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw DataError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string metrics_csv_text(const std::vector<EpochMetrics>& metrics) {
    std::string csv =
        "epoch,train_loss,test_accuracy,min_var,max_var,mean_sigma,"
        "wall_time_s\n";
    for (const EpochMetrics& m : metrics) {
        csv += fmt("%d,%.6f,%.4f,%.6g,%.6g,%.6g,%.3f\n", m.epoch,
                   m.train_loss, m.test_accuracy,
                   static_cast<double>(m.min_var),
                   static_cast<double>(m.max_var), m.mean_sigma,
                   m.wall_time_s);
    }
    return csv;
}

std::string report_line(const AttackReport& r) {
    json obj;
    obj["sample_id"] = r.sample_id;
    obj["originally_correct"] = r.originally_correct;
    obj["attack_succeeded"] = r.attack_succeeded;
    obj["final_prediction"] = r.final_prediction;
    obj["linf"] = r.linf;
    obj["l2"] = r.l2;
    obj["queries_used"] = r.queries_used;
    obj["epsilon_at_success"] = r.epsilon_at_success;
    return obj.dump() + "\n";
}

const char* column_label(ModelKind kind) {
    switch (kind) {
        case ModelKind::Vanilla: return "Vanilla";
        case ModelKind::SdrDecay: return "SDR-decay";
        case ModelKind::SdrLearnable: return "SDR-Learnable";
        case ModelKind::DropConnect: return "DropConnect";
    }
    throw ContractError("unknown model kind");
}

double column_cell(const ModelColumn& col, int metric) {
    switch (metric) {
        case 0: return col.clean;
        case 1: return col.fgsm;
        case 2: return col.deepfool;
        case 3: return col.localsearch;
    }
    throw ContractError("unknown table metric");
}

constexpr const char* kMetricLabels[4] = {"Regular", "FGSM", "DeepFool",
                                          "LocalSearch"};

std::string table_csv(const std::vector<ModelColumn>& columns,
                      const ModelColumn* reference) {
    std::string csv = "metric";
    for (const ModelColumn& col : columns) {
        csv += ",";
        csv += column_label(col.kind);
    }
    csv += "\n";
    for (int metric = 0; metric < 4; ++metric) {
        csv += kMetricLabels[metric];
        for (std::size_t i = 0; i < columns.size(); ++i) {
            const double value = reference == nullptr
                                     ? column_cell(columns[i], metric)
                                     : column_cell(columns[i], metric) -
                                           column_cell(reference[i], metric);
            csv += fmt(",%.2f", value);
        }
        csv += "\n";
    }
    return csv;
}

void log_table(std::ostream& log, const char* title,
               const std::vector<ModelColumn>& columns,
               const ModelColumn* reference) {
    log << title << "\n" << fmt("%-12s", "");
    for (const ModelColumn& col : columns) {
        log << fmt("%14s", column_label(col.kind));
    }
    log << "\n";
    for (int metric = 0; metric < 4; ++metric) {
        log << fmt("%-12s", kMetricLabels[metric]);
        for (std::size_t i = 0; i < columns.size(); ++i) {
            const double value = reference == nullptr
                                     ? column_cell(columns[i], metric)
                                     : column_cell(columns[i], metric) -
                                           column_cell(reference[i], metric);
            log << fmt("%14.2f", value);
        }
        log << "\n";
    }
}

}  // namespace

const ModelColumn kReferenceTable[4] = {
    {ModelKind::Vanilla, 97.59, 0.0, 0.0, 0.0},
    {ModelKind::SdrDecay, 97.55, 4.61, 3.87, 2.85},
    {ModelKind::SdrLearnable, 97.87, 94.86, 78.42, 88.89},
    {ModelKind::DropConnect, 97.95, 45.90, 45.48, 26.53},
};

std::uint64_t attack_suite_seed(const ExperimentConfig& cfg) {
    return RngStream::derive(cfg.train.seed, "attack-suite");
}

TrainRun cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    const char* name = model_kind_name(cfg.train.kind);

    const Dataset train_full = load_mnist(cfg.data_dir, true);
    const Dataset test_set = load_mnist(cfg.data_dir, false);
    const Dataset train_set = subset(train_full, cfg.train_subset);
    log << fmt("[train] %s: %d training samples, %d test samples, seed %llu\n",
               name, train_set.size(), test_set.size(),
               static_cast<unsigned long long>(cfg.train.seed));

    RunPaths paths{std::filesystem::path(cfg.out_dir) / name};
    std::filesystem::create_directories(paths.dir);
    write_text_atomic(paths.config_json(), cfg.to_json());

    TrainConfig train_cfg = cfg.train;
    train_cfg.on_epoch = [&log, &train_cfg, name](const EpochMetrics& m) {
        log << fmt(
            "[train] %s epoch %d/%d  loss %.4f  test %.2f%%  sigma mean "
            "%.4f  bounds [%.3g, %.3g]  %.1fs\n",
            name, m.epoch, train_cfg.epochs, m.train_loss, m.test_accuracy,
            m.mean_sigma, static_cast<double>(m.min_var),
            static_cast<double>(m.max_var), m.wall_time_s);
        log.flush();
    };

    TrainRun run;
    run.paths = paths;
    run.result = train(train_cfg, train_set, test_set);

    write_text_atomic(paths.metrics_csv(), metrics_csv_text(run.result.metrics));

    CheckpointData data;
    data.kind = cfg.train.kind;
    data.model = run.result.model;
    data.seed = cfg.train.seed;
    data.schedule_min_var = run.result.schedule_min_var;
    data.schedule_max_var = run.result.schedule_max_var;
    data.schedule_bumps = run.result.schedule_bumps;
    data.schedule_last_bump_epoch = run.result.schedule_last_bump_epoch;
    checkpoint_save(paths.checkpoint(), data);

    const double final_accuracy =
        run.result.metrics.empty() ? 0.0
                                   : run.result.metrics.back().test_accuracy;
    log << fmt("[train] %s done: final test accuracy %.2f%%, artifacts in %s\n",
               name, final_accuracy, paths.dir.string().c_str());
    return run;
}

AttackRun cmd_attack(const ExperimentConfig& cfg,
                     const std::filesystem::path& checkpoint_path,
                     std::ostream& log) {
    for (const AttackConfig& a : cfg.attacks) a.validate();
    if (cfg.attacks.empty()) {
        throw ConfigError("attack stage needs at least one attack config");
    }

    const CheckpointData data = checkpoint_load(checkpoint_path);
    const char* name = model_kind_name(data.kind);
    const ForwardMode mode = eval_mode_for(data.kind);

    const Dataset test_set = load_mnist(cfg.data_dir, false);
    const Dataset sub = subset(test_set, cfg.attack_subset);
    const std::uint64_t seed = attack_suite_seed(cfg);
    log << fmt("[attack] %s: %d samples, %zu attacks, suite seed %llu\n", name,
               sub.size(), cfg.attacks.size(),
               static_cast<unsigned long long>(seed));
    log.flush();

    AttackRun run;
    run.paths.dir = std::filesystem::path(cfg.out_dir) /
                    (std::string(name) + "-attack");
    std::filesystem::create_directories(run.paths.dir);
    write_text_atomic(run.paths.config_json(), cfg.to_json());

    run.suite = run_attack_suite(data.model, mode, sub, cfg.attacks, seed);

    std::string csv = "attack,accuracy_pct,total_queries\n";
    csv += fmt("clean,%.4f,0\n", 100.0 * run.suite.clean_accuracy);
    json doc;
    doc["model"] = name;
    doc["checkpoint"] = checkpoint_path.string();
    doc["seed"] = seed;
    doc["samples"] = sub.size();
    doc["clean_accuracy_pct"] = 100.0 * run.suite.clean_accuracy;
    doc["attacks"] = json::array();
    log << fmt("[attack] clean accuracy %.2f%%\n",
               100.0 * run.suite.clean_accuracy);
    for (const AttackOutcome& outcome : run.suite.outcomes) {
        csv += fmt("%s,%.4f,%ld\n", outcome.name.c_str(),
                   100.0 * outcome.robust_accuracy, outcome.total_queries);
        json entry;
        entry["name"] = outcome.name;
        entry["robust_accuracy_pct"] = 100.0 * outcome.robust_accuracy;
        entry["total_queries"] = outcome.total_queries;
        entry["config"] = json::parse(attack_config_json(outcome.config));
        doc["attacks"].push_back(entry);

        std::string lines;
        for (const AttackReport& r : outcome.reports) {
            lines += report_line(r);
        }
        write_text_atomic(run.paths.attack_reports(outcome.name), lines);
        log << fmt("[attack] %s robust accuracy %.2f%% (%ld queries)\n",
                   outcome.name.c_str(), 100.0 * outcome.robust_accuracy,
                   outcome.total_queries);
        log.flush();
    }
    write_text_atomic(run.paths.robustness_csv(), csv);
    write_text_atomic(run.paths.robustness_json(), doc.dump(2) + "\n");
    return run;
}

double cmd_eval(const ExperimentConfig& cfg,
                const std::filesystem::path& checkpoint_path,
                std::ostream& log) {
    const CheckpointData data = checkpoint_load(checkpoint_path);
    const Dataset test_set = load_mnist(cfg.data_dir, false);
    const Dataset sub = subset(test_set, cfg.attack_subset);
    const std::uint64_t clean_seed =
        RngStream::derive(attack_suite_seed(cfg), "clean");
    const double pct = 100.0 * evaluate(data.model, sub,
                                        eval_mode_for(data.kind), clean_seed,
                                        /*batch_size=*/1);
    log << fmt("[eval] %s clean accuracy %.4f%% on %d samples\n",
               model_kind_name(data.kind), pct, sub.size());
    return pct;
}

OracleReport cmd_verify(const std::string& oracle, std::uint64_t seed,
                        std::ostream& log) {
    const OracleReport report = run_oracle(oracle, seed);
    log << "[verify] " << report.name << ": "
        << (report.passed ? "PASS" : "FAIL") << " (" << report.detail
        << ")\n";
    return report;
}

Table1Result cmd_reproduce_table1(const Table1Options& opts,
                                  std::ostream& log) {
    const ModelKind kinds[4] = {ModelKind::Vanilla, ModelKind::SdrDecay,
                                ModelKind::SdrLearnable,
                                ModelKind::DropConnect};
    Table1Result table;
    for (ModelKind kind : kinds) {
        ExperimentConfig cfg = ExperimentConfig::defaults(kind);
        cfg.train.seed = RngStream::derive(opts.master_seed,
                                           model_kind_name(kind));
        cfg.data_dir = opts.data_dir;
        cfg.out_dir = opts.out_dir;
        cfg.train_subset = opts.train_subset;
        cfg.attack_subset = opts.attack_subset;
        if (opts.epochs_override > 0) cfg.train.epochs = opts.epochs_override;

        TrainRun trained = cmd_train(cfg, log);
        AttackRun attacked =
            cmd_attack(cfg, trained.paths.checkpoint(), log);

        ModelColumn col;
        col.kind = kind;
        col.clean = 100.0 * attacked.suite.clean_accuracy;
        for (const AttackOutcome& outcome : attacked.suite.outcomes) {
            const double pct = 100.0 * outcome.robust_accuracy;
            switch (outcome.config.kind) {
                case AttackKind::Fgsm: col.fgsm = pct; break;
                case AttackKind::DeepFool: col.deepfool = pct; break;
                case AttackKind::LocalSearch: col.localsearch = pct; break;
                case AttackKind::Bim: break;
            }
        }
        table.columns.push_back(col);
    }

    const std::filesystem::path out(opts.out_dir);
    std::filesystem::create_directories(out);
    write_text_atomic(out / "table1.csv", table_csv(table.columns, nullptr));
    write_text_atomic(out / "table1-diff.csv",
                      table_csv(table.columns, kReferenceTable));
    log_table(log, "accuracy under attack (%)", table.columns, nullptr);
    log_table(log, "drift vs reference measurements (points)", table.columns,
              kReferenceTable);
    return table;
}

}  // namespace sdrnet
