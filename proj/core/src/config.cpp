#include "sdrnet/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "sdrnet/errors.hpp"

namespace sdrnet {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void bad_key(const std::string& where, const std::string& key) {
    throw ConfigError("config: unknown key \"" + key + "\" in " + where);
}

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
    for (const auto& item : obj.items()) {
        if (!allowed.count(item.key())) bad_key(where, item.key());
    }
}

template <typename T>
void read(const json& obj, const char* key, T& into) {
    if (!obj.contains(key)) return;
    try {
        into = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config: key \"" + std::string(key) + "\": " +
                          e.what());
    }
}

void read_decay(const json& obj, SdrDecayConfig& decay) {
    check_keys(obj, "decay", {"alpha", "beta", "zeta", "tau"});
    read(obj, "alpha", decay.alpha);
    read(obj, "beta", decay.beta);
    read(obj, "zeta", decay.zeta);
    read(obj, "tau", decay.tau);
}

void read_schedule(const json& obj, VarianceSchedule::Config& sched) {
    check_keys(obj, "schedule",
               {"enabled", "initial_min", "initial_max", "increment",
                "plateau_window", "plateau_threshold",
                "min_epochs_between_bumps"});
    read(obj, "enabled", sched.enabled);
    read(obj, "initial_min", sched.initial_min);
    read(obj, "initial_max", sched.initial_max);
    read(obj, "increment", sched.increment);
    read(obj, "plateau_window", sched.plateau_window);
    read(obj, "plateau_threshold", sched.plateau_threshold);
    read(obj, "min_epochs_between_bumps", sched.min_epochs_between_bumps);
}

AttackConfig read_attack(const json& obj, std::size_t index) {
    const std::string where = "attacks[" + std::to_string(index) + "]";
    check_keys(obj, where,
               {"kind", "epsilon_grid", "bim_alpha_fraction", "bim_iters",
                "deepfool_overshoot", "deepfool_max_iters", "p_val", "d", "t",
                "rounds", "query_cap", "pixel_lo", "pixel_hi", "image_rows",
                "image_cols"});
    AttackConfig cfg;
    if (!obj.contains("kind")) {
        throw ConfigError("config: " + where + " needs a \"kind\"");
    }
    std::string kind;
    read(obj, "kind", kind);
    cfg.kind = attack_kind_from_name(kind);
    read(obj, "epsilon_grid", cfg.epsilon_grid);
    read(obj, "bim_alpha_fraction", cfg.bim_alpha_fraction);
    read(obj, "bim_iters", cfg.bim_iters);
    read(obj, "deepfool_overshoot", cfg.deepfool_overshoot);
    read(obj, "deepfool_max_iters", cfg.deepfool_max_iters);
    read(obj, "p_val", cfg.ls_p_val);
    read(obj, "d", cfg.ls_d);
    read(obj, "t", cfg.ls_t);
    read(obj, "rounds", cfg.ls_rounds);
    read(obj, "query_cap", cfg.ls_query_cap);
    read(obj, "pixel_lo", cfg.pixel_lo);
    read(obj, "pixel_hi", cfg.pixel_hi);
    read(obj, "image_rows", cfg.image_rows);
    read(obj, "image_cols", cfg.image_cols);
    cfg.validate();
    return cfg;
}

json attack_to_json(const AttackConfig& cfg) {
    json obj;
    obj["kind"] = attack_kind_name(cfg.kind);
    obj["epsilon_grid"] = cfg.epsilon_grid;
    obj["bim_alpha_fraction"] = cfg.bim_alpha_fraction;
    obj["bim_iters"] = cfg.bim_iters;
    obj["deepfool_overshoot"] = cfg.deepfool_overshoot;
    obj["deepfool_max_iters"] = cfg.deepfool_max_iters;
    obj["p_val"] = cfg.ls_p_val;
    obj["d"] = cfg.ls_d;
    obj["t"] = cfg.ls_t;
    obj["rounds"] = cfg.ls_rounds;
    obj["query_cap"] = cfg.ls_query_cap;
    obj["pixel_lo"] = cfg.pixel_lo;
    obj["pixel_hi"] = cfg.pixel_hi;
    obj["image_rows"] = cfg.image_rows;
    obj["image_cols"] = cfg.image_cols;
    return obj;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(ModelKind kind) {
    ExperimentConfig cfg;
    cfg.train.kind = kind;
    switch (kind) {
        case ModelKind::Vanilla:
        case ModelKind::DropConnect:
            cfg.train.lr = 0.1f;
            cfg.train.epochs = 30;
            break;
        case ModelKind::SdrDecay:
            cfg.train.epochs = 30;
            break;
        case ModelKind::SdrLearnable:
            cfg.train.lr = 0.01f;
            cfg.train.epochs = 100;
            cfg.train.early_stop_patience = 12;
            break;
    }
    for (AttackKind a : {AttackKind::Fgsm, AttackKind::DeepFool,
                         AttackKind::LocalSearch}) {
        AttackConfig attack;
        attack.kind = a;
        cfg.attacks.push_back(attack);
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");

    check_keys(doc, "config",
               {"model", "hidden", "classes", "drop_p", "sigma_init", "lr",
                "batch_size", "epochs", "early_stop_patience", "eval_batch",
                "seed", "decay", "schedule", "attacks", "train_subset",
                "attack_subset", "data_dir", "out_dir"});

    ModelKind kind = ModelKind::SdrLearnable;
    if (doc.contains("model")) {
        std::string name;
        read(doc, "model", name);
        kind = model_kind_from_name(name);
    }
    ExperimentConfig cfg = defaults(kind);

    read(doc, "hidden", cfg.train.hidden);
    read(doc, "classes", cfg.train.classes);
    read(doc, "drop_p", cfg.train.drop_p);
    read(doc, "sigma_init", cfg.train.sigma_init);
    read(doc, "lr", cfg.train.lr);
    read(doc, "batch_size", cfg.train.batch_size);
    read(doc, "epochs", cfg.train.epochs);
    read(doc, "early_stop_patience", cfg.train.early_stop_patience);
    read(doc, "eval_batch", cfg.train.eval_batch);
    read(doc, "seed", cfg.train.seed);
    if (doc.contains("decay")) read_decay(doc.at("decay"), cfg.train.decay);
    if (doc.contains("schedule")) {
        read_schedule(doc.at("schedule"), cfg.train.schedule);
    }
    if (doc.contains("attacks")) {
        cfg.attacks.clear();
        const json& list = doc.at("attacks");
        if (!list.is_array()) throw ConfigError("config: attacks must be a list");
        for (std::size_t i = 0; i < list.size(); ++i) {
            cfg.attacks.push_back(read_attack(list.at(i), i));
        }
    }
    read(doc, "train_subset", cfg.train_subset);
    read(doc, "attack_subset", cfg.attack_subset);
    read(doc, "data_dir", cfg.data_dir);
    read(doc, "out_dir", cfg.out_dir);

    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return from_json_text(text);
}

std::string ExperimentConfig::to_json() const {
    json doc;
    doc["model"] = model_kind_name(train.kind);
    doc["hidden"] = train.hidden;
    doc["classes"] = train.classes;
    doc["drop_p"] = train.drop_p;
    doc["sigma_init"] = train.sigma_init;
    doc["lr"] = train.lr;
    doc["batch_size"] = train.batch_size;
    doc["epochs"] = train.epochs;
    doc["early_stop_patience"] = train.early_stop_patience;
    doc["eval_batch"] = train.eval_batch;
    doc["seed"] = train.seed;
    doc["decay"] = {{"alpha", train.decay.alpha},
                    {"beta", train.decay.beta},
                    {"zeta", train.decay.zeta},
                    {"tau", train.decay.tau}};
    doc["schedule"] = {
        {"enabled", train.schedule.enabled},
        {"initial_min", train.schedule.initial_min},
        {"initial_max", train.schedule.initial_max},
        {"increment", train.schedule.increment},
        {"plateau_window", train.schedule.plateau_window},
        {"plateau_threshold", train.schedule.plateau_threshold},
        {"min_epochs_between_bumps", train.schedule.min_epochs_between_bumps}};
    doc["attacks"] = json::array();
    for (const AttackConfig& a : attacks) {
        doc["attacks"].push_back(attack_to_json(a));
    }
    doc["train_subset"] = train_subset;
    doc["attack_subset"] = attack_subset;
    doc["data_dir"] = data_dir;
    doc["out_dir"] = out_dir;
    return doc.dump(2) + "\n";
}

void ExperimentConfig::validate() const {
    train.validate();
    for (const AttackConfig& a : attacks) a.validate();
    if (train_subset < 0) throw ConfigError("train_subset must be >= 0");
    if (attack_subset < 0) throw ConfigError("attack_subset must be >= 0");
}

std::string attack_config_json(const AttackConfig& cfg) {
    return attack_to_json(cfg).dump();
}

}  // namespace sdrnet
