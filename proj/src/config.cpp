#include "graspforge/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "graspforge/shapes.hpp"

namespace gf {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (...) {
        throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
    }
}

long long to_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long i = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (...) {
        throw ConfigError("config key '" + key + "': not an integer: '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config key '" + key + "': not a boolean: '" + v + "'");
}

std::vector<std::string> resolve_group(const std::vector<std::string>& names) {
    std::vector<std::string> out;
    for (const std::string& n : names) {
        if (n == "@seen" || n == "@novel" || n == "@test") {
            const auto lib = n == "@seen" ? seen_library()
                                          : (n == "@novel" ? novel_library() : test_library());
            for (const ObjectShape& s : lib) out.push_back(s.name);
        } else {
            out.push_back(n);
        }
    }
    return out;
}

// applies one section.key = value; throws ConfigError on unknown keys
void apply_kv(RunConfig& c, const std::string& section, const std::string& key,
              const std::string& value) {
    const std::string full = section.empty() ? key : section + "." + key;
    if (section.empty()) {
        if (key == "seed") {
            c.seed = static_cast<std::uint64_t>(to_int(full, value));
            return;
        }
        throw ConfigError("unknown config key: '" + full + "'");
    }
    if (section == "workspace") {
        if (key == "width_mm") c.workspace.width_mm = to_double(full, value);
        else if (key == "height_mm") c.workspace.height_mm = to_double(full, value);
        else if (key == "px_per_mm") c.workspace.px_per_mm = to_double(full, value);
        else if (key == "background") c.background_shade = to_double(full, value);
        else throw ConfigError("unknown config key: '" + full + "'");
        return;
    }
    if (section == "gripper") {
        if (key == "max_open_mm") c.gripper.max_open_mm = to_double(full, value);
        else if (key == "min_close_mm") c.gripper.min_close_mm = to_double(full, value);
        else if (key == "jaw_len_mm") c.gripper.jaw_len_mm = to_double(full, value);
        else if (key == "jaw_thick_mm") c.gripper.jaw_thick_mm = to_double(full, value);
        else if (key == "jaw_standoff_mm") c.gripper.jaw_standoff_mm = to_double(full, value);
        else throw ConfigError("unknown config key: '" + full + "'");
        return;
    }
    if (section == "scene") {
        if (key == "n_objects") c.scene_objects = static_cast<int>(to_int(full, value));
        else if (key == "min_objects") c.scene_min_objects = static_cast<int>(to_int(full, value));
        else if (key == "max_place_attempts")
            c.scene_max_attempts = static_cast<int>(to_int(full, value));
        else throw ConfigError("unknown config key: '" + full + "'");
        return;
    }
    if (section == "shapes") {
        if (key == "seen") c.shapes_seen = split_list(value);
        else if (key == "novel") c.shapes_novel = split_list(value);
        else if (key == "test") c.shapes_test = split_list(value);
        else throw ConfigError("unknown config key: '" + full + "'");
        return;
    }
    if (section == "collect") {
        if (key == "trials") c.collect_trials = static_cast<int>(to_int(full, value));
        else if (key == "streams") c.collect_streams = static_cast<int>(to_int(full, value));
        else if (key == "stall_refresh") c.collect_stall_refresh = static_cast<int>(to_int(full, value));
        else throw ConfigError("unknown config key: '" + full + "'");
        return;
    }
    if (section == "patch") {
        if (key == "input_side") c.patch.input_side = static_cast<int>(to_int(full, value));
        else if (key == "context_scale") c.patch.context_scale = to_double(full, value);
        else if (key == "aug_factor") c.augment.factor = static_cast<int>(to_int(full, value));
        else if (key == "aug_bin_aligned") c.augment.bin_aligned = to_bool(full, value);
        else throw ConfigError("unknown config key: '" + full + "'");
        return;
    }
    if (section == "train") {
        if (key == "arch") c.train_arch = value;
        else if (key == "lr") c.train.learning_rate = to_double(full, value);
        else if (key == "epochs") c.train.epochs = static_cast<int>(to_int(full, value));
        else if (key == "batch") c.train.batch_size = static_cast<int>(to_int(full, value));
        else if (key == "momentum") c.train.momentum = to_double(full, value);
        else throw ConfigError("unknown config key: '" + full + "'");
        return;
    }
    if (section == "pretrain") {
        if (key == "enabled") c.pretrain_enabled = to_bool(full, value);
        else if (key == "samples") c.pretrain_samples = static_cast<int>(to_int(full, value));
        else if (key == "lr") c.pretrain.learning_rate = to_double(full, value);
        else if (key == "epochs") c.pretrain.epochs = static_cast<int>(to_int(full, value));
        else throw ConfigError("unknown config key: '" + full + "'");
        return;
    }
    if (section == "stage") {
        if (key == "stages") c.stage_count = static_cast<int>(to_int(full, value));
        else if (key == "gamma") c.stage.gamma = static_cast<int>(to_int(full, value));
        else if (key == "n_patches") c.stage.n_patches = static_cast<int>(to_int(full, value));
        else if (key == "trials_per_stage")
            c.stage.trials_per_stage = static_cast<int>(to_int(full, value));
        else if (key == "novel_fraction") c.stage.novel_object_fraction = to_double(full, value);
        else if (key == "epsilon") c.stage.epsilon = to_double(full, value);
        else if (key == "law") c.stage.sampling_law = value;
        else if (key == "lr") c.stage_train.learning_rate = to_double(full, value);
        else if (key == "epochs") c.stage_train.epochs = static_cast<int>(to_int(full, value));
        else throw ConfigError("unknown config key: '" + full + "'");
        return;
    }
    if (section == "eval") {
        if (key == "test_trials") c.eval_test_trials = static_cast<int>(to_int(full, value));
        else if (key == "balance") c.eval_balance = to_bool(full, value);
        else if (key == "threshold") c.eval_threshold = to_double(full, value);
        else if (key == "candidates") c.rerank_cfg.n_candidates = static_cast<int>(to_int(full, value));
        else if (key == "topk") c.rerank_cfg.top_k = static_cast<int>(to_int(full, value));
        else if (key == "neighbors") c.rerank_cfg.n_neighbors = static_cast<int>(to_int(full, value));
        else if (key == "radius_mm") c.rerank_cfg.neighborhood_radius_mm = to_double(full, value);
        else if (key == "jitter_mm") c.eval_jitter_mm = to_double(full, value);
        else if (key == "rate_tries") c.eval_rate_tries = static_cast<int>(to_int(full, value));
        else if (key == "clutter_runs") c.clutter_runs = static_cast<int>(to_int(full, value));
        else if (key == "clutter_cap") c.clutter_cap = static_cast<int>(to_int(full, value));
        else throw ConfigError("unknown config key: '" + full + "'");
        return;
    }
    if (section == "ablate") {
        if (key == "sizes") {
            c.ablate_sizes.clear();
            for (const std::string& s : split_list(value))
                c.ablate_sizes.push_back(static_cast<int>(to_int(full, s)));
        } else if (key == "seeds") {
            c.ablate_seeds = static_cast<int>(to_int(full, value));
        } else if (key == "epochs") {
            c.ablate_epochs = static_cast<int>(to_int(full, value));
        } else if (key == "aug_factor") {
            c.ablate_aug_factor = static_cast<int>(to_int(full, value));
        } else {
            throw ConfigError("unknown config key: '" + full + "'");
        }
        return;
    }
    throw ConfigError("unknown config section: '" + section + "'");
}

}  // namespace

std::vector<ObjectShape> RunConfig::seen_shapes() const {
    return shapes_by_names(resolve_group(shapes_seen));
}
std::vector<ObjectShape> RunConfig::novel_shapes() const {
    return shapes_by_names(resolve_group(shapes_novel));
}
std::vector<ObjectShape> RunConfig::test_shapes() const {
    return shapes_by_names(resolve_group(shapes_test));
}

std::vector<std::string> RunConfig::training_shape_names() const {
    std::vector<std::string> out;
    for (const ObjectShape& s : seen_shapes()) out.push_back(s.name);
    for (const ObjectShape& s : novel_shapes()) out.push_back(s.name);
    return out;
}

CollectConfig RunConfig::make_collect_config() const {
    CollectConfig cc;
    cc.n_trials = collect_trials;
    cc.n_objects = scene_objects;
    cc.min_objects = scene_min_objects;
    cc.streams = collect_streams;
    cc.stall_refresh = collect_stall_refresh;
    cc.background_shade = background_shade;
    cc.scene_gen.max_attempts_per_object = scene_max_attempts;
    cc.patch = patch;
    cc.patch.fill = background_shade;
    return cc;
}

Architecture RunConfig::make_architecture() const {
    if (train_arch == "desk") return Architecture::desk(patch.input_side);
    if (train_arch == "paper_scale") return Architecture::paper_scale();
    if (train_arch == "tiny") return Architecture::tiny(patch.input_side);
    throw ConfigError("unknown [train] arch: '" + train_arch + "'");
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    cfg.shapes_seen = {"@seen"};
    cfg.shapes_novel = {"@novel"};
    cfg.shapes_test = {"@test"};
    cfg.pretrain.learning_rate = 0.01;
    cfg.pretrain.epochs = 10;
    cfg.stage_train = stagek_schedule();

    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        apply_kv(cfg, section, key, value);
    }
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

std::string default_config_text() {
    return R"(# graspforge run configuration (desk scale defaults)
seed = 7

[workspace]
width_mm = 600
height_mm = 600
px_per_mm = 1.0
background = 0.95

[gripper]
max_open_mm = 75
min_close_mm = 37
jaw_len_mm = 20
jaw_thick_mm = 8
jaw_standoff_mm = 0.1

[scene]
n_objects = 8
min_objects = 3
max_place_attempts = 2000

[shapes]
seen = "@seen"
novel = "@novel"
test = "@test"

[collect]
trials = 2000
streams = 4
stall_refresh = 150

[patch]
input_side = 48
context_scale = 1.5
aug_factor = 4
aug_bin_aligned = true

[train]
arch = "desk"
lr = 0.01
epochs = 20
batch = 64
momentum = 0.9

[pretrain]
enabled = true
samples = 2000
lr = 0.01
epochs = 10

[stage]
stages = 1
gamma = 3
n_patches = 800
trials_per_stage = 1000
novel_fraction = 0.5
epsilon = 0.001
law = "score"
lr = 0.001
epochs = 5

[eval]
test_trials = 5000
balance = true
threshold = 0.5
candidates = 800
topk = 10
neighbors = 10
radius_mm = 5
jitter_mm = 0
rate_tries = 500
clutter_runs = 5
clutter_cap = 400

[ablate]
sizes = "500,1000,2000,5000,10000"
seeds = 3
epochs = 10
aug_factor = 1
)";
}

void apply_env_overrides(RunConfig& cfg) {
    static const std::vector<std::pair<std::string, std::string>> keys = {
        {"", "seed"},
        {"workspace", "width_mm"}, {"workspace", "height_mm"}, {"workspace", "px_per_mm"},
        {"workspace", "background"},
        {"gripper", "max_open_mm"}, {"gripper", "min_close_mm"}, {"gripper", "jaw_len_mm"},
        {"gripper", "jaw_thick_mm"}, {"gripper", "jaw_standoff_mm"},
        {"scene", "n_objects"}, {"scene", "min_objects"}, {"scene", "max_place_attempts"},
        {"shapes", "seen"}, {"shapes", "novel"}, {"shapes", "test"},
        {"collect", "trials"}, {"collect", "streams"}, {"collect", "stall_refresh"},
        {"patch", "input_side"}, {"patch", "context_scale"}, {"patch", "aug_factor"},
        {"patch", "aug_bin_aligned"},
        {"train", "arch"}, {"train", "lr"}, {"train", "epochs"}, {"train", "batch"},
        {"train", "momentum"},
        {"pretrain", "enabled"}, {"pretrain", "samples"}, {"pretrain", "lr"},
        {"pretrain", "epochs"},
        {"stage", "stages"}, {"stage", "gamma"}, {"stage", "n_patches"},
        {"stage", "trials_per_stage"}, {"stage", "novel_fraction"}, {"stage", "epsilon"},
        {"stage", "law"}, {"stage", "lr"}, {"stage", "epochs"},
        {"eval", "test_trials"}, {"eval", "balance"}, {"eval", "threshold"},
        {"eval", "candidates"}, {"eval", "topk"}, {"eval", "neighbors"}, {"eval", "radius_mm"},
        {"eval", "jitter_mm"}, {"eval", "rate_tries"}, {"eval", "clutter_runs"},
        {"eval", "clutter_cap"},
        {"ablate", "sizes"}, {"ablate", "seeds"}, {"ablate", "epochs"}, {"ablate", "aug_factor"},
    };
    for (const auto& [section, key] : keys) {
        std::string env = "GRASPFORGE_";
        if (!section.empty()) env += section + "_";
        env += key;
        std::transform(env.begin(), env.end(), env.begin(),
                       [](unsigned char ch) { return std::toupper(ch); });
        if (const char* v = std::getenv(env.c_str())) {
            apply_kv(cfg, section, key, v);
        }
    }
}

}  // namespace gf
