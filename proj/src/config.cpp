#include "wakd/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wakd/errors.hpp"

using nlohmann::json;

namespace wakd {

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& prefix) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key))
            throw ConfigError("config: unknown key \"" + prefix + key + "\"");
    }
}

template <typename T>
void read_field(const json& obj, const char* key, const std::string& prefix, T& out) {
    if (!obj.contains(key))
        return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config: bad value for \"" + prefix + key + "\": " + e.what());
    }
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

} // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ConfigError("config: malformed JSON at line " + std::to_string(line) + ", column " +
                          std::to_string(col));
    }
    if (!root.is_object())
        throw ConfigError("config: top level must be a JSON object");

    static const std::set<std::string> top_keys = {
        "generator",       "teacher_hidden",  "student_hidden",
        "activation",      "teacher_iterations", "distill_iterations",
        "eval_every",      "checkpoint_every", "batch_size",
        "learning_rate",   "tau",             "swad",
        "sma_start_frac",  "wakd_start_frac", "strategies",
        "seeds",           "output_dir",      "keep_teacher_checkpoints"};
    reject_unknown_keys(root, top_keys, "");

    ExperimentConfig config;
    if (root.contains("generator")) {
        const json& gen = root.at("generator");
        if (!gen.is_object())
            throw ConfigError("config: \"generator\" must be an object");
        static const std::set<std::string> gen_keys = {"family", "num_classes", "samples_per_domain",
                                                       "domain_params", "noise", "seed"};
        reject_unknown_keys(gen, gen_keys, "generator.");
        try {
            config.generator = gen.get<GeneratorSpec>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config: bad \"generator\" value: ") + e.what());
        }
    }
    read_field(root, "teacher_hidden", "", config.teacher_hidden);
    read_field(root, "student_hidden", "", config.student_hidden);
    if (root.contains("activation")) {
        if (!root.at("activation").is_string())
            throw ConfigError("config: \"activation\" must be a string");
        const std::string act = root.at("activation").get<std::string>();
        if (act == "tanh")
            config.activation = Activation::Tanh;
        else if (act == "relu")
            config.activation = Activation::Relu;
        else
            throw ConfigError("config: \"activation\" must be \"tanh\" or \"relu\", got \"" + act + "\"");
    }
    read_field(root, "teacher_iterations", "", config.teacher_iterations);
    read_field(root, "distill_iterations", "", config.distill_iterations);
    read_field(root, "eval_every", "", config.eval_every);
    read_field(root, "checkpoint_every", "", config.checkpoint_every);
    read_field(root, "batch_size", "", config.batch_size);
    read_field(root, "learning_rate", "", config.learning_rate);
    read_field(root, "tau", "", config.tau);
    if (root.contains("swad")) {
        const json& sw = root.at("swad");
        if (!sw.is_object())
            throw ConfigError("config: \"swad\" must be an object");
        static const std::set<std::string> swad_keys = {"n_s", "n_e", "r"};
        reject_unknown_keys(sw, swad_keys, "swad.");
        read_field(sw, "n_s", "swad.", config.swad.n_s);
        read_field(sw, "n_e", "swad.", config.swad.n_e);
        read_field(sw, "r", "swad.", config.swad.r);
    }
    read_field(root, "sma_start_frac", "", config.sma_start_frac);
    read_field(root, "wakd_start_frac", "", config.wakd_start_frac);
    read_field(root, "strategies", "", config.strategies);
    read_field(root, "seeds", "", config.seeds);
    read_field(root, "output_dir", "", config.output_dir);
    read_field(root, "keep_teacher_checkpoints", "", config.keep_teacher_checkpoints);

    config.validate();
    return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(std::move(ss).str());
}

std::string canonical_config_json(const ExperimentConfig& config) {
    json j;
    j["generator"] = config.generator;
    j["teacher_hidden"] = config.teacher_hidden;
    j["student_hidden"] = config.student_hidden;
    j["activation"] = config.activation == Activation::Tanh ? "tanh" : "relu";
    j["teacher_iterations"] = config.teacher_iterations;
    j["distill_iterations"] = config.distill_iterations;
    j["eval_every"] = config.eval_every;
    j["checkpoint_every"] = config.checkpoint_every;
    j["batch_size"] = config.batch_size;
    j["learning_rate"] = config.learning_rate;
    j["tau"] = config.tau;
    j["swad"] = {{"n_s", config.swad.n_s}, {"n_e", config.swad.n_e}, {"r", config.swad.r}};
    j["sma_start_frac"] = config.sma_start_frac;
    j["wakd_start_frac"] = config.wakd_start_frac;
    j["strategies"] = config.strategies;
    j["seeds"] = config.seeds;
    j["output_dir"] = config.output_dir;
    j["keep_teacher_checkpoints"] = config.keep_teacher_checkpoints;
    return j.dump(2) + "\n";
}

} // namespace wakd
