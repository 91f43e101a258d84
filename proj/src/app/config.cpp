#include "proact/app/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace proact::app {

namespace pt = boost::property_tree;

namespace {

struct Binding {
    std::string section;
    std::string key;
    std::function<void(const std::string&)> read;
    std::function<std::string()> write;
};

template <typename T>
Binding bind(std::string section, std::string key, T& field) {
    return {std::move(section), std::move(key),
            [&field](const std::string& text) {
                std::istringstream in(text);
                T value{};
                if constexpr (std::is_same_v<T, bool>) {
                    in >> std::boolalpha >> value;
                } else {
                    in >> value;
                }
                if (in.fail() || !(in >> std::ws).eof()) throw std::invalid_argument("cannot parse '" + text + "'");
                field = value;
            },
            [&field] {
                std::ostringstream out;
                out.precision(17);
                if constexpr (std::is_same_v<T, bool>) out << std::boolalpha;
                out << field;
                return out.str();
            }};
}

Binding bind_string(std::string section, std::string key, std::string& field) {
    return {std::move(section), std::move(key), [&field](const std::string& t) { field = t; }, [&field] { return field; }};
}

std::vector<Binding> bindings(Config& c) {
    auto& t = c.train.base;
    auto& ct = c.control.train;
    return {
        bind_string("skeleton", "preset", c.skeleton.preset),
        bind("flow", "window", c.flow.window),
        bind("flow", "overlap", c.flow.overlap),
        bind("flow", "steps", c.flow.steps),
        bind("flow", "hidden", c.network.hidden),
        bind("flow", "ff_hidden", c.network.ff_hidden),
        bind("flow", "blocks", c.network.blocks),
        bind("flow", "kernel", c.network.kernel),
        bind("flow", "time_dims", c.network.time_dims),
        bind("train", "learning_rate", t.learning_rate),
        bind("train", "dropout_p", t.dropout_p),
        bind("train", "batch_size", t.batch_size),
        bind("train", "steps", t.total_steps),
        bind("train", "prefix_clamp_p", t.prefix_clamp_p),
        bind("train", "log_interval", t.log_interval),
        bind("train", "streams", c.train.streams),
        bind("train", "stream_frames", c.train.stream_frames),
        bind("control", "learning_rate", ct.learning_rate),
        bind("control", "noise_p", ct.dropout_p),
        bind("control", "batch_size", ct.batch_size),
        bind("control", "steps", ct.total_steps),
        bind("control", "prefix_clamp_p", ct.prefix_clamp_p),
        bind("control", "intent_dims", c.control.shape.intent_dims),
        bind("control", "position_dims", c.control.shape.position_dims),
        bind("control", "intention_fraction", c.control.intention_fraction),
        bind("control", "ramp_frames", c.control.ramp_frames),
        bind("control", "hold_chunks", c.control.hold_chunks),
        bind("cognitive", "cycle_seconds", c.cognitive.loop.cycle_seconds),
        bind("cognitive", "t_c", c.cognitive.loop.t_c),
        bind("cognitive", "threshold", c.cognitive.loop.threshold),
        bind("cognitive", "field_capacity", c.cognitive.loop.field_capacity),
        bind_string("cognitive", "rules", c.cognitive.rules),
        bind_string("cognitive", "backend", c.cognitive.backend),
        bind_string("cognitive", "host", c.cognitive.host),
        bind("cognitive", "port", c.cognitive.port),
        bind("locomotion", "max_translation", c.locomotion.max_translation),
        bind("locomotion", "max_turn_deg", c.locomotion.max_turn_deg),
        bind("locomotion", "reference_speed", c.locomotion.reference_speed),
        bind("locomotion", "reference_turn_deg_s", c.locomotion.reference_turn_deg_s),
        bind("locomotion", "cycle_period", c.locomotion.cycle_period),
        bind("eval", "sigma", c.eval.sigma),
        bind("eval", "fgd_dims", c.eval.fgd_dims),
        bind("eval", "projection_seed", c.eval.projection_seed),
        bind("eval", "div_k", c.eval.div_k),
        bind("eval", "stream_seconds", c.eval.stream_seconds),
    };
}

}  // namespace

motion::SkeletonSpec SkeletonSection::build() const {
    if (preset == "toy") return motion::SkeletonSpec::toy();
    if (preset == "robot23") return motion::SkeletonSpec::robot23();
    if (preset == "capture57") return motion::SkeletonSpec::capture57();
    throw std::invalid_argument("unknown skeleton preset: " + preset);
}

Config Config::parse(const std::string& text) {
    // read_ini only understands whole-line comments; drop trailing "; ..." too.
    std::string cleaned;
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) {
        if (auto cut = line.find_first_of(";#"); cut != std::string::npos) line.resize(cut);
        cleaned += line + '\n';
    }
    pt::ptree tree;
    std::istringstream in(cleaned);
    pt::read_ini(in, tree);
    Config c;
    auto binds = bindings(c);
    for (const auto& [section, keys] : tree) {
        if (keys.empty() && !keys.data().empty()) throw std::invalid_argument("config key outside a section: " + section);
        for (const auto& [key, value] : keys) {
            auto it = std::find_if(binds.begin(), binds.end(), [&](const Binding& b) { return b.section == section && b.key == key; });
            if (it == binds.end()) throw std::invalid_argument("unknown config key [" + section + "] " + key);
            try {
                it->read(value.data());
            } catch (const std::invalid_argument& e) {
                throw std::invalid_argument("[" + section + "] " + key + ": " + e.what());
            }
        }
    }
    c.network.frame_width = c.skeleton.build().frame_width();
    c.train.base.overlap = c.flow.overlap;
    c.control.train.overlap = c.flow.overlap;
    c.validate();
    return c;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string Config::to_ini() const {
    Config copy = *this;
    std::string out, section;
    for (const auto& b : bindings(copy)) {
        if (b.section != section) {
            out += (section.empty() ? "" : "\n") + std::string("[") + b.section + "]\n";
            section = b.section;
        }
        out += b.key + " = " + b.write() + "\n";
    }
    return out;
}

void Config::validate() const {
    skeleton.build();
    flow.validate();
    network.validate();
    train.base.validate();
    control.train.validate();
    cognitive.loop.validate();
    if (control.ramp_frames < 1 || control.hold_chunks < 0) throw std::invalid_argument("control ramp/hold");
    if (!(control.intention_fraction >= 0.0 && control.intention_fraction <= 1.0)) throw std::invalid_argument("intention_fraction");
    if (cognitive.backend != "rules" && cognitive.backend != "external") throw std::invalid_argument("cognitive backend must be rules or external");
    if (locomotion.cycle_period != 1.0) throw std::invalid_argument("the gait cycle is fixed at 1.0 s");
    if (!(eval.sigma > 0.0) || eval.fgd_dims < 1 || eval.stream_seconds < 1) throw std::invalid_argument("eval section");
    if (train.streams < 1 || train.stream_frames < flow.window) throw std::invalid_argument("train streams");
}

std::string asset_dir() {
    if (const char* env = std::getenv("PROACT_ASSETS")) return env;
    return PROACT_ASSET_DIR;
}

std::string resolve_asset(const std::string& path) {
    if (std::filesystem::path(path).is_absolute() || std::filesystem::exists(path)) return path;
    return asset_dir() + "/" + path;
}

}  // namespace proact::app
