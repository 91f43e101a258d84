// Command-line front end: data generation, training, streaming, scenarios, evaluation.
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "proact/app/pipeline.hpp"
#include "proact/flow/checkpoint.hpp"
#include "proact/motion/chunk_io.hpp"

using namespace proact;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "INI file; built-in defaults when omitted")->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "Overrides every seed in the config");
}

app::Pipeline make_pipeline(const Common& c) {
    auto cfg = c.config.empty() ? app::Config{} : app::Config::load(c.config);
    if (c.seed) {
        cfg.train.base.seed = *c.seed;
        cfg.control.train.seed = *c.seed;
    }
    return app::Pipeline(cfg);
}

std::uint64_t seed_of(const Common& c) { return c.seed.value_or(0); }

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

nlohmann::json matrix_rows(const Matrix& m) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::vector<double> v(m.cols());
        for (Eigen::Index c = 0; c < m.cols(); ++c) v[static_cast<std::size_t>(c)] = m(r, c);
        rows.push_back(v);
    }
    return rows;
}

int report(bool ok, const nlohmann::json& summary) {
    std::cout << summary.dump(2) << '\n';
    return ok ? 0 : 1;
}

training::TrainHooks log_hooks(std::ofstream* log) {
    training::TrainHooks h;
    h.on_log = [log](const training::LossRecord& r) {
        if (log) training::write_loss_record(*log, r);
        std::cerr << "step " << r.step << " loss " << r.loss << '\n';
    };
    return h;
}

int gen_data(const Common& c, const std::string& out, int count, double fraction) {
    auto p = make_pipeline(c);
    scenario::DatasetSpec spec;
    spec.size = count;
    spec.window = p.cfg.flow.window;
    spec.intention_fraction = fraction;
    spec.stream_frames = p.cfg.train.stream_frames;
    const auto data = scenario::generate_dataset(p.coupling, p.spec, p.vocab, spec, seed_of(c));
    auto f = open_out(out);
    bool ok = static_cast<int>(data.size()) == count;
    std::size_t labelled = 0;
    for (const auto& t : data) {
        ok = ok && t.motion.allFinite() && t.motion.rows() == spec.window && t.motion.cols() == p.spec.frame_width();
        labelled += t.intention.empty() ? 0 : 1;
        f << nlohmann::json{{"intention", t.intention.raw_text},
                            {"beats", t.beats},
                            {"motion", matrix_rows(t.motion)},
                            {"user_audio", matrix_rows(t.audio.user_audio.features)},
                            {"agent_audio", matrix_rows(t.audio.agent_audio.features)}}
                 .dump()
          << '\n';
    }
    return report(ok, {{"windows", data.size()}, {"labelled", labelled}, {"out", out}});
}

int train_base(const Common& c, const std::string& out, const std::string& log_path, std::optional<int> steps) {
    auto p = make_pipeline(c);
    auto cfg = p.cfg.train.base;
    if (steps) cfg.total_steps = *steps;
    const auto data = p.sampler(0.0, seed_of(c));
    std::optional<std::ofstream> log;
    if (!log_path.empty()) log = open_out(log_path);
    auto res = training::train_base(p.fresh_network(seed_of(c)), data, cfg, log_hooks(log ? &*log : nullptr));
    flow::save_network(out, res.net);
    const std::size_t w = std::clamp<std::size_t>(res.curve.size() / 4, 1, 50);
    const double head = training::smoothed_head(res.curve, w), tail = training::smoothed_tail(res.curve, w);
    return report(!res.diverged && tail < head,
                  {{"out", out}, {"steps", res.curve.size()}, {"loss_head", head}, {"loss_tail", tail}, {"diverged", res.diverged}});
}

int train_control(const Common& c, const std::string& base_path, const std::string& out, const std::string& log_path,
                   std::optional<int> steps) {
    auto p = make_pipeline(c);
    const auto base = flow::load_network(base_path);
    const auto before = base.checksum();
    auto cfg = p.cfg.control.train;
    if (steps) cfg.total_steps = *steps;
    const auto data = p.sampler(p.cfg.control.intention_fraction, seed_of(c) + 1);
    std::optional<std::ofstream> log;
    if (!log_path.empty()) log = open_out(log_path);
    auto init = control::init_control_branch(base, p.vocab, p.cfg.control.shape, seed_of(c));
    auto res = training::train_control(base, std::move(init), data, cfg, log_hooks(log ? &*log : nullptr));
    control::save_branch(out, res.branch);
    const std::size_t w = std::clamp<std::size_t>(res.curve.size() / 4, 1, 50);
    const double head = training::smoothed_head(res.curve, w), tail = training::smoothed_tail(res.curve, w);
    const bool frozen = base.checksum() == before;
    return report(!res.diverged && tail < head && frozen, {{"out", out},
                                                           {"steps", res.curve.size()},
                                                           {"loss_head", head},
                                                           {"loss_tail", tail},
                                                           {"diverged", res.diverged},
                                                           {"base_unchanged", frozen}});
}

int generate(const Common& c, const std::string& base_path, const std::string& branch_path, double seconds,
             const std::string& intention, int at_chunk, const std::string& out, const std::string& trace_path) {
    auto p = make_pipeline(c);
    const auto base = flow::load_network(base_path);
    std::optional<control::ControlBranch> branch;
    if (!branch_path.empty()) branch = control::load_branch(branch_path);
    if (!intention.empty() && !branch) throw CLI::ValidationError("--intention", "needs --branch");
    const auto frames = static_cast<Eigen::Index>(std::llround(seconds * p.spec.fps()));
    const auto audio = scenario::generate_audio(p.coupling, frames + p.cfg.flow.window, seed_of(c));
    streaming::MatrixAudioFeed feed(audio.user_audio, audio.agent_audio);
    streaming::StreamingEngine eng(base, branch ? &*branch : nullptr, p.stream_config(seed_of(c)), p.skeleton);
    std::optional<std::ofstream> trace;
    if (!trace_path.empty()) trace = open_out(trace_path);
    auto motion_out = open_out(out);
    std::vector<motion::MotionChunk> emitted, windows;
    bool deadlines = true;
    while (eng.state().emitted_end < frames) {
        if (!intention.empty() && eng.state().chunk_index == at_chunk) {
            streaming::inject_intention(eng.mailbox(), motion::parse_intention(intention, p.vocab), p.vocab);
        }
        auto r = eng.next_chunk(feed);
        if (trace) streaming::write_trace_record(*trace, eng.state().chunk_index - 1, r);
        motion::write_chunk_ndjson(motion_out, r.emitted);
        deadlines = deadlines && r.budget.deadline_met;
        emitted.push_back(r.emitted);
        windows.push_back(r.window);
    }
    const auto cont = eval::continuity(emitted, &windows, p.cfg.flow.overlap);
    return report(deadlines && cont.passed && cont.overlap_max_deviation == 0.0,
                  {{"chunks", emitted.size()}, {"deadlines_met", deadlines}, {"continuity", cont.to_json()}});
}

std::string scenario_path(const std::string& s) {
    if (s.find('/') != std::string::npos || s.ends_with(".json")) return s;
    return app::resolve_asset("scenarios/" + s + ".json");
}

int simulate(const Common& c, const std::string& scenario, const std::string& base_path, const std::string& branch_path,
             const std::string& trace_path, bool deterministic) {
    auto p = make_pipeline(c);
    const auto base = flow::load_network(base_path);
    std::optional<control::ControlBranch> branch;
    if (!branch_path.empty()) branch = control::load_branch(branch_path);
    auto script = scenario::ScenarioScript::load(scenario_path(scenario));
    if (c.seed) script.seed = *c.seed;
    const auto res = scenario::run_scenario(script, p.harness(base, branch ? &*branch : nullptr, deterministic));
    if (!trace_path.empty()) {
        auto f = open_out(trace_path);
        res.write_trace(f);
    } else {
        res.write_trace(std::cout);
    }
    const auto causal = scenario::check_causality(res.trace);
    const bool deadlines = std::all_of(res.budgets.begin(), res.budgets.end(), [](const auto& b) { return b.deadline_met; });
    std::size_t intentions = 0;
    for (const auto& r : res.trace) intentions += r.at("kind") == "intention" ? 1 : 0;
    nlohmann::json summary{{"scenario", script.name}, {"chunks", res.budgets.size()},    {"cycles", res.cycles.size()},
                           {"intentions", intentions}, {"deadlines_met", deadlines},     {"causal", causal.ok},
                           {"aborted", res.aborted},   {"error", res.error}};
    if (!causal.ok) summary["causality_detail"] = causal.detail;
    std::cerr << summary.dump() << '\n';
    return !res.aborted && causal.ok && deadlines ? 0 : 1;
}

int evaluate(const Common& c, const std::string& base_path, const std::string& branch_path, int seeds, const std::string& out) {
    auto p = make_pipeline(c);
    const auto base = flow::load_network(base_path);
    const auto streams = app::evaluate_streams(p, base, seeds, seed_of(c));
    nlohmann::json j{{"streams", streams.to_json()}};
    bool ok = streams.overlap_exact() && streams.seams_within_p999();
    if (!branch_path.empty()) {
        const auto branch = control::load_branch(branch_path);
        const auto ctrl = app::evaluate_control(p, base, branch, seeds, seed_of(c));
        j["control"] = ctrl.to_json();
        ok = ok && ctrl.conditioned_mean > ctrl.unconditioned_mean;
    }
    if (!out.empty()) open_out(out) << j.dump(2) << '\n';
    return report(ok, {{"beat_align", streams.beat_align.value},
                       {"beat_align_shuffled", streams.beat_align_shuffled.value},
                       {"fgd", streams.fgd.value},
                       {"diversity", streams.diversity.value},
                       {"overlap_exact", streams.overlap_exact()},
                       {"seams_within_p999", streams.seams_within_p999()},
                       {"clamp_off_worse", streams.clamp_off_worse()},
                       {"control", j.value("control", nlohmann::json{}).value("conditioned_mean", -1.0)}});
}

int bench(const Common& c, const std::string& base_path, const std::string& branch_path, int chunks) {
    auto p = make_pipeline(c);
    const auto base = flow::load_network(base_path);
    const auto branch = control::load_branch(branch_path);
    const auto b = app::bench_budget(p, base, branch, chunks, seed_of(c));
    auto j = b.to_json();
    j.erase("audio_only");
    j.erase("controlled");
    return report(b.all_deadlines_met(), j);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"proactive co-speech motion toolkit"};
    cli.require_subcommand(1);
    Common common;
    std::string out, log, base, branch, trace, intention, scenario;
    std::optional<int> steps;
    int count = 64, at_chunk = 1, seeds = 3, chunks = 10;
    double fraction = 0.0, seconds = 20.0;
    bool deterministic = false;

    auto* gd = cli.add_subcommand("gen-data", "Write synthetic training windows as NDJSON");
    add_common(gd, common);
    gd->add_option("--out", out)->required();
    gd->add_option("--count", count)->check(CLI::PositiveNumber);
    gd->add_option("--intention-fraction", fraction)->check(CLI::Range(0.0, 1.0));

    auto* tb = cli.add_subcommand("train-base", "Train the audio-driven flow network");
    add_common(tb, common);
    tb->add_option("--out", out)->required();
    tb->add_option("--log", log, "Loss curve as NDJSON");
    tb->add_option("--steps", steps);

    auto* tc = cli.add_subcommand("train-control", "Train the intention branch against a frozen base");
    add_common(tc, common);
    tc->add_option("--base", base)->required()->check(CLI::ExistingFile);
    tc->add_option("--out", out)->required();
    tc->add_option("--log", log);
    tc->add_option("--steps", steps);

    auto* ge = cli.add_subcommand("generate", "Stream motion for synthetic audio");
    add_common(ge, common);
    ge->add_option("--base", base)->required()->check(CLI::ExistingFile);
    ge->add_option("--branch", branch)->check(CLI::ExistingFile);
    ge->add_option("--seconds", seconds)->check(CLI::PositiveNumber);
    ge->add_option("--intention", intention, "\"body_part action\", posted before --at-chunk");
    ge->add_option("--at-chunk", at_chunk);
    ge->add_option("--out", out)->required();
    ge->add_option("--trace", trace);

    auto* si = cli.add_subcommand("simulate", "Replay a scenario script through the full system");
    add_common(si, common);
    si->add_option("--scenario", scenario, "Bundled name or path to a script")->required();
    si->add_option("--base", base)->required()->check(CLI::ExistingFile);
    si->add_option("--branch", branch)->check(CLI::ExistingFile);
    si->add_option("--trace", trace, "NDJSON trace; stdout when omitted");
    si->add_flag("--deterministic", deterministic, "Omit wall-clock fields from the trace");

    auto* ev = cli.add_subcommand("eval", "Stream metrics and, with --branch, intention control");
    add_common(ev, common);
    ev->add_option("--base", base)->required()->check(CLI::ExistingFile);
    ev->add_option("--branch", branch)->check(CLI::ExistingFile);
    ev->add_option("--seeds", seeds)->check(CLI::PositiveNumber);
    ev->add_option("--out", out, "Full report as JSON");

    auto* bb = cli.add_subcommand("bench-budget", "Per-chunk generation time with and without control");
    add_common(bb, common);
    bb->add_option("--base", base)->required()->check(CLI::ExistingFile);
    bb->add_option("--branch", branch)->required()->check(CLI::ExistingFile);
    bb->add_option("--chunks", chunks)->check(CLI::Range(2, 100000));

    CLI11_PARSE(cli, argc, argv);
    try {
        if (gd->parsed()) return gen_data(common, out, count, fraction);
        if (tb->parsed()) return train_base(common, out, log, steps);
        if (tc->parsed()) return train_control(common, base, out, log, steps);
        if (ge->parsed()) return generate(common, base, branch, seconds, intention, at_chunk, out, trace);
        if (si->parsed()) return simulate(common, scenario, base, branch, trace, deterministic);
        if (ev->parsed()) return evaluate(common, base, branch, seeds, out);
        if (bb->parsed()) return bench(common, base, branch, chunks);
    } catch (const CLI::Error& e) {
        return cli.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
