#include "commands.hpp"

#include <fstream>
#include <iostream>

#include "dialogen/corpus.hpp"
#include "dialogen/error.hpp"
#include "dialogen/kb.hpp"
#include "dialogen/planner.hpp"
#include "dialogen/policy.hpp"
#include "dialogen/realizer.hpp"
#include "dialogen/retrieval.hpp"
#include "dialogen/training.hpp"

#ifndef DIALOGEN_SOURCE_DIR
#define DIALOGEN_SOURCE_DIR "."
#endif

namespace dialogen::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

fs::path Context::workdir() const { return settings.text("paths.workdir"); }

fs::path Context::path_or(const std::string& key, const std::string& fallback) const {
    const auto v = settings.text(key);
    return v.empty() ? workdir() / fallback : fs::path(v);
}

namespace {

void write_json(const fs::path& path, const ojson& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << j.dump(2) << '\n')) {
        throw ConfigError("cannot write " + path.string());
    }
}

void emit(Context& ctx, const ojson& j) { ctx.out << j.dump(2) << '\n'; }

fs::path kb_file(const Context& ctx) { return ctx.workdir() / "kb.jsonl"; }

KnowledgeBase load_kb(const Context& ctx) {
    const auto path = kb_file(ctx);
    if (!fs::exists(path)) {
        throw KbError("no knowledge base at " + path.string() + "; run `dialogen ingest <kb.jsonl>` first");
    }
    return ingest(path);
}

BehaviorParams behavior(const Settings& s) {
    BehaviorParams p;
    p.p_elicit_info = s.number("simulator.p_elicit_info");
    p.p_reformulate = s.number("simulator.p_reformulate");
    p.p_noise_keyword = s.number("simulator.p_noise_keyword");
    p.keyword_count_min = s.count("simulator.keyword_count_min");
    p.keyword_count_max = s.count("simulator.keyword_count_max");
    p.patience = s.count("simulator.patience");
    p.validate();
    return p;
}

PlannerConfig planner_config(const Settings& s) {
    PlannerConfig c;
    c.turn_cap = s.count("dialogue.turn_cap");
    c.shortlist_k = s.count("dialogue.shortlist_k");
    if (c.turn_cap == 0 || c.shortlist_k == 0) {
        throw ConfigError("dialogue.turn_cap and dialogue.shortlist_k must be positive");
    }
    return c;
}

TrainingConfig training_config(const Settings& s) {
    TrainingConfig c;
    c.hyper.alpha = s.number("train.alpha");
    c.hyper.gamma = s.number("train.gamma");
    c.hyper.epsilon_start = s.number("train.epsilon_start");
    c.hyper.epsilon_end = s.number("train.epsilon_end");
    c.hyper.epsilon_decay_steps = s.count("train.epsilon_decay_steps");
    c.hyper.hidden = s.count("train.hidden");
    c.hyper.init_scale = s.number("train.init_scale");
    c.hyper.validate();
    c.reward.turn_penalty = s.number("reward.turn_penalty");
    c.reward.success_bonus = s.number("reward.success_bonus");
    c.reward.failure_penalty = s.number("reward.failure_penalty");
    c.reward.validate();
    c.sim = behavior(s);
    c.planner = planner_config(s);
    c.steps = s.count("train.steps");
    c.seed = static_cast<std::uint64_t>(s.integer("train.seed"));
    return c;
}

fs::path resolve_prompt(const Settings& s) {
    const fs::path p = s.text("paths.prompt");
    if (p.is_relative() && !fs::exists(p)) {
        const auto bundled = fs::path(DIALOGEN_SOURCE_DIR) / p;
        if (fs::exists(bundled)) {
            return bundled;
        }
    }
    return p;
}

EndpointConfig resolve_endpoint(const Settings& s, const std::string& fallback) {
    auto name = s.text("realize.endpoint");
    if (name.empty()) {
        name = fallback;
    }
    const auto& eps = s.endpoints();
    if (!eps.contains(name)) {
        throw ConfigError("missing config key 'endpoints." + name + "'");
    }
    return endpoint_from_json(name, eps.at(name));
}

struct TrainOutcome {
    QPolicy policy;
    ojson report;
};

TrainOutcome run_training(Context& ctx, const KnowledgeBase& kb, const TfIdfIndex& index) {
    const auto& s = ctx.settings;
    const auto config = training_config(s);
    ctx.log.log("train_start", {{"steps", config.steps}, {"seed", config.seed}});
    auto result = train_self_play(kb, index, config);

    const PlanningContext pctx{kb, index, config.sim, config.planner};
    const auto episodes = s.count("train.eval_episodes");
    ojson report;
    report["steps"] = config.steps;
    report["seed"] = config.seed;
    report["training"] = result.stats.to_json();
    if (episodes > 0) {
        const auto eval_seed = derive_seed(config.seed, 2);
        report["greedy_eval"] = evaluate_policy(pctx, result.policy, episodes, eval_seed).to_json();
        report["random_baseline"] = evaluate_policy(pctx, UniformRandomPolicy{}, episodes, eval_seed).to_json();
    }
    ctx.log.log("train_end", {{"episodes", result.stats.episodes}});
    return {std::move(result.policy), std::move(report)};
}

struct PlanOutcome {
    std::vector<Script> scripts;
    ojson summary;
};

PlanOutcome run_planning(Context& ctx, const KnowledgeBase& kb, const TfIdfIndex& index, const QPolicy& policy,
                         std::uint64_t seed) {
    const auto& s = ctx.settings;
    const PlanningContext pctx{kb, index, behavior(s), planner_config(s)};
    const auto epsilon = s.number("plan.epsilon");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
        throw ConfigError("plan.epsilon must lie in [0, 1]");
    }
    const QDialoguePolicy manager(policy, epsilon, pctx.config.turn_cap);
    auto scripts = plan_batch(pctx, manager, s.count("plan.n"), seed, std::max<std::size_t>(1, s.count("plan.threads")));

    std::size_t invalid = 0;
    for (const auto& script : scripts) {
        const auto report = validate_script(script, kb, pctx.config.turn_cap);
        if (!report.ok()) {
            ++invalid;
            ctx.log.log("invalid_script", {{"seed", script.seed}, {"violations", report.violations.size()},
                                           {"first", report.violations.front().message}});
        }
    }
    if (invalid > 0) {
        throw DialogueError(std::to_string(invalid) + " planned scripts failed validation; see the log");
    }
    auto summary = summarize(scripts).to_json();
    summary["base_seed"] = seed;
    summary["epsilon"] = epsilon;
    return {std::move(scripts), std::move(summary)};
}

ojson realize_summary(const std::vector<CorpusRecord>& records, const EndpointConfig& endpoint) {
    std::size_t flagged = 0;
    std::size_t attempts = 0;
    std::map<std::string, std::size_t> by_constraint;
    for (const auto& r : records) {
        flagged += r.flagged() ? 1 : 0;
        attempts += static_cast<std::size_t>(r.provenance.attempts);
        for (const auto& v : r.violations) {
            ++by_constraint[std::string(to_string(v.constraint))];
        }
    }
    ojson j;
    j["endpoint"] = endpoint.name;
    j["model"] = endpoint.model_id;
    j["records"] = records.size();
    j["accepted"] = records.size() - flagged;
    j["flagged"] = flagged;
    j["endpoint_calls"] = attempts;
    j["flagged_by_constraint"] = by_constraint;
    return j;
}

std::vector<CorpusRecord> run_realization(Context& ctx, const KnowledgeBase& kb, const std::vector<Script>& scripts,
                                          const EndpointConfig& endpoint) {
    const auto& s = ctx.settings;
    const auto tmpl = PromptTemplate::load(resolve_prompt(s));
    RealizeOptions options;
    options.max_regen = s.count("realize.max_regen");
    options.strict_parse = s.boolean("realize.strict");
    options.concurrency = std::max<std::size_t>(1, s.count("realize.concurrency"));
    options.log = &ctx.log;
    ctx.log.log("realize_start", {{"scripts", scripts.size()}, {"endpoint", endpoint.name}});
    auto records = realize_batch(scripts, tmpl, endpoint, kb, options);
    ctx.log.log("realize_end", {{"records", records.size()}});
    return records;
}

std::vector<Script> read_script_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DialogueError("cannot read scripts from " + path.string());
    }
    return read_scripts(in);
}

void write_script_file(const fs::path& path, const std::vector<Script>& scripts) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DialogueError("cannot write scripts to " + path.string());
    }
    write_scripts(out, scripts);
}

} // namespace

int cmd_ingest(Context& ctx) {
    const fs::path source = ctx.settings.text("paths.kb");
    const auto kb = ingest(source);
    fs::create_directories(ctx.workdir());
    export_kb(kb, kb_file(ctx));
    ctx.log.log("ingest", {{"source", source.string()}, {"symbols", kb.size()}});
    emit(ctx, {{"command", "ingest"}, {"symbols", kb.size()}, {"kb", kb_file(ctx).string()}});
    return 0;
}

int cmd_index(Context& ctx) {
    const auto kb = load_kb(ctx);
    const auto index = build_index(kb);
    ojson artifact;
    artifact["documents"] = index.doc_count();
    artifact["vocabulary_size"] = index.vocabulary_size();
    artifact["empty_documents"] = index.empty_documents();
    auto terms = ojson::array();
    for (std::uint32_t id = 0; id < index.vocabulary_size(); ++id) {
        terms.push_back({{"term", index.term(id)}, {"df", index.document_frequency(id)}, {"idf", index.idf(id)}});
    }
    artifact["terms"] = std::move(terms);
    write_json(ctx.workdir() / "index.json", artifact);

    ojson summary{{"command", "index"},
                  {"documents", index.doc_count()},
                  {"vocabulary_size", index.vocabulary_size()},
                  {"index", (ctx.workdir() / "index.json").string()}};
    if (const auto q = ctx.settings.text("index.query"); !q.empty()) {
        const auto k = ctx.settings.count("index.top_k");
        auto hits = ojson::array();
        for (const auto& h : index.query(tokenize(q), k).ranked) {
            hits.push_back({{"name", h.name}, {"score", h.score}});
        }
        summary["query"] = q;
        summary["results"] = std::move(hits);
    }
    emit(ctx, summary);
    return 0;
}

int cmd_train(Context& ctx) {
    const auto kb = load_kb(ctx);
    const auto index = build_index(kb);
    auto [policy, report] = run_training(ctx, kb, index);
    const auto path = ctx.path_or("paths.policy", "policy.json");
    save_policy(policy, path);
    write_json(ctx.workdir() / "train_stats.json", report);
    report["policy"] = path.string();
    report.erase("training");
    emit(ctx, report);
    return 0;
}

int cmd_plan(Context& ctx) {
    const auto kb = load_kb(ctx);
    const auto index = build_index(kb);
    const auto policy = load_policy(ctx.path_or("paths.policy", "policy.json"));
    auto [scripts, summary] =
        run_planning(ctx, kb, index, policy, static_cast<std::uint64_t>(ctx.settings.integer("plan.seed")));
    const auto path = ctx.path_or("paths.scripts", "scripts.jsonl");
    write_script_file(path, scripts);
    summary["scripts_file"] = path.string();
    emit(ctx, summary);
    return 0;
}

int cmd_realize(Context& ctx) {
    const auto endpoint = resolve_endpoint(ctx.settings, "teacher");
    const auto kb = load_kb(ctx);
    const auto scripts = read_script_file(ctx.path_or("paths.scripts", "scripts.jsonl"));
    const auto records = run_realization(ctx, kb, scripts, endpoint);
    const auto path = ctx.path_or("paths.corpus", "corpus.jsonl");
    write_records(path, records);
    auto summary = realize_summary(records, endpoint);
    summary["corpus"] = path.string();
    emit(ctx, summary);
    return 0;
}

int cmd_export(Context& ctx) {
    const auto format_text = ctx.settings.text("export.format");
    const auto format = parse_export_format(format_text);
    if (!format) {
        throw ConfigError("export.format must be chat or script-paired, got '" + format_text + "'");
    }
    const auto records = read_records(ctx.path_or("paths.corpus", "corpus.jsonl"));
    const auto path = ctx.path_or("paths.export", format_text + ".jsonl");
    const auto manifest = export_jsonl(records, path, {*format, ctx.settings.boolean("export.include_flagged")});
    emit(ctx, to_json(manifest));
    return 0;
}

int cmd_stats(Context& ctx) {
    const auto records = read_records(ctx.path_or("paths.corpus", "corpus.jsonl"));
    const auto stats = to_json(compute_stats(records));
    if (const auto report = ctx.settings.text("stats.report"); !report.empty()) {
        write_json(report, stats);
    }
    emit(ctx, stats);
    return 0;
}

int cmd_eval(Context& ctx) {
    const auto cand = ctx.settings.text("eval.candidates");
    const auto ref = ctx.settings.text("eval.references");
    if (cand.empty() || ref.empty()) {
        throw ConfigError("eval needs both --candidates and --references");
    }
    auto cand_label = fs::path(cand).stem().string();
    auto ref_label = fs::path(ref).stem().string();
    if (cand_label == ref_label) {
        cand_label = "candidate";
        ref_label = "reference";
    }
    const auto report = compare_models({{cand_label, read_records(cand)}}, {ref_label, read_records(ref)});
    if (const auto path = ctx.settings.text("eval.report"); !path.empty()) {
        write_json(path, to_json(report));
    }
    ctx.out << to_table(report);
    return 0;
}

int cmd_pipeline(Context& ctx) {
    const auto& s = ctx.settings;
    const auto phase = s.integer("pipeline.phase");
    if (phase != 1 && phase != 2) {
        throw ConfigError("pipeline.phase must be 1 or 2");
    }
    const auto plan_seed = static_cast<std::uint64_t>(s.integer(phase == 1 ? "plan.seed" : "plan.phase2_seed"));
    if (phase == 2 && s.integer("plan.phase2_seed") == s.integer("plan.seed")) {
        throw ConfigError("plan.phase2_seed must differ from plan.seed so phase 2 plans fresh scripts");
    }
    const auto dir = ctx.workdir() / ("phase" + std::to_string(phase));
    fs::create_directories(dir);
    ctx.log.log("pipeline_start", {{"phase", phase}});

    const auto kb = ingest(fs::path(s.text("paths.kb")));
    export_kb(kb, kb_file(ctx));
    const auto index = build_index(kb);

    const auto policy_path = ctx.workdir() / "policy.json";
    QPolicy policy;
    bool trained = false;
    if (phase == 2 && fs::exists(policy_path)) {
        policy = load_policy(policy_path);
    } else {
        auto outcome = run_training(ctx, kb, index);
        policy = std::move(outcome.policy);
        save_policy(policy, policy_path);
        write_json(ctx.workdir() / "train_stats.json", outcome.report);
        trained = true;
    }

    auto [scripts, plan_summary] = run_planning(ctx, kb, index, policy, plan_seed);
    write_script_file(dir / "scripts.jsonl", scripts);

    const auto endpoint = resolve_endpoint(s, phase == 1 ? "teacher" : "student");
    const auto records = run_realization(ctx, kb, scripts, endpoint);
    write_records(dir / "corpus.jsonl", records);

    const auto manifest =
        export_jsonl(records, dir / "chat.jsonl", {ExportFormat::chat, s.boolean("export.include_flagged")});
    const auto stats = to_json(compute_stats(records));
    write_json(dir / "stats.json", stats);

    ojson summary;
    summary["command"] = "pipeline";
    summary["phase"] = phase;
    summary["policy"] = {{"path", policy_path.string()}, {"trained", trained}};
    summary["plan"] = plan_summary;
    summary["realize"] = realize_summary(records, endpoint);
    summary["export"] = {{"file", (dir / "chat.jsonl").string()},
                         {"lines", manifest.lines_written},
                         {"sha256", manifest.sha256}};
    summary["stats"] = stats;
    ctx.log.log("pipeline_end", {{"phase", phase}, {"records", records.size()}});
    emit(ctx, summary);
    return 0;
}

} // namespace dialogen::cli
